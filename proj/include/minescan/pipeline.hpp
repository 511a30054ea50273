#ifndef MINESCAN_PIPELINE_HPP
#define MINESCAN_PIPELINE_HPP

#include "minescan/color.hpp"
#include "minescan/error.hpp"
#include "minescan/filter.hpp"
#include "minescan/mlp.hpp"
#include "minescan/raster.hpp"
#include "minescan/roi.hpp"
#include "minescan/segment.hpp"
#include "minescan/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace minescan {

struct PipelineConfig {
    FilterKind filter = FilterKind::median;
    SegParams seg;
    FeatureParams features;
    std::uint64_t blank_level = 0;
    // A cluster is background when it is the largest one and its ROI spans
    // more than this fraction of the frame.
    double background_cover = 0.8;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct ClassSpec {
    std::size_t class_index = 0;
    std::string name;
};

struct LabeledImage {
    RgbImage image;
    std::size_t class_index = 0;
    std::string source; // for error messages
};

/// One classified object in a scene.
class Detection {
public:
    Detection(std::vector<double> raw_output, Rect rect) : raw_output_(std::move(raw_output)), rect_(rect)
    {
        if (raw_output_.empty())
            throw ShapeError("detection needs a non-empty output vector");
        class_index_ = static_cast<std::size_t>(
            std::distance(raw_output_.begin(), std::max_element(raw_output_.begin(), raw_output_.end())));
    }

    std::size_t class_index() const noexcept { return class_index_; }
    double correlation_factor() const noexcept { return 100.0 * raw_output_[class_index_]; }
    const Rect& rect() const noexcept { return rect_; }
    const std::vector<double>& raw_output() const noexcept { return raw_output_; }

private:
    std::vector<double> raw_output_;
    Rect rect_;
    std::size_t class_index_ = 0;
};

/// Output activation of `class_index`, as a percentage.
inline double correlation_factor(std::span<const double> raw_output, std::size_t class_index)
{
    if (class_index >= raw_output.size())
        throw BoundsError("class index " + std::to_string(class_index) + " out of range");
    return 100.0 * raw_output[class_index];
}

/// An object cut out of a scene, ready for the network.
struct ObjectCandidate {
    std::size_t cluster = 0;
    std::size_t pixel_count = 0;
    Rect rect;
    FeatureVector features;
};

/// Crops the non-blank region, rescales it to 64x64 and extracts HS features.
inline std::pair<Rect, FeatureVector> object_features(const RgbImage& object, const PipelineConfig& config)
{
    const Rect rect = find_roi(object, config.blank_level);
    return {rect, image_to_features(scale_to_64(crop(object, rect)), config.features)};
}

/// Filters, segments and extracts every cluster as a candidate object. The
/// background cluster (largest, ROI spanning most of the frame) is dropped
/// when `suppress_background` is set; all-blank clusters are always dropped.
inline std::vector<ObjectCandidate> find_objects(const RgbImage& scene, const PipelineConfig& config,
                                                 bool suppress_background = true)
{
    const RgbImage filtered = apply_filter(scene, config.filter);
    const SegmentResult seg = kmeans_segment(filtered, config.seg);
    const std::vector<RgbImage> objects = extract_objects(filtered, seg);
    const std::vector<std::size_t> sizes = cluster_sizes(seg);

    std::optional<std::size_t> background;
    if (suppress_background) {
        const std::size_t largest =
            static_cast<std::size_t>(std::distance(sizes.begin(), std::max_element(sizes.begin(), sizes.end())));
        try {
            const Rect r = find_roi(objects[largest], config.blank_level);
            if (double(r.area()) > config.background_cover * double(scene.size()))
                background = largest;
        } catch (const NoContentError&) {
            background = largest;
        }
    }

    std::vector<ObjectCandidate> out;
    for (std::size_t c = 0; c < objects.size(); ++c) {
        if (background && *background == c)
            continue;
        if (sizes[c] == 0)
            continue;
        try {
            auto [rect, features] = object_features(objects[c], config);
            out.push_back({c, sizes[c], rect, std::move(features)});
        } catch (const NoContentError&) {
            // cluster made only of blank-coloured pixels
        }
    }
    return out;
}

/// Turns labelled images into training samples, one per image: the largest
/// non-background object is taken as the labelled one. A single-cluster
/// image is used whole.
inline std::vector<Sample> build_training_set(std::span<const LabeledImage> images, std::size_t class_count,
                                              const PipelineConfig& config)
{
    std::vector<Sample> samples;
    samples.reserve(images.size());
    for (const LabeledImage& item : images) {
        const RgbImage filtered = apply_filter(item.image, config.filter);
        const bool single = scs_seeds(filtered, config.seg).size() == 1;
        std::vector<ObjectCandidate> found = find_objects(item.image, config, !single);
        if (found.empty())
            throw PipelineError(item.source + ": segmentation found no object to train on");
        const auto best = std::max_element(found.begin(), found.end(), [](const auto& a, const auto& b) {
            return a.pixel_count < b.pixel_count;
        });
        samples.push_back({std::move(best->features), one_hot(item.class_index, class_count)});
    }
    return samples;
}

inline std::vector<Detection> classify_scene(const Network& net, const RgbImage& scene,
                                             const PipelineConfig& config)
{
    std::vector<Detection> detections;
    for (ObjectCandidate& c : find_objects(scene, config))
        detections.emplace_back(predict(net, c.features), c.rect);
    return detections;
}

inline constexpr Rgb annotation_red{255, 0, 0};

/// Draws a one-pixel red border for each detection, in order, so later
/// rectangles paint over earlier ones.
inline RgbImage annotate(const RgbImage& image, std::span<const Detection> detections)
{
    RgbImage out = image;
    for (const Detection& d : detections) {
        const Rect& r = d.rect();
        if (r.x1 > r.x2 || r.y1 > r.y2 || r.x2 >= image.width() || r.y2 >= image.height())
            throw BoundsError("detection rectangle lies outside the image");
        for (std::size_t x = r.x1; x <= r.x2; ++x) {
            out.at(x, r.y1) = annotation_red;
            out.at(x, r.y2) = annotation_red;
        }
        for (std::size_t y = r.y1; y <= r.y2; ++y) {
            out.at(r.x1, y) = annotation_red;
            out.at(r.x2, y) = annotation_red;
        }
    }
    return out;
}

inline std::string class_name(std::span<const ClassSpec> classes, std::size_t index)
{
    for (const ClassSpec& c : classes)
        if (c.class_index == index)
            return c.name;
    return "class" + std::to_string(index);
}

/// `<name>\t<factor>\t<x1> <y1> <x2> <y2>` per detection.
inline std::string render_report(std::span<const Detection> detections, std::span<const ClassSpec> classes)
{
    std::string out;
    for (const Detection& d : detections) {
        char factor[32];
        std::snprintf(factor, sizeof factor, "%.1f", d.correlation_factor());
        const Rect& r = d.rect();
        out += class_name(classes, d.class_index()) + '\t' + factor + '\t' + std::to_string(r.x1) + ' ' +
               std::to_string(r.y1) + ' ' + std::to_string(r.x2) + ' ' + std::to_string(r.y2) + '\n';
    }
    return out;
}

inline std::string render_curve(const TrainingReport& report)
{
    std::string out = "epoch,mse\n";
    for (std::size_t i = 0; i < report.mse_history.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        detail::append_double(out, report.mse_history[i]);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest: `<image path>\t<class name>` per line. Class indices follow the
// order in which names first appear. Relative paths resolve against the
// manifest's directory.

struct ManifestEntry {
    std::filesystem::path path;
    std::size_t class_index = 0;
};

struct Manifest {
    std::vector<ClassSpec> classes;
    std::vector<ManifestEntry> entries;
};

inline Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {})
{
    Manifest m;
    std::size_t pos = 0;
    std::size_t number = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        ++number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw PipelineError("manifest line " + std::to_string(number) + ": expected '<path>\\t<class>'");
        const std::string name = line.substr(tab + 1);
        std::filesystem::path path = line.substr(0, tab);
        if (path.is_relative() && !base_dir.empty())
            path = base_dir / path;

        auto it = std::find_if(m.classes.begin(), m.classes.end(), [&](const ClassSpec& c) { return c.name == name; });
        std::size_t index = 0;
        if (it == m.classes.end()) {
            index = m.classes.size();
            m.classes.push_back({index, name});
        } else {
            index = it->class_index;
        }
        m.entries.push_back({path, index});
    }
    if (m.entries.empty())
        throw PipelineError("manifest lists no images");
    return m;
}

inline Manifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path.string() + ": cannot open manifest");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_manifest(text, path.parent_path());
}

} // namespace minescan

#endif
