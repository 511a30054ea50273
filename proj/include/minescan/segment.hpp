#ifndef MINESCAN_SEGMENT_HPP
#define MINESCAN_SEGMENT_HPP

#include "minescan/error.hpp"
#include "minescan/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace minescan {

/// A point in the joint colour + position space used for clustering:
/// R, G, B intensities and X (column), Y (row) pixel coordinates.
struct Point5 {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point5&, const Point5&) = default;
};

using FeaturePoint5 = Point5;
using Centroid5 = Point5;

struct SegParams {
    double threshold = 85.0;
    // Multiplies X and Y before they enter the distance. Colour spans 0..255
    // while coordinates grow with the image, so large frames need < 1.
    double spatial_weight = 1.0;
    std::size_t max_iter = 100;
    std::size_t max_k = 32;

    friend bool operator==(const SegParams&, const SegParams&) = default;
};

struct SegmentResult {
    std::vector<std::size_t> labels;
    std::vector<Centroid5> centroids;
    std::size_t iterations = 0;
    bool converged = false;
    // Sum of squared distances after every assignment step, seeds first.
    std::vector<double> objective_history;

    std::size_t k() const noexcept { return centroids.size(); }
};

inline FeaturePoint5 point_at(const RgbImage& image, std::size_t x, std::size_t y)
{
    const Rgb p = image.at(x, y);
    return {double(p.r), double(p.g), double(p.b), double(x), double(y)};
}

inline FeaturePoint5 point_at(const RgbImage& image, std::size_t index)
{
    return point_at(image, index % image.width(), index / image.width());
}

inline double distance5_squared(const FeaturePoint5& p, const Centroid5& c, double spatial_weight = 1.0)
{
    const double dr = p.r - c.r;
    const double dg = p.g - c.g;
    const double db = p.b - c.b;
    const double dx = spatial_weight * (p.x - c.x);
    const double dy = spatial_weight * (p.y - c.y);
    return dr * dr + dg * dg + db * db + dx * dx + dy * dy;
}

inline double distance5(const FeaturePoint5& p, const Centroid5& c, double spatial_weight = 1.0)
{
    return std::sqrt(distance5_squared(p, c, spatial_weight));
}

/// Simple cluster seeking. The first pixel in raster order is the first seed;
/// a later pixel becomes a seed when it is farther than `threshold` from every
/// seed chosen so far. Stops early once `max_k` seeds exist.
inline std::vector<Centroid5> scs_seeds(const RgbImage& image, const SegParams& params = {})
{
    if (params.threshold < 0.0)
        throw ConfigError("SCS threshold must be non-negative");
    std::vector<Centroid5> seeds;
    const std::size_t cap = params.max_k == 0 ? 1 : params.max_k;
    for (std::size_t i = 0; i < image.size() && seeds.size() < cap; ++i) {
        const FeaturePoint5 p = point_at(image, i);
        bool far_from_all = true;
        for (const Centroid5& s : seeds) {
            if (!(distance5(p, s, params.spatial_weight) > params.threshold)) {
                far_from_all = false;
                break;
            }
        }
        if (far_from_all)
            seeds.push_back(p);
    }
    return seeds;
}

/// Nearest centroid per pixel; equal distances go to the lower index.
inline std::vector<std::size_t> assign_pixels(const RgbImage& image, const std::vector<Centroid5>& centroids,
                                              double spatial_weight = 1.0)
{
    if (centroids.empty())
        throw ConfigError("assign_pixels needs at least one centroid");
    std::vector<std::size_t> labels(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const FeaturePoint5 p = point_at(image, i);
        std::size_t best = 0;
        double best_d = distance5_squared(p, centroids[0], spatial_weight);
        for (std::size_t j = 1; j < centroids.size(); ++j) {
            const double d = distance5_squared(p, centroids[j], spatial_weight);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        labels[i] = best;
    }
    return labels;
}

/// Member means per cluster. A cluster left without members is moved onto the
/// pixel that lies farthest from its nearest populated centroid, so k never
/// shrinks and no centroid becomes NaN.
inline std::vector<Centroid5> update_centroids(const RgbImage& image, const std::vector<std::size_t>& labels,
                                               std::size_t k, double spatial_weight = 1.0)
{
    if (labels.size() != image.size())
        throw DimensionError("label count does not match pixel count");
    std::vector<Centroid5> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t j = labels[i];
        if (j >= k)
            throw BoundsError("label " + std::to_string(j) + " out of range for k=" + std::to_string(k));
        const FeaturePoint5 p = point_at(image, i);
        sums[j].r += p.r;
        sums[j].g += p.g;
        sums[j].b += p.b;
        sums[j].x += p.x;
        sums[j].y += p.y;
        ++counts[j];
    }

    std::vector<Centroid5> centroids(k);
    std::vector<bool> placed(k, false);
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0)
            continue;
        const double n = static_cast<double>(counts[j]);
        centroids[j] = {sums[j].r / n, sums[j].g / n, sums[j].b / n, sums[j].x / n, sums[j].y / n};
        placed[j] = true;
    }

    for (std::size_t j = 0; j < k; ++j) {
        if (placed[j])
            continue;
        std::size_t worst = 0;
        double worst_d = -1.0;
        for (std::size_t i = 0; i < image.size(); ++i) {
            const FeaturePoint5 p = point_at(image, i);
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c)
                if (placed[c])
                    nearest = std::min(nearest, distance5_squared(p, centroids[c], spatial_weight));
            if (nearest > worst_d) {
                worst_d = nearest;
                worst = i;
            }
        }
        centroids[j] = point_at(image, worst);
        placed[j] = true;
    }
    return centroids;
}

inline double kmeans_objective(const RgbImage& image, const std::vector<std::size_t>& labels,
                               const std::vector<Centroid5>& centroids, double spatial_weight = 1.0)
{
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        total += distance5_squared(point_at(image, i), centroids[labels[i]], spatial_weight);
    return total;
}

/// SCS-seeded K-means over (R,G,B,X,Y). One iteration is a centroid update
/// followed by reassignment; the run converges when no label changes.
inline SegmentResult kmeans_segment(const RgbImage& image, const SegParams& params = {})
{
    if (params.max_iter == 0)
        throw ConfigError("max_iter must be at least 1");
    SegmentResult result;
    result.centroids = scs_seeds(image, params);
    result.labels = assign_pixels(image, result.centroids, params.spatial_weight);
    result.objective_history.push_back(
        kmeans_objective(image, result.labels, result.centroids, params.spatial_weight));

    for (std::size_t it = 1; it <= params.max_iter; ++it) {
        result.centroids = update_centroids(image, result.labels, result.k(), params.spatial_weight);
        auto labels = assign_pixels(image, result.centroids, params.spatial_weight);
        result.objective_history.push_back(
            kmeans_objective(image, labels, result.centroids, params.spatial_weight));
        result.iterations = it;
        const bool unchanged = labels == result.labels;
        result.labels = std::move(labels);
        if (unchanged) {
            result.converged = true;
            break;
        }
    }
    return result;
}

inline constexpr Rgb blank_color{0, 0, 0};

/// One full-size image per cluster, in cluster order: member pixels keep their
/// colour, everything else is blanked to black.
inline std::vector<RgbImage> extract_objects(const RgbImage& image, const SegmentResult& result)
{
    if (result.labels.size() != image.size())
        throw DimensionError("segmentation labels do not match image size");
    std::vector<RgbImage> objects(result.k(), RgbImage(image.width(), image.height(), blank_color));
    for (std::size_t i = 0; i < image.size(); ++i)
        objects.at(result.labels[i]).pixels()[i] = image.pixels()[i];
    return objects;
}

inline std::vector<std::size_t> cluster_sizes(const SegmentResult& result)
{
    std::vector<std::size_t> sizes(result.k(), 0);
    for (std::size_t label : result.labels)
        ++sizes[label];
    return sizes;
}

} // namespace minescan

#endif
