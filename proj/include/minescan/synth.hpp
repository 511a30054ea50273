#ifndef MINESCAN_SYNTH_HPP
#define MINESCAN_SYNTH_HPP

#include "minescan/error.hpp"
#include "minescan/raster.hpp"
#include "minescan/roi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace minescan {

// Synthetic scenes: flat-coloured objects on a flat background, optional
// uniform noise. Each archetype stands for one object class.

enum class Archetype { disc, square };

inline constexpr std::size_t archetype_count = 2;

inline std::string_view to_string(Archetype a) { return a == Archetype::disc ? "disc" : "square"; }

inline Archetype parse_archetype(std::string_view text)
{
    if (text == "disc") return Archetype::disc;
    if (text == "square") return Archetype::square;
    throw SpecError("unknown archetype '" + std::string(text) + "'");
}

inline Rgb default_color(Archetype a) { return a == Archetype::disc ? Rgb{120, 85, 65} : Rgb{40, 150, 215}; }
inline double default_radius(Archetype a) { return a == Archetype::disc ? 9.0 : 8.0; }

struct ObjectSpec {
    Archetype shape = Archetype::disc;
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0; // disc radius or square half-side; 0 means archetype default
    double rotate_deg = 0.0;
    double cover = 0.0; // fraction of the object's height hidden from the top
    std::optional<Rgb> color;
};

struct SceneSpec {
    std::size_t width = 64;
    std::size_t height = 48;
    Rgb background{185, 165, 115};
    std::optional<Rgb> occluder; // defaults to the background colour
    int noise = 0;               // per-channel uniform noise amplitude
    std::vector<ObjectSpec> objects;
};

struct GroundTruthObject {
    std::size_t class_index = 0;
    Archetype shape = Archetype::disc;
    Rect rect;                // visible pixels
    double rotate_deg = 0.0;
    bool covered = false;
};

struct SyntheticScene {
    RgbImage image;
    std::vector<GroundTruthObject> objects;
    // 0 for background, i+1 for visible pixels of object i
    std::vector<std::size_t> labels;
};

namespace detail {

inline double object_extent(const ObjectSpec& o)
{
    const double r = o.radius > 0.0 ? o.radius : default_radius(o.shape);
    if (o.shape == Archetype::disc)
        return r;
    const double t = o.rotate_deg * std::numbers::pi / 180.0;
    return r * (std::abs(std::cos(t)) + std::abs(std::sin(t)));
}

inline bool inside(const ObjectSpec& o, double x, double y)
{
    const double r = o.radius > 0.0 ? o.radius : default_radius(o.shape);
    const double dx = x - o.cx;
    const double dy = y - o.cy;
    if (o.shape == Archetype::disc)
        return dx * dx + dy * dy <= r * r;
    const double t = o.rotate_deg * std::numbers::pi / 180.0;
    const double u = std::cos(t) * dx + std::sin(t) * dy;
    const double v = -std::sin(t) * dx + std::cos(t) * dy;
    // small slack so axis-aligned squares come out exactly (2r+1) wide
    return std::abs(u) <= r + 1e-9 && std::abs(v) <= r + 1e-9;
}

} // namespace detail

/// Renders `spec` deterministically for a given seed. Objects whose bounding
/// boxes touch or overlap, or that leave the frame, are rejected.
inline SyntheticScene gen_synthetic_scene(const SceneSpec& spec, std::uint64_t seed)
{
    if (spec.width == 0 || spec.height == 0)
        throw SpecError("scene dimensions must be positive");
    if (spec.noise < 0 || spec.noise > 255)
        throw SpecError("noise amplitude must be within [0,255]");

    std::vector<Rect> boxes;
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const ObjectSpec& o = spec.objects[i];
        if (o.cover < 0.0 || o.cover >= 1.0)
            throw SpecError("object " + std::to_string(i) + ": cover must be in [0,1)");
        const double e = detail::object_extent(o);
        if (o.cx - e < 0.0 || o.cy - e < 0.0 || o.cx + e > double(spec.width - 1) ||
            o.cy + e > double(spec.height - 1))
            throw SpecError("object " + std::to_string(i) + " does not fit inside the frame");
        // one pixel of margin so neighbouring objects never share an edge
        const Rect box{static_cast<std::size_t>(std::max(0.0, std::floor(o.cx - e) - 1)),
                       static_cast<std::size_t>(std::max(0.0, std::floor(o.cy - e) - 1)),
                       static_cast<std::size_t>(std::ceil(o.cx + e) + 1),
                       static_cast<std::size_t>(std::ceil(o.cy + e) + 1)};
        for (std::size_t j = 0; j < boxes.size(); ++j)
            if (intersect(box, boxes[j]))
                throw SpecError("objects " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
        boxes.push_back(box);
    }

    SyntheticScene scene;
    scene.image = RgbImage(spec.width, spec.height, spec.background);
    scene.labels.assign(spec.width * spec.height, 0);
    const Rgb occluder = spec.occluder.value_or(spec.background);

    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const ObjectSpec& o = spec.objects[i];
        const Rgb color = o.color.value_or(default_color(o.shape));

        // full footprint first, so the cover strip is measured on the whole shape
        std::size_t top = spec.height, bottom = 0;
        for (std::size_t y = 0; y < spec.height; ++y)
            for (std::size_t x = 0; x < spec.width; ++x)
                if (detail::inside(o, double(x), double(y))) {
                    top = std::min(top, y);
                    bottom = std::max(bottom, y);
                }
        if (top > bottom)
            throw SpecError("object " + std::to_string(i) + " covers no pixel");
        const double hidden_rows = o.cover * double(bottom - top + 1);
        const std::size_t visible_from = top + static_cast<std::size_t>(std::llround(hidden_rows));

        GroundTruthObject truth;
        truth.class_index = static_cast<std::size_t>(o.shape);
        truth.shape = o.shape;
        truth.rotate_deg = o.rotate_deg;
        truth.covered = o.cover > 0.0;
        std::optional<Rect> visible;
        for (std::size_t y = 0; y < spec.height; ++y) {
            for (std::size_t x = 0; x < spec.width; ++x) {
                if (!detail::inside(o, double(x), double(y)))
                    continue;
                if (y < visible_from) {
                    scene.image.at(x, y) = occluder;
                    continue;
                }
                scene.image.at(x, y) = color;
                scene.labels[y * spec.width + x] = i + 1;
                if (!visible)
                    visible = Rect{x, y, x, y};
                visible->x1 = std::min(visible->x1, x);
                visible->y1 = std::min(visible->y1, y);
                visible->x2 = std::max(visible->x2, x);
                visible->y2 = std::max(visible->y2, y);
            }
        }
        if (!visible)
            throw SpecError("object " + std::to_string(i) + " is fully covered");
        truth.rect = *visible;
        scene.objects.push_back(truth);
    }

    if (spec.noise > 0) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> dist(-spec.noise, spec.noise);
        auto jitter = [&](std::uint8_t v) {
            return static_cast<std::uint8_t>(std::clamp(int{v} + dist(rng), 0, 255));
        };
        for (Rgb& p : scene.image.pixels()) {
            p.r = jitter(p.r);
            p.g = jitter(p.g);
            p.b = jitter(p.b);
        }
    }
    return scene;
}

struct NamedScene {
    std::string name;
    SceneSpec spec;
    std::uint64_t seed = 0;
};

/// Fixed scenes for the end-to-end experiment: per-class training images
/// (one object each, shifted around the frame) and four test scenes with
/// both objects, displaced objects, a rotated square and a partly covered
/// disc.
struct ReferenceSuite {
    std::vector<NamedScene> training;
    std::vector<NamedScene> tests;
};

inline ReferenceSuite reference_suite()
{
    constexpr int noise = 8;
    auto scene = [&](std::vector<ObjectSpec> objects) {
        SceneSpec s;
        s.noise = noise;
        s.objects = std::move(objects);
        return s;
    };
    auto obj = [](Archetype a, double x, double y, double rotate = 0.0, double cover = 0.0) {
        ObjectSpec o;
        o.shape = a;
        o.cx = x;
        o.cy = y;
        o.rotate_deg = rotate;
        o.cover = cover;
        return o;
    };

    ReferenceSuite suite;
    const double spots[][2] = {{20, 20}, {42, 26}, {28, 30}, {46, 18}, {14, 14}, {50, 34}, {32, 16}, {24, 34}};
    std::uint64_t seed = 100;
    for (Archetype a : {Archetype::disc, Archetype::square}) {
        for (std::size_t i = 0; i < std::size(spots); ++i)
            suite.training.push_back({std::string(to_string(a)) + "_" + std::to_string(i),
                                      scene({obj(a, spots[i][0], spots[i][1])}), seed++});
    }
    suite.tests.push_back({"two_objects", scene({obj(Archetype::disc, 18, 22), obj(Archetype::square, 44, 24)}), 200});
    suite.tests.push_back({"displaced", scene({obj(Archetype::disc, 46, 30), obj(Archetype::square, 16, 18)}), 201});
    suite.tests.push_back(
        {"rotated", scene({obj(Archetype::disc, 18, 22), obj(Archetype::square, 44, 24, 45.0)}), 202});
    suite.tests.push_back(
        {"covered", scene({obj(Archetype::disc, 18, 22, 0.0, 0.25), obj(Archetype::square, 44, 24)}), 203});
    return suite;
}

// ---------------------------------------------------------------------------
// Scene description text:
//
//   size <width> <height>
//   background <r> <g> <b>
//   occluder <r> <g> <b>
//   noise <amplitude>
//   object <disc|square> <cx> <cy> [radius <r>] [rotate <deg>] [cover <fraction>] [color <r> <g> <b>]
//
// Blank lines and '#' comments are ignored.

namespace detail {

inline Rgb parse_rgb(std::istringstream& in, const std::string& context)
{
    int r = -1, g = -1, b = -1;
    if (!(in >> r >> g >> b) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
        throw SpecError(context + ": expected three channel values in [0,255]");
    return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

} // namespace detail

inline SceneSpec parse_scene_spec(std::string_view text)
{
    SceneSpec spec;
    std::istringstream lines{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(lines, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream in(line);
        std::string key;
        if (!(in >> key))
            continue;
        const std::string context = "scene line " + std::to_string(number);
        if (key == "size") {
            if (!(in >> spec.width >> spec.height) || spec.width == 0 || spec.height == 0)
                throw SpecError(context + ": size needs two positive integers");
        } else if (key == "background") {
            spec.background = detail::parse_rgb(in, context);
        } else if (key == "occluder") {
            spec.occluder = detail::parse_rgb(in, context);
        } else if (key == "noise") {
            if (!(in >> spec.noise))
                throw SpecError(context + ": noise needs an integer amplitude");
        } else if (key == "object") {
            ObjectSpec o;
            std::string shape;
            if (!(in >> shape >> o.cx >> o.cy))
                throw SpecError(context + ": object needs an archetype and a centre");
            o.shape = parse_archetype(shape);
            std::string opt;
            while (in >> opt) {
                if (opt == "radius") {
                    if (!(in >> o.radius) || o.radius <= 0.0)
                        throw SpecError(context + ": bad radius");
                } else if (opt == "rotate") {
                    if (!(in >> o.rotate_deg))
                        throw SpecError(context + ": bad rotation");
                } else if (opt == "cover") {
                    if (!(in >> o.cover))
                        throw SpecError(context + ": bad cover fraction");
                } else if (opt == "color") {
                    o.color = detail::parse_rgb(in, context);
                } else {
                    throw SpecError(context + ": unknown object option '" + opt + "'");
                }
            }
            spec.objects.push_back(o);
        } else {
            throw SpecError(context + ": unknown directive '" + key + "'");
        }
    }
    return spec;
}

/// One line per object: class, archetype, visible rect, rotation, covered flag.
inline std::string render_ground_truth(const SyntheticScene& scene)
{
    std::ostringstream out;
    for (const GroundTruthObject& o : scene.objects) {
        out << o.class_index << '\t' << to_string(o.shape) << '\t' << o.rect.x1 << ' ' << o.rect.y1 << ' '
            << o.rect.x2 << ' ' << o.rect.y2 << "\trotate=" << o.rotate_deg << "\tcovered=" << (o.covered ? 1 : 0)
            << '\n';
    }
    return out.str();
}

} // namespace minescan

#endif
