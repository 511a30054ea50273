#ifndef MINESCAN_COLOR_HPP
#define MINESCAN_COLOR_HPP

#include "minescan/error.hpp"
#include "minescan/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace minescan {

/// H in degrees [0,360], S in percent [0,100], I in [0,255].
struct HsiPixel {
    double h = 0.0;
    double s = 0.0;
    double i = 0.0;
};

struct Chromaticity {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

/// Chromaticity coordinates R/(R+G+B) etc. Black has no chromaticity; it is
/// mapped to the achromatic point (1/3,1/3,1/3).
inline Chromaticity normalize_rgb(Rgb p)
{
    const int sum = int{p.r} + int{p.g} + int{p.b};
    if (sum == 0)
        return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const double total = sum;
    return {p.r / total, p.g / total, p.b / total};
}

inline HsiPixel rgb_to_hsi(Rgb p)
{
    const auto [r, g, b] = normalize_rgb(p);
    const double num = 0.5 * ((r - g) + (r - b));
    const double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));

    double h = 0.0; // achromatic: hue undefined, fixed at 0
    if (den > 0.0) {
        h = std::acos(std::clamp(num / den, -1.0, 1.0));
        if (b > g)
            h = 2.0 * std::numbers::pi - h;
    }
    const double s = 1.0 - 3.0 * std::min({r, g, b});
    const double i = (int{p.r} + int{p.g} + int{p.b}) / (3.0 * 255.0);

    HsiPixel out;
    out.h = std::clamp(h * 180.0 / std::numbers::pi, 0.0, 360.0);
    out.s = std::clamp(s * 100.0, 0.0, 100.0);
    out.i = i * 255.0;
    return out;
}

enum class Aggregate { mean, sum, weighted };

inline std::string_view to_string(Aggregate a)
{
    switch (a) {
    case Aggregate::mean: return "mean";
    case Aggregate::sum: return "sum";
    case Aggregate::weighted: return "weighted";
    }
    return "?";
}

inline Aggregate parse_aggregate(std::string_view text)
{
    if (text == "mean") return Aggregate::mean;
    if (text == "sum") return Aggregate::sum;
    if (text == "weighted") return Aggregate::weighted;
    throw ConfigError("unknown feature aggregate '" + std::string(text) + "'");
}

struct FeatureParams {
    Aggregate aggregate = Aggregate::mean;
    double hue_weight = 0.5; // only used by Aggregate::weighted
    double scale_factor = 64.0;
    double bias = 1.0;

    friend bool operator==(const FeatureParams&, const FeatureParams&) = default;
};

inline constexpr std::size_t feature_side = 64;
inline constexpr std::size_t feature_pixels = feature_side * feature_side;
inline constexpr std::size_t feature_length = feature_pixels + 1;

using FeatureVector = std::vector<double>;

/// Combines hue and saturation of one pixel into a single scalar. Intensity
/// does not participate.
inline double hs_feature(Rgb p, Aggregate aggregate = Aggregate::mean, double hue_weight = 0.5)
{
    const HsiPixel hsi = rgb_to_hsi(p);
    const double hue = hsi.h / 360.0;
    const double sat = hsi.s / 100.0;
    switch (aggregate) {
    case Aggregate::sum: return hue + sat;
    case Aggregate::weighted: return hue_weight * hue + (1.0 - hue_weight) * sat;
    case Aggregate::mean: break;
    }
    return 0.5 * (hue + sat);
}

/// 4,096 per-pixel HS features (row-major, divided by the scale factor)
/// followed by the bias entry.
inline FeatureVector image_to_features(const RgbImage& image, const FeatureParams& params = {})
{
    if (image.width() != feature_side || image.height() != feature_side)
        throw DimensionError("feature extraction needs a 64x64 image, got " + std::to_string(image.width()) +
                             "x" + std::to_string(image.height()));
    if (!(params.scale_factor > 0.0))
        throw ConfigError("scale_factor must be positive");
    FeatureVector features;
    features.reserve(feature_length);
    for (const Rgb& p : image.pixels())
        features.push_back(hs_feature(p, params.aggregate, params.hue_weight) / params.scale_factor);
    features.push_back(params.bias);
    return features;
}

} // namespace minescan

#endif
