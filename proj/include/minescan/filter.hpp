#ifndef MINESCAN_FILTER_HPP
#define MINESCAN_FILTER_HPP

#include "minescan/error.hpp"
#include "minescan/raster.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace minescan {

/// 3x3 weighted mask. Weights are laid out row by row, top-left first, and the
/// weighted sum is divided by `divisor` before rounding.
struct Mask3 {
    std::array<int, 9> weights{};
    int divisor = 1;

    static Mask3 mean() { return {{1, 1, 1, 1, 1, 1, 1, 1, 1}, 9}; }
    static Mask3 gaussian() { return {{1, 2, 1, 2, 4, 2, 1, 2, 1}, 16}; }
};

/// 5x5 box mask for heavier smoothing; same border and rounding rules as Mask3.
struct Mask5 {
    std::array<int, 25> weights{};
    int divisor = 1;

    static Mask5 mean()
    {
        Mask5 m;
        m.weights.fill(1);
        m.divisor = 25;
        return m;
    }
};

enum class FilterKind { mean, median, gaussian };

inline std::string_view to_string(FilterKind kind)
{
    switch (kind) {
    case FilterKind::mean: return "mean";
    case FilterKind::median: return "median";
    case FilterKind::gaussian: return "gaussian";
    }
    return "?";
}

inline FilterKind parse_filter_kind(std::string_view text)
{
    if (text == "mean") return FilterKind::mean;
    if (text == "median") return FilterKind::median;
    if (text == "gaussian") return FilterKind::gaussian;
    throw ConfigError("unknown filter kind '" + std::string(text) + "'");
}

namespace detail {

inline std::size_t clamp_index(std::ptrdiff_t i, std::size_t n)
{
    if (i < 0) return 0;
    if (static_cast<std::size_t>(i) >= n) return n - 1;
    return static_cast<std::size_t>(i);
}

// round-half-up of sum/divisor for divisor > 0, then clamped to a byte
inline std::uint8_t round_div_clamp(long sum, long divisor)
{
    const long num = 2 * sum + divisor;
    const long den = 2 * divisor;
    long q = num / den;
    if (num % den != 0 && num < 0)
        --q;
    return static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
}

template <std::size_t N>
GrayImage apply_square_mask(const GrayImage& image, const std::array<int, N * N>& weights, int divisor)
{
    if (divisor <= 0)
        throw ConfigError("mask divisor must be positive");
    constexpr std::ptrdiff_t r = static_cast<std::ptrdiff_t>(N / 2);
    const std::size_t w = image.width();
    const std::size_t h = image.height();
    GrayImage out(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            long sum = 0;
            std::size_t k = 0;
            for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
                const std::size_t sy = clamp_index(static_cast<std::ptrdiff_t>(y) + dy, h);
                for (std::ptrdiff_t dx = -r; dx <= r; ++dx, ++k) {
                    const std::size_t sx = clamp_index(static_cast<std::ptrdiff_t>(x) + dx, w);
                    sum += static_cast<long>(weights[k]) * image.at(sx, sy);
                }
            }
            out.at(x, y) = round_div_clamp(sum, divisor);
        }
    }
    return out;
}

template <class PlaneOp>
RgbImage per_channel(const RgbImage& image, PlaneOp op)
{
    const auto [r, g, b] = split_channels(image);
    return merge_channels(op(r), op(g), op(b));
}

} // namespace detail

/// Weighted 3x3 neighbourhood sum with replicate-edge borders, rounded half up
/// and clamped to [0,255].
inline GrayImage apply_mask3(const GrayImage& image, const Mask3& mask)
{
    return detail::apply_square_mask<3>(image, mask.weights, mask.divisor);
}

inline GrayImage apply_mask5(const GrayImage& image, const Mask5& mask)
{
    return detail::apply_square_mask<5>(image, mask.weights, mask.divisor);
}

/// 5th-smallest of the replicate-padded 3x3 neighbourhood.
inline GrayImage median3(const GrayImage& image)
{
    const std::size_t w = image.width();
    const std::size_t h = image.height();
    GrayImage out(w, h);
    std::array<std::uint8_t, 9> window{};
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t k = 0;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy)
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx)
                    window[k++] = image.at(detail::clamp_index(static_cast<std::ptrdiff_t>(x) + dx, w),
                                           detail::clamp_index(static_cast<std::ptrdiff_t>(y) + dy, h));
            std::nth_element(window.begin(), window.begin() + 4, window.end());
            out.at(x, y) = window[4];
        }
    }
    return out;
}

inline RgbImage mean_filter(const RgbImage& image)
{
    return detail::per_channel(image, [](const GrayImage& g) { return apply_mask3(g, Mask3::mean()); });
}

inline RgbImage median_filter(const RgbImage& image)
{
    return detail::per_channel(image, [](const GrayImage& g) { return median3(g); });
}

inline RgbImage gaussian_filter(const RgbImage& image)
{
    return detail::per_channel(image, [](const GrayImage& g) { return apply_mask3(g, Mask3::gaussian()); });
}

inline RgbImage apply_filter(const RgbImage& image, FilterKind kind)
{
    switch (kind) {
    case FilterKind::mean: return mean_filter(image);
    case FilterKind::median: return median_filter(image);
    case FilterKind::gaussian: return gaussian_filter(image);
    }
    return image;
}

} // namespace minescan

#endif
