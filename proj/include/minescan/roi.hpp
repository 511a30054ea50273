#ifndef MINESCAN_ROI_HPP
#define MINESCAN_ROI_HPP

#include "minescan/error.hpp"
#include "minescan/raster.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace minescan {

/// Inclusive pixel rectangle: (x1,y1) top-left, (x2,y2) bottom-right.
struct Rect {
    std::size_t x1 = 0;
    std::size_t y1 = 0;
    std::size_t x2 = 0;
    std::size_t y2 = 0;

    std::size_t width() const noexcept { return x2 - x1 + 1; }
    std::size_t height() const noexcept { return y2 - y1 + 1; }
    std::size_t area() const noexcept { return width() * height(); }
    bool contains(std::size_t x, std::size_t y) const noexcept
    {
        return x >= x1 && x <= x2 && y >= y1 && y <= y2;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::optional<Rect> intersect(const Rect& a, const Rect& b)
{
    const std::size_t x1 = std::max(a.x1, b.x1);
    const std::size_t y1 = std::max(a.y1, b.y1);
    const std::size_t x2 = std::min(a.x2, b.x2);
    const std::size_t y2 = std::min(a.y2, b.y2);
    if (x1 > x2 || y1 > y2)
        return std::nullopt;
    return Rect{x1, y1, x2, y2};
}

inline double iou(const Rect& a, const Rect& b)
{
    const auto overlap = intersect(a, b);
    if (!overlap)
        return 0.0;
    const double inter = static_cast<double>(overlap->area());
    return inter / (static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter);
}

inline unsigned level_sum(Rgb p) { return unsigned{p.r} + unsigned{p.g} + unsigned{p.b}; }

/// Tight bounding box of every row and column whose summed channel levels
/// exceed `blank_level`. Same outcome as scanning inward from each of the four
/// sides until the first non-blank line.
inline Rect find_roi(const RgbImage& image, std::uint64_t blank_level = 0)
{
    std::vector<std::uint64_t> rows(image.height(), 0);
    std::vector<std::uint64_t> cols(image.width(), 0);
    for (std::size_t y = 0; y < image.height(); ++y) {
        for (std::size_t x = 0; x < image.width(); ++x) {
            const unsigned s = level_sum(image.at(x, y));
            rows[y] += s;
            cols[x] += s;
        }
    }

    auto first = [&](const std::vector<std::uint64_t>& sums) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < sums.size(); ++i)
            if (sums[i] > blank_level)
                return i;
        return std::nullopt;
    };
    auto last = [&](const std::vector<std::uint64_t>& sums) -> std::size_t {
        std::size_t i = sums.size();
        while (i-- > 0)
            if (sums[i] > blank_level)
                return i;
        return 0;
    };

    const auto top = first(rows);
    const auto left = first(cols);
    if (!top || !left)
        throw NoContentError("image has no row or column above blank level " + std::to_string(blank_level));
    return {*left, *top, last(cols), last(rows)};
}

inline RgbImage crop(const RgbImage& image, const Rect& rect)
{
    if (rect.x1 > rect.x2 || rect.y1 > rect.y2 || rect.x2 >= image.width() || rect.y2 >= image.height())
        throw BoundsError("crop rectangle lies outside the image");
    RgbImage out(rect.width(), rect.height());
    for (std::size_t y = 0; y < out.height(); ++y)
        for (std::size_t x = 0; x < out.width(); ++x)
            out.at(x, y) = image.at(rect.x1 + x, rect.y1 + y);
    return out;
}

/// Nearest-neighbour resample to width x height; aspect ratio is not kept.
inline RgbImage resize_nearest(const RgbImage& image, std::size_t width, std::size_t height)
{
    RgbImage out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t sy = y * image.height() / height;
        for (std::size_t x = 0; x < width; ++x)
            out.at(x, y) = image.at(x * image.width() / width, sy);
    }
    return out;
}

inline RgbImage scale_to_64(const RgbImage& image) { return resize_nearest(image, 64, 64); }

} // namespace minescan

#endif
