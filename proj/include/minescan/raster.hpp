#ifndef MINESCAN_RASTER_HPP
#define MINESCAN_RASTER_HPP

#include "minescan/error.hpp"

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace minescan {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major raster with the origin at the top-left corner, x to the right and
/// y downward. Dimensions are fixed at construction; the pixel buffer always
/// holds exactly width*height entries.
template <class Pixel>
class Image {
public:
    using pixel_type = Pixel;

    Image() = default;

    Image(std::size_t width, std::size_t height, Pixel fill = Pixel{})
        : width_(width), height_(height), pixels_(width * height, fill)
    {
        if (width == 0 || height == 0)
            throw DimensionError("image dimensions must be at least 1x1");
    }

    Image(std::size_t width, std::size_t height, std::vector<Pixel> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels))
    {
        if (width == 0 || height == 0)
            throw DimensionError("image dimensions must be at least 1x1");
        if (pixels_.size() != width * height)
            throw DimensionError("pixel count " + std::to_string(pixels_.size()) +
                                 " does not match " + std::to_string(width) + "x" +
                                 std::to_string(height));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    const Pixel& at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
    Pixel& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

    std::span<const Pixel> pixels() const noexcept { return pixels_; }
    std::span<Pixel> pixels() noexcept { return pixels_; }

    bool same_shape(const auto& other) const noexcept
    {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<Pixel> pixels_;
};

using RgbImage = Image<Rgb>;
using GrayImage = Image<std::uint8_t>;

namespace detail {

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string read_header_token(std::istream& in)
{
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n')
                c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c == '#')
        in.unget();
    return token;
}

inline std::size_t parse_header_number(const std::string& token, const std::string& what,
                                       const std::string& path)
{
    if (token.empty())
        throw FormatError(path + ": missing " + what + " in PPM header");
    std::size_t value = 0;
    for (char ch : token) {
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw FormatError(path + ": non-numeric " + what + " '" + token + "'");
        value = value * 10 + static_cast<std::size_t>(ch - '0');
        if (value > (1u << 24))
            throw FormatError(path + ": " + what + " out of range");
    }
    return value;
}

} // namespace detail

/// Reads a binary PPM (P6) with maxval 255. Header comments are skipped.
inline RgbImage load_ppm(const std::filesystem::path& path)
{
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(name + ": cannot open for reading");

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '6')
        throw FormatError(name + ": not a binary PPM (expected magic P6)");

    const std::size_t width = detail::parse_header_number(detail::read_header_token(in), "width", name);
    const std::size_t height = detail::parse_header_number(detail::read_header_token(in), "height", name);
    // read_header_token consumed exactly one whitespace byte after maxval,
    // which is the single separator the format mandates before raster data.
    const std::size_t maxval = detail::parse_header_number(detail::read_header_token(in), "maxval", name);
    if (width == 0 || height == 0)
        throw FormatError(name + ": zero image dimension");
    if (maxval != 255)
        throw MaxvalError(name + ": unsupported maxval " + std::to_string(maxval));

    std::vector<Rgb> pixels(width * height);
    std::vector<char> raw(pixels.size() * 3);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw TruncatedError(name + ": expected " + std::to_string(raw.size()) + " data bytes, got " +
                             std::to_string(in.gcount()));
    for (std::size_t i = 0; i < pixels.size(); ++i)
        pixels[i] = {static_cast<std::uint8_t>(raw[3 * i]), static_cast<std::uint8_t>(raw[3 * i + 1]),
                     static_cast<std::uint8_t>(raw[3 * i + 2])};
    return RgbImage(width, height, std::move(pixels));
}

inline void save_ppm(const RgbImage& image, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(path.string() + ": cannot open for writing");
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<char> raw;
    raw.reserve(image.size() * 3);
    for (const Rgb& p : image.pixels()) {
        raw.push_back(static_cast<char>(p.r));
        raw.push_back(static_cast<char>(p.g));
        raw.push_back(static_cast<char>(p.b));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out)
        throw IoError(path.string() + ": write failed");
}

/// Splits into red, green and blue planes, in that order.
inline std::tuple<GrayImage, GrayImage, GrayImage> split_channels(const RgbImage& image)
{
    GrayImage r(image.width(), image.height());
    GrayImage g(image.width(), image.height());
    GrayImage b(image.width(), image.height());
    const auto src = image.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        r.pixels()[i] = src[i].r;
        g.pixels()[i] = src[i].g;
        b.pixels()[i] = src[i].b;
    }
    return {std::move(r), std::move(g), std::move(b)};
}

inline RgbImage merge_channels(const GrayImage& r, const GrayImage& g, const GrayImage& b)
{
    if (!r.same_shape(g) || !r.same_shape(b))
        throw DimensionError("merge_channels: channel planes differ in size");
    RgbImage out(r.width(), r.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.pixels()[i] = {r.pixels()[i], g.pixels()[i], b.pixels()[i]};
    return out;
}

} // namespace minescan

#endif
