#include "minescan/filter.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace minescan;

namespace {

// Reference implementations: straightforward loops over a padded copy.
std::uint8_t ref_px(const GrayImage& g, long x, long y)
{
    x = std::clamp<long>(x, 0, long(g.width()) - 1);
    y = std::clamp<long>(y, 0, long(g.height()) - 1);
    return g.at(std::size_t(x), std::size_t(y));
}

GrayImage ref_convolve(const GrayImage& g, const int (&w)[3][3], int divisor)
{
    GrayImage out(g.width(), g.height());
    for (long y = 0; y < long(g.height()); ++y)
        for (long x = 0; x < long(g.width()); ++x) {
            long s = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    s += w[dy + 1][dx + 1] * ref_px(g, x + dx, y + dy);
            // round half up with exact rational arithmetic
            const double v = std::floor(double(s) / divisor + 0.5);
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    return out;
}

GrayImage ref_median(const GrayImage& g)
{
    GrayImage out(g.width(), g.height());
    for (long y = 0; y < long(g.height()); ++y)
        for (long x = 0; x < long(g.width()); ++x) {
            std::vector<int> win;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    win.push_back(ref_px(g, x + dx, y + dy));
            std::sort(win.begin(), win.end());
            out.at(x, y) = static_cast<std::uint8_t>(win[4]);
        }
    return out;
}

const int kMean[3][3] = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
const int kGauss[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};

GrayImage gray(std::size_t w, std::size_t h, std::uint8_t fill) { return GrayImage(w, h, fill); }

} // namespace

TEST(Filter, ConstantImageUnchanged)
{
    const GrayImage c = gray(6, 5, 123);
    EXPECT_EQ(apply_mask3(c, Mask3::mean()), c);
    EXPECT_EQ(apply_mask3(c, Mask3::gaussian()), c);
    EXPECT_EQ(median3(c), c);
    EXPECT_EQ(apply_mask5(c, Mask5::mean()), c);
    const RgbImage rgb(5, 4, Rgb{9, 200, 61});
    EXPECT_EQ(mean_filter(rgb), rgb);
    EXPECT_EQ(median_filter(rgb), rgb);
    EXPECT_EQ(gaussian_filter(rgb), rgb);
}

TEST(Filter, MeanOfNinetiesAroundNinetyNine)
{
    GrayImage g = gray(5, 5, 90);
    g.at(2, 2) = 99;
    EXPECT_EQ(apply_mask3(g, Mask3::mean()).at(2, 2), 91);
}

TEST(Filter, MeanSpreadsWhiteImpulse)
{
    RgbImage img(5, 5, Rgb{0, 0, 0});
    img.at(2, 2) = {255, 255, 255};
    const RgbImage out = mean_filter(img);
    EXPECT_EQ(out.at(2, 2), (Rgb{28, 28, 28}));
    EXPECT_EQ(out.at(1, 1), (Rgb{28, 28, 28}));
    EXPECT_EQ(out.at(0, 0), (Rgb{0, 0, 0}));
}

TEST(Filter, MedianRemovesImpulse)
{
    GrayImage g = gray(3, 3, 10);
    g.at(1, 1) = 255;
    EXPECT_EQ(median3(g).at(1, 1), 10);
}

TEST(Filter, GaussianImpulseResponse)
{
    RgbImage img(5, 5, Rgb{0, 0, 0});
    img.at(2, 2) = {160, 160, 160};
    const RgbImage out = gaussian_filter(img);
    EXPECT_EQ(out.at(2, 2).r, 40);
    EXPECT_EQ(out.at(2, 1).g, 20);
    EXPECT_EQ(out.at(1, 2).b, 20);
    EXPECT_EQ(out.at(1, 1).r, 10);
    EXPECT_EQ(out.at(3, 3).r, 10);
}

TEST(Filter, RoundsHalfUp)
{
    // 1 bright pixel of value 9 at a corner of the 3x3 window: Gaussian sum = 9, 9/16 -> 1
    GrayImage g = gray(3, 3, 0);
    g.at(0, 0) = 8; // corner weight 1 -> 8/16 = 0.5 rounds to 1
    EXPECT_EQ(apply_mask3(g, Mask3::gaussian()).at(1, 1), 1);
}

TEST(Filter, MatchesReferenceOnRandomImages)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RgbImage img = testutil::random_image(11, 8, 1000 + seed);
        auto [r, g, b] = split_channels(img);
        EXPECT_EQ(apply_mask3(r, Mask3::mean()), ref_convolve(r, kMean, 9));
        EXPECT_EQ(apply_mask3(g, Mask3::gaussian()), ref_convolve(g, kGauss, 16));
        EXPECT_EQ(median3(b), ref_median(b));
    }
}

TEST(Filter, OneByOneImageUsesReplicatedBorder)
{
    const GrayImage g = gray(1, 1, 77);
    EXPECT_EQ(apply_mask3(g, Mask3::gaussian()).at(0, 0), 77);
    EXPECT_EQ(median3(g).at(0, 0), 77);
}

TEST(Filter, DispatchAndNames)
{
    const RgbImage img = testutil::random_image(6, 6, 5);
    EXPECT_EQ(apply_filter(img, FilterKind::mean), mean_filter(img));
    EXPECT_EQ(apply_filter(img, FilterKind::median), median_filter(img));
    EXPECT_EQ(apply_filter(img, FilterKind::gaussian), gaussian_filter(img));
    for (FilterKind k : {FilterKind::mean, FilterKind::median, FilterKind::gaussian})
        EXPECT_EQ(parse_filter_kind(to_string(k)), k);
    EXPECT_THROW(parse_filter_kind("bilateral"), ConfigError);
}
