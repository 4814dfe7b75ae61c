#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "patchlr/image.hpp"

using namespace patchlr;

TEST(Image, RejectsWrongSizeAndNonFinite) {
    EXPECT_THROW(Image(3, std::vector<double>(8, 0.0)), std::invalid_argument);
    std::vector<double> px(4, 1.0);
    px[2] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(Image(2, px), std::invalid_argument);
    px[2] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(Image(2, px), std::invalid_argument);
}

TEST(Image, RowMajorIndexing) {
    const Image z = fixtures::from_rows({{1, 2}, {3, 4}});
    EXPECT_EQ(z(0, 1), 2.0);
    EXPECT_EQ(z(1, 0), 3.0);
    EXPECT_EQ(z[3], 4.0);
    EXPECT_DOUBLE_EQ(z.norm(), std::sqrt(30.0));
}

TEST(Sampling, SinglePixelGrid) {
    const SampleSet s = sample_uniform(1, 3, RngSeed{9});
    ASSERT_EQ(s.size(), 3u);
    for (const Pixel& p : s.draws())
        EXPECT_EQ(p, (Pixel{0, 0}));
    EXPECT_EQ(s.distinct().size(), 1u);
}

TEST(Sampling, TwentyPercentOfSixtyFour) {
    const SampleSet s = sample_uniform(64, 819, RngSeed{1});
    EXPECT_EQ(s.size(), 819u);
    for (const Pixel& p : s.draws()) {
        EXPECT_GE(p.row, 0);
        EXPECT_LT(p.row, 64);
        EXPECT_GE(p.col, 0);
        EXPECT_LT(p.col, 64);
    }
    EXPECT_LE(s.distinct().size(), 819u);
}

TEST(Sampling, RejectsDegenerateArguments) {
    EXPECT_THROW(sample_uniform(0, 3, RngSeed{}), std::invalid_argument);
    EXPECT_THROW(sample_uniform(4, 0, RngSeed{}), std::invalid_argument);
    EXPECT_THROW(SampleSet(4, {{4, 0}}), std::invalid_argument);
}

// Chi-square against the uniform law on 16 cells, plus a per-cell 3 sigma band.
TEST(Sampling, UniformFrequencies) {
    const std::size_t m = 100000;
    const SampleSet s = sample_uniform(4, m, RngSeed{12345});
    const auto mult = s.multiplicity();
    const double p = 1.0 / 16.0;
    const double expected = m * p;
    const double sigma = std::sqrt(m * p * (1 - p));
    double chi2 = 0.0;
    for (int c : mult) {
        EXPECT_LE(std::abs(c - expected), 3.0 * sigma);
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 15 degrees of freedom; 99.9% quantile is 37.7.
    EXPECT_LT(chi2, 37.7);
}

TEST(Sampling, DeterministicPerSeed) {
    const SampleSet a = sample_uniform(16, 100, RngSeed{77});
    const SampleSet b = sample_uniform(16, 100, RngSeed{77});
    const SampleSet c = sample_uniform(16, 100, RngSeed{78});
    EXPECT_EQ(a.draws(), b.draws());
    EXPECT_NE(a.draws(), c.draws());
}

TEST(Sampling, DistinctIsSortedUniqueSupport) {
    const SampleSet s(3, {{2, 1}, {0, 0}, {2, 1}, {1, 2}});
    EXPECT_EQ(s.size(), 4u);
    ASSERT_EQ(s.distinct().size(), 3u);
    EXPECT_EQ(s.distinct()[0], (Pixel{0, 0}));
    EXPECT_EQ(s.distinct()[2], (Pixel{2, 1}));
    EXPECT_EQ(s.multiplicity()[7], 2);
    EXPECT_EQ(s.indicator()[5], 1);
}

TEST(Sampling, DerivedSeedsDiffer) {
    const RngSeed a = derive_seed(RngSeed{1}, 0);
    const RngSeed b = derive_seed(RngSeed{1}, 1);
    EXPECT_NE(a.value, b.value);
    EXPECT_EQ(a.value, derive_seed(RngSeed{1}, 0).value);
}

TEST(Mask, FullObservationIsIdentity) {
    std::mt19937_64 rng(3);
    const Image z = fixtures::random_image(5, rng);
    EXPECT_EQ(apply_mask(z, full_design(5)), z);
}

TEST(Mask, SinglePixel) {
    const Image z = fixtures::from_rows({{5, 6}, {7, 8}});
    EXPECT_EQ(apply_mask(z, SampleSet(2, {{0, 0}})), fixtures::from_rows({{5, 0}, {0, 0}}));
}

TEST(Mask, MatchesIndicatorMultiplyAndIsIdempotent) {
    std::mt19937_64 rng(4);
    const Image z = fixtures::random_image(8, rng);
    const SampleSet s = sample_uniform(8, 30, RngSeed{4});
    const Image y = apply_mask(z, s);
    const auto ind = s.indicator();
    for (std::size_t i = 0; i < z.size(); ++i)
        EXPECT_EQ(y[i], z[i] * ind[i]);
    EXPECT_EQ(apply_mask(y, s), y);
}

TEST(Psnr, IdenticalSentinel) {
    const Image z(4, 12.0);
    const PsnrResult r = psnr(z, z);
    EXPECT_TRUE(r.identical);
    EXPECT_TRUE(std::isinf(r.db));
    EXPECT_EQ(format_psnr(r), "identical");
}

TEST(Psnr, KnownValues) {
    EXPECT_NEAR(psnr(Image(4, 0.0), Image(4, 255.0)).db, 0.0, 1e-12);
    EXPECT_NEAR(psnr(Image(4, 0.0), Image(4, 1.0)).db, 20.0 * std::log10(255.0), 1e-12);
    EXPECT_NEAR(psnr(Image(4, 0.0), Image(4, 1.0)).db, 48.13, 5e-3);
}

TEST(Psnr, SymmetricAndSizeChecked) {
    std::mt19937_64 rng(5);
    const Image a = fixtures::random_image(6, rng, 20.0);
    const Image b = fixtures::random_image(6, rng, 20.0);
    EXPECT_DOUBLE_EQ(psnr(a, b).db, psnr(b, a).db);
    EXPECT_THROW(psnr(a, Image(5)), std::invalid_argument);
}
