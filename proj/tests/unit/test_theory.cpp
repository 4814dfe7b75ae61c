#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "patchlr/errors.hpp"
#include "patchlr/theory.hpp"

using namespace patchlr;

namespace {

Image sinusoid(int side, double f, double g, double amp = 40.0, double phase = 0.3) {
    SyntheticSpec spec;
    spec.side = side;
    spec.explicit_terms = {{amp, f, g, phase}};
    return generate_synthetic(spec);
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

} // namespace

TEST(Synthetic, DcTermIsConstantRankOne) {
    const Image z = sinusoid(8, 0.0, 0.0, 5.0, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i)
        EXPECT_NEAR(z[i], 5.0, 1e-12);
    const PatchConfig pcfg{3, Boundary::Valid, 8};
    EXPECT_EQ(block_ranks(lift(z, full_sweep_group(pcfg), pcfg)).total, 1);
}

TEST(Synthetic, GenericRanks) {
    SyntheticSpec s1;
    s1.side = 16;
    s1.components = 1;
    const PatchConfig p1{4, Boundary::Valid, 16};
    EXPECT_LE(block_ranks(lift(generate_synthetic(s1), full_sweep_group(p1), p1)).total, 2);
    SyntheticSpec s3;
    const PatchConfig p3{8, Boundary::Valid, 32};
    EXPECT_LE(block_ranks(lift(generate_synthetic(s3), full_sweep_group(p3), p3)).total, 6);
}

TEST(Synthetic, DeterministicAndSeparated) {
    SyntheticSpec s;
    s.components = 4;
    s.seed = 5;
    EXPECT_EQ(generate_synthetic(s), generate_synthetic(s));
    const auto terms = synthetic_terms(s);
    ASSERT_EQ(terms.size(), 4u);
    for (const auto& t : terms) {
        EXPECT_GE(t.f, 0.0);
        EXPECT_LT(t.f, 0.5);
        EXPECT_GE(t.amplitude, s.amplitude_min);
        EXPECT_LE(t.amplitude, s.amplitude_max);
    }
    s.min_separation = 10.0;
    EXPECT_THROW(synthetic_terms(s), std::runtime_error);
}

TEST(TangentBasis, OrthonormalWithRightDimension) {
    const Image z = sinusoid(8, 0.17, 0.29);
    const PatchConfig pcfg{3, Boundary::Valid, 8};
    const TangentSpace t = tangent_space(lift(z, full_sweep_group(pcfg), pcfg));
    ASSERT_EQ(t.rank(), 2);
    const auto basis = tangent_basis(t);
    ASSERT_EQ(basis.size(), 2u * (9 + 36 - 2));
    for (std::size_t i = 0; i < basis.size(); i += 7)
        for (std::size_t j = 0; j < basis.size(); j += 5)
            EXPECT_NEAR(inner(basis[i], basis[j]), i == j ? 1.0 : 0.0, 1e-12);
    for (std::size_t i = 0; i < basis.size(); i += 11)
        EXPECT_LE(frobenius_norm(tangent_project(basis[i], t) - basis[i]), 1e-12);
}

TEST(Concentration, FullDesignIsExact) {
    const Image z = sinusoid(8, 0.17, 0.29);
    const PatchConfig pcfg{3, Boundary::Valid, 8};
    const PatchLift l(pcfg, full_sweep_group(pcfg));
    const SamplingBasis basis(l);
    const TangentSamplingOperator op(basis, tangent_space(l.apply(z)));
    EXPECT_LE(op.deviation(full_design(8)), 1e-12);
    // The explicit operator agrees with applying P_T B P_T to basis elements.
    const auto tb = tangent_basis(tangent_space(l.apply(z)));
    const auto img = tangent_project(basis.project(tb[3]), tangent_space(l.apply(z)));
    for (std::size_t j = 0; j < tb.size(); j += 9)
        EXPECT_NEAR(op.full()(static_cast<Eigen::Index>(j), 3), inner(tb[j], img), 1e-12);
}

TEST(Concentration, DimensionGuard) {
    const Image z = sinusoid(16, 0.17, 0.29);
    const PatchConfig pcfg{4, Boundary::Valid, 16};
    EXPECT_THROW(concentration_probe(z, full_sweep_group(pcfg), pcfg, 10, 1, RngSeed{}, 1e-8, 100),
                 InstanceTooLarge);
}

// Monte-Carlo oracle: E[(N^2/m) B_Lambda] = B, so the trial-averaged
// operator approaches P_T B P_T at the 1/sqrt(trials) rate.
TEST(Concentration, UnbiasedAndShrinksWithM) {
    const Image z = sinusoid(8, 0.17, 0.29);
    const PatchConfig pcfg{3, Boundary::Valid, 8};
    const auto g = full_sweep_group(pcfg);
    const int trials = 400;
    const ConcentrationReport r = concentration_probe(z, g, pcfg, 32, trials, RngSeed{1});
    ASSERT_EQ(r.deviations.size(), static_cast<std::size_t>(trials));
    const double scale = median(r.deviations);
    EXPECT_LE(r.mean_deviation, 5.0 * scale / std::sqrt(trials));

    std::vector<double> med;
    for (std::size_t m : {32, 128, 512})
        med.push_back(median(concentration_probe(z, g, pcfg, m, 31, RngSeed{2}).deviations));
    EXPECT_GE(med[0], med[1]);
    EXPECT_GE(med[1], med[2]);
}

TEST(Golfing, BatchCount) {
    EXPECT_EQ(golfing_batches(16), 12);
    EXPECT_EQ(golfing_batches(32), 14);
    EXPECT_EQ(golfing_batches(1), 1);
}

TEST(Golfing, BookkeepingAndIdentities) {
    const Image z = sinusoid(16, 0.17, 0.29);
    const PatchConfig pcfg{4, Boundary::Valid, 16};
    const auto g = full_sweep_group(pcfg);
    const std::size_t m = 154; // not a multiple of L = 12
    const CertificateReport r = golfing_certificate(z, g, pcfg, m, RngSeed{3});
    EXPECT_EQ(r.batches, 12);
    ASSERT_EQ(r.decay.size(), 13u);
    std::size_t total = 0;
    for (std::size_t b : r.batch_sizes) {
        total += b;
        EXPECT_TRUE(b == m / 12 || b == m / 12 + 1);
    }
    EXPECT_EQ(total, m);
    EXPECT_NEAR(r.decay[0], std::sqrt(2.0), 1e-12); // |U V^T|_F = sqrt(r)
    EXPECT_LE(r.cond1_residual, 1e-10 * (1.0 + r.y_norm));
    EXPECT_LE(r.telescoping_error, 1e-10);
    EXPECT_THROW(golfing_certificate(z, g, pcfg, 11, RngSeed{3}), std::invalid_argument);
}

TEST(Golfing, ZeroImageIsTrivial) {
    const PatchConfig pcfg{4, Boundary::Valid, 16};
    const CertificateReport r = golfing_certificate(Image(16), full_sweep_group(pcfg), pcfg, 100, RngSeed{});
    EXPECT_EQ(r.rank, 0);
    EXPECT_EQ(r.y_norm, 0.0);
    EXPECT_EQ(r.cond2_norm, 0.0);
    EXPECT_EQ(r.cond3_error, 0.0);
}

// With every batch equal to the full design, B_Lambda_i / q_i = B and the
// scheme terminates after one step with an exact certificate.
TEST(Golfing, FullDesignBatchesGiveExactCertificate) {
    const Image z = sinusoid(16, 0.17, 0.29);
    const PatchConfig pcfg{4, Boundary::Valid, 16};
    std::vector<Pixel> draws;
    for (int i = 0; i < golfing_batches(16); ++i)
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c)
                draws.push_back({r, c});
    const CertificateReport rep = golfing_certificate(z, full_sweep_group(pcfg), pcfg, SampleSet(16, draws));
    EXPECT_LE(rep.decay[1], 1e-12);
    EXPECT_LE(rep.cond2_norm, 1e-12);
    EXPECT_LE(rep.cond3_error, 1e-12);
}

TEST(LemmaBounds, HoldOnSmallSynthetic) {
    SyntheticSpec s;
    s.side = 16;
    s.components = 1;
    const Image z = generate_synthetic(s);
    const PatchConfig pcfg{4, Boundary::Valid, 16};
    const LemmaBoundsReport r = verify_lemma_bounds(z, full_sweep_group(pcfg), pcfg);
    EXPECT_TRUE(r.ptb_holds);
    EXPECT_TRUE(r.bnorm_holds);
    EXPECT_LE(r.slack_ptb, 1.0);
    EXPECT_NEAR(r.c_s, 16.0 / 256.0, 1e-15);
    EXPECT_GE(r.nu, 1.0);
}

TEST(LemmaBounds, ZeroRankAndDuplication) {
    const PatchConfig pcfg{4, Boundary::Valid, 12};
    const auto g = full_sweep_group(pcfg);
    const LemmaBoundsReport zero = verify_lemma_bounds(Image(12), g, pcfg);
    EXPECT_EQ(zero.max_ptb_fro_sq, 0.0);
    EXPECT_EQ(zero.max_ptb_bnorm_sq, 0.0);

    const Image z = sinusoid(12, 0.11, 0.23);
    auto g2 = g;
    g2.groups.push_back(g.groups[0]);
    const LemmaBoundsReport one = verify_lemma_bounds(z, g, pcfg);
    const LemmaBoundsReport two = verify_lemma_bounds(z, g2, pcfg);
    EXPECT_EQ(two.rank, 2 * one.rank);
    EXPECT_NEAR(two.max_ptb_fro_sq, one.max_ptb_fro_sq, 1e-12);
    EXPECT_TRUE(two.ptb_holds);
    EXPECT_TRUE(two.bnorm_holds);
}

TEST(Phase, FullObservationAlwaysSucceeds) {
    SyntheticSpec s;
    s.side = 12;
    s.components = 1;
    const PatchConfig pcfg{3, Boundary::Valid, 12};
    PhaseConfig cfg;
    cfg.m_grid = {144};
    cfg.trials = 3;
    const auto pts = phase_transition(s, pcfg, cfg);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].successes, 3);
}

TEST(Phase, ReproducibleAndBounded) {
    SyntheticSpec s;
    s.side = 12;
    s.components = 1;
    const PatchConfig pcfg{3, Boundary::Valid, 12};
    PhaseConfig cfg;
    cfg.m_grid = {20, 80};
    cfg.trials = 3;
    cfg.seed = RngSeed{4};
    const auto a = phase_transition(s, pcfg, cfg);
    const auto b = phase_transition(s, pcfg, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].successes, b[i].successes);
        EXPECT_EQ(a[i].mean_rel_error, b[i].mean_rel_error);
        EXPECT_LE(a[i].successes, a[i].trials);
    }
}

TEST(Spearman, KnownValues) {
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
    // Ties take average ranks: y ranks (1.5, 1.5, 3, 4).
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {0, 0, 5, 9}), 0.9486832980505138, 1e-12);
    EXPECT_THROW(spearman({1}, {1}), std::invalid_argument);
}
