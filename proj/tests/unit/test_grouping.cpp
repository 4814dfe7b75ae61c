#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "patchlr/grouping.hpp"

using namespace patchlr;

namespace {

Eigen::MatrixXd dense_gamma(int side) {
    const int n = side * side;
    Eigen::MatrixXd g(n, n);
    std::vector<double> e(n, 0.0), out(n);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        apply_gamma(e, out, side);
        for (int i = 0; i < n; ++i)
            g(i, j) = out[i];
        e[j] = 0.0;
    }
    return g;
}

// Direct solve of the equality-constrained least-squares problem
// min 1/2 |Gamma z|^2 s.t. z = y on the observed set (normal equations on
// the free pixels).
Image kkt_oracle(const Image& y, const SampleSet& s) {
    const int side = y.side();
    const Eigen::MatrixXd g = dense_gamma(side);
    const auto obs = s.indicator();
    std::vector<int> free, fixed;
    for (int i = 0; i < side * side; ++i)
        (obs[i] ? fixed : free).push_back(i);
    Eigen::MatrixXd gu(g.rows(), free.size()), gl(g.rows(), fixed.size());
    Eigen::VectorXd yl(fixed.size());
    for (std::size_t j = 0; j < free.size(); ++j)
        gu.col(j) = g.col(free[j]);
    for (std::size_t j = 0; j < fixed.size(); ++j) {
        gl.col(j) = g.col(fixed[j]);
        yl(j) = y[fixed[j]];
    }
    const Eigen::VectorXd zu =
        (gu.transpose() * gu).ldlt().solve(-gu.transpose() * (gl * yl));
    Image out = y;
    for (std::size_t j = 0; j < free.size(); ++j)
        out[free[j]] = zu(j);
    return out;
}

SampleSet all_but(int side, std::vector<Pixel> missing) {
    std::vector<Pixel> draws;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            if (std::find(missing.begin(), missing.end(), Pixel{r, c}) == missing.end())
                draws.push_back({r, c});
    return SampleSet(side, draws);
}

} // namespace

TEST(Gamma, MatchesGridLaplacian) {
    // Gamma = I (x) L + L (x) I with L = tridiag(-1; 1,2,...,2,1; -1).
    const int side = 5;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(side, side);
    for (int i = 0; i < side; ++i) {
        l(i, i) = (i == 0 || i == side - 1) ? 1 : 2;
        if (i > 0)
            l(i, i - 1) = l(i - 1, i) = -1;
    }
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(side, side);
    Eigen::MatrixXd expected(side * side, side * side);
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b)
            expected.block(a * side, b * side, side, side) = id(a, b) * l + l(a, b) * id;
    EXPECT_LE((dense_gamma(side) - expected).norm(), 1e-14);
}

TEST(Reference, FullObservationReturnsInput) {
    std::mt19937_64 rng(1);
    const Image z = fixtures::random_image(6, rng, 30.0);
    const ReferenceResult r = reference_image_trace(z, full_design(6), {});
    EXPECT_EQ(r.image, z);
    EXPECT_EQ(r.iterations, 0);
}

// Oracle: KKT solve at 5x5 with one interior pixel missing.
TEST(Reference, ConstantWithOneHole) {
    Image y(5, 42.0);
    y(2, 2) = 0.0;
    const SampleSet s = all_but(5, {{2, 2}});
    ReferenceConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_iters = 10000;
    const Image r = reference_image(y, s, cfg);
    EXPECT_NEAR(r(2, 2), 42.0, 1e-9);
    EXPECT_NEAR(kkt_oracle(y, s)(2, 2), 42.0, 1e-9);
}

// Oracle: dense equality-constrained least squares at N = 8 on a checkerboard.
TEST(Reference, CheckerboardMatchesKkt) {
    std::mt19937_64 rng(2);
    const Image truth = fixtures::random_image(8, rng, 50.0);
    std::vector<Pixel> draws;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            if ((r + c) % 2 == 0)
                draws.push_back({r, c});
    const SampleSet s(8, draws);
    const Image y = apply_mask(truth, s);
    ReferenceConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_iters = 20000;
    const Image got = reference_image(y, s, cfg);
    const Image want = kkt_oracle(y, s);
    for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_NEAR(got[i], want[i], 1e-6);
}

TEST(Reference, MonotoneAndFeasible) {
    std::mt19937_64 rng(3);
    const Image truth = fixtures::random_image(16, rng, 50.0);
    const SampleSet s = sample_uniform(16, 60, RngSeed{3});
    const Image y = apply_mask(truth, s);
    const ReferenceResult r = reference_image_trace(y, s, {});
    for (std::size_t t = 1; t < r.objective.size(); ++t)
        EXPECT_LE(r.objective[t], r.objective[t - 1] + 1e-12);
    for (const Pixel& p : s.distinct())
        EXPECT_EQ(r.image(p.row, p.col), y(p.row, p.col));
    EXPECT_GT(r.lambda_max, 0.0);
    EXPECT_LE(r.lambda_max, 64.0 + 1e-9); // |Gamma| <= 8
}

TEST(Reference, RejectsBadConfig) {
    ReferenceConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(reference_image(Image(4), full_design(4), cfg), std::invalid_argument);
    EXPECT_THROW(reference_image(Image(4), full_design(5), {}), std::invalid_argument);
}

TEST(Groups, ConstantReferenceFollowsRasterTieBreak) {
    const PatchConfig pcfg{2, Boundary::Valid, 6};
    GroupingConfig g;
    g.k_groups = 1;
    g.group_size = 4;
    g.search_radius = 1;
    const PatchGroups out = build_groups(Image(6, 3.0), g, pcfg);
    ASSERT_EQ(out.count(), 1u);
    // Single reference anchor sits at the lattice centre (2,2).
    const std::vector<Pixel> expected{{2, 2}, {1, 1}, {1, 2}, {1, 3}};
    EXPECT_EQ(out.groups[0], expected);
}

TEST(Groups, SizeOneIsReferenceOnly) {
    const PatchConfig pcfg{2, Boundary::Valid, 8};
    GroupingConfig g;
    g.k_groups = 4;
    g.group_size = 1;
    const PatchGroups out = build_groups(Image(8, 1.0), g, pcfg);
    const auto anchors = reference_anchors(4, pcfg);
    ASSERT_EQ(out.count(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_EQ(out.groups[k], std::vector<Pixel>{anchors[k]});
}

// Oracle: exhaustive distance table at N = 8, n = 2 with two flat halves.
TEST(Groups, TwoRegionsNeverMix) {
    Image z(8, 0.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 4; c < 8; ++c)
            z(r, c) = 100.0;
    const PatchConfig pcfg{2, Boundary::Valid, 8};
    GroupingConfig g;
    g.k_groups = 4;
    g.group_size = 6;
    g.search_radius = 3;
    const PatchGroups out = build_groups(z, g, pcfg);
    for (const auto& grp : out.groups) {
        const Pixel ref = grp.front();
        const bool left = ref.col + 1 < 4;
        for (const Pixel& p : grp) {
            if (left)
                EXPECT_LT(p.col + 1, 4);
            else
                EXPECT_GE(p.col, 4);
        }
    }
}

// Brute force: members are never farther than an excluded in-window candidate.
TEST(Groups, NearestSelectionMatchesBruteForce) {
    std::mt19937_64 rng(4);
    const Image z = fixtures::random_image(12, rng, 10.0);
    const PatchConfig pcfg{3, Boundary::Valid, 12};
    GroupingConfig g;
    g.k_groups = 5;
    g.group_size = 7;
    g.search_radius = 3;
    const PatchGroups out = build_groups(z, g, pcfg);
    const PatchLift sweep(pcfg, full_sweep_group(pcfg));
    const Eigen::MatrixXd all = sweep.apply(z).blocks[0];
    const int a = pcfg.anchors_per_axis();
    auto dist = [&](Pixel p, Pixel q) {
        return (all.col(p.row * a + p.col) - all.col(q.row * a + q.col)).squaredNorm();
    };
    for (const auto& grp : out.groups) {
        const Pixel ref = grp.front();
        double worst_in = 0.0;
        for (const Pixel& p : grp)
            worst_in = std::max(worst_in, dist(ref, p));
        for (int r = std::max(0, ref.row - 3); r <= std::min(a - 1, ref.row + 3); ++r)
            for (int c = std::max(0, ref.col - 3); c <= std::min(a - 1, ref.col + 3); ++c) {
                if (std::find(grp.begin(), grp.end(), Pixel{r, c}) != grp.end())
                    continue;
                EXPECT_GE(dist(ref, {r, c}), worst_in);
            }
    }
    EXPECT_EQ(build_groups(z, g, pcfg).groups, out.groups);
}

TEST(Groups, WindowTooSmallNamesAnchor) {
    const PatchConfig pcfg{2, Boundary::Valid, 6};
    GroupingConfig g;
    g.k_groups = 1;
    g.group_size = 10;
    g.search_radius = 1;
    try {
        build_groups(Image(6), g, pcfg);
        FAIL() << "small window accepted";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("(2,2)"), std::string::npos);
    }
}

TEST(Groups, AutoCountTilesAnchorRange) {
    const PatchConfig pcfg{8, Boundary::Valid, 128};
    GroupingConfig g;
    EXPECT_EQ(resolve_group_count(g, pcfg), 31 * 31);
    const auto anchors = reference_anchors(31 * 31, pcfg);
    EXPECT_EQ(anchors.front(), (Pixel{0, 0}));
    EXPECT_EQ(anchors.back(), (Pixel{120, 120}));
}
