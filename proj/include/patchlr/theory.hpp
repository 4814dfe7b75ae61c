#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "patchlr/image.hpp"
#include "patchlr/patch_ops.hpp"
#include "patchlr/solver.hpp"

namespace patchlr {

// ---------------------------------------------------------------------------
// Synthetic low-rank images

/// One term a cos(2 pi (f k1 + g k2) + phase).
struct Sinusoid {
    double amplitude = 1.0;
    double f = 0.0;
    double g = 0.0;
    double phase = 0.0;
};

struct SyntheticSpec {
    int side = 32;
    int components = 3;
    std::uint64_t seed = 1;
    double amplitude_min = 20.0;
    double amplitude_max = 60.0;
    /// Minimum torus distance between any two frequency pairs, also against
    /// the mirrored pair (-f, -g). 0 selects 1 / side.
    double min_separation = 0.0;
    /// When nonempty these terms are used verbatim and the random fields are ignored.
    std::vector<Sinusoid> explicit_terms;
};

/// Real sum of sinusoids. Random frequencies are drawn with f in [0, 1/2),
/// g in [-1/2, 1/2) and redrawn (up to 1000 times) while two pairs are closer
/// than the separation; then std::runtime_error.
Image generate_synthetic(const SyntheticSpec& spec);
std::vector<Sinusoid> synthetic_terms(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Operators restricted to the tangent space

/// Explicit coordinates of the sampling basis on an orthonormal basis
/// {E_j} of the (block-diagonal) tangent space:
///   Phi(j, w) = <E_j, B_w>.
/// Then P_T B P_T has matrix Phi Phi^T and P_T B_Lambda P_T has matrix
/// Phi diag(multiplicity) Phi^T.
class TangentSamplingOperator {
public:
    /// Throws InstanceTooLarge if dim(T) exceeds `max_dim`.
    TangentSamplingOperator(const SamplingBasis& basis, const TangentSpace& t,
                            Eigen::Index max_dim = 2000);

    Eigen::Index dimension() const noexcept { return phi_.rows(); }
    const Eigen::MatrixXd& phi() const noexcept { return phi_; }
    /// Matrix of P_T B P_T.
    const Eigen::MatrixXd& full() const noexcept { return full_; }
    /// Matrix of scale * P_T B_Lambda P_T with per-pixel weights.
    Eigen::MatrixXd sampled(const std::vector<double>& weights, double scale) const;
    /// |scale * P_T B_Lambda P_T - P_T B P_T| (spectral norm).
    double deviation(const std::vector<double>& weights, double scale) const;
    double deviation(const SampleSet& samples) const;

private:
    Eigen::MatrixXd phi_;
    Eigen::MatrixXd full_;
    int side_ = 0;
};

/// Orthonormal basis of the block-diagonal tangent space, as lifted matrices.
/// Block k contributes u_a e_j^T (a < r_k, all j) and w_c v_b^T (w_c spanning
/// the complement of U_k), r_k (n^2 + g_k - r_k) elements.
std::vector<GroupedPatchMatrix> tangent_basis(const TangentSpace& t);

/// Spectral norm of a symmetric matrix.
double symmetric_norm(const Eigen::MatrixXd& a);

struct ConcentrationReport {
    std::vector<double> deviations; ///< one per trial
    /// Deviation of the trial-averaged operator from P_T B P_T.
    double mean_deviation = 0.0;
    Eigen::Index dimension = 0;
    std::size_t m = 0;
    int trials = 0;
};

/// Per trial, draws m pixels and measures |(N^2/m) P_T B_Lambda P_T - P_T B P_T|
/// on the tangent space of G(z*). Trial t uses derive_seed(seed, t).
ConcentrationReport concentration_probe(const Image& truth, const PatchGroups& groups,
                                        const PatchConfig& pcfg, std::size_t m, int trials,
                                        RngSeed seed, double tol_sigma = 1e-8,
                                        Eigen::Index max_dim = 2000);

// ---------------------------------------------------------------------------
// Golfing-scheme dual certificate

struct CertificateReport {
    double cond1_residual = 0.0; ///< |(B - B'_Lambda)(Y)|_F
    double cond2_norm = 0.0;     ///< |P_T-perp(Y)| spectral
    double cond3_error = 0.0;    ///< |U V^T - P_T(Y)|_F
    double telescoping_error = 0.0; ///< |U V^T - P_T(Y) - P_T(F_L)|_F
    double y_norm = 0.0;         ///< |Y|_F
    std::vector<double> decay;   ///< |F_i|_F, i = 0..L
    int batches = 0;             ///< L
    double q = 0.0;              ///< m / (N^2 L)
    std::vector<std::size_t> batch_sizes;
    Eigen::Index rank = 0;
};

/// L = ceil(4 ln N) batches of the m draws (sizes differ by at most one, each
/// batch uses q_i = |Lambda_i| / N^2), then
///   F_0 = U V^T,  F_i = P_T (B - B_{Lambda_i} / q_i) P_T (F_{i-1}),
///   Y = sum_i (B_{Lambda_i} / q_i + B-perp)(F_{i-1}).
/// Throws std::invalid_argument if m < L.
CertificateReport golfing_certificate(const Image& truth, const PatchGroups& groups,
                                      const PatchConfig& pcfg, std::size_t m, RngSeed seed,
                                      double tol_sigma = 1e-8);
/// Same on a given draw sequence (m = samples.size()).
CertificateReport golfing_certificate(const Image& truth, const PatchGroups& groups,
                                      const PatchConfig& pcfg, const SampleSet& samples,
                                      double tol_sigma = 1e-8);

/// ceil(4 ln N).
int golfing_batches(int side);

// ---------------------------------------------------------------------------
// Incoherence bounds on B_w

struct LemmaBoundsReport {
    double max_ptb_fro_sq = 0.0;   ///< max_w |P_T(B_w)|_F^2
    double bound_ptb = 0.0;        ///< mu r / N^2
    double max_ptb_bnorm_sq = 0.0; ///< max_w |P_T(B_w / b_w)|_B^2
    double bound_bnorm = 0.0;      ///< 16 M mu r / N^2
    double slack_ptb = 0.0;        ///< max ratio lhs / bound (0 when r = 0)
    double slack_bnorm = 0.0;
    bool ptb_holds = true;
    bool bnorm_holds = true;
    double nu = 0.0;
    double m_ratio = 0.0;
    double c_s = 0.0;
    double mu = 0.0;
    Eigen::Index rank = 0;
    int k_groups = 0;
};

/// Evaluates both incoherence bounds for every pixel, with
/// mu = 8 c_s^-2 M K^-1 nu and c_s = min(n^2, g) / N^2. Requires equal group
/// sizes (std::invalid_argument otherwise).
LemmaBoundsReport verify_lemma_bounds(const Image& truth, const PatchGroups& groups,
                                      const PatchConfig& pcfg, double tol_sigma = 1e-8);

// ---------------------------------------------------------------------------
// Phase transition

struct PhasePoint {
    std::size_t m = 0;
    int trials = 0;
    int successes = 0;
    double mean_rel_error = 0.0;
};

struct PhaseConfig {
    std::vector<std::size_t> m_grid;
    int trials = 20;
    double success_tol = 1e-3;
    RngSeed seed{};
    AdmmConfig admm{};
};

/// For every m and trial: fresh draws, exact-constraint ADMM, success iff
/// |z - z*| / |z*| <= success_tol. Solver exceptions count as failures with
/// relative error 1. Trial (i, t) uses derive_seed(derive_seed(seed, i), t).
std::vector<PhasePoint> phase_transition(const Image& truth, const PatchGroups& groups,
                                         const PatchConfig& pcfg, const PhaseConfig& cfg);
/// Synthetic truth with a single full-sweep group.
std::vector<PhasePoint> phase_transition(const SyntheticSpec& spec, const PatchConfig& pcfg,
                                         const PhaseConfig& cfg);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

} // namespace patchlr
