#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "patchlr/image.hpp"
#include "patchlr/patch_ops.hpp"

namespace patchlr {

/// Singular-value soft thresholding: U max(S - tau, 0) V^T, the proximal map
/// of tau |.|_*. Throws std::invalid_argument on tau < 0 or non-finite input.
Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau);

struct AdmmConfig {
    double rho = 1.0; ///< penalty on data normalized to unit RMS over the samples
    int max_iters = 500;
    double tol_primal = 1e-6; ///< relative |W - G z|
    double tol_dual = 1e-6;   ///< relative rho |G(z - z_prev)|
    /// Noise level. 0 enforces the samples exactly; > 0 constrains
    /// |P_Lambda z - y| <= sqrt(m) delta.
    double delta = 0.0;
    double rank_tol = 1e-8; ///< relative singular-value cutoff for reported ranks

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::vector<int> block_ranks; ///< ranks of the final W blocks
    int total_rank = 0;
    std::vector<double> objective; ///< sum_k |W_k|_* per iteration
    std::vector<double> primal_trace;
    std::vector<double> dual_trace;
};

struct AdmmResult {
    Image image;
    SolveReport report;
};

/// ADMM for min sum_k |G(z)_k|_* subject to the sampled data, with one
/// splitting variable W_k per group and scaled dual Y_k:
///
///   W <- svt(G z - Y / rho, 1 / rho)
///   z <- data projection of G*(W + Y / rho) / c
///   Y <- Y + rho (W - G z)
///
/// The iteration runs on y divided by the RMS of its observed values, so rho
/// does not depend on the intensity scale; the result is scaled back.
/// The returned image is the last z iterate, so it satisfies the data
/// constraint exactly. `init` (optional) seeds the missing pixels.
/// Throws CoverageError if a pixel is in no group.
AdmmResult admm_inpaint(const Image& y, const SampleSet& samples, const PatchLift& lift,
                        const AdmmConfig& cfg, const Image* init = nullptr);
AdmmResult admm_inpaint(const Image& y, const SampleSet& samples, const PatchGroups& groups,
                        const PatchConfig& pcfg, const AdmmConfig& cfg,
                        const Image* init = nullptr);

/// Thin singular factors of one block, truncated to its numerical rank.
struct BlockFactors {
    Eigen::MatrixXd u;     ///< rows x r
    Eigen::MatrixXd v;     ///< cols x r
    Eigen::VectorXd sigma; ///< r values, nonincreasing, positive

    Eigen::Index rank() const noexcept { return sigma.size(); }
};

/// Tangent space at a block-diagonal matrix: per-block factors.
struct TangentSpace {
    std::vector<BlockFactors> blocks;

    Eigen::Index rank() const noexcept;
    /// N1 and N2 of the block-diagonal lift.
    Eigen::Index total_rows() const noexcept;
    Eigen::Index total_cols() const noexcept;
    /// Block-diagonal U V^T.
    GroupedPatchMatrix sign_matrix() const;
};

/// SVD of every block, keeping singular values > tol_sigma * sigma_max(block).
TangentSpace tangent_space(const GroupedPatchMatrix& m, double tol_sigma = 1e-8);

/// U U^T M + M V V^T - U U^T M V V^T, blockwise.
GroupedPatchMatrix tangent_project(const GroupedPatchMatrix& m, const TangentSpace& t);
/// M - P_T(M).
GroupedPatchMatrix tangent_complement(const GroupedPatchMatrix& m, const TangentSpace& t);

struct Incoherence {
    double nu = 0.0;
    double nu_left = 0.0;
    double nu_right = 0.0;
    Eigen::Index r = 0;
};

/// nu_left = (K n^2 / r) max_i |U^T e_i|^2, nu_right = (K g / r) max_j |V^T e_j|^2.
/// Throws UndefinedIncoherence for r = 0 and std::invalid_argument on a
/// shape mismatch.
Incoherence incoherence(const TangentSpace& t, int k_groups, int patch_n, int group_size);
/// Same with N1, N2 read off the factor shapes.
Incoherence incoherence(const TangentSpace& t);

struct BlockRanks {
    std::vector<int> per_block;
    int total = 0;
};

/// r_k = number of singular values > tol_sigma * sigma_max(block k).
BlockRanks block_ranks(const GroupedPatchMatrix& m, double tol_sigma = 1e-8);

} // namespace patchlr
