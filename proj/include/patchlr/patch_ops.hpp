#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "patchlr/image.hpp"

namespace patchlr {

/// How patches that cross the image border are formed.
enum class Boundary {
    Valid,     ///< patches crossing the border are discarded
    Periodic,  ///< wrap-around indexing
    Symmetric, ///< half-sample mirror: index -1 reads 0, index N reads N-1
};

std::string to_string(Boundary b);
/// Parses "valid" | "periodic" | "symmetric"; throws std::invalid_argument.
Boundary parse_boundary(const std::string& name);

struct PatchConfig {
    int patch_n = 8;
    Boundary boundary = Boundary::Valid;
    int side = 0;

    /// Anchor positions per axis: N - n + 1 for Valid, N otherwise.
    int anchors_per_axis() const noexcept {
        return boundary == Boundary::Valid ? side - patch_n + 1 : side;
    }
    /// Patches in a full sweep over all anchors.
    std::size_t patches_per_sweep() const noexcept {
        const auto a = static_cast<std::size_t>(anchors_per_axis());
        return a * a;
    }
    int rows_per_patch() const noexcept { return patch_n * patch_n; }
    void validate() const;
};

/// K ordered lists of patch anchors (top-left corners).
struct PatchGroups {
    std::vector<std::vector<Pixel>> groups;

    std::size_t count() const noexcept { return groups.size(); }
    /// Common group size, or nullopt when groups differ in size.
    std::optional<std::size_t> common_size() const;
    /// Total number of patch columns across all groups.
    std::size_t total_columns() const;
};

/// Single group holding every anchor of a full sweep in raster order.
PatchGroups full_sweep_group(const PatchConfig& cfg);

/// Block-diagonal lifted matrix stored as its K diagonal blocks. Block k is
/// n^2 x |group k|; column j is the vectorized patch (raster order over the
/// within-patch offset) at anchor j of group k.
struct GroupedPatchMatrix {
    std::vector<Eigen::MatrixXd> blocks;

    std::size_t block_count() const noexcept { return blocks.size(); }
    /// N1 = sum of block rows, N2 = sum of block columns.
    Eigen::Index total_rows() const noexcept;
    Eigen::Index total_cols() const noexcept;

    GroupedPatchMatrix& operator+=(const GroupedPatchMatrix& o);
    GroupedPatchMatrix& operator-=(const GroupedPatchMatrix& o);
    GroupedPatchMatrix& operator*=(double s);
    friend GroupedPatchMatrix operator+(GroupedPatchMatrix a, const GroupedPatchMatrix& b) {
        return a += b;
    }
    friend GroupedPatchMatrix operator-(GroupedPatchMatrix a, const GroupedPatchMatrix& b) {
        return a -= b;
    }
    friend GroupedPatchMatrix operator*(double s, GroupedPatchMatrix a) { return a *= s; }

    /// Same block shapes, all zeros.
    GroupedPatchMatrix zeros_like() const;
};

/// Frobenius inner product over all blocks. Shapes must agree.
double inner(const GroupedPatchMatrix& a, const GroupedPatchMatrix& b);
double frobenius_norm(const GroupedPatchMatrix& a);
/// Spectral norm of the block-diagonal matrix (max over blocks).
double operator_norm(const GroupedPatchMatrix& a);
/// Nuclear norm (sum over blocks).
double nuclear_norm(const GroupedPatchMatrix& a);

/// Precomputed index map for the grouped lift G and its adjoint.
///
/// For every entry of every block the map stores the row-major pixel index
/// it reads, so G is a gather and G* a scatter-add over the same table.
class PatchLift {
public:
    /// Throws std::invalid_argument if the config is invalid, a group is empty,
    /// or an anchor lies outside the anchor range of the boundary mode.
    PatchLift(PatchConfig cfg, PatchGroups groups);

    const PatchConfig& config() const noexcept { return cfg_; }
    const PatchGroups& groups() const noexcept { return groups_; }
    int side() const noexcept { return cfg_.side; }
    std::size_t block_count() const noexcept { return groups_.count(); }
    Eigen::Index block_rows() const noexcept { return cfg_.rows_per_patch(); }
    Eigen::Index block_cols(std::size_t k) const noexcept {
        return static_cast<Eigen::Index>(groups_.groups[k].size());
    }

    /// G(z).
    GroupedPatchMatrix apply(const Image& z) const;
    /// G*(M); accumulation order is block, column, row, so results do not
    /// depend on scheduling.
    Image adjoint(const GroupedPatchMatrix& m) const;
    /// Same as adjoint() but without the finiteness check of Image, into a raw
    /// row-major buffer of length N^2.
    void adjoint_into(const GroupedPatchMatrix& m, std::vector<double>& out) const;
    void apply_from(std::span<const double> z, GroupedPatchMatrix& out) const;

    /// c_w for every pixel (row-major). Zero entries mark uncovered pixels.
    const std::vector<int>& counts() const noexcept { return counts_; }
    /// First uncovered pixel in raster order, if any.
    std::optional<Pixel> first_uncovered() const;
    /// Throws CoverageError naming the first uncovered pixel.
    void require_coverage() const;

    /// Pixel read by (block, row, col).
    std::int32_t source(std::size_t block, Eigen::Index row, Eigen::Index col) const noexcept {
        return source_[offsets_[block] + static_cast<std::size_t>(col) * cfg_.rows_per_patch() +
                       static_cast<std::size_t>(row)];
    }
    /// Flat source table, block-major then column-major within a block.
    const std::vector<std::int32_t>& sources() const noexcept { return source_; }
    std::size_t block_offset(std::size_t block) const noexcept { return offsets_[block]; }

    /// Shape-checks `m` against this lift; throws std::invalid_argument.
    void check_shape(const GroupedPatchMatrix& m) const;

private:
    PatchConfig cfg_;
    PatchGroups groups_;
    std::vector<std::int32_t> source_;
    std::vector<std::size_t> offsets_;
    std::vector<int> counts_;
};

/// Free-function forms of G and G*.
GroupedPatchMatrix lift(const Image& z, const PatchGroups& groups, const PatchConfig& cfg);
Image adjoint_lift(const GroupedPatchMatrix& m, const PatchGroups& groups, const PatchConfig& cfg);

struct OccurrenceCounts {
    std::vector<int> counts; ///< c_w, row-major
    double m_ratio = 0.0;    ///< max c_w / min c_w
    long long total = 0;     ///< sum of c_w = sum over groups of n^2 |group|
};

/// Throws CoverageError if some pixel has c_w = 0.
OccurrenceCounts occurrence_counts(const PatchGroups& groups, const PatchConfig& cfg);

struct AssumptionAudit {
    int max_row_nnz = 0;
    int max_col_nnz = 0;
    double m_ratio = 0.0; ///< +inf when some pixel is uncovered
    bool covered = false;
    bool pass = false; ///< both nnz bounds <= 4 and every pixel covered
};

/// Largest number of nonzeros in any row / column of H(e_w) restricted to a
/// group, over all pixels w and groups, plus the occurrence ratio.
AssumptionAudit audit_assumptions(const PatchConfig& cfg, const PatchGroups& groups);

/// One position (block, row, col) of the lifted matrix.
struct LiftPosition {
    std::int32_t block = 0;
    std::int32_t row = 0;
    std::int32_t col = 0;

    friend bool operator==(const LiftPosition&, const LiftPosition&) = default;
};

struct SamplingBasisElement {
    Pixel pixel;
    std::vector<LiftPosition> support; ///< Lambda_w in block/column/row order
    int c_omega = 0;
    double b_omega = 0.0; ///< spectral norm of B_w
};

/// The sampling basis {B_w} of the lifted space and the operators built on it.
///
/// B_w = c_w^{-1/2} G(e_w). With a(M) = G*(M) the coefficients are
/// <M, B_w> = a_w / sqrt(c_w), so B(M) = G(a / c) and B_Lambda uses the
/// per-pixel draw multiplicities as weights.
class SamplingBasis {
public:
    /// Requires every pixel covered (CoverageError otherwise).
    explicit SamplingBasis(const PatchLift& lift);

    const PatchLift& lift() const noexcept { return *lift_; }
    int c(std::size_t pixel) const noexcept { return lift_->counts()[pixel]; }
    double b(std::size_t pixel) const noexcept { return b_[pixel]; }
    const std::vector<double>& b_values() const noexcept { return b_; }

    SamplingBasisElement element(Pixel p) const;
    /// B_w as a lifted matrix.
    GroupedPatchMatrix matrix(Pixel p) const;

    /// <M, B_w> for every pixel, row-major.
    std::vector<double> coefficients(const GroupedPatchMatrix& m) const;
    /// Orthogonal projector onto range(G).
    GroupedPatchMatrix project(const GroupedPatchMatrix& m) const;
    /// I - B.
    GroupedPatchMatrix complement(const GroupedPatchMatrix& m) const;
    /// sum over draws of <M,B_w> B_w (collisions counted with multiplicity),
    /// scaled by `scale`.
    GroupedPatchMatrix sample(const GroupedPatchMatrix& m, const std::vector<int>& multiplicity,
                              double scale = 1.0) const;
    /// Same over the distinct support only.
    GroupedPatchMatrix sample_distinct(const GroupedPatchMatrix& m,
                                       const std::vector<int>& multiplicity) const;

    double b_norm(const GroupedPatchMatrix& m) const;
    double b_inf_norm(const GroupedPatchMatrix& m) const;

private:
    GroupedPatchMatrix lift_weighted(const std::vector<double>& coeff,
                                     const std::vector<double>& weight) const;

    const PatchLift* lift_;
    std::vector<double> b_;
    // CSR over pixels of lift positions.
    std::vector<std::size_t> row_start_;
    std::vector<LiftPosition> positions_;
};

/// B_w for one pixel, computed against a fresh lift.
SamplingBasisElement sampling_basis(Pixel p, const PatchGroups& groups, const PatchConfig& cfg);

/// Largest singular value of the 0/1 pattern given by `entries` (distinct
/// (row, col) pairs), by power iteration on P^T P to relative tolerance `tol`.
double pattern_spectral_norm(const std::vector<std::pair<int, int>>& entries, double tol = 1e-12);

} // namespace patchlr
