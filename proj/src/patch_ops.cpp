#include "patchlr/patch_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "patchlr/errors.hpp"
#include "patchlr/kernels.hpp"

namespace patchlr {

std::string to_string(Boundary b) {
    switch (b) {
    case Boundary::Valid:
        return "valid";
    case Boundary::Periodic:
        return "periodic";
    case Boundary::Symmetric:
        return "symmetric";
    }
    return "valid";
}

Boundary parse_boundary(const std::string& name) {
    if (name == "valid")
        return Boundary::Valid;
    if (name == "periodic")
        return Boundary::Periodic;
    if (name == "symmetric")
        return Boundary::Symmetric;
    throw std::invalid_argument("unknown boundary mode '" + name +
                                "' (expected valid|periodic|symmetric)");
}

void PatchConfig::validate() const {
    if (side < 1)
        throw std::invalid_argument("image side must be positive");
    if (patch_n < 1 || patch_n > side)
        throw std::invalid_argument("patch size " + std::to_string(patch_n) +
                                    " must lie in [1, " + std::to_string(side) + "]");
}

std::optional<std::size_t> PatchGroups::common_size() const {
    if (groups.empty())
        return std::nullopt;
    const std::size_t s = groups.front().size();
    for (const auto& g : groups)
        if (g.size() != s)
            return std::nullopt;
    return s;
}

std::size_t PatchGroups::total_columns() const {
    std::size_t total = 0;
    for (const auto& g : groups)
        total += g.size();
    return total;
}

PatchGroups full_sweep_group(const PatchConfig& cfg) {
    cfg.validate();
    const int a = cfg.anchors_per_axis();
    std::vector<Pixel> all;
    all.reserve(static_cast<std::size_t>(a) * a);
    for (int r = 0; r < a; ++r)
        for (int c = 0; c < a; ++c)
            all.push_back({r, c});
    return PatchGroups{{std::move(all)}};
}

// ---------------------------------------------------------------------------
// GroupedPatchMatrix

Eigen::Index GroupedPatchMatrix::total_rows() const noexcept {
    Eigen::Index n = 0;
    for (const auto& b : blocks)
        n += b.rows();
    return n;
}

Eigen::Index GroupedPatchMatrix::total_cols() const noexcept {
    Eigen::Index n = 0;
    for (const auto& b : blocks)
        n += b.cols();
    return n;
}

namespace {

void require_same_shape(const GroupedPatchMatrix& a, const GroupedPatchMatrix& b) {
    if (a.blocks.size() != b.blocks.size())
        throw std::invalid_argument("grouped matrices have different block counts");
    for (std::size_t k = 0; k < a.blocks.size(); ++k)
        if (a.blocks[k].rows() != b.blocks[k].rows() || a.blocks[k].cols() != b.blocks[k].cols())
            throw std::invalid_argument("grouped matrices differ in shape at block " +
                                        std::to_string(k));
}

} // namespace

GroupedPatchMatrix& GroupedPatchMatrix::operator+=(const GroupedPatchMatrix& o) {
    require_same_shape(*this, o);
    for (std::size_t k = 0; k < blocks.size(); ++k)
        blocks[k] += o.blocks[k];
    return *this;
}

GroupedPatchMatrix& GroupedPatchMatrix::operator-=(const GroupedPatchMatrix& o) {
    require_same_shape(*this, o);
    for (std::size_t k = 0; k < blocks.size(); ++k)
        blocks[k] -= o.blocks[k];
    return *this;
}

GroupedPatchMatrix& GroupedPatchMatrix::operator*=(double s) {
    for (auto& b : blocks)
        b *= s;
    return *this;
}

GroupedPatchMatrix GroupedPatchMatrix::zeros_like() const {
    GroupedPatchMatrix z;
    z.blocks.reserve(blocks.size());
    for (const auto& b : blocks)
        z.blocks.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
    return z;
}

double inner(const GroupedPatchMatrix& a, const GroupedPatchMatrix& b) {
    require_same_shape(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.blocks.size(); ++k) {
        const auto& x = a.blocks[k];
        const auto& y = b.blocks[k];
        s += kernels::dot({x.data(), static_cast<std::size_t>(x.size())},
                          {y.data(), static_cast<std::size_t>(y.size())});
    }
    return s;
}

double frobenius_norm(const GroupedPatchMatrix& a) { return std::sqrt(inner(a, a)); }

double operator_norm(const GroupedPatchMatrix& a) {
    double best = 0.0;
    for (const auto& b : a.blocks) {
        if (b.size() == 0)
            continue;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

double nuclear_norm(const GroupedPatchMatrix& a) {
    double s = 0.0;
    for (const auto& b : a.blocks) {
        if (b.size() == 0)
            continue;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(b);
        s += svd.singularValues().sum();
    }
    return s;
}

// ---------------------------------------------------------------------------
// PatchLift

namespace {

// Maps anchor + offset along one axis to a pixel coordinate under `b`.
inline int resolve(int x, int side, Boundary b) noexcept {
    switch (b) {
    case Boundary::Valid:
        return x;
    case Boundary::Periodic:
        return x % side;
    case Boundary::Symmetric:
        return x < side ? x : 2 * side - 1 - x;
    }
    return x;
}

} // namespace

PatchLift::PatchLift(PatchConfig cfg, PatchGroups groups)
    : cfg_(cfg), groups_(std::move(groups)) {
    cfg_.validate();
    if (groups_.groups.empty())
        throw std::invalid_argument("at least one patch group is required");
    const int n = cfg_.patch_n;
    const int a = cfg_.anchors_per_axis();
    const std::size_t rows = static_cast<std::size_t>(n) * n;

    offsets_.reserve(groups_.count() + 1);
    std::size_t total = 0;
    for (std::size_t k = 0; k < groups_.count(); ++k) {
        const auto& g = groups_.groups[k];
        if (g.empty())
            throw std::invalid_argument("patch group " + std::to_string(k) + " is empty");
        for (const Pixel& p : g)
            if (p.row < 0 || p.col < 0 || p.row >= a || p.col >= a)
                throw std::invalid_argument(
                    "anchor (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                    ") in group " + std::to_string(k) + " is outside the " + to_string(cfg_.boundary) +
                    " anchor range [0," + std::to_string(a - 1) + "]");
        offsets_.push_back(total);
        total += g.size() * rows;
    }
    offsets_.push_back(total);

    source_.resize(total);
    counts_.assign(static_cast<std::size_t>(cfg_.side) * cfg_.side, 0);
    std::size_t pos = 0;
    for (const auto& g : groups_.groups) {
        for (const Pixel& anchor : g) {
            for (int dr = 0; dr < n; ++dr) {
                const int r = resolve(anchor.row + dr, cfg_.side, cfg_.boundary);
                for (int dc = 0; dc < n; ++dc) {
                    const int c = resolve(anchor.col + dc, cfg_.side, cfg_.boundary);
                    const auto idx = static_cast<std::int32_t>(r * cfg_.side + c);
                    source_[pos++] = idx;
                    ++counts_[static_cast<std::size_t>(idx)];
                }
            }
        }
    }
}

GroupedPatchMatrix PatchLift::apply(const Image& z) const {
    if (z.side() != cfg_.side)
        throw std::invalid_argument("lift: image side " + std::to_string(z.side()) +
                                    " does not match config side " + std::to_string(cfg_.side));
    GroupedPatchMatrix out;
    apply_from(z.pixels(), out);
    return out;
}

void PatchLift::apply_from(std::span<const double> z, GroupedPatchMatrix& out) const {
    const Eigen::Index rows = block_rows();
    if (out.blocks.size() != groups_.count())
        out.blocks.resize(groups_.count());
    for (std::size_t k = 0; k < groups_.count(); ++k) {
        auto& blk = out.blocks[k];
        if (blk.rows() != rows || blk.cols() != block_cols(k))
            blk.resize(rows, block_cols(k));
        const std::int32_t* src = source_.data() + offsets_[k];
        double* dst = blk.data();
        const std::size_t len = offsets_[k + 1] - offsets_[k];
        for (std::size_t i = 0; i < len; ++i)
            dst[i] = z[static_cast<std::size_t>(src[i])];
    }
}

void PatchLift::check_shape(const GroupedPatchMatrix& m) const {
    if (m.blocks.size() != groups_.count())
        throw std::invalid_argument("grouped matrix has " + std::to_string(m.blocks.size()) +
                                    " blocks, lift expects " + std::to_string(groups_.count()));
    for (std::size_t k = 0; k < groups_.count(); ++k)
        if (m.blocks[k].rows() != block_rows() || m.blocks[k].cols() != block_cols(k))
            throw std::invalid_argument("block " + std::to_string(k) + " has shape " +
                                        std::to_string(m.blocks[k].rows()) + "x" +
                                        std::to_string(m.blocks[k].cols()) + ", expected " +
                                        std::to_string(block_rows()) + "x" +
                                        std::to_string(block_cols(k)));
}

void PatchLift::adjoint_into(const GroupedPatchMatrix& m, std::vector<double>& out) const {
    check_shape(m);
    out.assign(counts_.size(), 0.0);
    for (std::size_t k = 0; k < groups_.count(); ++k) {
        const std::int32_t* src = source_.data() + offsets_[k];
        const double* val = m.blocks[k].data();
        const std::size_t len = offsets_[k + 1] - offsets_[k];
        for (std::size_t i = 0; i < len; ++i)
            out[static_cast<std::size_t>(src[i])] += val[i];
    }
}

Image PatchLift::adjoint(const GroupedPatchMatrix& m) const {
    std::vector<double> buf;
    adjoint_into(m, buf);
    return Image(cfg_.side, std::move(buf));
}

std::optional<Pixel> PatchLift::first_uncovered() const {
    for (std::size_t i = 0; i < counts_.size(); ++i)
        if (counts_[i] == 0)
            return Pixel{static_cast<int>(i / cfg_.side), static_cast<int>(i % cfg_.side)};
    return std::nullopt;
}

void PatchLift::require_coverage() const {
    if (auto p = first_uncovered())
        throw CoverageError(p->row, p->col);
}

GroupedPatchMatrix lift(const Image& z, const PatchGroups& groups, const PatchConfig& cfg) {
    return PatchLift(cfg, groups).apply(z);
}

Image adjoint_lift(const GroupedPatchMatrix& m, const PatchGroups& groups, const PatchConfig& cfg) {
    return PatchLift(cfg, groups).adjoint(m);
}

OccurrenceCounts occurrence_counts(const PatchGroups& groups, const PatchConfig& cfg) {
    PatchLift lift(cfg, groups);
    lift.require_coverage();
    OccurrenceCounts out;
    out.counts = lift.counts();
    const auto [lo, hi] = std::minmax_element(out.counts.begin(), out.counts.end());
    out.m_ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
    out.total = std::accumulate(out.counts.begin(), out.counts.end(), 0LL);
    return out;
}

AssumptionAudit audit_assumptions(const PatchConfig& cfg, const PatchGroups& groups) {
    PatchLift lift(cfg, groups);
    AssumptionAudit audit;
    const Eigen::Index rows = lift.block_rows();
    std::vector<std::int32_t> scratch;
    for (std::size_t k = 0; k < lift.block_count(); ++k) {
        const Eigen::Index cols = lift.block_cols(k);
        const std::int32_t* src = lift.sources().data() + lift.block_offset(k);
        auto max_run = [](std::vector<std::int32_t>& v) {
            std::sort(v.begin(), v.end());
            int best = 0;
            for (std::size_t i = 0; i < v.size();) {
                std::size_t j = i;
                while (j < v.size() && v[j] == v[i])
                    ++j;
                best = std::max(best, static_cast<int>(j - i));
                i = j;
            }
            return best;
        };
        // Column j of H(e_w)|group: how often w appears inside one patch.
        for (Eigen::Index j = 0; j < cols; ++j) {
            scratch.assign(src + j * rows, src + (j + 1) * rows);
            audit.max_col_nnz = std::max(audit.max_col_nnz, max_run(scratch));
        }
        // Row i: how many patches of the group read w at offset i.
        for (Eigen::Index i = 0; i < rows; ++i) {
            scratch.clear();
            for (Eigen::Index j = 0; j < cols; ++j)
                scratch.push_back(src[j * rows + i]);
            audit.max_row_nnz = std::max(audit.max_row_nnz, max_run(scratch));
        }
    }
    audit.covered = !lift.first_uncovered().has_value();
    if (audit.covered) {
        const auto [lo, hi] = std::minmax_element(lift.counts().begin(), lift.counts().end());
        audit.m_ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
    } else {
        audit.m_ratio = std::numeric_limits<double>::infinity();
    }
    audit.pass = audit.covered && audit.max_row_nnz <= 4 && audit.max_col_nnz <= 4;
    return audit;
}

// ---------------------------------------------------------------------------
// Sampling basis

double pattern_spectral_norm(const std::vector<std::pair<int, int>>& entries, double tol) {
    if (entries.empty())
        return 0.0;
    // Compact rows and columns to consecutive ids.
    std::vector<int> rows, cols;
    for (const auto& [r, c] : entries) {
        rows.push_back(r);
        cols.push_back(c);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    std::vector<std::pair<int, int>> compact;
    compact.reserve(entries.size());
    for (const auto& [r, c] : entries) {
        const int ri = static_cast<int>(std::lower_bound(rows.begin(), rows.end(), r) - rows.begin());
        const int ci = static_cast<int>(std::lower_bound(cols.begin(), cols.end(), c) - cols.begin());
        compact.emplace_back(ri, ci);
    }
    // The pattern is nonnegative, so a positive start vector has a nonzero
    // component along the Perron vector of P^T P.
    std::vector<double> x(cols.size(), 1.0 / std::sqrt(static_cast<double>(cols.size())));
    std::vector<double> y(rows.size());
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (const auto& [r, c] : compact)
            y[r] += x[c];
        std::vector<double> xn(cols.size(), 0.0);
        for (const auto& [r, c] : compact)
            xn[c] += y[r];
        double yy = 0.0;
        for (double v : y)
            yy += v * v;
        const double next = yy; // Rayleigh quotient x^T P^T P x with |x| = 1
        double nrm = 0.0;
        for (double v : xn)
            nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm == 0.0)
            return 0.0;
        for (std::size_t i = 0; i < xn.size(); ++i)
            x[i] = xn[i] / nrm;
        if (it > 0 && std::abs(next - lambda) <= tol * next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

SamplingBasis::SamplingBasis(const PatchLift& lift) : lift_(&lift) {
    lift.require_coverage();
    const auto& counts = lift.counts();
    const std::size_t npix = counts.size();
    row_start_.assign(npix + 1, 0);
    for (std::size_t p = 0; p < npix; ++p)
        row_start_[p + 1] = row_start_[p] + static_cast<std::size_t>(counts[p]);
    positions_.resize(row_start_.back());
    std::vector<std::size_t> fill(row_start_.begin(), row_start_.end() - 1);
    const Eigen::Index rows = lift.block_rows();
    for (std::size_t k = 0; k < lift.block_count(); ++k) {
        const std::int32_t* src = lift.sources().data() + lift.block_offset(k);
        for (Eigen::Index j = 0; j < lift.block_cols(k); ++j)
            for (Eigen::Index i = 0; i < rows; ++i) {
                const auto p = static_cast<std::size_t>(src[j * rows + i]);
                positions_[fill[p]++] = {static_cast<std::int32_t>(k), static_cast<std::int32_t>(i),
                                         static_cast<std::int32_t>(j)};
            }
    }

    b_.assign(npix, 0.0);
    std::vector<std::pair<int, int>> pattern;
    for (std::size_t p = 0; p < npix; ++p) {
        double sigma = 0.0;
        std::size_t s = row_start_[p];
        const std::size_t e = row_start_[p + 1];
        // Positions are block-major; B_w is block diagonal, so its norm is the
        // max over blocks.
        while (s < e) {
            const auto blk = positions_[s].block;
            pattern.clear();
            while (s < e && positions_[s].block == blk) {
                pattern.emplace_back(positions_[s].row, positions_[s].col);
                ++s;
            }
            sigma = std::max(sigma, pattern_spectral_norm(pattern));
        }
        b_[p] = sigma / std::sqrt(static_cast<double>(counts[p]));
    }
}

SamplingBasisElement SamplingBasis::element(Pixel p) const {
    const int n = lift_->side();
    if (p.row < 0 || p.col < 0 || p.row >= n || p.col >= n)
        throw std::invalid_argument("pixel outside the grid");
    const auto idx = static_cast<std::size_t>(p.row) * n + p.col;
    SamplingBasisElement el;
    el.pixel = p;
    el.support.assign(positions_.begin() + static_cast<std::ptrdiff_t>(row_start_[idx]),
                      positions_.begin() + static_cast<std::ptrdiff_t>(row_start_[idx + 1]));
    el.c_omega = c(idx);
    el.b_omega = b_[idx];
    return el;
}

GroupedPatchMatrix SamplingBasis::matrix(Pixel p) const {
    const auto el = element(p);
    GroupedPatchMatrix m;
    for (std::size_t k = 0; k < lift_->block_count(); ++k)
        m.blocks.push_back(Eigen::MatrixXd::Zero(lift_->block_rows(), lift_->block_cols(k)));
    const double v = 1.0 / std::sqrt(static_cast<double>(el.c_omega));
    for (const auto& pos : el.support)
        m.blocks[pos.block](pos.row, pos.col) = v;
    return m;
}

std::vector<double> SamplingBasis::coefficients(const GroupedPatchMatrix& m) const {
    std::vector<double> a;
    lift_->adjoint_into(m, a);
    for (std::size_t p = 0; p < a.size(); ++p)
        a[p] /= std::sqrt(static_cast<double>(c(p)));
    return a;
}

GroupedPatchMatrix SamplingBasis::lift_weighted(const std::vector<double>& coeff,
                                                const std::vector<double>& weight) const {
    // sum_w weight_w <M,B_w> B_w = G(weight * coeff / sqrt(c))
    std::vector<double> img(coeff.size());
    for (std::size_t p = 0; p < coeff.size(); ++p)
        img[p] = weight[p] * coeff[p] / std::sqrt(static_cast<double>(c(p)));
    GroupedPatchMatrix out;
    lift_->apply_from(img, out);
    return out;
}

GroupedPatchMatrix SamplingBasis::project(const GroupedPatchMatrix& m) const {
    const auto a = coefficients(m);
    return lift_weighted(a, std::vector<double>(a.size(), 1.0));
}

GroupedPatchMatrix SamplingBasis::complement(const GroupedPatchMatrix& m) const {
    return m - project(m);
}

GroupedPatchMatrix SamplingBasis::sample(const GroupedPatchMatrix& m,
                                         const std::vector<int>& multiplicity, double scale) const {
    const auto a = coefficients(m);
    if (multiplicity.size() != a.size())
        throw std::invalid_argument("multiplicity vector does not match the pixel grid");
    std::vector<double> w(a.size());
    for (std::size_t p = 0; p < a.size(); ++p)
        w[p] = scale * multiplicity[p];
    return lift_weighted(a, w);
}

GroupedPatchMatrix SamplingBasis::sample_distinct(const GroupedPatchMatrix& m,
                                                  const std::vector<int>& multiplicity) const {
    const auto a = coefficients(m);
    if (multiplicity.size() != a.size())
        throw std::invalid_argument("multiplicity vector does not match the pixel grid");
    std::vector<double> w(a.size());
    for (std::size_t p = 0; p < a.size(); ++p)
        w[p] = multiplicity[p] > 0 ? 1.0 : 0.0;
    return lift_weighted(a, w);
}

double SamplingBasis::b_norm(const GroupedPatchMatrix& m) const {
    const auto a = coefficients(m);
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        s += b_[p] * b_[p] * a[p] * a[p];
    return std::sqrt(s);
}

double SamplingBasis::b_inf_norm(const GroupedPatchMatrix& m) const {
    const auto a = coefficients(m);
    double best = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        best = std::max(best, b_[p] * std::abs(a[p]));
    return best;
}

SamplingBasisElement sampling_basis(Pixel p, const PatchGroups& groups, const PatchConfig& cfg) {
    PatchLift lift(cfg, groups);
    const int n = cfg.side;
    if (p.row < 0 || p.col < 0 || p.row >= n || p.col >= n)
        throw std::invalid_argument("pixel outside the grid");
    if (lift.counts()[static_cast<std::size_t>(p.row) * n + p.col] == 0)
        throw CoverageError(p.row, p.col);
    // Only the requested pixel needs covering here; build its support directly.
    SamplingBasisElement el;
    el.pixel = p;
    const auto target = static_cast<std::int32_t>(p.row * n + p.col);
    const Eigen::Index rows = lift.block_rows();
    double sigma = 0.0;
    std::vector<std::pair<int, int>> pattern;
    for (std::size_t k = 0; k < lift.block_count(); ++k) {
        pattern.clear();
        const std::int32_t* src = lift.sources().data() + lift.block_offset(k);
        for (Eigen::Index j = 0; j < lift.block_cols(k); ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                if (src[j * rows + i] == target) {
                    el.support.push_back({static_cast<std::int32_t>(k),
                                          static_cast<std::int32_t>(i),
                                          static_cast<std::int32_t>(j)});
                    pattern.emplace_back(static_cast<int>(i), static_cast<int>(j));
                }
        sigma = std::max(sigma, pattern_spectral_norm(pattern));
    }
    el.c_omega = static_cast<int>(el.support.size());
    el.b_omega = sigma / std::sqrt(static_cast<double>(el.c_omega));
    return el;
}

} // namespace patchlr
