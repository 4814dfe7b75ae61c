#include "patchlr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "patchlr/errors.hpp"
#include "patchlr/kernels.hpp"

namespace patchlr {
namespace {

using Svd = Eigen::BDCSVD<Eigen::MatrixXd>;

// Shrinks `m` in place by tau; returns the nuclear norm of the result and the
// rank at `rank_tol`.
std::pair<double, int> shrink_in_place(Eigen::MatrixXd& m, double tau, double rank_tol) {
    if (m.size() == 0)
        return {0.0, 0};
    Svd svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index keep = 0;
    while (keep < s.size() && s(keep) > tau)
        ++keep;
    if (keep == 0) {
        m.setZero();
        return {0.0, 0};
    }
    const Eigen::VectorXd shrunk = (s.head(keep).array() - tau).matrix();
    m.noalias() = svd.matrixU().leftCols(keep) * shrunk.asDiagonal() *
                  svd.matrixV().leftCols(keep).transpose();
    int rank = 0;
    for (Eigen::Index i = 0; i < keep; ++i)
        if (shrunk(i) > rank_tol * shrunk(0))
            ++rank;
    return {shrunk.sum(), rank};
}

// Same shrinkage through the eigendecomposition of the smaller Gram matrix:
// for m = U S V^T, svt(m) = m V diag(max(1 - tau / s, 0)) V^T. Several times
// faster than a full SVD on the tall blocks of the lift. Eigenvalue error is
// absolute in s_max^2, so singular values far below s_max are less accurate;
// with tau > 0 those are the ones thresholded away.
std::pair<double, int> shrink_gram_in_place(Eigen::MatrixXd& m, double tau, double rank_tol) {
    if (m.size() == 0)
        return {0.0, 0};
    const bool tall = m.rows() >= m.cols();
    Eigen::MatrixXd gram(tall ? m.cols() : m.rows(), tall ? m.cols() : m.rows());
    if (tall)
        gram.noalias() = m.transpose() * m;
    else
        gram.noalias() = m * m.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::VectorXd& lambda = es.eigenvalues(); // ascending
    const Eigen::Index n = lambda.size();
    Eigen::Index keep = 0;
    double nuc = 0.0;
    double top = 0.0;
    std::vector<double> shrunk;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        const double s = std::sqrt(std::max(lambda(i), 0.0));
        if (!(s > tau))
            break;
        shrunk.push_back(s - tau);
        ++keep;
    }
    if (keep == 0) {
        m.setZero();
        return {0.0, 0};
    }
    top = shrunk.front();
    int rank = 0;
    Eigen::VectorXd f(keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
        nuc += shrunk[static_cast<std::size_t>(i)];
        if (shrunk[static_cast<std::size_t>(i)] > rank_tol * top)
            ++rank;
        f(i) = shrunk[static_cast<std::size_t>(i)] / (shrunk[static_cast<std::size_t>(i)] + tau);
    }
    const auto v = es.eigenvectors().rightCols(keep).rowwise().reverse();
    const Eigen::MatrixXd proj = v * f.asDiagonal() * v.transpose();
    if (tall)
        m = m * proj;
    else
        m = proj * m;
    return {nuc, rank};
}

} // namespace

Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("svt: tau must be finite and >= 0");
    if (!m.allFinite())
        throw std::invalid_argument("svt: input has non-finite entries");
    Eigen::MatrixXd out = m;
    shrink_in_place(out, tau, 0.0);
    return out;
}

void AdmmConfig::validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("admm.rho must be > 0");
    if (max_iters < 1)
        throw std::invalid_argument("admm.max_iters must be >= 1");
    if (!(tol_primal > 0.0) || !(tol_dual > 0.0))
        throw std::invalid_argument("admm tolerances must be > 0");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("admm.delta must be finite and >= 0");
    if (!(rank_tol >= 0.0))
        throw std::invalid_argument("admm.rank_tol must be >= 0");
}

AdmmResult admm_inpaint(const Image& y, const SampleSet& samples, const PatchLift& lift,
                        const AdmmConfig& cfg, const Image* init) {
    cfg.validate();
    const int side = lift.side();
    if (y.side() != side || samples.side() != side)
        throw std::invalid_argument("admm_inpaint: image, samples and patch config disagree on size");
    if (samples.size() == 0)
        throw std::invalid_argument("admm_inpaint: sample set is empty");
    if (init && init->side() != side)
        throw std::invalid_argument("admm_inpaint: initial guess has the wrong size");
    lift.require_coverage();

    const auto observed = samples.indicator();
    const auto& counts = lift.counts();
    const std::vector<Pixel>& obs = samples.distinct();
    // The problem is scale invariant; solving on data normalized to unit RMS
    // makes rho dimensionless.
    double scale = 0.0;
    for (const Pixel& p : obs)
        scale += y(p.row, p.col) * y(p.row, p.col);
    scale = std::sqrt(scale / static_cast<double>(obs.size()));
    if (!(scale > 0.0))
        scale = 1.0;
    std::vector<double> ys(y.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
        ys[i] = y[i] / scale;
    const double radius = std::sqrt(static_cast<double>(samples.size())) * cfg.delta / scale;

    // Data projection: equality (delta = 0) or Euclidean ball on the sampled residual.
    auto project = [&](std::vector<double>& z) {
        if (cfg.delta == 0.0) {
            for (const Pixel& p : obs)
                z[y.index(p)] = ys[y.index(p)];
            return;
        }
        double rr = 0.0;
        for (const Pixel& p : obs) {
            const double d = z[y.index(p)] - ys[y.index(p)];
            rr += d * d;
        }
        const double rn = std::sqrt(rr);
        if (rn <= radius)
            return;
        const double shrink = radius / rn;
        for (const Pixel& p : obs) {
            const std::size_t i = y.index(p);
            z[i] = ys[i] + shrink * (z[i] - ys[i]);
        }
    };

    std::vector<double> z(y.size());
    {
        double mean = 0.0;
        for (const Pixel& p : obs)
            mean += ys[y.index(p)];
        mean /= static_cast<double>(obs.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = observed[i] ? ys[i] : (init ? (*init)[i] / scale : mean);
    }
    project(z);

    const double tau = 1.0 / cfg.rho;
    GroupedPatchMatrix gz;
    lift.apply_from(z, gz);
    GroupedPatchMatrix dual = gz.zeros_like();
    GroupedPatchMatrix w = gz.zeros_like();
    GroupedPatchMatrix gz_prev;
    std::vector<double> acc;
    std::vector<int> ranks(lift.block_count(), 0);

    SolveReport report;
    for (int it = 0; it < cfg.max_iters; ++it) {
        double nuc = 0.0;
        for (std::size_t k = 0; k < w.blocks.size(); ++k) {
            w.blocks[k] = gz.blocks[k] - dual.blocks[k] * tau;
            const auto [n, r] = shrink_gram_in_place(w.blocks[k], tau, cfg.rank_tol);
            nuc += n;
            ranks[k] = r;
        }

        // z = G*(W + Y / rho) / c, then the data projection.
        GroupedPatchMatrix target = w;
        for (std::size_t k = 0; k < target.blocks.size(); ++k)
            target.blocks[k] += dual.blocks[k] * tau;
        lift.adjoint_into(target, acc);
        for (std::size_t i = 0; i < acc.size(); ++i)
            z[i] = acc[i] / static_cast<double>(counts[i]);
        project(z);

        std::swap(gz_prev, gz);
        lift.apply_from(z, gz);

        double primal_sq = 0.0, change_sq = 0.0, w_sq = 0.0, gz_sq = 0.0, y_sq = 0.0;
        for (std::size_t k = 0; k < w.blocks.size(); ++k) {
            auto& yk = dual.blocks[k];
            const auto diff = (w.blocks[k] - gz.blocks[k]).eval();
            yk += cfg.rho * diff;
            primal_sq += diff.squaredNorm();
            change_sq += (gz.blocks[k] - gz_prev.blocks[k]).squaredNorm();
            w_sq += w.blocks[k].squaredNorm();
            gz_sq += gz.blocks[k].squaredNorm();
            y_sq += yk.squaredNorm();
        }
        const double primal = std::sqrt(primal_sq) / std::max({std::sqrt(w_sq), std::sqrt(gz_sq), 1e-300});
        const double dual_res = cfg.rho * std::sqrt(change_sq) / std::max(std::sqrt(y_sq), 1e-300);

        report.iterations = it + 1;
        report.objective.push_back(nuc * scale);
        report.primal_trace.push_back(primal);
        report.dual_trace.push_back(dual_res);
        report.primal_residual = primal;
        report.dual_residual = dual_res;
        if (primal < cfg.tol_primal && dual_res < cfg.tol_dual) {
            report.converged = true;
            break;
        }
    }
    report.block_ranks = ranks;
    report.total_rank = 0;
    for (int r : ranks)
        report.total_rank += r;
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = observed[i] && cfg.delta == 0.0 ? y[i] : z[i] * scale;
    return {Image(side, std::move(z)), std::move(report)};
}

AdmmResult admm_inpaint(const Image& y, const SampleSet& samples, const PatchGroups& groups,
                        const PatchConfig& pcfg, const AdmmConfig& cfg, const Image* init) {
    const PatchLift lift(pcfg, groups);
    return admm_inpaint(y, samples, lift, cfg, init);
}

// ---------------------------------------------------------------------------
// Tangent space

Eigen::Index TangentSpace::rank() const noexcept {
    Eigen::Index r = 0;
    for (const auto& b : blocks)
        r += b.rank();
    return r;
}

Eigen::Index TangentSpace::total_rows() const noexcept {
    Eigen::Index n = 0;
    for (const auto& b : blocks)
        n += b.u.rows();
    return n;
}

Eigen::Index TangentSpace::total_cols() const noexcept {
    Eigen::Index n = 0;
    for (const auto& b : blocks)
        n += b.v.rows();
    return n;
}

GroupedPatchMatrix TangentSpace::sign_matrix() const {
    GroupedPatchMatrix out;
    out.blocks.reserve(blocks.size());
    for (const auto& b : blocks)
        out.blocks.push_back(b.u * b.v.transpose());
    return out;
}

TangentSpace tangent_space(const GroupedPatchMatrix& m, double tol_sigma) {
    TangentSpace t;
    t.blocks.reserve(m.blocks.size());
    for (const auto& blk : m.blocks) {
        BlockFactors f;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(blk, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        Eigen::Index r = 0;
        if (s.size() > 0 && s(0) > 0.0)
            while (r < s.size() && s(r) > tol_sigma * s(0))
                ++r;
        f.u = svd.matrixU().leftCols(r);
        f.v = svd.matrixV().leftCols(r);
        f.sigma = s.head(r);
        // Keep the shapes of empty factors meaningful.
        if (r == 0) {
            f.u.resize(blk.rows(), 0);
            f.v.resize(blk.cols(), 0);
        }
        t.blocks.push_back(std::move(f));
    }
    return t;
}

GroupedPatchMatrix tangent_project(const GroupedPatchMatrix& m, const TangentSpace& t) {
    if (m.blocks.size() != t.blocks.size())
        throw std::invalid_argument("tangent_project: block count mismatch");
    GroupedPatchMatrix out;
    out.blocks.reserve(m.blocks.size());
    for (std::size_t k = 0; k < m.blocks.size(); ++k) {
        const auto& x = m.blocks[k];
        const auto& u = t.blocks[k].u;
        const auto& v = t.blocks[k].v;
        if (x.rows() != u.rows() || x.cols() != v.rows())
            throw std::invalid_argument("tangent_project: block " + std::to_string(k) +
                                        " shape does not match the tangent space");
        if (u.cols() == 0) {
            out.blocks.push_back(Eigen::MatrixXd::Zero(x.rows(), x.cols()));
            continue;
        }
        const Eigen::MatrixXd utx = u.transpose() * x;  // r x c
        const Eigen::MatrixXd xv = x * v;               // n x r
        const Eigen::MatrixXd utxv = utx * v;           // r x r
        Eigen::MatrixXd p = u * utx;
        p.noalias() += (xv - u * utxv) * v.transpose();
        out.blocks.push_back(std::move(p));
    }
    return out;
}

GroupedPatchMatrix tangent_complement(const GroupedPatchMatrix& m, const TangentSpace& t) {
    return m - tangent_project(m, t);
}

Incoherence incoherence(const TangentSpace& t, int k_groups, int patch_n, int group_size) {
    if (static_cast<int>(t.blocks.size()) != k_groups)
        throw std::invalid_argument("incoherence: K does not match the tangent space");
    for (const auto& b : t.blocks)
        if (b.u.rows() != static_cast<Eigen::Index>(patch_n) * patch_n || b.v.rows() != group_size)
            throw std::invalid_argument("incoherence: factor shapes do not match n and group size");
    return incoherence(t);
}

Incoherence incoherence(const TangentSpace& t) {
    Incoherence inc;
    inc.r = t.rank();
    if (inc.r == 0)
        throw UndefinedIncoherence();
    double max_u = 0.0, max_v = 0.0;
    for (const auto& b : t.blocks) {
        if (b.rank() == 0)
            continue;
        max_u = std::max(max_u, b.u.rowwise().squaredNorm().maxCoeff());
        max_v = std::max(max_v, b.v.rowwise().squaredNorm().maxCoeff());
    }
    const double r = static_cast<double>(inc.r);
    inc.nu_left = static_cast<double>(t.total_rows()) / r * max_u;
    inc.nu_right = static_cast<double>(t.total_cols()) / r * max_v;
    inc.nu = std::max(inc.nu_left, inc.nu_right);
    return inc;
}

BlockRanks block_ranks(const GroupedPatchMatrix& m, double tol_sigma) {
    if (tol_sigma < 0.0)
        throw std::invalid_argument("block_ranks: tolerance must be >= 0");
    BlockRanks out;
    for (const auto& blk : m.blocks) {
        int r = 0;
        if (blk.size() > 0) {
            Svd svd(blk);
            const auto& s = svd.singularValues();
            if (s(0) > 0.0)
                for (Eigen::Index i = 0; i < s.size(); ++i)
                    if (s(i) > tol_sigma * s(0))
                        ++r;
        }
        out.per_block.push_back(r);
        out.total += r;
    }
    return out;
}

} // namespace patchlr
