#include "patchlr/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "patchlr/errors.hpp"

namespace patchlr {

// ---------------------------------------------------------------------------
// Synthetic images

namespace {

double torus_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), 1.0);
    return std::min(d, 1.0 - d);
}

double mirror_distance(const Sinusoid& x, const Sinusoid& y) {
    return std::hypot(torus_distance(x.f, -y.f), torus_distance(x.g, -y.g));
}

double pair_distance(const Sinusoid& x, const Sinusoid& y) {
    const double direct = std::hypot(torus_distance(x.f, y.f), torus_distance(x.g, y.g));
    return std::min(direct, mirror_distance(x, y));
}

} // namespace

std::vector<Sinusoid> synthetic_terms(const SyntheticSpec& spec) {
    if (spec.side < 1)
        throw std::invalid_argument("synthetic side must be positive");
    if (!spec.explicit_terms.empty())
        return spec.explicit_terms;
    if (spec.components < 1)
        throw std::invalid_argument("synthetic image needs at least one component");
    if (!(spec.amplitude_min <= spec.amplitude_max))
        throw std::invalid_argument("synthetic amplitude range is empty");
    const double sep = spec.min_separation > 0.0 ? spec.min_separation : 1.0 / spec.side;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> freq_f(0.0, 0.5);
    std::uniform_real_distribution<double> freq_g(-0.5, 0.5);
    std::uniform_real_distribution<double> amp(spec.amplitude_min, spec.amplitude_max);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<Sinusoid> terms;
        for (int j = 0; j < spec.components; ++j) {
            Sinusoid s;
            s.f = freq_f(rng);
            s.g = freq_g(rng);
            s.amplitude = amp(rng);
            s.phase = phase(rng);
            terms.push_back(s);
        }
        bool ok = true;
        for (std::size_t i = 0; i < terms.size() && ok; ++i) {
            // A term too close to its own mirror is nearly a DC/Nyquist term.
            if (mirror_distance(terms[i], terms[i]) < sep)
                ok = false;
            for (std::size_t j = 0; j < i && ok; ++j)
                if (pair_distance(terms[i], terms[j]) < sep)
                    ok = false;
        }
        if (ok)
            return terms;
    }
    throw std::runtime_error("could not draw " + std::to_string(spec.components) +
                             " separated frequencies; lower min_separation");
}

Image generate_synthetic(const SyntheticSpec& spec) {
    const auto terms = synthetic_terms(spec);
    Image z(spec.side, 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int r = 0; r < spec.side; ++r)
        for (int c = 0; c < spec.side; ++c) {
            double v = 0.0;
            for (const auto& t : terms)
                v += t.amplitude * std::cos(two_pi * (t.f * r + t.g * c) + t.phase);
            z(r, c) = v;
        }
    return z;
}

// ---------------------------------------------------------------------------
// Tangent-space operators

double symmetric_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 0)
        return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

namespace {

// Orthonormal complement of the columns of u (rows x r, orthonormal columns).
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& u) {
    const Eigen::Index n = u.rows();
    const Eigen::Index r = u.cols();
    if (r == 0)
        return Eigen::MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - r);
}

Eigen::Index tangent_dimension(const TangentSpace& t) {
    Eigen::Index d = 0;
    for (const auto& b : t.blocks) {
        const Eigen::Index r = b.rank();
        d += r * (b.u.rows() + b.v.rows() - r);
    }
    return d;
}

} // namespace

std::vector<GroupedPatchMatrix> tangent_basis(const TangentSpace& t) {
    GroupedPatchMatrix zero;
    for (const auto& b : t.blocks)
        zero.blocks.push_back(Eigen::MatrixXd::Zero(b.u.rows(), b.v.rows()));
    std::vector<GroupedPatchMatrix> basis;
    basis.reserve(static_cast<std::size_t>(tangent_dimension(t)));
    for (std::size_t k = 0; k < t.blocks.size(); ++k) {
        const auto& f = t.blocks[k];
        const Eigen::Index r = f.rank();
        if (r == 0)
            continue;
        for (Eigen::Index a = 0; a < r; ++a)
            for (Eigen::Index j = 0; j < f.v.rows(); ++j) {
                GroupedPatchMatrix e = zero;
                e.blocks[k].col(j) = f.u.col(a);
                basis.push_back(std::move(e));
            }
        const Eigen::MatrixXd w = orthogonal_complement(f.u);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index b = 0; b < r; ++b) {
                GroupedPatchMatrix e = zero;
                e.blocks[k] = w.col(c) * f.v.col(b).transpose();
                basis.push_back(std::move(e));
            }
    }
    return basis;
}

TangentSamplingOperator::TangentSamplingOperator(const SamplingBasis& basis,
                                                 const TangentSpace& t, Eigen::Index max_dim)
    : side_(basis.lift().side()) {
    const Eigen::Index dim = tangent_dimension(t);
    if (dim > max_dim)
        throw InstanceTooLarge("tangent space dimension " + std::to_string(dim) +
                               " exceeds the explicit-assembly limit " + std::to_string(max_dim));
    const auto npix = static_cast<Eigen::Index>(side_) * side_;
    phi_.resize(dim, npix);
    Eigen::Index row = 0;
    for (const auto& e : tangent_basis(t)) {
        const auto coeff = basis.coefficients(e);
        for (Eigen::Index p = 0; p < npix; ++p)
            phi_(row, p) = coeff[static_cast<std::size_t>(p)];
        ++row;
    }
    full_ = phi_ * phi_.transpose();
}

Eigen::MatrixXd TangentSamplingOperator::sampled(const std::vector<double>& weights,
                                                 double scale) const {
    if (static_cast<Eigen::Index>(weights.size()) != phi_.cols())
        throw std::invalid_argument("weight vector does not match the pixel grid");
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), phi_.cols());
    return scale * (phi_ * w.asDiagonal() * phi_.transpose());
}

double TangentSamplingOperator::deviation(const std::vector<double>& weights, double scale) const {
    return symmetric_norm(sampled(weights, scale) - full_);
}

double TangentSamplingOperator::deviation(const SampleSet& samples) const {
    if (samples.side() != side_)
        throw std::invalid_argument("sample grid does not match the lift");
    const auto mult = samples.multiplicity();
    const std::vector<double> w(mult.begin(), mult.end());
    const double scale = static_cast<double>(side_) * side_ / static_cast<double>(samples.size());
    return deviation(w, scale);
}

ConcentrationReport concentration_probe(const Image& truth, const PatchGroups& groups,
                                        const PatchConfig& pcfg, std::size_t m, int trials,
                                        RngSeed seed, double tol_sigma, Eigen::Index max_dim) {
    if (m == 0 || trials < 1)
        throw std::invalid_argument("concentration_probe needs m >= 1 and trials >= 1");
    const PatchLift lift(pcfg, groups);
    const SamplingBasis basis(lift);
    const TangentSpace t = tangent_space(lift.apply(truth), tol_sigma);
    const TangentSamplingOperator op(basis, t, max_dim);

    ConcentrationReport rep;
    rep.dimension = op.dimension();
    rep.m = m;
    rep.trials = trials;
    const int side = pcfg.side;
    std::vector<double> sum(static_cast<std::size_t>(side) * side, 0.0);
    for (int trial = 0; trial < trials; ++trial) {
        const SampleSet s = sample_uniform(side, m, derive_seed(seed, static_cast<std::uint64_t>(trial)));
        rep.deviations.push_back(op.deviation(s));
        const auto mult = s.multiplicity();
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum[i] += mult[i];
    }
    for (double& v : sum)
        v /= trials;
    rep.mean_deviation = op.deviation(sum, static_cast<double>(side) * side / static_cast<double>(m));
    return rep;
}

// ---------------------------------------------------------------------------
// Golfing scheme

int golfing_batches(int side) {
    if (side < 1)
        throw std::invalid_argument("side must be positive");
    return std::max(1, static_cast<int>(std::ceil(4.0 * std::log(static_cast<double>(side)))));
}

CertificateReport golfing_certificate(const Image& truth, const PatchGroups& groups,
                                      const PatchConfig& pcfg, std::size_t m, RngSeed seed,
                                      double tol_sigma) {
    const int L = golfing_batches(pcfg.side);
    if (m < static_cast<std::size_t>(L))
        throw std::invalid_argument("golfing scheme needs m >= L = " + std::to_string(L) +
                                    ", got m = " + std::to_string(m));
    return golfing_certificate(truth, groups, pcfg, sample_uniform(pcfg.side, m, seed), tol_sigma);
}

CertificateReport golfing_certificate(const Image& truth, const PatchGroups& groups,
                                      const PatchConfig& pcfg, const SampleSet& samples,
                                      double tol_sigma) {
    const int side = pcfg.side;
    const int L = golfing_batches(side);
    const std::size_t m = samples.size();
    if (m < static_cast<std::size_t>(L))
        throw std::invalid_argument("golfing scheme needs m >= L = " + std::to_string(L) +
                                    ", got m = " + std::to_string(m));
    if (samples.side() != side)
        throw std::invalid_argument("sample grid does not match the patch config");

    const PatchLift lift(pcfg, groups);
    const SamplingBasis basis(lift);
    const TangentSpace t = tangent_space(lift.apply(truth), tol_sigma);
    const double n2 = static_cast<double>(side) * side;

    CertificateReport rep;
    rep.batches = L;
    rep.rank = t.rank();
    rep.q = static_cast<double>(m) / (n2 * L);

    const GroupedPatchMatrix uv = t.sign_matrix();
    GroupedPatchMatrix f = uv;
    GroupedPatchMatrix y = uv.zeros_like();
    rep.decay.push_back(frobenius_norm(f));

    const auto& draws = samples.draws();
    const std::size_t base = m / static_cast<std::size_t>(L);
    const std::size_t extra = m % static_cast<std::size_t>(L);
    std::size_t start = 0;
    for (int i = 0; i < L; ++i) {
        const std::size_t len = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
        std::vector<int> mult(static_cast<std::size_t>(side) * side, 0);
        for (std::size_t d = start; d < start + len; ++d)
            ++mult[static_cast<std::size_t>(draws[d].row) * side + draws[d].col];
        start += len;
        rep.batch_sizes.push_back(len);
        const double inv_q = n2 / static_cast<double>(len);

        const GroupedPatchMatrix pf = tangent_project(f, t);
        const GroupedPatchMatrix sampled = basis.sample(pf, mult, inv_q);
        // Y += (B_Lambda_i / q_i + B-perp)(F_{i-1})
        y += basis.sample(f, mult, inv_q);
        y += basis.complement(f);
        // F_i = P_T (B - B_Lambda_i / q_i) P_T F_{i-1}
        f = tangent_project(basis.project(pf) - sampled, t);
        rep.decay.push_back(frobenius_norm(f));
    }

    const auto all = samples.multiplicity();
    const GroupedPatchMatrix c1 = basis.project(y) - basis.sample_distinct(y, all);
    rep.cond1_residual = frobenius_norm(c1);
    rep.y_norm = frobenius_norm(y);
    const GroupedPatchMatrix pty = tangent_project(y, t);
    rep.cond2_norm = operator_norm(y - pty);
    const GroupedPatchMatrix gap = uv - pty;
    rep.cond3_error = frobenius_norm(gap);
    rep.telescoping_error = frobenius_norm(gap - tangent_project(f, t));
    return rep;
}

// ---------------------------------------------------------------------------
// Incoherence bounds

LemmaBoundsReport verify_lemma_bounds(const Image& truth, const PatchGroups& groups,
                                      const PatchConfig& pcfg, double tol_sigma) {
    const auto gsize = groups.common_size();
    if (!gsize)
        throw std::invalid_argument("verify_lemma_bounds requires groups of equal size");
    const PatchLift lift(pcfg, groups);
    const SamplingBasis basis(lift);
    const TangentSpace t = tangent_space(lift.apply(truth), tol_sigma);
    const int side = pcfg.side;
    const double n2 = static_cast<double>(side) * side;

    LemmaBoundsReport rep;
    rep.k_groups = static_cast<int>(groups.count());
    rep.rank = t.rank();
    const auto& counts = lift.counts();
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    rep.m_ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
    rep.c_s = std::min(static_cast<double>(pcfg.rows_per_patch()), static_cast<double>(*gsize)) / n2;
    if (rep.rank == 0)
        return rep;

    rep.nu = incoherence(t).nu;
    rep.mu = 8.0 / (rep.c_s * rep.c_s) * rep.m_ratio / rep.k_groups * rep.nu;
    const double r = static_cast<double>(rep.rank);
    rep.bound_ptb = rep.mu * r / n2;
    rep.bound_bnorm = 16.0 * rep.m_ratio * rep.mu * r / n2;

    const auto& b = basis.b_values();
    for (int row = 0; row < side; ++row)
        for (int col = 0; col < side; ++col) {
            const auto w = static_cast<std::size_t>(row) * side + col;
            const GroupedPatchMatrix pt = tangent_project(basis.matrix({row, col}), t);
            const double fro_sq = inner(pt, pt);
            const auto coeff = basis.coefficients(pt);
            double bsq = 0.0;
            for (std::size_t a = 0; a < coeff.size(); ++a)
                bsq += b[a] * b[a] * coeff[a] * coeff[a];
            bsq /= b[w] * b[w];
            rep.max_ptb_fro_sq = std::max(rep.max_ptb_fro_sq, fro_sq);
            rep.max_ptb_bnorm_sq = std::max(rep.max_ptb_bnorm_sq, bsq);
        }
    rep.slack_ptb = rep.max_ptb_fro_sq / rep.bound_ptb;
    rep.slack_bnorm = rep.max_ptb_bnorm_sq / rep.bound_bnorm;
    rep.ptb_holds = rep.max_ptb_fro_sq <= rep.bound_ptb;
    rep.bnorm_holds = rep.max_ptb_bnorm_sq <= rep.bound_bnorm;
    return rep;
}

// ---------------------------------------------------------------------------
// Phase transition

std::vector<PhasePoint> phase_transition(const Image& truth, const PatchGroups& groups,
                                         const PatchConfig& pcfg, const PhaseConfig& cfg) {
    if (cfg.trials < 1)
        throw std::invalid_argument("phase_transition needs trials >= 1");
    if (cfg.m_grid.empty())
        throw std::invalid_argument("phase_transition needs a nonempty m grid");
    AdmmConfig admm = cfg.admm;
    admm.delta = 0.0;
    const PatchLift lift(pcfg, groups);
    const double truth_norm = truth.norm();

    std::vector<PhasePoint> out;
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) {
        PhasePoint pt;
        pt.m = cfg.m_grid[i];
        pt.trials = cfg.trials;
        double err_sum = 0.0;
        const RngSeed grid_seed = derive_seed(cfg.seed, i);
        for (int trial = 0; trial < cfg.trials; ++trial) {
            double rel = 1.0;
            try {
                const SampleSet s = sample_uniform(pcfg.side, pt.m,
                                                   derive_seed(grid_seed, static_cast<std::uint64_t>(trial)));
                const Image y = apply_mask(truth, s);
                const AdmmResult res = admm_inpaint(y, s, lift, admm);
                Image diff = res.image;
                for (std::size_t p = 0; p < diff.size(); ++p)
                    diff[p] -= truth[p];
                rel = truth_norm > 0.0 ? diff.norm() / truth_norm : diff.norm();
            } catch (const std::exception&) {
                rel = 1.0;
            }
            if (rel <= cfg.success_tol)
                ++pt.successes;
            err_sum += rel;
        }
        pt.mean_rel_error = err_sum / cfg.trials;
        out.push_back(pt);
    }
    return out;
}

std::vector<PhasePoint> phase_transition(const SyntheticSpec& spec, const PatchConfig& pcfg,
                                         const PhaseConfig& cfg) {
    if (spec.side != pcfg.side)
        throw std::invalid_argument("synthetic side does not match the patch config");
    return phase_transition(generate_synthetic(spec), full_sweep_group(pcfg), pcfg, cfg);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            rank[idx[k]] = avg;
        i = j + 1;
    }
    return rank;
}

} // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman needs two equal-length samples of size >= 2");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace patchlr
