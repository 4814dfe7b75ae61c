#include "patchlr/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "patchlr/kernels.hpp"

namespace patchlr {

void ReferenceConfig::validate() const {
    if (max_iters < 1)
        throw std::invalid_argument("reference.max_iters must be >= 1");
    if (!(tol > 0.0))
        throw std::invalid_argument("reference.tol must be > 0");
    if (power_iters < 1)
        throw std::invalid_argument("reference.power_iters must be >= 1");
    if (!(step_fraction > 0.0 && step_fraction < 2.0))
        throw std::invalid_argument("reference.step_fraction must lie in (0, 2)");
}

void GroupingConfig::validate() const {
    if (k_groups < 0)
        throw std::invalid_argument("grouping.k_groups must be >= 0");
    if (group_size < 1)
        throw std::invalid_argument("grouping.group_size must be >= 1");
    if (search_radius < 0)
        throw std::invalid_argument("grouping.search_radius must be >= 0");
}

void apply_gamma(std::span<const double> in, std::span<double> out, int side) {
    const auto n = static_cast<std::size_t>(side);
    if (in.size() != n * n || out.size() != n * n)
        throw std::invalid_argument("apply_gamma: buffer size does not match the grid");
    auto edge = [&](int r, int c) {
        double deg = 0.0;
        double nb = 0.0;
        const std::size_t i = static_cast<std::size_t>(r) * n + c;
        if (r > 0) { deg += 1; nb += in[i - n]; }
        if (r + 1 < side) { deg += 1; nb += in[i + n]; }
        if (c > 0) { deg += 1; nb += in[i - 1]; }
        if (c + 1 < side) { deg += 1; nb += in[i + 1]; }
        out[i] = deg * in[i] - nb;
    };
    for (int r = 0; r < side; ++r) {
        const bool interior_row = r > 0 && r + 1 < side;
        if (interior_row && side >= 3) {
            edge(r, 0);
            const double* mid = in.data() + static_cast<std::size_t>(r) * n + 1;
            kernels::laplacian_interior(mid - n, mid, mid + n,
                                        out.data() + static_cast<std::size_t>(r) * n + 1, n - 2);
            edge(r, side - 1);
        } else {
            for (int c = 0; c < side; ++c)
                edge(r, c);
        }
    }
}

double laplacian_objective(const Image& z) {
    std::vector<double> g(z.size());
    apply_gamma(z.pixels(), g, z.side());
    return 0.5 * kernels::dot(g, g);
}

namespace {

// Largest eigenvalue of Gamma^2 by power iteration from a fixed start.
double gamma_sq_lambda_max(int side, int iters) {
    const std::size_t n = static_cast<std::size_t>(side) * side;
    std::vector<double> x(n), t(n), y(n);
    // Alternating pattern overlaps the top eigenvector of the grid Laplacian.
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            x[static_cast<std::size_t>(r) * side + c] = ((r + c) % 2 ? -1.0 : 1.0) + 1e-3 * (r + 1);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        const double nx = std::sqrt(kernels::dot(x, x));
        if (nx == 0.0)
            return 0.0;
        for (double& v : x)
            v /= nx;
        apply_gamma(x, t, side);
        apply_gamma(t, y, side);
        lambda = kernels::dot(x, y);
        std::swap(x, y);
    }
    return lambda;
}

} // namespace

ReferenceResult reference_image_trace(const Image& y, const SampleSet& samples,
                                      const ReferenceConfig& cfg) {
    cfg.validate();
    const int side = y.side();
    if (samples.side() != side)
        throw std::invalid_argument("reference_image: sample grid does not match image");
    if (samples.size() == 0)
        throw std::invalid_argument("reference_image: sample set is empty");
    const auto observed = samples.indicator();

    ReferenceResult res;
    std::vector<double> z(y.pixels().begin(), y.pixels().end());
    double mean = 0.0;
    for (const Pixel& p : samples.distinct())
        mean += y(p.row, p.col);
    mean /= static_cast<double>(samples.distinct().size());
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!observed[i])
            z[i] = mean;

    res.lambda_max = gamma_sq_lambda_max(side, cfg.power_iters);
    res.step = res.lambda_max > 0.0 ? cfg.step_fraction / res.lambda_max : 0.0;

    std::vector<double> g(z.size()), grad(z.size());
    auto objective = [&](const std::vector<double>& v) {
        apply_gamma(v, g, side);
        return 0.5 * kernels::dot(g, g);
    };
    res.objective.push_back(objective(z));

    bool all_observed = std::all_of(observed.begin(), observed.end(), [](auto o) { return o != 0; });
    if (!all_observed && res.step > 0.0) {
        for (int it = 0; it < cfg.max_iters; ++it) {
            apply_gamma(z, g, side);
            apply_gamma(g, grad, side);
            for (std::size_t i = 0; i < z.size(); ++i)
                if (observed[i])
                    grad[i] = 0.0;
            const double znorm = std::sqrt(kernels::dot(z, z));
            const double change = res.step * std::sqrt(kernels::dot(grad, grad));
            kernels::axpy(-res.step, grad, z);
            res.iterations = it + 1;
            res.objective.push_back(objective(z));
            if (change <= cfg.tol * std::max(znorm, 1e-300))
                break;
        }
    }
    res.image = Image(side, std::move(z));
    return res;
}

Image reference_image(const Image& y, const SampleSet& samples, const ReferenceConfig& cfg) {
    return reference_image_trace(y, samples, cfg).image;
}

int resolve_group_count(const GroupingConfig& gcfg, const PatchConfig& pcfg) {
    if (gcfg.k_groups > 0)
        return gcfg.k_groups;
    const int a = pcfg.anchors_per_axis();
    const int step = std::max(1, pcfg.patch_n / 2);
    const int s = (a - 1 + step - 1) / step + 1;
    return s * s;
}

std::vector<Pixel> reference_anchors(int k_groups, const PatchConfig& pcfg) {
    pcfg.validate();
    if (k_groups < 1)
        throw std::invalid_argument("k_groups must be >= 1");
    const int a = pcfg.anchors_per_axis();
    const int s = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k_groups)) - 1e-9));
    std::vector<int> pos(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i)
        pos[static_cast<std::size_t>(i)] =
            s == 1 ? (a - 1) / 2
                   : static_cast<int>(std::lround(static_cast<double>(i) * (a - 1) / (s - 1)));
    const long long total = static_cast<long long>(s) * s;
    std::vector<Pixel> anchors;
    anchors.reserve(static_cast<std::size_t>(k_groups));
    for (long long t = 0; t < k_groups; ++t) {
        const long long idx = t * total / k_groups;
        anchors.push_back({pos[static_cast<std::size_t>(idx / s)], pos[static_cast<std::size_t>(idx % s)]});
    }
    return anchors;
}

PatchGroups build_groups(const Image& reference, const GroupingConfig& gcfg,
                         const PatchConfig& pcfg) {
    gcfg.validate();
    if (reference.side() != pcfg.side)
        throw std::invalid_argument("build_groups: reference side does not match patch config");
    const int k_groups = resolve_group_count(gcfg, pcfg);
    const auto refs = reference_anchors(k_groups, pcfg);
    const int a = pcfg.anchors_per_axis();
    const int n2 = pcfg.rows_per_patch();

    // Every patch of a full sweep, column per anchor in raster order.
    const PatchLift sweep(pcfg, full_sweep_group(pcfg));
    const Eigen::MatrixXd patches = sweep.apply(reference).blocks.front();
    auto patch = [&](int r, int c) {
        return std::span<const double>(patches.data() + static_cast<std::ptrdiff_t>(r * a + c) * n2,
                                       static_cast<std::size_t>(n2));
    };

    struct Candidate {
        double dist;
        int raster;
    };
    PatchGroups out;
    out.groups.reserve(refs.size());
    std::vector<Candidate> cand;
    for (const Pixel& ref : refs) {
        const int r0 = std::max(0, ref.row - gcfg.search_radius);
        const int r1 = std::min(a - 1, ref.row + gcfg.search_radius);
        const int c0 = std::max(0, ref.col - gcfg.search_radius);
        const int c1 = std::min(a - 1, ref.col + gcfg.search_radius);
        const long long window = static_cast<long long>(r1 - r0 + 1) * (c1 - c0 + 1);
        if (window < gcfg.group_size)
            throw std::invalid_argument(
                "search window around anchor (" + std::to_string(ref.row) + "," +
                std::to_string(ref.col) + ") holds " + std::to_string(window) +
                " anchors, fewer than group_size " + std::to_string(gcfg.group_size));
        const auto rp = patch(ref.row, ref.col);
        cand.clear();
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                if (r == ref.row && c == ref.col)
                    continue;
                cand.push_back({kernels::squared_distance(rp, patch(r, c)), r * a + c});
            }
        const auto need = static_cast<std::size_t>(gcfg.group_size - 1);
        auto less = [](const Candidate& x, const Candidate& y) {
            return x.dist < y.dist || (x.dist == y.dist && x.raster < y.raster);
        };
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(need), cand.end(),
                          less);
        std::vector<Pixel> g;
        g.reserve(need + 1);
        g.push_back(ref);
        for (std::size_t i = 0; i < need; ++i)
            g.push_back({cand[i].raster / a, cand[i].raster % a});
        out.groups.push_back(std::move(g));
    }
    return out;
}

} // namespace patchlr
