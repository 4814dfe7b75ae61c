#include "patchlr/serialization.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "patchlr/errors.hpp"

namespace patchlr {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Groups

json groups_to_json(const PatchGroups& groups, const PatchConfig& pcfg) {
    json g = json::array();
    for (const auto& grp : groups.groups) {
        json list = json::array();
        for (const Pixel& p : grp)
            list.push_back({p.row, p.col});
        g.push_back(std::move(list));
    }
    return {{"patch_n", pcfg.patch_n}, {"boundary", to_string(pcfg.boundary)}, {"groups", std::move(g)}};
}

PatchGroups groups_from_json(const json& j, PatchConfig& pcfg) {
    std::vector<std::string> errs;
    if (!j.is_object())
        throw ConfigError({"groups file: expected a JSON object"});
    for (const auto& [key, _] : j.items())
        if (key != "patch_n" && key != "boundary" && key != "groups")
            errs.push_back("groups file: unknown key '" + key + "'");
    PatchGroups out;
    try {
        pcfg.patch_n = j.at("patch_n").get<int>();
    } catch (const std::exception&) {
        errs.push_back("groups file: 'patch_n' missing or not an integer");
    }
    try {
        pcfg.boundary = parse_boundary(j.at("boundary").get<std::string>());
    } catch (const std::exception&) {
        errs.push_back("groups file: 'boundary' missing or not one of valid|periodic|symmetric");
    }
    try {
        for (const auto& grp : j.at("groups")) {
            std::vector<Pixel> g;
            for (const auto& p : grp) {
                if (!p.is_array() || p.size() != 2)
                    throw std::invalid_argument("anchor");
                g.push_back({p[0].get<int>(), p[1].get<int>()});
            }
            out.groups.push_back(std::move(g));
        }
    } catch (const std::exception&) {
        errs.push_back("groups file: 'groups' must be a list of lists of [row, col] pairs");
    }
    if (!errs.empty())
        throw ConfigError(std::move(errs));
    return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

// JSON has no infinity; non-finite values are written as strings.
json number(double v) {
    if (std::isfinite(v))
        return v;
    if (std::isnan(v))
        return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

json to_json(const SolveReport& r) {
    return {{"iterations", r.iterations},
            {"converged", r.converged},
            {"primal_residual", number(r.primal_residual)},
            {"dual_residual", number(r.dual_residual)},
            {"block_ranks", r.block_ranks},
            {"total_rank", r.total_rank},
            {"objective", r.objective},
            {"primal_trace", r.primal_trace},
            {"dual_trace", r.dual_trace}};
}

json to_json(const CertificateReport& r) {
    return {{"cond1_residual", r.cond1_residual},
            {"cond2_norm", r.cond2_norm},
            {"cond3_error", r.cond3_error},
            {"telescoping_error", r.telescoping_error},
            {"y_norm", r.y_norm},
            {"decay", r.decay},
            {"L", r.batches},
            {"q", r.q},
            {"batch_sizes", r.batch_sizes},
            {"rank", r.rank}};
}

json to_json(const LemmaBoundsReport& r) {
    return {{"max_ptb_fro_sq", r.max_ptb_fro_sq}, {"bound_ptb", r.bound_ptb},
            {"max_ptb_bnorm_sq", r.max_ptb_bnorm_sq}, {"bound_bnorm", r.bound_bnorm},
            {"slack_ptb", r.slack_ptb}, {"slack_bnorm", r.slack_bnorm},
            {"ptb_holds", r.ptb_holds}, {"bnorm_holds", r.bnorm_holds},
            {"nu", r.nu}, {"m_ratio", r.m_ratio}, {"c_s", r.c_s}, {"mu", r.mu},
            {"rank", r.rank}, {"k_groups", r.k_groups}};
}

json to_json(const AssumptionAudit& r) {
    return {{"max_row_nnz", r.max_row_nnz}, {"max_col_nnz", r.max_col_nnz},
            {"m_ratio", number(r.m_ratio)}, {"covered", r.covered}, {"pass", r.pass}};
}

void write_solve_csv(std::ostream& os, const SolveReport& r) {
    os << "iteration,primal_residual,dual_residual,objective\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.primal_trace.size(); ++i)
        os << i + 1 << ',' << r.primal_trace[i] << ',' << r.dual_trace[i] << ','
           << (i < r.objective.size() ? r.objective[i] : 0.0) << '\n';
}

void write_phase_csv(std::ostream& os, const std::vector<PhasePoint>& pts) {
    os << "m,trials,successes,mean_rel_error\n" << std::setprecision(17);
    for (const auto& p : pts)
        os << p.m << ',' << p.trials << ',' << p.successes << ',' << p.mean_rel_error << '\n';
}

void write_concentration_csv(std::ostream& os, const ConcentrationReport& r) {
    os << "trial,deviation\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.deviations.size(); ++i)
        os << i << ',' << r.deviations[i] << '\n';
}

// ---------------------------------------------------------------------------
// Run configuration

std::vector<std::size_t> RunConfig::resolved_m_grid(int side) const {
    if (!experiment.m_grid.empty())
        return experiment.m_grid;
    const double n2 = static_cast<double>(side) * side;
    std::vector<std::size_t> out;
    for (double f : experiment.m_fractions)
        out.push_back(static_cast<std::size_t>(std::ceil(f * n2)));
    return out;
}

namespace {

// Reads the keys of one JSON object into typed fields, collecting every
// unknown key and type error instead of stopping at the first.
class Section {
public:
    Section(const json& j, std::string path, std::vector<std::string>& errs)
        : j_(j), path_(std::move(path)), errs_(errs) {
        if (!j_.is_object())
            errs_.push_back(name("") + ": expected an object");
    }
    ~Section() {
        if (!j_.is_object())
            return;
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key))
                errs_.push_back("unknown key '" + name(key) + "'");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            errs_.push_back(name(key) + ": wrong type (" + std::string(j_.at(key).type_name()) + ")");
        }
    }

    void sub(const std::string& key, const std::function<void(Section&)>& fn) {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key))
            return;
        Section s(j_.at(key), name(key), errs_);
        if (j_.at(key).is_object())
            fn(s);
    }

    std::string name(const std::string& key) const {
        if (path_.empty())
            return key;
        return key.empty() ? path_ : path_ + "." + key;
    }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string>& errs_;
    std::set<std::string> seen_;
};

void check(std::vector<std::string>& errs, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
}

void collect_problems(const RunConfig& c, std::vector<std::string>& errs) {
    if (!(c.fraction > 0.0 && c.fraction <= 1.0))
        errs.push_back("fraction must lie in (0, 1]");
    if (c.patch_n < 1)
        errs.push_back("patch.patch_n must be >= 1");
    check(errs, [&] { c.grouping.validate(); });
    check(errs, [&] { c.reference.validate(); });
    check(errs, [&] { c.admm.validate(); });
    const auto& s = c.synthetic;
    if (s.side < 1)
        errs.push_back("synthetic.side must be >= 1");
    if (s.components < 1)
        errs.push_back("synthetic.components must be >= 1");
    if (!(s.amplitude_min <= s.amplitude_max))
        errs.push_back("synthetic.amplitude_min must not exceed amplitude_max");
    if (s.min_separation < 0.0)
        errs.push_back("synthetic.min_separation must be >= 0");
    const auto& e = c.experiment;
    for (double f : e.m_fractions)
        if (!(f > 0.0 && f <= 1.0))
            errs.push_back("experiment.m_fractions entries must lie in (0, 1]");
    for (std::size_t m : e.m_grid)
        if (m == 0)
            errs.push_back("experiment.m_grid entries must be >= 1");
    if (e.trials < 1)
        errs.push_back("experiment.trials must be >= 1");
    if (!(e.success_tol > 0.0))
        errs.push_back("experiment.success_tol must be > 0");
    if (!(e.golfing_fraction > 0.0 && e.golfing_fraction <= 1.0))
        errs.push_back("experiment.golfing_fraction must lie in (0, 1]");
    if (e.golfing_seeds < 1)
        errs.push_back("experiment.golfing_seeds must be >= 1");
    if (!(e.tol_sigma > 0.0 && e.tol_sigma < 1.0))
        errs.push_back("experiment.tol_sigma must lie in (0, 1)");
}

} // namespace

RunConfig parse_run_config(const json& j, RunConfig c) {
    std::vector<std::string> errs;
    {
        Section top(j, "", errs);
        top.get("input", c.input);
        top.get("mask", c.mask);
        top.get("out", c.out);
        top.get("fraction", c.fraction);
        top.get("seed", c.seed);
        top.sub("patch", [&](Section& s) {
            s.get("patch_n", c.patch_n);
            std::string b = to_string(c.boundary);
            s.get("boundary", b);
            try {
                c.boundary = parse_boundary(b);
            } catch (const std::exception&) {
                errs.push_back("patch.boundary: '" + b + "' is not valid|periodic|symmetric");
            }
        });
        top.sub("grouping", [&](Section& s) {
            s.get("k_groups", c.grouping.k_groups);
            s.get("group_size", c.grouping.group_size);
            s.get("search_radius", c.grouping.search_radius);
        });
        top.sub("reference", [&](Section& s) {
            s.get("max_iters", c.reference.max_iters);
            s.get("tol", c.reference.tol);
            s.get("power_iters", c.reference.power_iters);
            s.get("step_fraction", c.reference.step_fraction);
        });
        top.sub("admm", [&](Section& s) {
            s.get("rho", c.admm.rho);
            s.get("max_iters", c.admm.max_iters);
            s.get("tol_primal", c.admm.tol_primal);
            s.get("tol_dual", c.admm.tol_dual);
            s.get("delta", c.admm.delta);
            s.get("rank_tol", c.admm.rank_tol);
        });
        top.sub("synthetic", [&](Section& s) {
            s.get("side", c.synthetic.side);
            s.get("components", c.synthetic.components);
            s.get("seed", c.synthetic.seed);
            s.get("amplitude_min", c.synthetic.amplitude_min);
            s.get("amplitude_max", c.synthetic.amplitude_max);
            s.get("min_separation", c.synthetic.min_separation);
        });
        top.sub("experiment", [&](Section& s) {
            s.get("m_grid", c.experiment.m_grid);
            s.get("m_fractions", c.experiment.m_fractions);
            s.get("trials", c.experiment.trials);
            s.get("success_tol", c.experiment.success_tol);
            s.get("golfing_fraction", c.experiment.golfing_fraction);
            s.get("golfing_seeds", c.experiment.golfing_seeds);
            s.get("cond2_threshold", c.experiment.cond2_threshold);
            s.get("cond2_pass_fraction", c.experiment.cond2_pass_fraction);
            s.get("tol_sigma", c.experiment.tol_sigma);
        });
    }
    if (errs.empty())
        collect_problems(c, errs);
    if (!errs.empty())
        throw ConfigError(std::move(errs));
    return c;
}

void validate_run_config(const RunConfig& cfg) {
    std::vector<std::string> errs;
    collect_problems(cfg, errs);
    if (!errs.empty())
        throw ConfigError(std::move(errs));
}

json to_json(const RunConfig& c) {
    return {
        {"input", c.input},
        {"mask", c.mask},
        {"out", c.out},
        {"fraction", c.fraction},
        {"seed", c.seed},
        {"patch", {{"patch_n", c.patch_n}, {"boundary", to_string(c.boundary)}}},
        {"grouping",
         {{"k_groups", c.grouping.k_groups},
          {"group_size", c.grouping.group_size},
          {"search_radius", c.grouping.search_radius}}},
        {"reference",
         {{"max_iters", c.reference.max_iters},
          {"tol", c.reference.tol},
          {"power_iters", c.reference.power_iters},
          {"step_fraction", c.reference.step_fraction}}},
        {"admm",
         {{"rho", c.admm.rho},
          {"max_iters", c.admm.max_iters},
          {"tol_primal", c.admm.tol_primal},
          {"tol_dual", c.admm.tol_dual},
          {"delta", c.admm.delta},
          {"rank_tol", c.admm.rank_tol}}},
        {"synthetic",
         {{"side", c.synthetic.side},
          {"components", c.synthetic.components},
          {"seed", c.synthetic.seed},
          {"amplitude_min", c.synthetic.amplitude_min},
          {"amplitude_max", c.synthetic.amplitude_max},
          {"min_separation", c.synthetic.min_separation}}},
        {"experiment",
         {{"m_grid", c.experiment.m_grid},
          {"m_fractions", c.experiment.m_fractions},
          {"trials", c.experiment.trials},
          {"success_tol", c.experiment.success_tol},
          {"golfing_fraction", c.experiment.golfing_fraction},
          {"golfing_seeds", c.experiment.golfing_seeds},
          {"cond2_threshold", c.experiment.cond2_threshold},
          {"cond2_pass_fraction", c.experiment.cond2_pass_fraction},
          {"tol_sigma", c.experiment.tol_sigma}}},
    };
}

} // namespace patchlr
