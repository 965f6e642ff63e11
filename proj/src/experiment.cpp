#include "isac/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace isac {

using nlohmann::json;

void ExperimentSpec::validate() const
{
    cfg.validate();
    opt.validate();
    if (schemes.empty() || snr_db.empty() || msia.empty()) {
        throw ConfigError("schemes, snr and msia grids must be non-empty");
    }
    for (const std::string& s : schemes) {
        try {
            scheme_by_name(s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    for (double m : msia) {
        if (!(m >= 0.0)) {
            throw ConfigError("msia values must be non-negative");
        }
    }
    if (n_seeds < 1 || threads < 1) {
        throw ConfigError("seeds and threads must be positive");
    }
    if (!std::is_sorted(offsets.begin(), offsets.end())) {
        throw ConfigError("offsets must be sorted ascending");
    }
    if (!(theory_gamma >= 0.0)) {
        throw ConfigError("theory gamma must be non-negative");
    }
}

namespace {

template <class T>
void take(const json& j, const char* key, T& dst)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

std::string fmt(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

ExperimentSpec spec_from_json(const json& j, ExperimentSpec base)
{
    static const std::set<std::string> known{"profile", "system", "optimizer", "schemes",
                                             "snr_db",  "msia",   "seeds",     "base_seed",
                                             "out",     "threads", "offsets",  "theory_gamma"};
    if (!j.is_object()) {
        throw ConfigError("experiment config must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown config key '" + it.key() + "'");
        }
    }
    ExperimentSpec s = std::move(base);
    if (j.contains("profile")) {
        const std::string p = j.at("profile").is_string() ? j.at("profile").get<std::string>() : "";
        if (p == "desk") {
            s.cfg = SystemConfig::desk_profile();
        } else if (p == "full") {
            s.cfg = SystemConfig::full_profile();
        } else {
            throw ConfigError("profile must be \"desk\" or \"full\"");
        }
    }
    if (j.contains("system")) {
        s.cfg = config_from_json(j.at("system"), s.cfg);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        static const std::set<std::string> okeys{"eta", "gamma", "n_iter", "n_ao", "fit_tol",
                                                 "fit_max_iter"};
        for (auto it = o.begin(); it != o.end(); ++it) {
            if (!okeys.count(it.key())) {
                throw ConfigError("unknown optimizer key '" + it.key() + "'");
            }
        }
        take(o, "eta", s.opt.eta);
        take(o, "gamma", s.opt.gamma);
        take(o, "n_iter", s.opt.n_iter);
        take(o, "n_ao", s.opt.n_ao);
        take(o, "fit_tol", s.opt.fit_tol);
        take(o, "fit_max_iter", s.opt.fit_max_iter);
    }
    take(j, "schemes", s.schemes);
    take(j, "snr_db", s.snr_db);
    take(j, "msia", s.msia);
    take(j, "seeds", s.n_seeds);
    take(j, "base_seed", s.base_seed);
    take(j, "out", s.out_dir);
    take(j, "threads", s.threads);
    take(j, "offsets", s.offsets);
    take(j, "theory_gamma", s.theory_gamma);
    s.validate();
    return s;
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t snr_idx, std::size_t msia_idx,
                        std::size_t trial)
{
    // splitmix64 finalizer folded over the cell coordinates.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (std::uint64_t v : {static_cast<std::uint64_t>(snr_idx), static_cast<std::uint64_t>(msia_idx),
                            static_cast<std::uint64_t>(trial)}) {
        h = mix(h ^ v);
    }
    return h;
}

SystemConfig at_snr(const SystemConfig& cfg, double snr_db)
{
    SystemConfig c = cfg;
    c.p_total = cfg.sigma_c2 * std::pow(10.0, snr_db / 10.0);
    return c;
}

PrecoderState run_scheme_relaxed(const std::string& scheme, const ChannelRealization& r,
                                 const SystemConfig& cfg, OptimizerConfig opt,
                                 double* gamma_used)
{
    const SchemeFn fn = scheme_by_name(scheme);
    for (int attempt = 0;; ++attempt) {
        try {
            PrecoderState s = fn(r, cfg, opt);
            if (gamma_used) {
                *gamma_used = opt.gamma;
            }
            return s;
        } catch (const Infeasible&) {
            if (opt.gamma == 0.0) {
                throw;
            }
            opt.gamma = attempt < 40 ? 0.5 * opt.gamma : 0.0;
        }
    }
}

std::vector<SweepRow> run_sweep(const ExperimentSpec& spec)
{
    spec.validate();
    struct Cell {
        std::size_t si, mi, trial;
    };
    std::vector<Cell> cells;
    for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
        for (std::size_t mi = 0; mi < spec.msia.size(); ++mi) {
            for (int t = 0; t < spec.n_seeds; ++t) {
                cells.push_back({si, mi, static_cast<std::size_t>(t)});
            }
        }
    }
    const auto per_cell = parallel_map<std::vector<SweepRow>>(
        cells.size(), spec.threads, [&](std::size_t i) {
            const Cell& c = cells[i];
            const SystemConfig cfg = at_snr(spec.cfg, spec.snr_db[c.si]);
            const std::uint64_t seed = cell_seed(spec.base_seed, c.si, c.mi, c.trial);
            const ChannelRealization r = sample_realization(seed, cfg, spec.msia[c.mi]);
            const BeamspaceDictionary dict = BeamspaceDictionary::build(cfg);
            std::vector<SweepRow> rows;
            for (const std::string& name : spec.schemes) {
                SweepRow row{seed, name, spec.snr_db[c.si], spec.msia[c.mi]};
                const PrecoderState s = run_scheme_relaxed(name, r, cfg, spec.opt, &row.gamma_used);
                row.rate = rate(r.comm, s, cfg);
                try {
                    row.crb = crb(r.scene, s, cfg);
                } catch (const SingularFisher&) {
                    row.crb = std::numeric_limits<double>::infinity();
                }
                const auto [hc, hs] = beamspace_channels(r.comm, r.scene, s.ttd, dict, cfg);
                row.correlation = cs_correlation(hc, hs);
                rows.push_back(std::move(row));
            }
            return rows;
        });
    std::vector<SweepRow> out;
    for (const auto& rows : per_cell) {
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream o;
    o << "seed,scheme,snr_db,msia,rate_bits,crb,correlation\n";
    for (const SweepRow& r : rows) {
        o << r.seed << ',' << r.scheme << ',' << fmt(r.snr_db) << ',' << fmt(r.msia) << ','
          << fmt(r.rate) << ',' << fmt(r.crb) << ',' << fmt(r.correlation) << '\n';
    }
    return o.str();
}

std::vector<RegionSummary> run_pareto(const ExperimentSpec& spec)
{
    spec.validate();
    struct Cell {
        std::size_t si, mi, trial;
    };
    std::vector<Cell> cells;
    for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
        for (std::size_t mi = 0; mi < spec.msia.size(); ++mi) {
            for (int t = 0; t < spec.n_seeds; ++t) {
                cells.push_back({si, mi, static_cast<std::size_t>(t)});
            }
        }
    }
    auto out = parallel_map<std::optional<RegionSummary>>(
        cells.size(), spec.threads, [&](std::size_t i) -> std::optional<RegionSummary> {
            const Cell& c = cells[i];
            const SystemConfig cfg = at_snr(spec.cfg, spec.snr_db[c.si]);
            RegionSummary s;
            s.seed = cell_seed(spec.base_seed, c.si, c.mi, c.trial);
            s.snr_db = spec.snr_db[c.si];
            s.msia = spec.msia[c.mi];
            const ChannelRealization r = sample_realization(s.seed, cfg, s.msia);
            try {
                s.endpoints = dedicated_endpoints(r, spec.opt, cfg);
            } catch (const SingularFisher&) {
                return std::nullopt;
            }
            for (const std::string& name : spec.schemes) {
                const TradeoffScheme sch = bind_scheme(name, r, cfg, spec.opt);
                const double gmax = max_feasible_gamma(r, sch, spec.opt, cfg);
                BoundaryTrace tr;
                try {
                    tr = trace_boundary(r, sch, TradeoffGrid::standard(gmax), spec.opt, cfg);
                } catch (const Infeasible&) {
                    continue;
                }
                ParetoRegion reg{tr.frontier, s.endpoints, 0.0};
                try {
                    reg.rho = dual_gain(tr.frontier, s.endpoints);
                } catch (const std::invalid_argument&) {
                    reg.rho = std::numeric_limits<double>::quiet_NaN();
                }
                s.schemes.push_back(name);
                s.regions.push_back(std::move(reg));
                s.traces.push_back(std::move(tr));
            }
            return s;
        });
    std::vector<RegionSummary> res;
    for (auto& s : out) {
        if (s && !s->regions.empty()) {
            res.push_back(std::move(*s));
        }
    }
    if (res.empty()) {
        throw Infeasible("no realization produced a feasible boundary");
    }
    return res;
}

std::string boundary_csv(const std::vector<RegionSummary>& all)
{
    std::ostringstream o;
    o << "seed,scheme,eta,gamma,rate_bits,crb,dominated_flag\n";
    for (const RegionSummary& s : all) {
        for (std::size_t i = 0; i < s.schemes.size(); ++i) {
            for (const FrontierPoint& p : s.traces[i].all) {
                o << s.seed << ',' << s.schemes[i] << ',' << fmt(p.eta) << ',' << fmt(p.gamma)
                  << ',' << fmt(p.rate) << ',' << fmt(p.crb) << ',' << (p.dominated ? 1 : 0)
                  << '\n';
            }
        }
    }
    return o.str();
}

json region_json(const std::vector<RegionSummary>& all)
{
    json regions = json::array();
    for (const RegionSummary& s : all) {
        json rho = json::object();
        for (std::size_t i = 0; i < s.schemes.size(); ++i) {
            const double v = s.regions[i].rho;
            rho[s.schemes[i]] = std::isnan(v) ? json(nullptr) : json(v);
        }
        regions.push_back({{"seed", s.seed},
                           {"snr_db", s.snr_db},
                           {"msia", s.msia},
                           {"endpoints",
                            {{"r_sen", s.endpoints.r_sen},
                             {"crb_min", s.endpoints.crb_min},
                             {"r_max", s.endpoints.r_max},
                             {"crb_com", s.endpoints.crb_com}}},
                           {"rho", rho}});
    }
    return json{{"regions", regions}};
}

Prop1Report run_verify(const ExperimentSpec& spec)
{
    spec.validate();
    const SystemConfig cfg = at_snr(spec.cfg, spec.snr_db.front());
    return verify_proposition1(cfg, spec.n_seeds, spec.offsets, spec.theory_gamma,
                               spec.base_seed);
}

json report_json(const Prop1Report& r)
{
    return json{{"offsets", r.offsets},
                {"mean_correlation", r.mean_correlation},
                {"mean_similarity", r.mean_similarity},
                {"mean_R_star", r.mean_r_star},
                {"mean_CRB_star", r.mean_crb_star},
                {"mean_inv_CRB_star", r.mean_inv_crb_star},
                {"spearman",
                 {{"cor_rate", r.spearman_cor_rate},
                  {"cor_inv_crb", r.spearman_cor_inv_crb},
                  {"offset_similarity", r.spearman_offset_similarity},
                  {"similarity_cor", r.spearman_similarity_cor}}},
                {"invalid_trials", r.invalid_trials},
                {"degenerate", r.degenerate},
                {"pass", r.pass}};
}

Dataset run_export(const ExperimentSpec& spec)
{
    spec.validate();
    const SystemConfig cfg = at_snr(spec.cfg, spec.snr_db.front());
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t mi = 0; mi < spec.msia.size(); ++mi) {
        for (int t = 0; t < spec.n_seeds; ++t) {
            cells.emplace_back(mi, static_cast<std::size_t>(t));
        }
    }
    Dataset d;
    d.cfg = cfg;
    d.samples = parallel_map<DatasetSample>(cells.size(), spec.threads, [&](std::size_t i) {
        const auto [mi, t] = cells[i];
        DatasetSample s;
        s.realization = sample_realization(cell_seed(spec.base_seed, 0, mi, t), cfg, spec.msia[mi]);
        const ChannelRealization& r = s.realization;
        const BeamspaceDictionary dict = BeamspaceDictionary::build(cfg);
        const TtdSearchResult best =
            optimize_ttd_correlation_traced(r, dict, cfg, spec.opt, TtdGrid::zeros(cfg));
        const double r_max = rate(r.comm, com_dedicated(r, cfg, spec.opt), cfg);
        double crb_min = std::numeric_limits<double>::infinity();
        try {
            crb_min = crb(r.scene, sensing_dedicated(r, cfg, spec.opt), cfg);
        } catch (const SingularFisher&) {
        }
        s.normalizers = Normalizers{best.correlation, r_max, crb_min};
        return s;
    });
    return d;
}

std::vector<StateScore> eval_states(const Dataset& d, const json& states)
{
    std::vector<json> list;
    if (states.is_object() && states.contains("states")) {
        for (const json& s : states.at("states")) {
            list.push_back(s);
        }
    } else {
        list.push_back(states);
    }
    if (list.size() > d.samples.size()) {
        throw FormatError("more states than dataset samples");
    }
    const BeamspaceDictionary dict = BeamspaceDictionary::build(d.cfg);
    std::vector<StateScore> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const ChannelRealization& r = d.samples[i].realization;
        const PrecoderState s = state_from_json(list[i], d.cfg);
        StateScore sc;
        sc.index = i;
        sc.seed = r.seed;
        sc.violation = hardware_violation(s, d.cfg, true);
        sc.point.rate = rate(r.comm, s, d.cfg);
        try {
            sc.point.crb = crb(r.scene, s, d.cfg);
        } catch (const SingularFisher&) {
            sc.point.crb = std::numeric_limits<double>::infinity();
        }
        const auto [hc, hs] = beamspace_channels(r.comm, r.scene, s.ttd, dict, d.cfg);
        sc.point.correlation = cs_correlation(hc, hs);
        out.push_back(std::move(sc));
    }
    return out;
}

std::string scores_csv(const std::vector<StateScore>& scores)
{
    std::ostringstream o;
    o << "index,seed,rate_bits,crb,correlation,violation\n";
    for (const StateScore& s : scores) {
        std::string v = s.violation;
        std::replace(v.begin(), v.end(), ',', ';');
        o << s.index << ',' << s.seed << ',' << fmt(s.point.rate) << ',' << fmt(s.point.crb)
          << ',' << fmt(s.point.correlation) << ',' << v << '\n';
    }
    return o.str();
}

} // namespace isac
