#include "isac/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace isac {

namespace {

// Independent RNG streams derived from the realization seed.
constexpr std::uint64_t kTtdInitStream = 0x7f4a7c15f39cc060ULL;
constexpr std::uint64_t kPsInitStream = 0x2545f4914f6cdd1dULL;

Rng stream(std::uint64_t seed, std::uint64_t salt)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    return Rng(seq);
}

PhaseShifters random_phases(Rng& rng, const SystemConfig& cfg)
{
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    PhaseShifters ps{RVec(cfg.n_t())};
    for (Eigen::Index n = 0; n < ps.phases.size(); ++n) {
        ps.phases[n] = u(rng);
    }
    return ps;
}

double power_objective(const RVec& q, const RVec& p)
{
    return (q.array() / p.array()).sum();
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double spatial_key(const Direction& d)
{
    return std::sin(d.phi) * std::sin(d.theta);
}

// Continuous fit in normalized units: frequency / f_c and delay * f_c.
struct FitProblem {
    int m_count;
    int n_count;
    int q_count;
    double t_hi;
    std::vector<double> fhat;
    RMat psi;                // M x N desired unwrapped phases
    std::vector<int> subarray;

    FitProblem(const std::vector<Direction>& dirs, const SystemConfig& cfg)
        : m_count(cfg.num_subcarriers), n_count(cfg.n_t()), q_count(cfg.q_t()),
          t_hi(cfg.t_max * cfg.fc), psi(cfg.num_subcarriers, cfg.n_t())
    {
        if (static_cast<int>(dirs.size()) != m_count) {
            throw std::invalid_argument("fit_ttd_ps: need one direction per subcarrier");
        }
        for (int m = 0; m < m_count; ++m) {
            fhat.push_back(subcarrier_frequency(cfg, m + 1) / cfg.fc);
            const double u = std::sin(dirs[m].phi) * std::sin(dirs[m].theta);
            const double v = std::cos(dirs[m].theta);
            for (int n = 0; n < n_count; ++n) {
                const auto [nh, nv] = antenna_position(cfg, n);
                psi(m, n) = kPi * fhat[m] * (u * nh + v * nv);
            }
        }
        for (int n = 0; n < n_count; ++n) {
            subarray.push_back(subarray_of(cfg, n));
        }
    }

    double residual(int m, int n, const RVec& phi, const RVec& t) const
    {
        return phi[n] + 2.0 * kPi * fhat[m] * t[subarray[n]] - psi(m, n);
    }

    double objective(const RVec& phi, const RVec& t) const
    {
        double acc = 0.0;
        for (int m = 0; m < m_count; ++m) {
            for (int n = 0; n < n_count; ++n) {
                const double r = residual(m, n, phi, t);
                acc += r * r;
            }
        }
        return acc / m_count;
    }

    void solve_phases(RVec& phi, const RVec& t) const
    {
        for (int n = 0; n < n_count; ++n) {
            double acc = 0.0;
            for (int m = 0; m < m_count; ++m) {
                acc += psi(m, n) - 2.0 * kPi * fhat[m] * t[subarray[n]];
            }
            phi[n] = acc / m_count;
        }
    }

    void solve_delays(const RVec& phi, RVec& t) const
    {
        RVec num = RVec::Zero(q_count);
        RVec den = RVec::Zero(q_count);
        for (int n = 0; n < n_count; ++n) {
            for (int m = 0; m < m_count; ++m) {
                const double w = 2.0 * kPi * fhat[m];
                num[subarray[n]] += w * (psi(m, n) - phi[n]);
                den[subarray[n]] += w * w;
            }
        }
        for (int q = 0; q < q_count; ++q) {
            t[q] = std::clamp(num[q] / den[q], 0.0, t_hi);
        }
    }

    // Largest |d objective / d phi_n|; zero at a stationary point once the
    // delays are block-optimal.
    double phase_gradient(const RVec& phi, const RVec& t) const
    {
        double worst = 0.0;
        for (int n = 0; n < n_count; ++n) {
            double g = 0.0;
            for (int m = 0; m < m_count; ++m) {
                g += residual(m, n, phi, t);
            }
            worst = std::max(worst, std::abs(2.0 * g / m_count));
        }
        return worst;
    }
};

PrecoderState analog_from_fit(const FitResult& fit, const SystemConfig& cfg)
{
    return {fit.ttd, fit.ps, PowerAllocation::uniform(cfg)};
}

std::vector<Direction> user_anchor(const ChannelRealization& r)
{
    return {Direction{r.comm.theta, r.comm.phi}};
}

std::vector<Direction> target_anchors(const ChannelRealization& r)
{
    std::vector<Direction> a;
    for (const Target& t : r.scene.targets) {
        a.push_back({t.theta, t.phi});
    }
    return a;
}

} // namespace

void OptimizerConfig::validate() const
{
    if (!(eta >= 0.0) || !(gamma >= 0.0) || n_iter < 1 || n_ao < 0 || !(fit_tol > 0.0) ||
        fit_max_iter < 1) {
        throw ConfigError("invalid optimizer configuration");
    }
}

TtdSearchResult optimize_ttd_correlation_traced(const ChannelRealization& r,
                                                const BeamspaceDictionary& dict,
                                                const SystemConfig& cfg,
                                                const OptimizerConfig& opt,
                                                const TtdGrid& init)
{
    CorrelationEvaluator eval(r, dict, cfg);
    eval.set_delays(init);
    TtdSearchResult out;
    double best = eval.correlation();
    const double step = ttd_step(cfg);
    for (int sweep = 0; sweep < opt.n_iter; ++sweep) {
        for (int q = 0; q < cfg.q_t(); ++q) {
            double best_t = eval.delays()[q];
            for (int b = 0; b < cfg.ttd_levels(); ++b) {
                const double t = b * step;
                const double c = eval.correlation_with(q, t);
                // Strict improvement only, so the incumbent survives ties.
                if (c > best) {
                    best = c;
                    best_t = t;
                }
            }
            eval.commit(q, best_t);
            best = eval.correlation();
            out.trace.push_back(best);
        }
    }
    out.ttd = eval.delays();
    out.correlation = best;
    return out;
}

TtdGrid optimize_ttd_correlation(const ChannelRealization& r, const SystemConfig& cfg,
                                 const OptimizerConfig& opt)
{
    return optimize_ttd_correlation_traced(r, BeamspaceDictionary::build(cfg), cfg, opt,
                                           TtdGrid::zeros(cfg))
        .ttd;
}

PhaseShifters update_ps(const ChannelRealization& r, const TtdGrid& ttd,
                        const PowerAllocation& power, double eta, const SystemConfig& cfg)
{
    const int nt = cfg.n_t();
    CVec acc = CVec::Zero(nt);
    const CVec ones = CVec::Ones(cfg.n_r);
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        const double pm = power.p[m - 1];
        if (pm <= 0.0) {
            continue;
        }
        const CVec td = ttd_phase_profile(ttd, subcarrier_frequency(cfg, m), cfg);
        // G~^H 1 = F^H G^H 1
        const CVec sense = td.conjugate().cwiseProduct(r.scene.g[m - 1].adjoint() * ones);
        const CVec user = td.conjugate().cwiseProduct(r.comm.h[m - 1]);
        acc += std::sqrt(pm) * (user + (eta / cfg.n_r) * sense);
    }
    PhaseShifters ps{RVec(nt)};
    for (int n = 0; n < nt; ++n) {
        ps.phases[n] = std::abs(acc[n]) > 0.0 ? wrap_phase(std::arg(acc[n])) : 0.0;
    }
    return ps;
}

double ps_objective(const ChannelRealization& r, const TtdGrid& ttd, const PhaseShifters& ps,
                    const PowerAllocation& power, double eta, const SystemConfig& cfg)
{
    double acc = 0.0;
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        const CVec f = effective_precoder(ttd, ps, m, cfg);
        const double user = std::norm(r.comm.h[m - 1].dot(f));
        const double sense = (r.scene.g[m - 1] * f).squaredNorm();
        acc += power.p[m - 1] * (user + eta / cfg.n_r * sense);
    }
    return acc;
}

PowerSolution solve_power(const RVec& q, const RVec& gains, double gamma,
                          const SystemConfig& cfg)
{
    const Eigen::Index mc = q.size();
    if (gains.size() != mc || mc == 0) {
        throw std::invalid_argument("solve_power: dimension mismatch");
    }
    if ((q.array() <= 0.0).any() || !q.allFinite()) {
        throw std::invalid_argument("solve_power: weights must be positive and finite");
    }
    const double budget = cfg.p_total / cfg.n_t();
    RVec lower = RVec::Zero(mc);
    if (gamma > 0.0) {
        for (Eigen::Index m = 0; m < mc; ++m) {
            if (!(gains[m] > 0.0)) {
                throw Infeasible("SNR threshold on a subcarrier with zero gain");
            }
            lower[m] = gamma * cfg.sigma_c2 / gains[m];
        }
    }
    if (lower.sum() > budget) {
        throw Infeasible("SNR thresholds exceed the power budget");
    }

    const RVec root_q = q.cwiseSqrt();
    auto total = [&](double s) { return lower.cwiseMax(s * root_q).sum(); };

    // p_m = max(lower_m, s sqrt(q_m)) with s = mu^-1/2; total(s) is increasing.
    double lo = 0.0;
    double hi = budget / root_q.sum();
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < budget ? lo : hi) = mid;
    }

    // Exact solve on the active set identified by bisection.
    PowerSolution out;
    out.lower = lower;
    double bound_sum = 0.0;
    double free_root = 0.0;
    for (Eigen::Index m = 0; m < mc; ++m) {
        if (hi * root_q[m] > lower[m]) {
            free_root += root_q[m];
        } else {
            bound_sum += lower[m];
        }
    }
    RVec p(mc);
    if (free_root > 0.0) {
        const double s = (budget - bound_sum) / free_root;
        for (Eigen::Index m = 0; m < mc; ++m) {
            p[m] = hi * root_q[m] > lower[m] ? s * root_q[m] : lower[m];
        }
        out.mu = 1.0 / (s * s);
    } else {
        p = lower;
        out.mu = (q.array() / lower.array().square()).maxCoeff();
    }
    out.power.p = p;
    return out;
}

PowerAllocation allocate_power(const RVec& q, const RVec& gains, double gamma,
                               const SystemConfig& cfg)
{
    return solve_power(q, gains, gamma, cfg).power;
}

PowerAllocation water_filling(const RVec& gains, const SystemConfig& cfg)
{
    const Eigen::Index mc = gains.size();
    const double budget = cfg.p_total / cfg.n_t();
    RVec floor_level(mc);
    for (Eigen::Index m = 0; m < mc; ++m) {
        floor_level[m] = gains[m] > 0.0 ? cfg.sigma_c2 / gains[m]
                                        : std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(floor_level.minCoeff())) {
        return {RVec::Constant(mc, budget / mc)};
    }
    auto total = [&](double level) { return (level - floor_level.array()).max(0.0).sum(); };
    double lo = floor_level.minCoeff();
    double hi = lo + budget;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < budget ? lo : hi) = mid;
    }
    double active_floor = 0.0;
    int active = 0;
    for (Eigen::Index m = 0; m < mc; ++m) {
        if (floor_level[m] < hi) {
            active_floor += floor_level[m];
            ++active;
        }
    }
    const double level = (budget + active_floor) / active;
    return {(level - floor_level.array()).max(0.0).matrix()};
}

RVec crb_weights(const SensingScene& scene, const TtdGrid& ttd, const PhaseShifters& ps,
                 const SystemConfig& cfg)
{
    const int mc = cfg.num_subcarriers;
    RVec q(mc);
    std::vector<double> finite;
    for (int m = 1; m <= mc; ++m) {
        const CVec beam = effective_precoder(ttd, ps, m, cfg);
        try {
            q[m - 1] = fisher_inverse_trace(fisher_matrix_unit(scene, beam, m, cfg));
            finite.push_back(q[m - 1]);
        } catch (const SingularFisher&) {
            q[m - 1] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    const double fill = finite.empty() ? 1.0 : median(finite);
    for (int m = 0; m < mc; ++m) {
        if (std::isnan(q[m])) {
            q[m] = fill;
        }
    }
    return q;
}

PowerAllocation crb_optimal_power(const SensingScene& scene, const TtdGrid& ttd,
                                  const PhaseShifters& ps, const SystemConfig& cfg)
{
    const int mc = cfg.num_subcarriers;
    const double budget = cfg.p_total / cfg.n_t();
    std::vector<RMat> unit;
    for (int m = 1; m <= mc; ++m) {
        unit.push_back(fisher_matrix_unit(scene, effective_precoder(ttd, ps, m, cfg), m, cfg));
    }
    RVec p = RVec::Constant(mc, budget / mc);
    const Eigen::Index dim = unit.front().rows();
    // Multiplicative A-optimal design update, p_m <- p_m sqrt(d_m) normalized, with
    // d_m = Tr(J^-1 J_m J^-1). At the optimum every d_m <= Tr(J^-1) / budget.
    for (int it = 0; it < 5000; ++it) {
        RMat j = RMat::Zero(dim, dim);
        for (int m = 0; m < mc; ++m) {
            j += p[m] * unit[m];
        }
        fisher_inverse_trace(j); // conditioning check
        const RMat inv = j.ldlt().solve(RMat::Identity(dim, dim));
        const RMat inv2 = inv * inv;
        RVec d(mc);
        for (int m = 0; m < mc; ++m) {
            d[m] = std::max(0.0, (inv2 * unit[m]).trace());
        }
        const double tr = inv.trace();
        if (d.maxCoeff() * budget <= tr * (1.0 + 1e-7)) {
            break;
        }
        RVec next = p.array() * d.array().sqrt();
        if (!(next.sum() > 0.0)) {
            break;
        }
        p = next * (budget / next.sum());
    }
    return {p};
}

TtdSearchResult sa_opt_ttd_stage(const ChannelRealization& r, const BeamspaceDictionary& dict,
                                 const SystemConfig& cfg, const OptimizerConfig& opt)
{
    Rng rng = stream(r.seed, kTtdInitStream);
    std::uniform_int_distribution<int> level(0, cfg.ttd_levels() - 1);
    TtdGrid init = TtdGrid::zeros(cfg);
    for (int q = 0; q < init.size(); ++q) {
        init[q] = level(rng) * ttd_step(cfg);
    }
    return optimize_ttd_correlation_traced(r, dict, cfg, opt, init);
}

SaOptResult sa_opt_traced(const ChannelRealization& r, const SystemConfig& cfg,
                          const OptimizerConfig& opt, const std::optional<TtdGrid>& ttd)
{
    opt.validate();
    SaOptResult out;
    if (ttd) {
        out.state.ttd = *ttd;
        out.ttd_correlation = 0.0;
    } else {
        const TtdSearchResult search =
            sa_opt_ttd_stage(r, BeamspaceDictionary::build(cfg), cfg, opt);
        out.state.ttd = search.ttd;
        out.ttd_correlation = search.correlation;
    }
    Rng rng = stream(r.seed, kPsInitStream);
    out.state.ps = random_phases(rng, cfg);
    out.state.power = PowerAllocation::uniform(cfg);

    for (int round = 0; round < opt.n_ao; ++round) {
        out.state.ps = update_ps(r, out.state.ttd, out.state.power, opt.eta, cfg);
        out.ps_objective.push_back(
            ps_objective(r, out.state.ttd, out.state.ps, out.state.power, opt.eta, cfg));
        const RVec q = crb_weights(r.scene, out.state.ttd, out.state.ps, cfg);
        const RVec gains = equivalent_gains(r.comm, out.state.ttd, out.state.ps, cfg);
        out.state.power = allocate_power(q, gains, opt.gamma, cfg);
        out.power_objective.push_back(power_objective(q, out.state.power.p));
    }
    return out;
}

PrecoderState sa_opt(const ChannelRealization& r, const SystemConfig& cfg,
                     const OptimizerConfig& opt)
{
    return sa_opt_traced(r, cfg, opt).state;
}

std::vector<Direction> sweep_directions(std::vector<Direction> anchors, int num_subcarriers)
{
    if (anchors.empty()) {
        throw std::invalid_argument("sweep_directions: no anchor directions");
    }
    std::stable_sort(anchors.begin(), anchors.end(), [](const Direction& a, const Direction& b) {
        const double ka = spatial_key(a);
        const double kb = spatial_key(b);
        if (ka != kb) {
            return ka < kb;
        }
        return std::cos(a.theta) < std::cos(b.theta);
    });
    const int count = static_cast<int>(anchors.size());
    const int base = num_subcarriers / count;
    const int extra = num_subcarriers % count;
    std::vector<Direction> dirs;
    for (int i = 0; i < count; ++i) {
        const int n = base + (i < extra ? 1 : 0);
        dirs.insert(dirs.end(), n, anchors[i]);
    }
    return dirs;
}

std::vector<Direction> choose_cbs_directions(const ChannelRealization& r, const SystemConfig& cfg)
{
    std::vector<Direction> anchors = user_anchor(r);
    for (const Direction& d : target_anchors(r)) {
        anchors.push_back(d);
    }
    return sweep_directions(std::move(anchors), cfg.num_subcarriers);
}

double fit_objective(const std::vector<Direction>& dirs, const TtdGrid& ttd,
                     const RVec& phases, const SystemConfig& cfg)
{
    const FitProblem prob(dirs, cfg);
    RVec t(cfg.q_t());
    for (int q = 0; q < cfg.q_t(); ++q) {
        t[q] = ttd[q] * cfg.fc;
    }
    return prob.objective(phases, t);
}

FitResult fit_ttd_ps(const std::vector<Direction>& dirs, const SystemConfig& cfg,
                     const OptimizerConfig& opt)
{
    const FitProblem prob(dirs, cfg);
    RVec phi = RVec::Zero(prob.n_count);
    RVec t = RVec::Zero(prob.q_count);
    FitResult out;
    long it = 0;
    for (; it < opt.fit_max_iter; ++it) {
        prob.solve_phases(phi, t);
        out.trace.push_back(prob.objective(phi, t));
        prob.solve_delays(phi, t);
        out.trace.push_back(prob.objective(phi, t));
        if (prob.phase_gradient(phi, t) <= opt.fit_tol) {
            ++it;
            break;
        }
    }
    prob.solve_phases(phi, t);
    out.iterations = it;
    out.objective = prob.objective(phi, t);

    out.ttd_continuous = TtdGrid::zeros(cfg);
    for (int q = 0; q < prob.q_count; ++q) {
        out.ttd_continuous[q] = std::clamp(t[q] / cfg.fc, 0.0, cfg.t_max);
    }
    out.ttd = ttd_quantize(out.ttd_continuous, cfg);

    RVec tq(prob.q_count);
    for (int q = 0; q < prob.q_count; ++q) {
        tq[q] = out.ttd[q] * cfg.fc;
    }
    prob.solve_phases(phi, tq);
    out.ps.phases = phi.unaryExpr([](double x) { return wrap_phase(x); });
    return out;
}

PrecoderState cbs_analog(const ChannelRealization& r, const SystemConfig& cfg,
                         const OptimizerConfig& opt)
{
    return analog_from_fit(fit_ttd_ps(choose_cbs_directions(r, cfg), cfg, opt), cfg);
}

PrecoderState with_crb_power(const ChannelRealization& r, PrecoderState analog, double gamma,
                             const SystemConfig& cfg)
{
    const RVec q = crb_weights(r.scene, analog.ttd, analog.ps, cfg);
    const RVec gains = equivalent_gains(r.comm, analog.ttd, analog.ps, cfg);
    analog.power = allocate_power(q, gains, gamma, cfg);
    return analog;
}

PrecoderState cbs_isac(const ChannelRealization& r, const SystemConfig& cfg,
                       const OptimizerConfig& opt)
{
    return with_crb_power(r, cbs_analog(r, cfg, opt), opt.gamma, cfg);
}

PrecoderState com_dedicated(const ChannelRealization& r, const SystemConfig& cfg,
                            const OptimizerConfig& opt)
{
    const FitResult fit =
        fit_ttd_ps(sweep_directions(user_anchor(r), cfg.num_subcarriers), cfg, opt);
    PrecoderState s = analog_from_fit(fit, cfg);
    s.power = water_filling(equivalent_gains(r.comm, s.ttd, s.ps, cfg), cfg);
    return s;
}

PrecoderState sensing_dedicated(const ChannelRealization& r, const SystemConfig& cfg,
                                const OptimizerConfig& opt)
{
    if (r.scene.num_targets() == 0) {
        throw std::invalid_argument("sensing_dedicated: scene has no targets");
    }
    const FitResult fit =
        fit_ttd_ps(sweep_directions(target_anchors(r), cfg.num_subcarriers), cfg, opt);
    PrecoderState s = analog_from_fit(fit, cfg);
    s.power = crb_optimal_power(r.scene, s.ttd, s.ps, cfg);
    return s;
}

PrecoderState opt_without_ttd(const ChannelRealization& r, const SystemConfig& cfg,
                              const OptimizerConfig& opt)
{
    return sa_opt_traced(r, cfg, opt, TtdGrid::zeros(cfg)).state;
}

const std::vector<std::string>& scheme_names()
{
    static const std::vector<std::string> names{"sa-opt", "cbs", "com", "sense", "no-ttd"};
    return names;
}

SchemeFn scheme_by_name(const std::string& name)
{
    static const std::map<std::string, SchemeFn> registry{
        {"sa-opt", sa_opt}, {"cbs", cbs_isac}, {"com", com_dedicated},
        {"sense", sensing_dedicated}, {"no-ttd", opt_without_ttd}};
    const auto it = registry.find(name);
    if (it == registry.end()) {
        throw std::invalid_argument("unknown scheme '" + name + "'");
    }
    return it->second;
}

} // namespace isac
