#include "isac/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isac/metrics.hpp"

namespace isac {

bool dominates(const FrontierPoint& a, const FrontierPoint& b)
{
    return a.rate >= b.rate && a.crb <= b.crb && (a.rate > b.rate || a.crb < b.crb);
}

std::vector<FrontierPoint> non_dominated(std::vector<FrontierPoint> points)
{
    // Rate descending, CRB ascending: a point survives iff its CRB beats every
    // point seen before it.
    std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        if (a.rate != b.rate) {
            return a.rate > b.rate;
        }
        return a.crb < b.crb;
    });
    std::vector<FrontierPoint> out;
    double best = std::numeric_limits<double>::infinity();
    for (FrontierPoint p : points) {
        if (p.crb < best) {
            p.dominated = false;
            out.push_back(p);
            best = p.crb;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

double dual_gain(const std::vector<FrontierPoint>& boundary, const Endpoints& e)
{
    const double w = e.r_max - e.r_sen;
    const double h = e.crb_com - e.crb_min;
    if (!(w > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("dual_gain: degenerate endpoint rectangle");
    }
    // Work in the unit square: x = normalized rate, y = normalized CRB. The
    // chord runs from (0, 0) to (1, 1); improvement lies below it.
    struct P {
        double x, y;
    };
    std::vector<P> pts{{0.0, 0.0}, {1.0, 1.0}};
    for (const FrontierPoint& b : boundary) {
        const double x = std::clamp((b.rate - e.r_sen) / w, 0.0, 1.0);
        const double y = std::clamp((b.crb - e.crb_min) / h, 0.0, 1.0);
        if (std::isfinite(x) && std::isfinite(y)) {
            pts.push_back({x, y});
        }
    }
    std::sort(pts.begin(), pts.end(),
              [](const P& a, const P& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    // Lower convex hull (monotone chain).
    std::vector<P> hull;
    for (const P& p : pts) {
        while (hull.size() >= 2) {
            const P& a = hull[hull.size() - 2];
            const P& b = hull.back();
            const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if (cross > 0.0) {
                break;
            }
            hull.pop_back();
        }
        hull.push_back(p);
    }
    // Trapezoidal area between chord y = x and the hull over [0, 1].
    double area = 0.0;
    for (std::size_t i = 1; i < hull.size(); ++i) {
        const P& a = hull[i - 1];
        const P& b = hull[i];
        area += 0.5 * ((a.x - a.y) + (b.x - b.y)) * (b.x - a.x);
    }
    const double rho = std::max(0.0, area / 0.5);
    return std::min(rho, std::nextafter(1.0, 0.0));
}

TradeoffGrid TradeoffGrid::standard(double gamma_max)
{
    TradeoffGrid g;
    for (int i = 0; i < 9; ++i) {
        g.etas.push_back(std::pow(10.0, -2.0 + 0.5 * i));
    }
    for (int i = 0; i < 8; ++i) {
        g.gammas.push_back(gamma_max * i / 7.0);
    }
    return g;
}

BoundaryTrace trace_boundary(const ChannelRealization& r, const TradeoffScheme& scheme,
                             const TradeoffGrid& grid, const OptimizerConfig& base,
                             const SystemConfig& cfg)
{
    if (grid.etas.empty() || grid.gammas.empty()) {
        throw std::invalid_argument("trace_boundary: empty grid");
    }
    const BeamspaceDictionary dict = BeamspaceDictionary::build(cfg);
    BoundaryTrace out;
    for (double eta : grid.etas) {
        for (double gamma : grid.gammas) {
            OptimizerConfig opt = base;
            opt.eta = eta;
            opt.gamma = gamma;
            try {
                const PrecoderState s = scheme(opt);
                const PerformancePoint pt = evaluate(r, s, dict, cfg);
                out.all.push_back({pt.rate, pt.crb, eta, gamma, true});
            } catch (const Infeasible&) {
            } catch (const SingularFisher&) {
            }
        }
    }
    if (out.all.empty()) {
        throw Infeasible("trace_boundary: every grid point is infeasible");
    }
    out.frontier = non_dominated(out.all);
    for (FrontierPoint& p : out.all) {
        p.dominated = std::none_of(out.frontier.begin(), out.frontier.end(), [&](const auto& f) {
            return f.rate == p.rate && f.crb == p.crb;
        });
    }
    return out;
}

double gamma_upper_bound(const ChannelRealization& r, const SystemConfig& cfg)
{
    // |h^H F f|^2 <= ||h||_1^2 = N_t |beta_m|^2 for unit-modulus precoders.
    double inv = 0.0;
    for (cd b : r.comm.beta) {
        inv += cfg.sigma_c2 / (cfg.n_t() * std::norm(b));
    }
    return (cfg.p_total / cfg.n_t()) / inv;
}

double max_feasible_gamma(const ChannelRealization& r, const TradeoffScheme& scheme,
                          const OptimizerConfig& base, const SystemConfig& cfg, int steps)
{
    double lo = 0.0;
    double hi = gamma_upper_bound(r, cfg);
    auto feasible = [&](double g) {
        OptimizerConfig o = base;
        o.gamma = g;
        try {
            scheme(o);
            return true;
        } catch (const Infeasible&) {
            return false;
        }
    };
    if (feasible(hi)) {
        return hi;
    }
    for (int i = 0; i < steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
}

Endpoints dedicated_endpoints(const ChannelRealization& r, const OptimizerConfig& opt,
                              const SystemConfig& cfg)
{
    const BeamspaceDictionary dict = BeamspaceDictionary::build(cfg);
    const PerformancePoint com = evaluate(r, com_dedicated(r, cfg, opt), dict, cfg);
    const PerformancePoint sen = evaluate(r, sensing_dedicated(r, cfg, opt), dict, cfg);
    return {sen.rate, sen.crb, com.rate, com.crb};
}

TradeoffScheme bind_scheme(const std::string& name, const ChannelRealization& r,
                           const SystemConfig& cfg, const OptimizerConfig& base)
{
    if (name == "sa-opt") {
        const TtdGrid ttd =
            sa_opt_ttd_stage(r, BeamspaceDictionary::build(cfg), cfg, base).ttd;
        return [&r, &cfg, ttd](const OptimizerConfig& o) {
            return sa_opt_traced(r, cfg, o, ttd).state;
        };
    }
    if (name == "cbs") {
        const PrecoderState analog = cbs_analog(r, cfg, base);
        return [&r, &cfg, analog](const OptimizerConfig& o) {
            return with_crb_power(r, analog, o.gamma, cfg);
        };
    }
    const SchemeFn fn = scheme_by_name(name);
    return [&r, &cfg, fn](const OptimizerConfig& o) { return fn(r, cfg, o); };
}

} // namespace isac
