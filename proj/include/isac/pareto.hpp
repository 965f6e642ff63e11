#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "isac/model.hpp"
#include "isac/precoder.hpp"
#include "isac/schemes.hpp"

namespace isac {

struct FrontierPoint {
    double rate = 0.0;
    double crb = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    bool dominated = false;
};

/// a dominates b: no worse on both axes and strictly better on one.
bool dominates(const FrontierPoint& a, const FrontierPoint& b);

/// Non-dominated subset sorted by rate (exact duplicates collapse to one).
std::vector<FrontierPoint> non_dominated(std::vector<FrontierPoint> points);

/// Dedicated-scheme anchors (R_sen, CRB_min) and (R_max, CRB_com).
struct Endpoints {
    double r_sen = 0.0;
    double crb_min = 0.0;
    double r_max = 0.0;
    double crb_com = 0.0;
};

/// Normalized area by which the time-sharing hull of `boundary` improves on
/// the chord between the endpoints. Points are clipped to the endpoint
/// rectangle; the result lies in [0, 1). Throws std::invalid_argument for a
/// degenerate rectangle.
double dual_gain(const std::vector<FrontierPoint>& boundary, const Endpoints& ends);

struct TradeoffGrid {
    std::vector<double> etas;
    std::vector<double> gammas;

    /// eta on 9 log-spaced points over [1e-2, 1e2]; gamma on 8 points from
    /// 0 to gamma_max.
    static TradeoffGrid standard(double gamma_max);
};

/// A scheme with everything fixed except (eta, Gamma).
using TradeoffScheme = std::function<PrecoderState(const OptimizerConfig&)>;

struct BoundaryTrace {
    std::vector<FrontierPoint> all;      ///< every feasible grid point, flagged
    std::vector<FrontierPoint> frontier; ///< non-dominated, sorted by rate
};

/// Runs the scheme over the grid. Infeasible Gamma values and unobservable
/// (SingularFisher) points are skipped; throws Infeasible when nothing is left.
BoundaryTrace trace_boundary(const ChannelRealization& r, const TradeoffScheme& scheme,
                             const TradeoffGrid& grid, const OptimizerConfig& base,
                             const SystemConfig& cfg);

/// Largest common Gamma, up to the constant-modulus bound, for which
/// `scheme` stays feasible at the given eta (bisection, `steps` probes).
double max_feasible_gamma(const ChannelRealization& r, const TradeoffScheme& scheme,
                          const OptimizerConfig& base, const SystemConfig& cfg, int steps = 12);

/// Gamma above which no analog stage can meet the rate floor on every subcarrier.
double gamma_upper_bound(const ChannelRealization& r, const SystemConfig& cfg);

struct ParetoRegion {
    std::vector<FrontierPoint> points;
    Endpoints endpoints;
    double rho = 0.0;
};

/// Endpoints from com_dedicated and sensing_dedicated on the same realization.
Endpoints dedicated_endpoints(const ChannelRealization& r, const OptimizerConfig& opt,
                              const SystemConfig& cfg);

/// Binds a registry scheme to one realization; "sa-opt" and "cbs" reuse
/// their analog stages that do not depend on (eta, Gamma).
TradeoffScheme bind_scheme(const std::string& name, const ChannelRealization& r,
                           const SystemConfig& cfg, const OptimizerConfig& base);

} // namespace isac
