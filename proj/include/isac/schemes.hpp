#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/model.hpp"
#include "isac/precoder.hpp"

namespace isac {

/// The per-subcarrier SNR thresholds cannot be met within the power budget.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
    double eta = 1.0;     ///< sensing weight in the phase-shifter objective
    double gamma = 0.0;   ///< per-subcarrier receive SNR threshold, linear
    int n_iter = 2;       ///< TTD coordinate sweeps
    int n_ao = 4;         ///< phase-shifter / power alternation rounds
    double fit_tol = 1e-8;        ///< stationarity tolerance of the CBS fit
    long fit_max_iter = 1'000'000;

    void validate() const;
};

// --- TTD correlation search ------------------------------------------------

struct TtdSearchResult {
    TtdGrid ttd;
    double correlation = 0.0;
    std::vector<double> trace; ///< objective after every coordinate update
};

/// Coordinate-wise exhaustive search: each sweep visits T[q_h, q_v] in
/// row-major order and keeps the grid level with the highest correlation.
TtdSearchResult optimize_ttd_correlation_traced(const ChannelRealization& r,
                                                const BeamspaceDictionary& dict,
                                                const SystemConfig& cfg,
                                                const OptimizerConfig& opt,
                                                const TtdGrid& init);
TtdGrid optimize_ttd_correlation(const ChannelRealization& r, const SystemConfig& cfg,
                                 const OptimizerConfig& opt);

// --- Phase shifters ---------------------------------------------------------

/// Closed-form phase update: angle of sum_m sqrt(p_m) (h~_m + eta/N_r G~_m^H 1).
/// Entries whose aggregate vanishes get phase zero.
PhaseShifters update_ps(const ChannelRealization& r, const TtdGrid& ttd,
                        const PowerAllocation& power, double eta, const SystemConfig& cfg);

/// sum_m p_m (|h~_m^H f|^2 + eta/N_r ||G~_m f||^2).
double ps_objective(const ChannelRealization& r, const TtdGrid& ttd, const PhaseShifters& ps,
                    const PowerAllocation& power, double eta, const SystemConfig& cfg);

// --- Power allocation -------------------------------------------------------

struct PowerSolution {
    PowerAllocation power;
    double mu = 0.0;   ///< budget multiplier
    RVec lower;        ///< per-subcarrier SNR floor Gamma * sigma_c^2 / |h_m|^2
};

/// Minimizes sum_m q_m / p_m subject to p_m |hbar_m|^2 / sigma_c^2 >= Gamma and
/// sum p <= P_t / N_t. `gains` holds |hbar_m|^2. Throws Infeasible.
PowerSolution solve_power(const RVec& q, const RVec& gains, double gamma,
                          const SystemConfig& cfg);
PowerAllocation allocate_power(const RVec& q, const RVec& gains, double gamma,
                               const SystemConfig& cfg);

/// Rate-maximizing water-filling over sum p <= P_t / N_t.
PowerAllocation water_filling(const RVec& gains, const SystemConfig& cfg);

/// q_m = Tr(J_m^-1) at unit subcarrier power for the given analog stage.
/// Subcarriers whose Fisher block is singular take the median of the others.
RVec crb_weights(const SensingScene& scene, const TtdGrid& ttd, const PhaseShifters& ps,
                 const SystemConfig& cfg);

/// Minimizes the exact CRB Tr((sum_m p_m J_m)^-1) over sum p = P_t / N_t (no
/// rate floor). Propagates SingularFisher when uniform power is unobservable.
PowerAllocation crb_optimal_power(const SensingScene& scene, const TtdGrid& ttd,
                                  const PhaseShifters& ps, const SystemConfig& cfg);

// --- SA-Opt -----------------------------------------------------------------

struct SaOptResult {
    PrecoderState state;
    double ttd_correlation = 0.0;
    std::vector<double> ps_objective;    ///< after each phase update
    std::vector<double> power_objective; ///< sum q/p after each power update
};

/// When `ttd` is given the correlation search is skipped and the grid is used
/// as is (it depends only on the realization, so sweeps over eta and Gamma
/// can share it).
SaOptResult sa_opt_traced(const ChannelRealization& r, const SystemConfig& cfg,
                          const OptimizerConfig& opt,
                          const std::optional<TtdGrid>& ttd = std::nullopt);
PrecoderState sa_opt(const ChannelRealization& r, const SystemConfig& cfg,
                     const OptimizerConfig& opt);
/// The correlation-optimized TTD stage of SA-Opt with its seeded random start.
TtdSearchResult sa_opt_ttd_stage(const ChannelRealization& r, const BeamspaceDictionary& dict,
                                 const SystemConfig& cfg, const OptimizerConfig& opt);

// --- Controlled beam squint -------------------------------------------------

struct Direction {
    double theta = 0.0;
    double phi = 0.0;
};

/// Spreads M subcarriers over the anchors in spatial-frequency order; every
/// anchor gets floor(M / anchors) consecutive subcarriers, the first
/// M mod anchors get one more.
std::vector<Direction> sweep_directions(std::vector<Direction> anchors, int num_subcarriers);
/// User plus all targets.
std::vector<Direction> choose_cbs_directions(const ChannelRealization& r,
                                             const SystemConfig& cfg);

struct FitResult {
    TtdGrid ttd;             ///< clamped and quantized
    TtdGrid ttd_continuous;  ///< before quantization
    PhaseShifters ps;        ///< re-fitted to the quantized delays
    std::vector<double> trace; ///< objective after every half-step (continuous)
    long iterations = 0;
    double objective = 0.0;  ///< continuous optimum
};

/// Mean squared phase mismatch between F_TD,m f_PS and the steering vectors
/// toward the per-subcarrier directions (unwrapped phases).
double fit_objective(const std::vector<Direction>& dirs, const TtdGrid& ttd,
                     const RVec& phases, const SystemConfig& cfg);
FitResult fit_ttd_ps(const std::vector<Direction>& dirs, const SystemConfig& cfg,
                     const OptimizerConfig& opt);

/// TTD and phase stage of cbs_isac (uniform power); independent of eta and Gamma.
PrecoderState cbs_analog(const ChannelRealization& r, const SystemConfig& cfg,
                         const OptimizerConfig& opt);
/// Replaces the power of `analog` by the allocate_power solution.
PrecoderState with_crb_power(const ChannelRealization& r, PrecoderState analog, double gamma,
                             const SystemConfig& cfg);
PrecoderState cbs_isac(const ChannelRealization& r, const SystemConfig& cfg,
                       const OptimizerConfig& opt);
PrecoderState com_dedicated(const ChannelRealization& r, const SystemConfig& cfg,
                            const OptimizerConfig& opt);
PrecoderState sensing_dedicated(const ChannelRealization& r, const SystemConfig& cfg,
                                const OptimizerConfig& opt);
PrecoderState opt_without_ttd(const ChannelRealization& r, const SystemConfig& cfg,
                              const OptimizerConfig& opt);

// --- Registry ---------------------------------------------------------------

using SchemeFn = std::function<PrecoderState(const ChannelRealization&, const SystemConfig&,
                                             const OptimizerConfig&)>;
/// "sa-opt", "cbs", "com", "sense", "no-ttd".
const std::vector<std::string>& scheme_names();
/// Throws std::invalid_argument for unknown names.
SchemeFn scheme_by_name(const std::string& name);

} // namespace isac
