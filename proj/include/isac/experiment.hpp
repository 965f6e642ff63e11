#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "isac/dataset.hpp"
#include "isac/model.hpp"
#include "isac/pareto.hpp"
#include "isac/schemes.hpp"
#include "isac/theory.hpp"

namespace isac {

struct ExperimentSpec {
    SystemConfig cfg = SystemConfig::desk_profile();
    OptimizerConfig opt;
    std::vector<std::string> schemes{"sa-opt", "cbs", "com", "sense", "no-ttd"};
    std::vector<double> snr_db{10.0};
    std::vector<double> msia{0.1};
    int n_seeds = 10;
    std::uint64_t base_seed = 1;
    std::string out_dir = ".";
    int threads = 1;
    std::vector<double> offsets{0.0, 0.05, 0.1, 0.2, 0.4}; ///< verify only
    double theory_gamma = 0.1;                             ///< verify only

    /// Throws ConfigError.
    void validate() const;
};

/// Reads the structured config file format (see README); keys absent from
/// `j` keep the values of `base`.
ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec base = {});

/// Order-independent seed for one sweep cell.
std::uint64_t cell_seed(std::uint64_t base, std::size_t snr_idx, std::size_t msia_idx,
                        std::size_t trial);

/// Total power for an SNR P_t / sigma_c^2 in dB.
SystemConfig at_snr(const SystemConfig& cfg, double snr_db);

struct SweepRow {
    std::uint64_t seed = 0;
    std::string scheme;
    double snr_db = 0.0;
    double msia = 0.0;
    double rate = 0.0;
    double crb = 0.0; ///< +inf when the geometry is unobservable
    double correlation = 0.0;
    double gamma_used = 0.0;
};

/// Runs one scheme, halving Gamma until it is feasible (Gamma = 0 always is).
PrecoderState run_scheme_relaxed(const std::string& scheme, const ChannelRealization& r,
                                 const SystemConfig& cfg, OptimizerConfig opt,
                                 double* gamma_used = nullptr);

/// Rows ordered by (snr index, msia index, trial, scheme order as requested).
std::vector<SweepRow> run_sweep(const ExperimentSpec& spec);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct RegionSummary {
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    double msia = 0.0;
    Endpoints endpoints;
    std::vector<std::string> schemes;
    std::vector<ParetoRegion> regions; ///< parallel to `schemes`
    std::vector<BoundaryTrace> traces;
};

std::vector<RegionSummary> run_pareto(const ExperimentSpec& spec);
std::string boundary_csv(const std::vector<RegionSummary>& s);
nlohmann::json region_json(const std::vector<RegionSummary>& s);

Prop1Report run_verify(const ExperimentSpec& spec);
nlohmann::json report_json(const Prop1Report& r);

/// One sample per (msia, trial) at the first SNR, with normalizers.
Dataset run_export(const ExperimentSpec& spec);

struct StateScore {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    PerformancePoint point;
    std::string violation; ///< empty when the state satisfies the hardware limits
};

/// Scores state i against dataset sample i. `states` is a single state object
/// or {"states": [...]}.
std::vector<StateScore> eval_states(const Dataset& d, const nlohmann::json& states);
std::string scores_csv(const std::vector<StateScore>& s);

/// Maps f over [0, n) on `threads` workers; results are stored by index.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int threads, F&& f);

} // namespace isac

#include "isac/experiment_impl.hpp"
