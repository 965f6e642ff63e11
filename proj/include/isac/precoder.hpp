#pragma once

#include "isac/model.hpp"

namespace isac {

/// TTD delays T[q_h, q_v] in seconds.
struct TtdGrid {
    RMat delays;

    static TtdGrid zeros(const SystemConfig& cfg)
    {
        return {RMat::Zero(cfg.q_th, cfg.q_tv)};
    }
    double operator[](int q) const { return delays(q / delays.cols(), q % delays.cols()); }
    double& operator[](int q) { return delays(q / delays.cols(), q % delays.cols()); }
    int size() const { return static_cast<int>(delays.size()); }
};

/// Frequency-flat phase shifters, radians in [0, 2pi).
struct PhaseShifters {
    RVec phases;

    static PhaseShifters zeros(const SystemConfig& cfg) { return {RVec::Zero(cfg.n_t())}; }
    CVec response() const;
};

/// Per-subcarrier power, constrained by sum(p) <= P_t / N_t.
struct PowerAllocation {
    RVec p;

    static PowerAllocation uniform(const SystemConfig& cfg);
};

struct PrecoderState {
    TtdGrid ttd;
    PhaseShifters ps;
    PowerAllocation power;
};

/// Delay step t_max / 2^B_t of the quantized TTD grid.
double ttd_step(const SystemConfig& cfg);
/// Nearest grid delay; inputs clamp to [0, t_max] first and exact midpoints
/// round down.
double ttd_quantize(double t, const SystemConfig& cfg);
TtdGrid ttd_quantize(const TtdGrid& grid, const SystemConfig& cfg);
/// Integer level b of a grid delay b * t_max / 2^B_t.
int ttd_level(double t, const SystemConfig& cfg);

/// Diagonal of F_TD at frequency f: exp(j 2 pi f T) expanded over sub-arrays.
CVec ttd_phase_profile(const TtdGrid& ttd, double f, const SystemConfig& cfg);

/// F_TD,m f_PS for subcarrier m (1-based); unit-modulus entries, no power.
CVec effective_precoder(const PrecoderState& state, int m, const SystemConfig& cfg);
CVec effective_precoder(const TtdGrid& ttd, const PhaseShifters& ps, int m,
                        const SystemConfig& cfg);

/// Wraps an angle into [0, 2pi).
double wrap_phase(double x);

/// Returns an empty string when every hardware invariant holds, otherwise a
/// description of the first violation. `require_quantized` checks that the
/// TTDs sit on the finite-resolution grid.
std::string hardware_violation(const PrecoderState& state, const SystemConfig& cfg,
                               bool require_quantized = true);

} // namespace isac
