#include "isac/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace isac {

CVec PhaseShifters::response() const
{
    CVec r(phases.size());
    for (Eigen::Index n = 0; n < phases.size(); ++n) {
        r[n] = std::polar(1.0, phases[n]);
    }
    return r;
}

PowerAllocation PowerAllocation::uniform(const SystemConfig& cfg)
{
    const double each = cfg.p_total / (static_cast<double>(cfg.n_t()) * cfg.num_subcarriers);
    return {RVec::Constant(cfg.num_subcarriers, each)};
}

double ttd_step(const SystemConfig& cfg)
{
    return cfg.t_max / static_cast<double>(cfg.ttd_levels());
}

int ttd_level(double t, const SystemConfig& cfg)
{
    const double clamped = std::clamp(t, 0.0, cfg.t_max);
    // ceil(x - 1/2) is round-half-down.
    const double b = std::ceil(clamped / ttd_step(cfg) - 0.5);
    return std::clamp(static_cast<int>(b), 0, cfg.ttd_levels() - 1);
}

double ttd_quantize(double t, const SystemConfig& cfg)
{
    return ttd_level(t, cfg) * ttd_step(cfg);
}

TtdGrid ttd_quantize(const TtdGrid& grid, const SystemConfig& cfg)
{
    TtdGrid out = grid;
    for (Eigen::Index i = 0; i < out.delays.size(); ++i) {
        out.delays.data()[i] = ttd_quantize(grid.delays.data()[i], cfg);
    }
    return out;
}

CVec ttd_phase_profile(const TtdGrid& ttd, double f, const SystemConfig& cfg)
{
    const int nt = cfg.n_t();
    CVec out(nt);
    for (int n = 0; n < nt; ++n) {
        out[n] = std::polar(1.0, 2.0 * kPi * f * ttd[subarray_of(cfg, n)]);
    }
    return out;
}

CVec effective_precoder(const TtdGrid& ttd, const PhaseShifters& ps, int m,
                        const SystemConfig& cfg)
{
    const CVec td = ttd_phase_profile(ttd, subcarrier_frequency(cfg, m), cfg);
    return td.cwiseProduct(ps.response());
}

CVec effective_precoder(const PrecoderState& state, int m, const SystemConfig& cfg)
{
    return effective_precoder(state.ttd, state.ps, m, cfg);
}

double wrap_phase(double x)
{
    double w = std::fmod(x, 2.0 * kPi);
    if (w < 0.0) {
        w += 2.0 * kPi;
    }
    // fmod of a tiny negative value can round up to exactly 2pi.
    return w >= 2.0 * kPi ? 0.0 : w;
}

std::string hardware_violation(const PrecoderState& s, const SystemConfig& cfg,
                               bool require_quantized)
{
    std::ostringstream why;
    if (s.ttd.delays.rows() != cfg.q_th || s.ttd.delays.cols() != cfg.q_tv) {
        why << "TTD grid shape " << s.ttd.delays.rows() << "x" << s.ttd.delays.cols();
        return why.str();
    }
    for (int q = 0; q < s.ttd.size(); ++q) {
        const double t = s.ttd[q];
        if (!(t >= 0.0 && t <= cfg.t_max)) {
            why << "TTD " << q << " = " << t << " outside [0, t_max]";
            return why.str();
        }
        if (require_quantized && ttd_quantize(t, cfg) != t) {
            why << "TTD " << q << " = " << t << " off the quantization grid";
            return why.str();
        }
    }
    if (s.ps.phases.size() != cfg.n_t()) {
        return "phase shifter count mismatch";
    }
    for (Eigen::Index n = 0; n < s.ps.phases.size(); ++n) {
        const double v = s.ps.phases[n];
        if (!(v >= 0.0 && v < 2.0 * kPi)) {
            why << "phase " << n << " = " << v << " outside [0, 2pi)";
            return why.str();
        }
    }
    if (s.power.p.size() != cfg.num_subcarriers) {
        return "power vector length mismatch";
    }
    const double budget = cfg.p_total / cfg.n_t();
    if ((s.power.p.array() < 0.0).any()) {
        return "negative subcarrier power";
    }
    if (s.power.p.sum() > budget * (1.0 + 1e-9)) {
        why << "power " << s.power.p.sum() << " exceeds budget " << budget;
        return why.str();
    }
    return {};
}

} // namespace isac
