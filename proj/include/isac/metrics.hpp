#pragma once

#include <optional>
#include <stdexcept>
#include <utility>

#include "isac/model.hpp"
#include "isac/precoder.hpp"

namespace isac {

/// The summed Fisher information cannot be inverted reliably: the target
/// geometry is unobservable with the given precoder.
class SingularFisher : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Beamspace dictionaries: unit-norm steering vectors at f_c on a uniform
/// spatial-frequency grid, in the same row-major order as the array.
struct BeamspaceDictionary {
    CMat d_t; ///< N_t x G_t
    CMat d_r; ///< N_r x G_t

    static BeamspaceDictionary build(const SystemConfig& cfg);
    int size() const { return static_cast<int>(d_t.cols()); }
};

struct PerformancePoint {
    double rate = 0.0;        ///< bits per OFDM symbol
    double crb = 0.0;         ///< rad^2
    double correlation = 0.0; ///< C-S channel correlation with the state's TTDs
};

/// Ridge and conditioning rule shared by every Fisher inversion.
struct FisherInversion {
    static constexpr double kRidge = 1e-10;     ///< lambda = kRidge * Tr(J) / dim
    static constexpr double kConditionCap = 1e12;
};

/// Tr((J + lambda I)^-1); throws SingularFisher when J is too ill-conditioned.
double fisher_inverse_trace(const RMat& j);

/// Per-subcarrier SNR numerator |h_m^H F_TD,m f_PS|^2 (no power, no noise).
RVec equivalent_gains(const CommChannel& comm, const TtdGrid& ttd, const PhaseShifters& ps,
                      const SystemConfig& cfg);

double rate(const CommChannel& comm, const PrecoderState& state, const SystemConfig& cfg);

/// 2K x 2K Fisher information of the target angles at subcarrier m
/// (1-based), ordered [theta_1..theta_K, phi_1..phi_K].
RMat fisher_matrix(const SensingScene& scene, const PrecoderState& state, int m,
                   const SystemConfig& cfg);
/// Same, for a unit-modulus transmit beam x with unit power.
RMat fisher_matrix_unit(const SensingScene& scene, const CVec& beam, int m,
                        const SystemConfig& cfg);

double crb(const SensingScene& scene, const PrecoderState& state, const SystemConfig& cfg);

/// Normalized (unit L1) beamspace user and sensing channels summed over
/// subcarriers; with `ttd` the equivalent channels F^H h and G F are used.
std::pair<RVec, RVec> beamspace_channels(const CommChannel& comm, const SensingScene& scene,
                                         const std::optional<TtdGrid>& ttd,
                                         const BeamspaceDictionary& dict,
                                         const SystemConfig& cfg);

/// Per-subcarrier beamspace magnitudes: user [M][G] and per target [M][K][G].
struct BeamspaceProfile {
    std::vector<RVec> user;
    std::vector<std::vector<RVec>> targets;
};
BeamspaceProfile beamspace_profile(const CommChannel& comm, const SensingScene& scene,
                                   const std::optional<TtdGrid>& ttd,
                                   const BeamspaceDictionary& dict, const SystemConfig& cfg);

/// Kullback-Leibler smoothing constants.
struct KlSmoothing {
    static constexpr double kMix = 1e-9;    ///< weight of the uniform mixture on q
    static constexpr double kFloor = 1e-6;  ///< divergence floor; caps Cor at 1e6
};

/// KL(p || q) with q mixed toward uniform by KlSmoothing::kMix.
double kl_divergence(const RVec& p, const RVec& q);
/// 1 / max(KL(hb_c, hb_s), floor). Not symmetric in its arguments.
double cs_correlation(const RVec& hb_c, const RVec& hb_s);

/// Incremental C-S correlation for coordinate search over TTD entries.
///
/// The beamspace projections are linear in the per-sub-array delay phases,
/// so they are kept as per-sub-array partial sums; trying a delay for one
/// sub-array costs O(M G) instead of a full re-projection.
class CorrelationEvaluator {
public:
    CorrelationEvaluator(const ChannelRealization& r, const BeamspaceDictionary& dict,
                         const SystemConfig& cfg);

    /// Resets the current delays.
    void set_delays(const TtdGrid& ttd);
    const TtdGrid& delays() const { return ttd_; }

    double correlation() const;
    /// Correlation with sub-array q switched to delay t, others unchanged.
    double correlation_with(int q, double t) const;
    void commit(int q, double t);

private:
    double correlation_of(const std::vector<CVec>& user, const std::vector<CVec>& sense) const;

    const SystemConfig& cfg_;
    int g_;
    std::vector<double> freqs_;
    // partial_[q][m]: contribution of sub-array q at subcarrier m (zero delay).
    std::vector<std::vector<CVec>> user_partial_;
    std::vector<std::vector<CVec>> sense_partial_;
    std::vector<CVec> user_total_;
    std::vector<CVec> sense_total_;
    TtdGrid ttd_;
};

/// Rate, CRB and correlation of one state; propagates SingularFisher.
PerformancePoint evaluate(const ChannelRealization& r, const PrecoderState& state,
                          const SystemConfig& cfg);
PerformancePoint evaluate(const ChannelRealization& r, const PrecoderState& state,
                          const BeamspaceDictionary& dict, const SystemConfig& cfg);

} // namespace isac
