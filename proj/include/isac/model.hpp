#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace isac {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised when a configuration or argument violates a documented precondition.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Transceiver, subcarrier grid, TTD hardware and channel statistics.
///
/// The receive array is the same uniform planar array as the transmit
/// array, so `n_r` must equal `n_th * n_tv`.
struct SystemConfig {
    int n_th = 4;           ///< horizontal transmit antennas
    int n_tv = 4;           ///< vertical transmit antennas
    int n_r = 16;           ///< receive antennas
    int q_th = 2;           ///< TTD sub-arrays, horizontal
    int q_tv = 2;           ///< TTD sub-arrays, vertical
    int num_subcarriers = 8;
    double fc = 100e9;      ///< Hz
    double bandwidth = 8e9; ///< Hz
    int ttd_bits = 4;
    double t_max = 100e-12; ///< s
    double p_total = 10.0;  ///< linear
    double sigma_c2 = 1.0;
    double sigma_s2 = 1.0;
    double sigma_beta = 1.0;
    double sigma_alpha = 0.6;
    double tau_max = 100e-9; ///< s
    int num_targets = 2;
    int dict_size = 16;      ///< beamspace dictionary size G_t

    int n_t() const { return n_th * n_tv; }
    int l_h() const { return n_th / q_th; }
    int l_v() const { return n_tv / q_tv; }
    int q_t() const { return q_th * q_tv; }
    int ttd_levels() const { return 1 << ttd_bits; }
    /// Per-axis oversampling of the beamspace dictionary (G_t = N_t * s^2).
    int dict_oversampling() const;

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;

    /// Full-size profile used in the published simulations.
    static SystemConfig full_profile();
    /// Laptop-scale profile: 4x4 UPA, 2x2 TTDs, 8 subcarriers, 2 targets.
    static SystemConfig desk_profile();
};

bool operator==(const SystemConfig& a, const SystemConfig& b);

/// Frequency of subcarrier m (1-based), Hz.
double subcarrier_frequency(const SystemConfig& cfg, int m);

/// Row-major antenna index shared by the steering model and the TTD
/// expansion: antenna (n_h, n_v) maps to n_h * n_tv + n_v (a^h kron a^v).
struct AntennaIndex {
    int n_h;
    int n_v;
};
AntennaIndex antenna_position(const SystemConfig& cfg, int n);
/// Index of the TTD sub-array (row-major over (q_h, q_v)) feeding antenna n.
int subarray_of(const SystemConfig& cfg, int n);

/// UPA steering vector a^h(theta, phi, f) kron a^v(theta, f), unit norm.
CVec steering_vector(double theta, double phi, double f, const SystemConfig& cfg);

struct SteeringDerivatives {
    CVec d_theta;
    CVec d_phi;
};
SteeringDerivatives steering_derivatives(double theta, double phi, double f,
                                         const SystemConfig& cfg);

/// LoS user channel.
struct CommChannel {
    std::vector<cd> beta; ///< per-subcarrier complex gain
    double tau = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    std::vector<CVec> h;  ///< materialized per-subcarrier channel

    /// Rebuilds h from the stored parameters.
    void materialize(const SystemConfig& cfg);
};

struct Target {
    double theta = 0.0;
    double phi = 0.0;
    std::vector<cd> alpha; ///< per-subcarrier reflection coefficient
};

/// K point targets. The response at subcarrier m is
/// G_m = A_r Sigma A_t^H: a precoder x illuminates target k through
/// a_t(k)^H x, i.e. with the same matched direction as the user channel.
struct SensingScene {
    std::vector<Target> targets;
    std::vector<CMat> g; ///< materialized N_r x N_t responses

    int num_targets() const { return static_cast<int>(targets.size()); }
    void materialize(const SystemConfig& cfg);
};

struct ChannelRealization {
    CommChannel comm;
    SensingScene scene;
    std::uint64_t seed = 0;
    double msia = 0.0;
};

/// Per-subcarrier factored target response.
struct TargetFactors {
    CMat a_t;       ///< N_t x K
    CMat a_t_dth;   ///< N_t x K
    CMat a_t_dph;   ///< N_t x K
    CMat a_r;       ///< N_r x K
    CMat a_r_dth;
    CMat a_r_dph;
    CVec sigma;     ///< K reflection coefficients
};
TargetFactors target_factors(const SensingScene& scene, int m, const SystemConfig& cfg);

CommChannel sample_comm_channel(Rng& rng, const SystemConfig& cfg);
/// Places cfg.num_targets targets around the user so that msia() equals
/// msia_target. Throws ConfigError when no placement fits the angle domains.
SensingScene sample_sensing_scene(Rng& rng, const SystemConfig& cfg,
                                  const CommChannel& comm, double msia_target);
/// Draws a full realization from seed; redraws the user if the scene cannot
/// be placed around it.
ChannelRealization sample_realization(std::uint64_t seed, const SystemConfig& cfg,
                                      double msia_target);

double msia(const CommChannel& comm, const SensingScene& scene);

/// Sum-of-outer-products target response at subcarrier m (1-based).
CMat target_response(const SensingScene& scene, int m, const SystemConfig& cfg);

/// Complex normal CN(0, sigma^2): variance sigma^2 / 2 per real component.
cd complex_normal(Rng& rng, double sigma);

} // namespace isac
