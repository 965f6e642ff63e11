#include "isac/model.hpp"

#include <cmath>
#include <string>

namespace isac {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw ConfigError(what);
    }
}

void check_angles(double theta, double phi)
{
    if (!(theta >= 0.0 && theta <= kPi) || !(phi >= -kPi / 2 && phi <= kPi / 2)) {
        throw ConfigError("steering angles outside theta in [0, pi], phi in [-pi/2, pi/2]");
    }
}

// Phase slope per horizontal / vertical index, without the pi*f/fc factor.
struct SpatialFreq {
    double u;
    double v;
};

SpatialFreq spatial_freq(double theta, double phi)
{
    return {std::sin(phi) * std::sin(theta), std::cos(theta)};
}

} // namespace

int SystemConfig::dict_oversampling() const
{
    const int nt = n_t();
    if (nt <= 0 || dict_size % nt != 0) {
        return 0;
    }
    const int ratio = dict_size / nt;
    const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ratio))));
    return s * s == ratio ? s : 0;
}

void SystemConfig::validate() const
{
    require(n_th > 0 && n_tv > 0 && n_r > 0, "antenna counts must be positive");
    require(q_th > 0 && q_tv > 0, "TTD sub-array counts must be positive");
    require(n_th % q_th == 0 && n_tv % q_tv == 0,
            "antenna counts must be divisible by the TTD sub-array counts");
    require(n_r == n_t(), "receive array must match the transmit UPA (n_r = n_th * n_tv)");
    require(num_subcarriers > 0, "subcarrier count must be positive");
    require(fc > 0 && bandwidth > 0, "frequencies must be positive");
    require(bandwidth < 2 * fc, "bandwidth must be below twice the carrier");
    require(ttd_bits > 0 && ttd_bits < 30, "TTD resolution must be in [1, 29] bits");
    require(t_max > 0, "t_max must be positive");
    require(p_total > 0 && sigma_c2 > 0 && sigma_s2 > 0, "powers must be positive");
    require(sigma_beta > 0 && sigma_alpha > 0, "gain deviations must be positive");
    require(tau_max > 0, "tau_max must be positive");
    require(num_targets >= 0, "target count must be non-negative");
    require(dict_oversampling() > 0, "dict_size must be n_t times a perfect square");
}

SystemConfig SystemConfig::full_profile()
{
    SystemConfig c;
    c.n_th = 16;
    c.n_tv = 16;
    c.n_r = 256;
    c.q_th = 8;
    c.q_tv = 8;
    c.num_subcarriers = 32;
    c.num_targets = 3;
    c.dict_size = 256;
    return c;
}

SystemConfig SystemConfig::desk_profile()
{
    return SystemConfig{};
}

bool operator==(const SystemConfig& a, const SystemConfig& b)
{
    return a.n_th == b.n_th && a.n_tv == b.n_tv && a.n_r == b.n_r && a.q_th == b.q_th &&
           a.q_tv == b.q_tv && a.num_subcarriers == b.num_subcarriers && a.fc == b.fc &&
           a.bandwidth == b.bandwidth && a.ttd_bits == b.ttd_bits && a.t_max == b.t_max &&
           a.p_total == b.p_total && a.sigma_c2 == b.sigma_c2 && a.sigma_s2 == b.sigma_s2 &&
           a.sigma_beta == b.sigma_beta && a.sigma_alpha == b.sigma_alpha &&
           a.tau_max == b.tau_max && a.num_targets == b.num_targets &&
           a.dict_size == b.dict_size;
}

double subcarrier_frequency(const SystemConfig& cfg, int m)
{
    if (m < 1 || m > cfg.num_subcarriers) {
        throw std::out_of_range("subcarrier index " + std::to_string(m) + " outside [1, M]");
    }
    const double mm = static_cast<double>(cfg.num_subcarriers);
    return cfg.fc + cfg.bandwidth / mm * (static_cast<double>(m) - (mm + 1.0) / 2.0);
}

AntennaIndex antenna_position(const SystemConfig& cfg, int n)
{
    return {n / cfg.n_tv, n % cfg.n_tv};
}

int subarray_of(const SystemConfig& cfg, int n)
{
    const auto [nh, nv] = antenna_position(cfg, n);
    return (nh / cfg.l_h()) * cfg.q_tv + nv / cfg.l_v();
}

CVec steering_vector(double theta, double phi, double f, const SystemConfig& cfg)
{
    check_angles(theta, phi);
    const int nt = cfg.n_t();
    const auto [u, v] = spatial_freq(theta, phi);
    const double k = kPi * f / cfg.fc;
    const double amp = 1.0 / std::sqrt(static_cast<double>(nt));
    CVec a(nt);
    for (int n = 0; n < nt; ++n) {
        const auto [nh, nv] = antenna_position(cfg, n);
        a[n] = std::polar(amp, k * (u * nh + v * nv));
    }
    return a;
}

SteeringDerivatives steering_derivatives(double theta, double phi, double f,
                                         const SystemConfig& cfg)
{
    const CVec a = steering_vector(theta, phi, f, cfg);
    const double k = kPi * f / cfg.fc;
    const double du_dth = std::sin(phi) * std::cos(theta);
    const double dv_dth = -std::sin(theta);
    const double du_dph = std::cos(phi) * std::sin(theta);
    SteeringDerivatives d{CVec(a.size()), CVec(a.size())};
    for (int n = 0; n < a.size(); ++n) {
        const auto [nh, nv] = antenna_position(cfg, n);
        d.d_theta[n] = cd(0.0, k * (du_dth * nh + dv_dth * nv)) * a[n];
        d.d_phi[n] = cd(0.0, k * du_dph * nh) * a[n];
    }
    return d;
}

void CommChannel::materialize(const SystemConfig& cfg)
{
    const int m_count = cfg.num_subcarriers;
    h.assign(m_count, CVec());
    for (int m = 1; m <= m_count; ++m) {
        const double f = subcarrier_frequency(cfg, m);
        const cd delay = std::polar(1.0, -2.0 * kPi * f * tau);
        h[m - 1] = beta[m - 1] * delay * steering_vector(theta, phi, f, cfg);
    }
}

void SensingScene::materialize(const SystemConfig& cfg)
{
    g.assign(cfg.num_subcarriers, CMat());
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        const TargetFactors tf = target_factors(*this, m, cfg);
        g[m - 1] = tf.a_r * tf.sigma.asDiagonal() * tf.a_t.adjoint();
    }
}

TargetFactors target_factors(const SensingScene& scene, int m, const SystemConfig& cfg)
{
    const double f = subcarrier_frequency(cfg, m);
    const int k_count = scene.num_targets();
    const int nt = cfg.n_t();
    TargetFactors tf{CMat(nt, k_count), CMat(nt, k_count), CMat(nt, k_count),
                     CMat(cfg.n_r, k_count), CMat(cfg.n_r, k_count), CMat(cfg.n_r, k_count),
                     CVec(k_count)};
    for (int k = 0; k < k_count; ++k) {
        const Target& t = scene.targets[k];
        tf.a_t.col(k) = steering_vector(t.theta, t.phi, f, cfg);
        const SteeringDerivatives d = steering_derivatives(t.theta, t.phi, f, cfg);
        tf.a_t_dth.col(k) = d.d_theta;
        tf.a_t_dph.col(k) = d.d_phi;
        tf.sigma[k] = t.alpha[m - 1];
    }
    // Same UPA on receive.
    tf.a_r = tf.a_t;
    tf.a_r_dth = tf.a_t_dth;
    tf.a_r_dph = tf.a_t_dph;
    return tf;
}

cd complex_normal(Rng& rng, double sigma)
{
    std::normal_distribution<double> n(0.0, sigma / std::sqrt(2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

CommChannel sample_comm_channel(Rng& rng, const SystemConfig& cfg)
{
    CommChannel c;
    std::uniform_real_distribution<double> uth(0.0, kPi);
    std::uniform_real_distribution<double> uph(-kPi / 2, kPi / 2);
    std::uniform_real_distribution<double> utau(0.0, cfg.tau_max);
    c.theta = uth(rng);
    c.phi = uph(rng);
    // uniform_real_distribution is [0, tau_max); map to (0, tau_max].
    c.tau = cfg.tau_max - utau(rng);
    c.beta.resize(cfg.num_subcarriers);
    for (auto& b : c.beta) {
        b = complex_normal(rng, cfg.sigma_beta);
    }
    c.materialize(cfg);
    return c;
}

SensingScene sample_sensing_scene(Rng& rng, const SystemConfig& cfg, const CommChannel& comm,
                                  double msia_target)
{
    if (!(msia_target >= 0.0)) {
        throw ConfigError("msia_target must be non-negative");
    }
    const int k_count = cfg.num_targets;
    // Every target sits at radius sqrt(2) * msia in the (theta, phi) plane,
    // which makes the realized MSIA equal the target exactly.
    const double radius = std::sqrt(2.0) * msia_target;
    if (radius > std::hypot(kPi, kPi / 2)) {
        throw ConfigError("msia_target too large for the angle domains");
    }
    std::uniform_real_distribution<double> udir(0.0, 2.0 * kPi);
    constexpr int kMaxTries = 2000;

    SensingScene s;
    s.targets.resize(k_count);
    for (int k = 0; k < k_count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
            const double dir = udir(rng);
            const double th = comm.theta + radius * std::cos(dir);
            const double ph = comm.phi + radius * std::sin(dir);
            if (th >= 0.0 && th <= kPi && ph >= -kPi / 2 && ph <= kPi / 2) {
                s.targets[k].theta = th;
                s.targets[k].phi = ph;
                placed = true;
            }
        }
        if (!placed) {
            throw ConfigError("msia_target unreachable from the user angles");
        }
    }
    for (auto& t : s.targets) {
        t.alpha.resize(cfg.num_subcarriers);
        for (auto& a : t.alpha) {
            a = complex_normal(rng, cfg.sigma_alpha);
        }
    }
    s.materialize(cfg);
    return s;
}

ChannelRealization sample_realization(std::uint64_t seed, const SystemConfig& cfg,
                                      double msia_target)
{
    Rng rng(seed);
    constexpr int kMaxUsers = 1000;
    for (int attempt = 0; attempt < kMaxUsers; ++attempt) {
        CommChannel comm = sample_comm_channel(rng, cfg);
        try {
            SensingScene scene = sample_sensing_scene(rng, cfg, comm, msia_target);
            ChannelRealization r{std::move(comm), std::move(scene), seed, 0.0};
            r.msia = msia(r.comm, r.scene);
            return r;
        } catch (const ConfigError&) {
            // user too close to a domain edge for this radius; redraw
        }
    }
    throw ConfigError("msia_target unreachable for any sampled user");
}

double msia(const CommChannel& comm, const SensingScene& scene)
{
    const int k_count = scene.num_targets();
    if (k_count == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (const Target& t : scene.targets) {
        const double dth = t.theta - comm.theta;
        const double dph = t.phi - comm.phi;
        acc += dth * dth + dph * dph;
    }
    return std::sqrt(acc / (2.0 * k_count));
}

CMat target_response(const SensingScene& scene, int m, const SystemConfig& cfg)
{
    const double f = subcarrier_frequency(cfg, m);
    CMat g = CMat::Zero(cfg.n_r, cfg.n_t());
    for (const Target& t : scene.targets) {
        const CVec a = steering_vector(t.theta, t.phi, f, cfg);
        g += t.alpha[m - 1] * a * a.adjoint();
    }
    return g;
}

} // namespace isac
