#include "isac/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace isac {

namespace {

CVec dictionary_column(double u, double v, const SystemConfig& cfg, int rows)
{
    CVec d(rows);
    const double amp = 1.0 / std::sqrt(static_cast<double>(rows));
    for (int n = 0; n < rows; ++n) {
        const auto [nh, nv] = antenna_position(cfg, n);
        d[n] = std::polar(amp, kPi * (u * nh + v * nv));
    }
    return d;
}

RVec normalized_l1(const RVec& v, const char* what)
{
    const double s = v.sum();
    if (!(s > 0.0)) {
        throw std::domain_error(std::string("all-zero beamspace ") + what + " channel");
    }
    return v / s;
}

// diag(D_r^H G F D_t) for G = A_r Sigma A_t^H, split per target.
CMat sensing_beamspace_terms(const TargetFactors& tf, const CVec& td,
                             const BeamspaceDictionary& dict)
{
    const CMat rx = dict.d_r.adjoint() * tf.a_r;                      // G x K
    const CMat tx = tf.a_t.adjoint() * (td.asDiagonal() * dict.d_t);  // K x G
    CMat terms(rx.rows(), rx.cols());
    for (Eigen::Index k = 0; k < rx.cols(); ++k) {
        terms.col(k) = tf.sigma[k] * rx.col(k).cwiseProduct(tx.row(k).transpose());
    }
    return terms;
}

CVec delay_profile(const std::optional<TtdGrid>& ttd, double f, const SystemConfig& cfg)
{
    return ttd ? ttd_phase_profile(*ttd, f, cfg) : CVec::Ones(cfg.n_t());
}

} // namespace

BeamspaceDictionary BeamspaceDictionary::build(const SystemConfig& cfg)
{
    const int os = cfg.dict_oversampling();
    if (os <= 0) {
        throw ConfigError("dict_size must be n_t times a perfect square");
    }
    const int gh = os * cfg.n_th;
    const int gv = os * cfg.n_tv;
    BeamspaceDictionary d{CMat(cfg.n_t(), gh * gv), CMat(cfg.n_r, gh * gv)};
    for (int ih = 0; ih < gh; ++ih) {
        for (int iv = 0; iv < gv; ++iv) {
            const double u = -1.0 + 2.0 * ih / gh;
            const double v = -1.0 + 2.0 * iv / gv;
            const int g = ih * gv + iv;
            d.d_t.col(g) = dictionary_column(u, v, cfg, cfg.n_t());
            d.d_r.col(g) = dictionary_column(u, v, cfg, cfg.n_r);
        }
    }
    return d;
}

double fisher_inverse_trace(const RMat& j_in)
{
    const RMat j = 0.5 * (j_in + j_in.transpose());
    const Eigen::Index dim = j.rows();
    const double tr = j.trace();
    if (dim == 0 || !(tr > 0.0) || !std::isfinite(tr)) {
        throw SingularFisher("Fisher information is zero");
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(j, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > hi / FisherInversion::kConditionCap)) {
        throw SingularFisher("Fisher information condition number exceeds cap");
    }
    const double ridge = FisherInversion::kRidge * tr / static_cast<double>(dim);
    const RMat reg = j + ridge * RMat::Identity(dim, dim);
    const RMat inv = reg.ldlt().solve(RMat::Identity(dim, dim));
    return inv.trace();
}

RVec equivalent_gains(const CommChannel& comm, const TtdGrid& ttd, const PhaseShifters& ps,
                      const SystemConfig& cfg)
{
    RVec g(cfg.num_subcarriers);
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        const CVec f = effective_precoder(ttd, ps, m, cfg);
        g[m - 1] = std::norm(comm.h[m - 1].dot(f));
    }
    return g;
}

double rate(const CommChannel& comm, const PrecoderState& state, const SystemConfig& cfg)
{
    const RVec g = equivalent_gains(comm, state.ttd, state.ps, cfg);
    double r = 0.0;
    for (int m = 0; m < cfg.num_subcarriers; ++m) {
        r += std::log2(1.0 + state.power.p[m] * g[m] / cfg.sigma_c2);
    }
    return r;
}

RMat fisher_matrix_unit(const SensingScene& scene, const CVec& beam, int m,
                        const SystemConfig& cfg)
{
    const int k_count = scene.num_targets();
    const TargetFactors tf = target_factors(scene, m, cfg);

    // R_x = x x^H is rank one, so every quadratic form A^H R^* B in the
    // block formula factors into outer products of the projections below.
    const CVec w0 = tf.sigma.cwiseProduct(tf.a_t.adjoint() * beam);
    const CVec wth = tf.sigma.cwiseProduct(tf.a_t_dth.adjoint() * beam);
    const CVec wph = tf.sigma.cwiseProduct(tf.a_t_dph.adjoint() * beam);

    auto block = [&](const CMat& ar_x, const CVec& w_x, const CMat& ar_y, const CVec& w_y) {
        CMat b = (ar_x.adjoint() * ar_y).cwiseProduct(w0.conjugate() * w0.transpose());
        b += (ar_x.adjoint() * tf.a_r).cwiseProduct(w0.conjugate() * w_y.transpose());
        b += (tf.a_r.adjoint() * ar_y).cwiseProduct(w_x.conjugate() * w0.transpose());
        b += (tf.a_r.adjoint() * tf.a_r).cwiseProduct(w_x.conjugate() * w_y.transpose());
        return b;
    };

    const CMat j_tt = block(tf.a_r_dth, wth, tf.a_r_dth, wth);
    const CMat j_tp = block(tf.a_r_dth, wth, tf.a_r_dph, wph);
    const CMat j_pp = block(tf.a_r_dph, wph, tf.a_r_dph, wph);

    RMat j(2 * k_count, 2 * k_count);
    j.topLeftCorner(k_count, k_count) = j_tt.real();
    j.topRightCorner(k_count, k_count) = j_tp.real();
    j.bottomLeftCorner(k_count, k_count) = j_tp.adjoint().real();
    j.bottomRightCorner(k_count, k_count) = j_pp.real();
    return (2.0 / cfg.sigma_s2) * j;
}

RMat fisher_matrix(const SensingScene& scene, const PrecoderState& state, int m,
                   const SystemConfig& cfg)
{
    const CVec beam = effective_precoder(state, m, cfg);
    return state.power.p[m - 1] * fisher_matrix_unit(scene, beam, m, cfg);
}

double crb(const SensingScene& scene, const PrecoderState& state, const SystemConfig& cfg)
{
    const int dim = 2 * scene.num_targets();
    RMat total = RMat::Zero(dim, dim);
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        total += fisher_matrix(scene, state, m, cfg);
    }
    return fisher_inverse_trace(total);
}

BeamspaceProfile beamspace_profile(const CommChannel& comm, const SensingScene& scene,
                                   const std::optional<TtdGrid>& ttd,
                                   const BeamspaceDictionary& dict, const SystemConfig& cfg)
{
    BeamspaceProfile out;
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        const CVec td = delay_profile(ttd, subcarrier_frequency(cfg, m), cfg);
        const CVec eq_user = td.conjugate().cwiseProduct(comm.h[m - 1]);
        out.user.push_back((dict.d_t.adjoint() * eq_user).cwiseAbs());

        const TargetFactors tf = target_factors(scene, m, cfg);
        const CMat terms = sensing_beamspace_terms(tf, td, dict);
        std::vector<RVec> per_target;
        for (Eigen::Index k = 0; k < terms.cols(); ++k) {
            per_target.push_back(terms.col(k).cwiseAbs());
        }
        out.targets.push_back(std::move(per_target));
    }
    return out;
}

std::pair<RVec, RVec> beamspace_channels(const CommChannel& comm, const SensingScene& scene,
                                         const std::optional<TtdGrid>& ttd,
                                         const BeamspaceDictionary& dict,
                                         const SystemConfig& cfg)
{
    const int g = dict.size();
    RVec user = RVec::Zero(g);
    RVec sense = RVec::Zero(g);
    for (int m = 1; m <= cfg.num_subcarriers; ++m) {
        const CVec td = delay_profile(ttd, subcarrier_frequency(cfg, m), cfg);
        const CVec eq_user = td.conjugate().cwiseProduct(comm.h[m - 1]);
        user += (dict.d_t.adjoint() * eq_user).cwiseAbs();
        const TargetFactors tf = target_factors(scene, m, cfg);
        sense += sensing_beamspace_terms(tf, td, dict).rowwise().sum().cwiseAbs();
    }
    return {normalized_l1(user, "communication"), normalized_l1(sense, "sensing")};
}

double kl_divergence(const RVec& p, const RVec& q)
{
    if (p.size() != q.size()) {
        throw std::invalid_argument("KL divergence: dimension mismatch");
    }
    const double n = static_cast<double>(p.size());
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) {
            continue;
        }
        const double qs = (1.0 - KlSmoothing::kMix) * q[i] + KlSmoothing::kMix / n;
        kl += p[i] * std::log(p[i] / qs);
    }
    return kl;
}

double cs_correlation(const RVec& hb_c, const RVec& hb_s)
{
    return 1.0 / std::max(kl_divergence(hb_c, hb_s), KlSmoothing::kFloor);
}

CorrelationEvaluator::CorrelationEvaluator(const ChannelRealization& r,
                                           const BeamspaceDictionary& dict,
                                           const SystemConfig& cfg)
    : cfg_(cfg), g_(dict.size()), ttd_(TtdGrid::zeros(cfg))
{
    const int qn = cfg.q_t();
    const int mc = cfg.num_subcarriers;
    user_partial_.assign(qn, std::vector<CVec>(mc, CVec::Zero(g_)));
    sense_partial_.assign(qn, std::vector<CVec>(mc, CVec::Zero(g_)));
    for (int m = 1; m <= mc; ++m) {
        freqs_.push_back(subcarrier_frequency(cfg, m));
        const TargetFactors tf = target_factors(r.scene, m, cfg);
        const CMat rx = dict.d_r.adjoint() * tf.a_r; // G x K
        const CVec& h = r.comm.h[m - 1];
        for (int n = 0; n < cfg.n_t(); ++n) {
            const int q = subarray_of(cfg, n);
            const Eigen::RowVectorXcd drow = dict.d_t.row(n);
            user_partial_[q][m - 1] += drow.conjugate().transpose() * h[n];
            for (int k = 0; k < r.scene.num_targets(); ++k) {
                const cd coeff = tf.sigma[k] * std::conj(tf.a_t(n, k));
                sense_partial_[q][m - 1] +=
                    coeff * rx.col(k).cwiseProduct(drow.transpose());
            }
        }
    }
    set_delays(ttd_);
}

void CorrelationEvaluator::set_delays(const TtdGrid& ttd)
{
    ttd_ = ttd;
    const int mc = cfg_.num_subcarriers;
    user_total_.assign(mc, CVec::Zero(g_));
    sense_total_.assign(mc, CVec::Zero(g_));
    for (int m = 0; m < mc; ++m) {
        for (int q = 0; q < cfg_.q_t(); ++q) {
            const cd ph = std::polar(1.0, 2.0 * kPi * freqs_[m] * ttd_[q]);
            user_total_[m] += std::conj(ph) * user_partial_[q][m];
            sense_total_[m] += ph * sense_partial_[q][m];
        }
    }
}

double CorrelationEvaluator::correlation_of(const std::vector<CVec>& user,
                                            const std::vector<CVec>& sense) const
{
    RVec u = RVec::Zero(g_);
    RVec s = RVec::Zero(g_);
    for (size_t m = 0; m < user.size(); ++m) {
        u += user[m].cwiseAbs();
        s += sense[m].cwiseAbs();
    }
    return cs_correlation(normalized_l1(u, "communication"), normalized_l1(s, "sensing"));
}

double CorrelationEvaluator::correlation() const
{
    return correlation_of(user_total_, sense_total_);
}

double CorrelationEvaluator::correlation_with(int q, double t) const
{
    std::vector<CVec> user = user_total_;
    std::vector<CVec> sense = sense_total_;
    for (size_t m = 0; m < freqs_.size(); ++m) {
        const cd old_ph = std::polar(1.0, 2.0 * kPi * freqs_[m] * ttd_[q]);
        const cd new_ph = std::polar(1.0, 2.0 * kPi * freqs_[m] * t);
        user[m] += std::conj(new_ph - old_ph) * user_partial_[q][m];
        sense[m] += (new_ph - old_ph) * sense_partial_[q][m];
    }
    return correlation_of(user, sense);
}

void CorrelationEvaluator::commit(int q, double t)
{
    TtdGrid next = ttd_;
    next[q] = t;
    // Recompute from partial sums so repeated commits do not accumulate drift.
    set_delays(next);
}

PerformancePoint evaluate(const ChannelRealization& r, const PrecoderState& state,
                          const BeamspaceDictionary& dict, const SystemConfig& cfg)
{
    PerformancePoint pt;
    pt.rate = rate(r.comm, state, cfg);
    const auto [hc, hs] = beamspace_channels(r.comm, r.scene, state.ttd, dict, cfg);
    pt.correlation = cs_correlation(hc, hs);
    pt.crb = crb(r.scene, state, cfg);
    return pt;
}

PerformancePoint evaluate(const ChannelRealization& r, const PrecoderState& state,
                          const SystemConfig& cfg)
{
    return evaluate(r, state, BeamspaceDictionary::build(cfg), cfg);
}

} // namespace isac
