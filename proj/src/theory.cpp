#include "isac/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace isac {

CMat basis(const ChannelRealization& r, int m, const SystemConfig& cfg)
{
    const TargetFactors tf = target_factors(r.scene, m, cfg);
    const Eigen::Index k = tf.a_t.cols();
    CMat u(cfg.n_t(), 3 * k + 1);
    u.leftCols(k) = tf.a_t;
    u.middleCols(k, k) = tf.a_t_dth;
    u.middleCols(2 * k, k) = tf.a_t_dph;
    u.col(3 * k) =
        steering_vector(r.comm.theta, r.comm.phi, subcarrier_frequency(cfg, m), cfg);
    return u;
}

XiPair xi_matrices(const ChannelRealization& r, const BeamspaceDictionary& dict, int m,
                   const SystemConfig& cfg)
{
    const CMat u = basis(r, m, cfg);
    const TargetFactors tf = target_factors(r.scene, m, cfg);
    const CVec hb = dict.d_t.adjoint() * r.comm.h[m - 1];
    const CVec back = dict.d_t * hb; // D h^b
    const CVec proj = u.adjoint() * back; // u_a^H D h^b
    XiPair x;
    x.xi_c = proj.conjugate() * proj.transpose();
    const CMat w = u.adjoint() * tf.a_t * tf.sigma.asDiagonal(); // U^H A_t Sigma
    x.xi_s = w * w.adjoint();
    return x;
}

CMat optimal_lambda(const CMat& xi_c, const CMat& xi_s, double gamma, double p_total)
{
    CMat c = xi_c + gamma * xi_s;
    c = 0.5 * (c + c.adjoint()).eval();
    if (!(c.norm() > 0.0)) {
        throw std::invalid_argument("optimal_lambda: zero combined matrix");
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    if (es.eigenvalues().minCoeff() < 0.0) {
        const RVec ev = es.eigenvalues().cwiseMax(0.0);
        c = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
        if (!(c.norm() > 0.0)) {
            throw std::invalid_argument("optimal_lambda: no non-negative direction");
        }
    }
    return c * (std::sqrt(p_total) / c.norm());
}

namespace {

// sum_{a,b} x[a,b] y[a,b], no conjugation.
double entry_sum(const CMat& x, const CMat& y)
{
    return x.cwiseProduct(y).sum().real();
}

ClosedForm finish(const std::vector<double>& rate_terms, double crb_den, double sigma_c2,
                  double n_r)
{
    ClosedForm out;
    for (double t : rate_terms) {
        const double arg = 1.0 + t / sigma_c2;
        if (arg > 0.0) {
            out.r_star += std::log2(std::max(arg, 1.0));
        }
        if (!(arg >= 1.0)) {
            out.valid = out.valid && arg > 0.0;
        }
    }
    if (crb_den > 0.0) {
        out.crb_star = n_r * n_r / crb_den;
    } else {
        out.crb_star = std::numeric_limits<double>::infinity();
        out.valid = false;
    }
    return out;
}

} // namespace

ClosedForm pareto_closed_form(const std::vector<XiPair>& xi, double gamma, double p_total,
                              double sigma_c2)
{
    if (xi.empty()) {
        throw std::invalid_argument("pareto_closed_form: no subcarriers");
    }
    std::vector<double> rate_terms;
    double den = 0.0;
    for (const XiPair& x : xi) {
        const double norm = (x.xi_c + gamma * x.xi_s).norm();
        if (!(norm > 0.0)) {
            rate_terms.push_back(0.0);
            continue;
        }
        const double s = std::sqrt(p_total) / norm;
        rate_terms.push_back(
            s * (entry_sum(x.xi_c, x.xi_c) + gamma * entry_sum(x.xi_s, x.xi_c)));
        den += s * (gamma * entry_sum(x.xi_s, x.xi_s) + entry_sum(x.xi_s, x.xi_c));
    }
    return finish(rate_terms, den, sigma_c2, static_cast<double>(xi.front().xi_c.rows()));
}

ClosedForm pareto_from_lambda(const std::vector<XiPair>& xi, const std::vector<CMat>& lambda,
                              double sigma_c2)
{
    if (xi.empty() || xi.size() != lambda.size()) {
        throw std::invalid_argument("pareto_from_lambda: size mismatch");
    }
    std::vector<double> rate_terms;
    double den = 0.0;
    for (std::size_t m = 0; m < xi.size(); ++m) {
        rate_terms.push_back(entry_sum(lambda[m], xi[m].xi_c));
        den += entry_sum(lambda[m], xi[m].xi_s);
    }
    return finish(rate_terms, den, sigma_c2, static_cast<double>(xi.front().xi_c.rows()));
}

int peak_similarity(const BeamspaceProfile& profile)
{
    int s = 0;
    for (std::size_t m = 0; m < profile.user.size(); ++m) {
        Eigen::Index pc = 0;
        profile.user[m].maxCoeff(&pc);
        for (const RVec& t : profile.targets[m]) {
            Eigen::Index ps = 0;
            t.maxCoeff(&ps);
            s += pc == ps ? 1 : 0;
        }
    }
    return s;
}

XiPair xi_approximation(const std::vector<bool>& hits, const CVec& sigma)
{
    const int k = static_cast<int>(hits.size());
    const int nr = 3 * k + 1;
    const int last = nr - 1;
    const double hit_count = static_cast<double>(std::count(hits.begin(), hits.end(), true));
    double hit_power = 0.0;
    for (int i = 0; i < k; ++i) {
        hit_power += hits[i] ? std::norm(sigma[i]) : 0.0;
    }
    XiPair x{CMat::Zero(nr, nr), CMat::Zero(nr, nr)};
    x.xi_c(last, last) = 1.0;
    for (int a = 0; a < k; ++a) {
        x.xi_c(a, last) = 2.0 * hit_count;
        for (int b = 0; b < k; ++b) {
            x.xi_c(a, b) = hit_count * hit_count;
            x.xi_s(a, b) = sigma.squaredNorm();
        }
    }
    x.xi_s(last, last) = hit_power;
    return x;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        return 0.0;
    }
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
                ++j;
            }
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) {
                r[idx[t]] = avg;
            }
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

Prop1Report verify_proposition1(const SystemConfig& cfg, int n_trials,
                                const std::vector<double>& offsets, double gamma,
                                std::uint64_t base_seed)
{
    if (n_trials < 1 || offsets.empty()) {
        throw std::invalid_argument("verify_proposition1: need trials and offsets");
    }
    const BeamspaceDictionary dict = BeamspaceDictionary::build(cfg);
    Prop1Report rep;
    rep.offsets = offsets;
    for (std::size_t g = 0; g < offsets.size(); ++g) {
        double cor = 0.0, sim = 0.0, rs = 0.0, crb = 0.0, inv = 0.0;
        int used = 0;
        for (int t = 0; t < n_trials; ++t) {
            // Common seeds across groups: only the placement radius changes.
            const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(t);
            const ChannelRealization r = sample_realization(seed, cfg, offsets[g]);
            const auto [hc, hs] = beamspace_channels(r.comm, r.scene, std::nullopt, dict, cfg);
            std::vector<XiPair> xi;
            for (int m = 1; m <= cfg.num_subcarriers; ++m) {
                xi.push_back(xi_matrices(r, dict, m, cfg));
            }
            const ClosedForm cf = pareto_closed_form(xi, gamma, cfg.p_total, cfg.sigma_c2);
            if (!cf.valid) {
                ++rep.invalid_trials;
                continue;
            }
            ++used;
            cor += cs_correlation(hc, hs);
            sim += peak_similarity(beamspace_profile(r.comm, r.scene, std::nullopt, dict, cfg));
            rs += cf.r_star;
            crb += cf.crb_star;
            inv += 1.0 / cf.crb_star;
        }
        const double n = std::max(used, 1);
        rep.mean_correlation.push_back(cor / n);
        rep.mean_similarity.push_back(sim / n);
        rep.mean_r_star.push_back(rs / n);
        rep.mean_crb_star.push_back(crb / n);
        rep.mean_inv_crb_star.push_back(inv / n);
    }
    rep.degenerate = offsets.size() < 2;
    if (!rep.degenerate) {
        rep.spearman_cor_rate = spearman(rep.mean_correlation, rep.mean_r_star);
        rep.spearman_cor_inv_crb = spearman(rep.mean_correlation, rep.mean_inv_crb_star);
        rep.spearman_offset_similarity = spearman(offsets, rep.mean_similarity);
        rep.spearman_similarity_cor = spearman(rep.mean_similarity, rep.mean_correlation);
        rep.pass = rep.spearman_cor_rate > 0.8 && rep.spearman_cor_inv_crb > 0.8;
    }
    return rep;
}

} // namespace isac
