#include <algorithm>
#include <numeric>

#include <doctest.h>

#include "isac/metrics.hpp"
#include "support.hpp"

using namespace isac;
using testing::rel_err;

namespace {

PrecoderState random_state(const SystemConfig& c, Rng& g)
{
    std::uniform_real_distribution<double> ang(0, 2 * kPi), lvl(0, 1);
    PrecoderState s{TtdGrid::zeros(c), PhaseShifters{RVec(c.n_t())}, PowerAllocation{RVec(c.num_subcarriers)}};
    for (int q = 0; q < s.ttd.size(); ++q) {
        s.ttd[q] = ttd_quantize(lvl(g) * c.t_max, c);
    }
    for (int n = 0; n < c.n_t(); ++n) {
        s.ps.phases[n] = ang(g);
    }
    for (int m = 0; m < c.num_subcarriers; ++m) {
        s.power.p[m] = 0.1 + lvl(g);
    }
    return s;
}

// Noiseless echo G x for the scene with target angles replaced by `angles`
// ([theta_1..theta_K, phi_1..phi_K]).
CVec echo(const SensingScene& scene, const RVec& angles, const CVec& x, int m,
          const SystemConfig& c)
{
    const int k = scene.num_targets();
    const double f = subcarrier_frequency(c, m);
    CVec mu = CVec::Zero(c.n_r);
    for (int i = 0; i < k; ++i) {
        const CVec a = steering_vector(angles[i], angles[k + i], f, c);
        mu += scene.targets[i].alpha[m - 1] * a * a.dot(x);
    }
    return mu;
}

RMat fd_fisher(const SensingScene& scene, const PrecoderState& s, int m, const SystemConfig& c)
{
    const int k = scene.num_targets();
    RVec ang(2 * k);
    for (int i = 0; i < k; ++i) {
        ang[i] = scene.targets[i].theta;
        ang[k + i] = scene.targets[i].phi;
    }
    const CVec x = std::sqrt(s.power.p[m - 1]) * effective_precoder(s, m, c);
    const double h = 1e-6;
    CMat d(c.n_r, 2 * k);
    for (int i = 0; i < 2 * k; ++i) {
        RVec up = ang, dn = ang;
        up[i] += h;
        dn[i] -= h;
        d.col(i) = (echo(scene, up, x, m, c) - echo(scene, dn, x, m, c)) / (2 * h);
    }
    return (2.0 / c.sigma_s2) * (d.adjoint() * d).real();
}

ChannelRealization random_realization(const SystemConfig& c, std::uint64_t seed)
{
    ChannelRealization r;
    Rng g(seed);
    r.comm = sample_comm_channel(g, c);
    for (int k = 0; k < c.num_targets; ++k) {
        Target t{testing::rand_theta(g), testing::rand_phi(g), {}};
        for (int m = 0; m < c.num_subcarriers; ++m) {
            t.alpha.push_back(complex_normal(g, c.sigma_alpha));
        }
        r.scene.targets.push_back(t);
    }
    r.scene.materialize(c);
    r.seed = seed;
    r.msia = msia(r.comm, r.scene);
    return r;
}

RVec random_simplex(Rng& g, int n)
{
    std::exponential_distribution<double> e(1.0);
    RVec v(n);
    for (int i = 0; i < n; ++i) {
        v[i] = e(g);
    }
    return v / v.sum();
}

} // namespace

TEST_CASE("rate")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const ChannelRealization r = sample_realization(3, c, 0.1);
    Rng g(8);
    PrecoderState s = random_state(c, g);

    SUBCASE("scalar SNR oracle")
    {
        double expect = 0.0;
        for (int m = 1; m <= c.num_subcarriers; ++m) {
            const double f = subcarrier_frequency(c, m);
            cd inner = 0.0;
            for (int n = 0; n < c.n_t(); ++n) {
                const double phase = 2 * kPi * f * s.ttd[subarray_of(c, n)] + s.ps.phases[n];
                inner += std::conj(r.comm.h[m - 1][n]) * std::polar(1.0, phase);
            }
            expect += std::log2(1.0 + s.power.p[m - 1] * std::norm(inner) / c.sigma_c2);
        }
        CHECK(rel_err(rate(r.comm, s, c), expect) < 1e-12);
    }
    SUBCASE("zero power")
    {
        s.power.p.setZero();
        CHECK(rate(r.comm, s, c) == 0.0);
    }
    SUBCASE("one bit")
    {
        SystemConfig one = c;
        one.num_subcarriers = 1;
        const ChannelRealization r1 = sample_realization(4, one, 0.1);
        PrecoderState t{TtdGrid::zeros(one), PhaseShifters::zeros(one), PowerAllocation{RVec(1)}};
        t.power.p[0] = one.sigma_c2 / equivalent_gains(r1.comm, t.ttd, t.ps, one)[0];
        CHECK(rate(r1.comm, t, one) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("monotone in each power")
    {
        const double base = rate(r.comm, s, c);
        for (int m = 0; m < c.num_subcarriers; ++m) {
            PrecoderState t = s;
            t.power.p[m] *= 1.5;
            CHECK(rate(r.comm, t, c) >= base);
        }
    }
}

TEST_CASE("Fisher information")
{
    SUBCASE("finite-difference oracle, one target")
    {
        const SystemConfig c = testing::tiny(2, 2, 1, 1, 1, 1);
        for (int i = 0; i < 20; ++i) {
            const ChannelRealization r = random_realization(c, 100 + i);
            Rng g(i);
            const PrecoderState s = random_state(c, g);
            const RMat j = fisher_matrix(r.scene, s, 1, c);
            const RMat o = fd_fisher(r.scene, s, 1, c);
            CHECK((j - o).norm() / o.norm() < 1e-4);
            // CRB oracle
            const double inv_o = o.inverse().trace();
            CHECK(rel_err(crb(r.scene, s, c), inv_o) < 1e-3);
        }
    }
    SUBCASE("finite-difference oracle, desk scale")
    {
        const SystemConfig c = SystemConfig::desk_profile();
        const ChannelRealization r = random_realization(c, 7);
        Rng g(1);
        const PrecoderState s = random_state(c, g);
        for (int m = 1; m <= c.num_subcarriers; ++m) {
            const RMat j = fisher_matrix(r.scene, s, m, c);
            CHECK((j - fd_fisher(r.scene, s, m, c)).norm() / j.norm() < 1e-4);
        }
    }
    SUBCASE("symmetry, PSD, linear in power")
    {
        const SystemConfig c = SystemConfig::desk_profile();
        for (int i = 0; i < 20; ++i) {
            const ChannelRealization r = random_realization(c, 300 + i);
            Rng g(i);
            PrecoderState s = random_state(c, g);
            const int m = 1 + i % c.num_subcarriers;
            const RMat j = fisher_matrix(r.scene, s, m, c);
            CHECK((j - j.transpose()).cwiseAbs().maxCoeff() < 1e-10);
            Eigen::SelfAdjointEigenSolver<RMat> es(j);
            CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
            PrecoderState t = s;
            t.power.p[m - 1] *= 3.0;
            CHECK((fisher_matrix(r.scene, t, m, c) - 3.0 * j).norm() <= 1e-13 * j.norm());
            t.power.p[m - 1] = 0.0;
            CHECK(fisher_matrix(r.scene, t, m, c).norm() == 0.0);
        }
    }
}

TEST_CASE("CRB")
{
    const SystemConfig c = SystemConfig::desk_profile();
    SUBCASE("power scaling law")
    {
        for (int i = 0; i < 50; ++i) {
            const ChannelRealization r = random_realization(c, 900 + i);
            Rng g(i);
            PrecoderState s = random_state(c, g);
            const double base = crb(r.scene, s, c);
            for (double k : {2.0, 10.0}) {
                PrecoderState t = s;
                t.power.p *= k;
                CHECK(rel_err(crb(r.scene, t, c) * k, base) < 1e-12);
            }
        }
    }
    SUBCASE("identical targets are unobservable")
    {
        ChannelRealization r = random_realization(c, 5);
        r.scene.targets[1] = r.scene.targets[0];
        r.scene.materialize(c);
        Rng g(2);
        CHECK_THROWS_AS(crb(r.scene, random_state(c, g), c), SingularFisher);
    }
    SUBCASE("zero power")
    {
        const ChannelRealization r = random_realization(c, 5);
        Rng g(2);
        PrecoderState s = random_state(c, g);
        s.power.p.setZero();
        CHECK_THROWS_AS(crb(r.scene, s, c), SingularFisher);
        CHECK_THROWS_AS(evaluate(r, s, c), SingularFisher);
        CHECK(rate(r.comm, s, c) == 0.0);
    }
    SUBCASE("more power, lower bound")
    {
        const ChannelRealization r = random_realization(c, 6);
        Rng g(3);
        PrecoderState s = random_state(c, g);
        PrecoderState t = s;
        t.power.p *= 1.1;
        CHECK(crb(r.scene, t, c) < crb(r.scene, s, c));
    }
}

TEST_CASE("beamspace channels")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const BeamspaceDictionary d = BeamspaceDictionary::build(c);
    CHECK(d.size() == c.dict_size);
    for (int i = 0; i < d.size(); ++i) {
        CHECK(d.d_t.col(i).norm() == doctest::Approx(1.0).epsilon(1e-13));
    }
    const ChannelRealization r = sample_realization(12, c, 0.1);
    const auto [hc, hs] = beamspace_channels(r.comm, r.scene, std::nullopt, d, c);
    CHECK(hc.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(hs.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(hc.minCoeff() >= 0.0);
    CHECK(hs.minCoeff() >= 0.0);

    const auto [zc, zs] = beamspace_channels(r.comm, r.scene, TtdGrid::zeros(c), d, c);
    CHECK(zc == hc);
    CHECK(zs == hs);

    SUBCASE("coincident user and target peak together")
    {
        SystemConfig one = c;
        one.num_targets = 1;
        for (int i = 0; i < 20; ++i) {
            const ChannelRealization q = sample_realization(40 + i, one, 0.0);
            const auto [pc, ps] = beamspace_channels(q.comm, q.scene, std::nullopt, d, one);
            Eigen::Index a = 0, b = 0;
            pc.maxCoeff(&a);
            ps.maxCoeff(&b);
            CHECK(a == b);
        }
    }
    SUBCASE("permutation equivariance")
    {
        std::vector<int> perm(d.size());
        std::iota(perm.begin(), perm.end(), 0);
        Rng g(6);
        std::shuffle(perm.begin(), perm.end(), g);
        BeamspaceDictionary p = d;
        for (int i = 0; i < d.size(); ++i) {
            p.d_t.col(i) = d.d_t.col(perm[i]);
            p.d_r.col(i) = d.d_r.col(perm[i]);
        }
        const auto [qc, qs] = beamspace_channels(r.comm, r.scene, std::nullopt, p, c);
        for (int i = 0; i < d.size(); ++i) {
            CHECK(std::abs(qc[i] - hc[perm[i]]) < 1e-15);
            CHECK(std::abs(qs[i] - hs[perm[i]]) < 1e-15);
        }
    }
}

TEST_CASE("KL correlation")
{
    RVec p(2), q(2);
    p << 0.5, 0.5;
    q << 0.25, 0.75;
    const double kl = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(kl_divergence(p, q) == doctest::Approx(kl).epsilon(1e-8));
    CHECK(cs_correlation(p, q) == doctest::Approx(1.0 / kl).epsilon(1e-8));
    CHECK(cs_correlation(p, q) == doctest::Approx(6.952).epsilon(1e-3));
    CHECK(kl_divergence(q, p) ==
          doctest::Approx(0.25 * std::log(0.5) + 0.75 * std::log(1.5)).epsilon(1e-8));
    CHECK(kl_divergence(q, p) == doctest::Approx(0.13081).epsilon(1e-4));
    CHECK(cs_correlation(q, p) != doctest::Approx(cs_correlation(p, q)));
    CHECK(cs_correlation(p, p) == doctest::Approx(1.0 / KlSmoothing::kFloor));
    CHECK_THROWS(cs_correlation(p, RVec::Constant(3, 1.0 / 3)));

    Rng g(10);
    for (int i = 0; i < 200; ++i) {
        const RVec a = random_simplex(g, 16);
        const RVec b = random_simplex(g, 16);
        CHECK(kl_divergence(a, b) >= 0.0);
        CHECK(std::abs(kl_divergence(a, a)) < 1e-8);
        CHECK(std::isfinite(cs_correlation(a, b)));
        CHECK(cs_correlation(a, b) > 0.0);
    }
    // zero bins in q stay finite
    RVec z(2);
    z << 1.0, 0.0;
    CHECK(std::isfinite(kl_divergence(p, z)));
}

TEST_CASE("incremental correlation matches full projection")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const BeamspaceDictionary d = BeamspaceDictionary::build(c);
    const ChannelRealization r = sample_realization(21, c, 0.2);
    CorrelationEvaluator ev(r, d, c);
    Rng g(4);
    std::uniform_int_distribution<int> lvl(0, c.ttd_levels() - 1), sub(0, c.q_t() - 1);
    for (int i = 0; i < 30; ++i) {
        const int q = sub(g);
        const double t = lvl(g) * ttd_step(c);
        TtdGrid probe = ev.delays();
        probe[q] = t;
        const auto [hc, hs] = beamspace_channels(r.comm, r.scene, probe, d, c);
        CHECK(rel_err(ev.correlation_with(q, t), cs_correlation(hc, hs)) < 1e-10);
        ev.commit(q, t);
        CHECK(rel_err(ev.correlation(), cs_correlation(hc, hs)) < 1e-10);
    }
}

TEST_CASE("evaluate bundles the three metrics")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const ChannelRealization r = sample_realization(31, c, 0.1);
    Rng g(5);
    const PrecoderState s = random_state(c, g);
    const PerformancePoint p = evaluate(r, s, c);
    const PerformancePoint q = evaluate(r, s, c);
    CHECK(p.rate == q.rate);
    CHECK(p.crb == q.crb);
    CHECK(p.correlation == q.correlation);
    CHECK(p.rate == rate(r.comm, s, c));
    CHECK(p.crb == crb(r.scene, s, c));
    const auto [hc, hs] =
        beamspace_channels(r.comm, r.scene, s.ttd, BeamspaceDictionary::build(c), c);
    CHECK(p.correlation == cs_correlation(hc, hs));
    CHECK(p.rate > 0.0);
    CHECK(p.crb > 0.0);
}
