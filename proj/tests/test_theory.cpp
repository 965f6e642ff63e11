#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "isac/theory.hpp"
#include "support.hpp"

using namespace isac;
using testing::rel_err;

namespace {

CMat random_psd(Rng& g, int n, int rank)
{
    CMat a(n, rank);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < rank; ++j) {
            a(i, j) = complex_normal(g, 1.0);
        }
    }
    return a * a.adjoint();
}

SystemConfig one_target()
{
    SystemConfig c = SystemConfig::desk_profile();
    c.num_targets = 1;
    return c;
}

// Moves target k to the given angles and rebuilds the responses.
void place(ChannelRealization& r, int k, double theta, double phi, const SystemConfig& c)
{
    r.scene.targets[k].theta = theta;
    r.scene.targets[k].phi = phi;
    r.scene.materialize(c);
}

} // namespace

TEST_CASE("basis columns")
{
    const SystemConfig c = one_target();
    const ChannelRealization r = sample_realization(3, c, 0.2);
    for (int m = 1; m <= c.num_subcarriers; ++m) {
        const CMat u = basis(r, m, c);
        REQUIRE(u.cols() == 4);
        CHECK(u.rows() == c.n_t());
        const double f = subcarrier_frequency(c, m);
        const Target& t = r.scene.targets[0];
        const SteeringDerivatives d = steering_derivatives(t.theta, t.phi, f, c);
        CHECK((u.col(0) - steering_vector(t.theta, t.phi, f, c)).norm() < 1e-12);
        CHECK((u.col(1) - d.d_theta).norm() < 1e-12);
        CHECK((u.col(2) - d.d_phi).norm() < 1e-12);
        CHECK((u.col(3) - steering_vector(r.comm.theta, r.comm.phi, f, c)).norm() < 1e-12);
    }
    const ChannelRealization r2 = sample_realization(3, SystemConfig::desk_profile(), 0.2);
    CHECK(basis(r2, 1, SystemConfig::desk_profile()).cols() == 7);
}

TEST_CASE("Xi matrices")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const BeamspaceDictionary d = BeamspaceDictionary::build(c);
    SUBCASE("Hermitian, PSD")
    {
        for (int s = 0; s < 20; ++s) {
            const ChannelRealization r = sample_realization(s, c, 0.1);
            const XiPair x = xi_matrices(r, d, 1 + s % c.num_subcarriers, c);
            CHECK(x.xi_c.rows() == 7);
            CHECK((x.xi_c - x.xi_c.adjoint()).norm() <= 1e-12 * x.xi_c.norm());
            CHECK((x.xi_s - x.xi_s.adjoint()).norm() <= 1e-12 * x.xi_s.norm());
            Eigen::SelfAdjointEigenSolver<CMat> es(x.xi_s);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
        }
    }
    SUBCASE("silent targets")
    {
        ChannelRealization r = sample_realization(4, c, 0.1);
        for (Target& t : r.scene.targets) {
            std::fill(t.alpha.begin(), t.alpha.end(), cd(0.0));
        }
        r.scene.materialize(c);
        CHECK(xi_matrices(r, d, 2, c).xi_s.norm() == 0.0);
    }
    SUBCASE("coincident geometry puts the user entry on top")
    {
        const SystemConfig k1 = one_target();
        for (int s = 0; s < 10; ++s) {
            ChannelRealization r = sample_realization(30 + s, k1, 0.0);
            for (cd& a : r.scene.targets[0].alpha) {
                a = 1.0;
            }
            place(r, 0, r.comm.theta, r.comm.phi, k1);
            const XiPair x = xi_matrices(r, BeamspaceDictionary::build(k1), 1, k1);
            // derivative columns are unnormalized, compare on the steering entries
            const int last = 3;
            for (int a : {0, 3}) {
                for (int b : {0, 3}) {
                    if (a != b) {
                        CHECK(std::abs(x.xi_c(last, last)) >= std::abs(x.xi_c(a, b)) * (1 - 1e-9));
                        CHECK(std::abs(x.xi_s(last, last)) >= std::abs(x.xi_s(a, b)) * (1 - 1e-9));
                    }
                }
            }
        }
    }
}

TEST_CASE("optimal Lambda")
{
    Rng g(5);
    for (int t = 0; t < 20; ++t) {
        const CMat xc = random_psd(g, 7, 1);
        const CMat xs = random_psd(g, 7, 3);
        const double pt = 0.5 + t;
        for (double gamma : {0.0, 0.1, 1.0, 10.0}) {
            const CMat l = optimal_lambda(xc, xs, gamma, pt);
            CHECK(l.norm() == doctest::Approx(std::sqrt(pt)).epsilon(1e-12));
            Eigen::SelfAdjointEigenSolver<CMat> es(l);
            CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
        }
        CHECK((optimal_lambda(xc, xs, 0.0, pt) / std::sqrt(pt) - xc / xc.norm()).norm() < 1e-12);
        CHECK((optimal_lambda(xc, xs, 1e8, pt) / std::sqrt(pt) - xs / xs.norm()).norm() < 1e-6);
    }
    // an indefinite combination is floored then renormalized
    CMat ind = CMat::Zero(2, 2);
    ind(0, 0) = 1.0;
    ind(1, 1) = -1.0;
    const CMat l = optimal_lambda(ind, CMat::Zero(2, 2), 0.0, 4.0);
    CHECK(std::abs(l(0, 0) - 2.0) < 1e-12);
    CHECK(std::abs(l(1, 1)) < 1e-12);
    CHECK_THROWS_AS(optimal_lambda(CMat::Zero(3, 3), CMat::Zero(3, 3), 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("closed-form Pareto pair")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const BeamspaceDictionary d = BeamspaceDictionary::build(c);
    SUBCASE("no sensing information")
    {
        Rng g(1);
        const XiPair x{random_psd(g, 7, 1), CMat::Zero(7, 7)};
        const ClosedForm cf = pareto_closed_form({x}, 0.0, 10.0, 1.0);
        CHECK_FALSE(cf.valid);
        CHECK(std::isinf(cf.crb_star));
        CHECK(cf.r_star >= 0.0);
    }
    SUBCASE("power scaling and two-path equality")
    {
        for (int s = 0; s < 10; ++s) {
            const ChannelRealization r = sample_realization(60 + s, c, 0.1);
            std::vector<XiPair> xi;
            for (int m = 1; m <= c.num_subcarriers; ++m) {
                xi.push_back(xi_matrices(r, d, m, c));
            }
            for (double gamma : {0.1, 1.0}) {
                const ClosedForm a = pareto_closed_form(xi, gamma, c.p_total, c.sigma_c2);
                const ClosedForm b = pareto_closed_form(xi, gamma, 4 * c.p_total, c.sigma_c2);
                if (!a.valid) {
                    continue;
                }
                CHECK(b.r_star > a.r_star);
                CHECK(rel_err(b.crb_star, a.crb_star / 2) < 1e-12);

                std::vector<CMat> lambda;
                for (const XiPair& x : xi) {
                    lambda.push_back(optimal_lambda(x.xi_c, x.xi_s, gamma, c.p_total));
                }
                const ClosedForm e = pareto_from_lambda(xi, lambda, c.sigma_c2);
                CHECK(rel_err(e.r_star, a.r_star) < 1e-9);
                CHECK(rel_err(e.crb_star, a.crb_star) < 1e-9);
                CHECK(e.valid == a.valid);
            }
        }
    }
}

TEST_CASE("peak similarity")
{
    const SystemConfig k1 = one_target();
    const BeamspaceDictionary d = BeamspaceDictionary::build(k1);
    SUBCASE("coincident")
    {
        for (int s = 0; s < 10; ++s) {
            ChannelRealization r = sample_realization(s, k1, 0.0);
            place(r, 0, r.comm.theta, r.comm.phi, k1);
            CHECK(peak_similarity(beamspace_profile(r.comm, r.scene, std::nullopt, d, k1)) ==
                  k1.num_subcarriers);
        }
    }
    SUBCASE("well separated")
    {
        // spatial frequencies 1.2 apart, beamwidth about 2/4
        ChannelRealization r = sample_realization(1, k1, 0.0);
        r.comm.theta = kPi / 2;
        r.comm.phi = std::asin(-0.6);
        r.comm.materialize(k1);
        place(r, 0, kPi / 2, std::asin(0.6), k1);
        const ChannelRealization& fresh = r;
        CHECK(peak_similarity(beamspace_profile(fresh.comm, fresh.scene, std::nullopt, d, k1)) == 0);
    }
    SUBCASE("bounds and permutation")
    {
        const SystemConfig c = SystemConfig::desk_profile();
        const BeamspaceDictionary dd = BeamspaceDictionary::build(c);
        for (int s = 0; s < 20; ++s) {
            ChannelRealization r = sample_realization(100 + s, c, 0.05);
            const int a = peak_similarity(beamspace_profile(r.comm, r.scene, std::nullopt, dd, c));
            CHECK(a >= 0);
            CHECK(a <= c.num_targets * c.num_subcarriers);
            std::swap(r.scene.targets[0], r.scene.targets[1]);
            r.scene.materialize(c);
            CHECK(peak_similarity(beamspace_profile(r.comm, r.scene, std::nullopt, dd, c)) == a);
        }
    }
}

TEST_CASE("sparse Xi approximation")
{
    CVec sigma(2);
    sigma << cd(0.5, 0.1), cd(-0.3, 0.2);
    SUBCASE("no coincidences: only the user term")
    {
        const XiPair x = xi_approximation({false, false}, sigma);
        CHECK(x.xi_c.rows() == 7);
        CHECK(x.xi_c(6, 6) == 1.0);
        CHECK(x.xi_c.cwiseAbs().sum() == 1.0);
        CHECK(x.xi_s(6, 6) == 0.0);
        CHECK(std::abs(x.xi_s(0, 1) - sigma.squaredNorm()) < 1e-15);
    }
    SUBCASE("close to the exact diagonal at coincident geometry")
    {
        const SystemConfig k1 = one_target();
        const BeamspaceDictionary d = BeamspaceDictionary::build(k1);
        for (int s = 0; s < 10; ++s) {
            ChannelRealization r = sample_realization(200 + s, k1, 0.0);
            place(r, 0, r.comm.theta, r.comm.phi, k1);
            const BeamspaceProfile prof = beamspace_profile(r.comm, r.scene, std::nullopt, d, k1);
            REQUIRE(peak_similarity(prof) == k1.num_subcarriers);
            for (int m = 1; m <= k1.num_subcarriers; ++m) {
                const XiPair ex = xi_matrices(r, d, m, k1);
                CVec sg(1);
                sg[0] = r.scene.targets[0].alpha[m - 1];
                const XiPair ap = xi_approximation({true}, sg);
                // exact entries carry the array gains |a^H h|^2 and ||a||^4
                const double cn = std::abs(ex.xi_c(3, 3));
                const double sn = std::pow(basis(r, m, k1).col(0).squaredNorm(), 2);
                for (int i : {0, 3}) {
                    CHECK(rel_err(std::abs(ex.xi_c(i, i)) / cn, std::abs(ap.xi_c(i, i))) < 0.2);
                    CHECK(rel_err(std::abs(ex.xi_s(i, i)) / sn, std::abs(ap.xi_s(i, i))) < 0.2);
                }
            }
        }
    }
}

TEST_CASE("Spearman")
{
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3}, {1, 1, 1}) == 0.0);
    CHECK(spearman({1}, {1}) == 0.0);
    // ties take average ranks: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4)
    CHECK(spearman({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(0.9486832980505138));
    // rank-based: monotone transforms do not matter
    CHECK(spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
}

TEST_CASE("Proposition 1 report")
{
    const SystemConfig k1 = one_target();
    const Prop1Report one = verify_proposition1(k1, 5, {0.0}, 0.1, 1);
    CHECK(one.degenerate);
    CHECK_FALSE(one.pass);
    CHECK(one.mean_correlation.size() == 1u);

    const std::vector<double> offsets{0.0, 0.05, 0.1, 0.2, 0.4};
    // 50 trials leave the 0 -> 0.05 step inside the Monte-Carlo noise
    const Prop1Report rep = verify_proposition1(k1, 200, offsets, 0.1, 1);
    CHECK_FALSE(rep.degenerate);
    for (size_t i = 1; i < offsets.size(); ++i) {
        CHECK(rep.mean_correlation[i] < rep.mean_correlation[i - 1]);
    }
    CHECK(rep.spearman_offset_similarity < 0.0);
    CHECK_THROWS(verify_proposition1(k1, 0, offsets, 0.1, 1));
}
