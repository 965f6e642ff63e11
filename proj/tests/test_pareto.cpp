#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "isac/pareto.hpp"
#include "support.hpp"

using namespace isac;

namespace {

FrontierPoint pt(double rate, double crb)
{
    FrontierPoint p;
    p.rate = rate;
    p.crb = crb;
    return p;
}

// Shoelace area of the polygon (0,0) -> pts -> (1,1) -> back along the chord.
double polygon_area(std::vector<std::pair<double, double>> pts)
{
    pts.insert(pts.begin(), {0.0, 0.0});
    pts.push_back({1.0, 1.0});
    double a = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto& [x1, y1] = pts[i];
        const auto& [x2, y2] = pts[(i + 1) % pts.size()];
        a += x1 * y2 - x2 * y1;
    }
    return std::abs(a) / 2;
}

const Endpoints kUnit{0.0, 0.0, 1.0, 1.0};

} // namespace

TEST_CASE("dominance filter")
{
    const FrontierPoint a = pt(2, 1), b = pt(1, 2), c = pt(3, 3);
    CHECK(dominates(a, b));
    CHECK_FALSE(dominates(b, a));
    CHECK_FALSE(dominates(a, a));
    CHECK_FALSE(dominates(a, c));

    const auto one = non_dominated({a});
    CHECK(one.size() == 1u);

    const auto f = non_dominated({c, a, pt(a.rate - 1, a.crb + 1), a});
    REQUIRE(f.size() == 2u);
    CHECK(f[0].rate == 2);
    CHECK(f[1].rate == 3);

    Rng g(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
        std::vector<FrontierPoint> pts;
        for (int i = 0; i < 20; ++i) {
            pts.push_back(pt(u(g), u(g)));
        }
        const auto once = non_dominated(pts);
        const auto twice = non_dominated(once);
        REQUIRE(once.size() == twice.size());
        for (size_t i = 0; i < once.size(); ++i) {
            CHECK(once[i].rate == twice[i].rate);
            CHECK(once[i].crb == twice[i].crb);
            for (const FrontierPoint& p : pts) {
                CHECK_FALSE(dominates(p, once[i]));
            }
            if (i > 0) {
                CHECK(once[i].rate > once[i - 1].rate);
                CHECK(once[i].crb > once[i - 1].crb);
            }
        }
    }
}

TEST_CASE("dual-functional gain")
{
    SUBCASE("chord gives zero")
    {
        std::vector<FrontierPoint> b;
        for (int i = 0; i <= 10; ++i) {
            b.push_back(pt(0.1 * i, 0.1 * i));
        }
        CHECK(dual_gain(b, kUnit) == 0.0);
        CHECK(dual_gain({}, kUnit) == 0.0);
    }
    SUBCASE("worse than orthogonal clamps to zero")
    {
        CHECK(dual_gain({pt(0.3, 0.9)}, kUnit) == 0.0);
    }
    SUBCASE("corner approaches one")
    {
        const double r = dual_gain({pt(1.0, 0.0)}, kUnit);
        CHECK(r < 1.0);
        CHECK(r > 1.0 - 1e-12);
        // outside the rectangle is clipped
        CHECK(dual_gain({pt(5.0, -3.0)}, kUnit) == r);
    }
    SUBCASE("triangle against polygon area")
    {
        CHECK(std::abs(dual_gain({pt(0.75, 0.25)}, kUnit) - 0.5) < 1e-9);
        Rng g(2);
        std::uniform_real_distribution<double> u(0, 1);
        for (int t = 0; t < 100; ++t) {
            const double x = u(g), y = u(g) * x;
            const Endpoints e{2.0, 0.01, 7.5, 0.09};
            const FrontierPoint p = pt(e.r_sen + x * (e.r_max - e.r_sen),
                                       e.crb_min + y * (e.crb_com - e.crb_min));
            CHECK(std::abs(dual_gain({p}, e) - polygon_area({{x, y}}) / 0.5) < 1e-9);
        }
    }
    SUBCASE("convex curve against polygon area")
    {
        for (double k : {1.5, 2.0, 4.0}) {
            std::vector<FrontierPoint> b;
            std::vector<std::pair<double, double>> poly;
            for (int i = 1; i < 12; ++i) {
                const double x = i / 12.0;
                b.push_back(pt(x, std::pow(x, k)));
                poly.push_back({x, std::pow(x, k)});
            }
            CHECK(std::abs(dual_gain(b, kUnit) - polygon_area(poly) / 0.5) < 1e-9);
        }
    }
    SUBCASE("adding a point never lowers the gain")
    {
        Rng g(3);
        std::uniform_real_distribution<double> u(-0.1, 1.1);
        for (int t = 0; t < 200; ++t) {
            std::vector<FrontierPoint> b;
            double prev = dual_gain(b, kUnit);
            for (int i = 0; i < 8; ++i) {
                b.push_back(pt(u(g), u(g)));
                const double now = dual_gain(non_dominated(b), kUnit);
                CHECK(now >= prev);
                CHECK(now >= 0.0);
                CHECK(now < 1.0);
                prev = now;
            }
        }
    }
    SUBCASE("affine rescaling")
    {
        Rng g(4);
        std::uniform_real_distribution<double> u(0, 1);
        for (int t = 0; t < 50; ++t) {
            std::vector<FrontierPoint> b, s;
            const double ar = 0.5 + 3 * u(g), br = 10 * u(g) - 5, ac = 1e-3 + u(g), bc = u(g);
            for (int i = 0; i < 6; ++i) {
                const FrontierPoint p = pt(u(g), u(g));
                b.push_back(p);
                s.push_back(pt(ar * p.rate + br, ac * p.crb + bc));
            }
            const Endpoints es{br, bc, ar + br, ac + bc};
            CHECK(std::abs(dual_gain(b, kUnit) - dual_gain(s, es)) < 1e-12);
        }
    }
    SUBCASE("degenerate rectangle")
    {
        CHECK_THROWS_AS(dual_gain({}, Endpoints{1, 1, 1, 2}), std::invalid_argument);
        CHECK_THROWS_AS(dual_gain({}, Endpoints{1, 1, 2, 1}), std::invalid_argument);
    }
}

TEST_CASE("trade-off grid")
{
    const TradeoffGrid g = TradeoffGrid::standard(7.0);
    REQUIRE(g.etas.size() == 9u);
    REQUIRE(g.gammas.size() == 8u);
    CHECK(g.etas.front() == doctest::Approx(1e-2));
    CHECK(g.etas.back() == doctest::Approx(1e2));
    CHECK(g.gammas.front() == 0.0);
    CHECK(g.gammas.back() == doctest::Approx(7.0));
}

TEST_CASE("boundary tracing")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const ChannelRealization r = sample_realization(5, c, 0.1);
    const OptimizerConfig base;
    for (const std::string name : {"sa-opt", "cbs", "no-ttd"}) {
        INFO(name);
        const TradeoffScheme s = bind_scheme(name, r, c, base);
        const BoundaryTrace one = trace_boundary(r, s, TradeoffGrid{{1.0}, {0.0}}, base, c);
        CHECK(one.all.size() == 1u);
        CHECK(one.frontier.size() == 1u);

        // bound scheme agrees with the registry
        OptimizerConfig o = base;
        o.eta = 0.1;
        const PerformancePoint direct = evaluate(r, scheme_by_name(name)(r, c, o), c);
        const PerformancePoint bound = evaluate(r, s(o), c);
        CHECK(direct.rate == doctest::Approx(bound.rate).epsilon(1e-12));
        CHECK(direct.crb == doctest::Approx(bound.crb).epsilon(1e-12));

        const double gmax = max_feasible_gamma(r, s, base, c, 8);
        CHECK(gmax >= 0.0);
        CHECK(gmax <= gamma_upper_bound(r, c));
        o = base;
        o.gamma = gmax;
        CHECK_NOTHROW(s(o));

        TradeoffGrid grid{{0.1, 1.0, 10.0}, {0.0, 0.5 * gmax, gmax, 10 * gamma_upper_bound(r, c)}};
        const BoundaryTrace tr = trace_boundary(r, s, grid, base, c);
        size_t feasible = 0;
        for (double eta : grid.etas) {
            for (double gamma : grid.gammas) {
                o.eta = eta;
                o.gamma = gamma;
                try {
                    evaluate(r, s(o), c);
                    ++feasible;
                } catch (const Infeasible&) {
                } catch (const SingularFisher&) {
                }
            }
        }
        CHECK(feasible >= 6u);
        CHECK(tr.all.size() == feasible); // the last gamma is never feasible
        CHECK_FALSE(tr.frontier.empty());
        for (const FrontierPoint& p : tr.frontier) {
            CHECK_FALSE(p.dominated);
            for (const FrontierPoint& q : tr.all) {
                CHECK_FALSE(dominates(q, p));
            }
        }
        CHECK_THROWS_AS(trace_boundary(r, s, TradeoffGrid{{1.0}, {1e9}}, base, c), Infeasible);
    }
}

TEST_CASE("dedicated endpoints")
{
    const SystemConfig c = SystemConfig::desk_profile();
    const ChannelRealization r = sample_realization(6, c, 0.1);
    const Endpoints e = dedicated_endpoints(r, OptimizerConfig{}, c);
    const PerformancePoint com = evaluate(r, com_dedicated(r, c, OptimizerConfig{}), c);
    const PerformancePoint sen = evaluate(r, sensing_dedicated(r, c, OptimizerConfig{}), c);
    CHECK(e.r_max == com.rate);
    CHECK(e.crb_com == com.crb);
    CHECK(e.r_sen == sen.rate);
    CHECK(e.crb_min == sen.crb);
}
