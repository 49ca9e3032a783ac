#include <catch2/catch_amalgamated.hpp>

#include "bellman_sharp/bellman.hpp"
#include "bellman_sharp/concavity.hpp"
#include "bellman_sharp/rng.hpp"
#include "oracles.hpp"

using namespace bellman_sharp;

namespace {

PointX random_domain_point(const Params& q, Rng& rng, double span = 2.0) {
    const double x1 = rng.uniform(-span, span);
    const double x2 = rng.uniform(-span, span);
    const double x3 = pow_pos(std::fabs(x1), q.p) * (1.0 + rng.uniform(0.0, 6.0)) +
                      rng.uniform(0.0, 1.0);
    return {x1, x2, x3};
}

} // namespace

TEST_CASE("g_fn: closed-form values and bracket roots") {
    const Params q3 = Params::make(3.0, 0.0);
    CHECK(g_fn(3, 1, q3) == Catch::Approx(16.0).epsilon(1e-14));
    for (double p : {1.3, 1.7, 2.5, 4.0, 6.0}) {
        const Params q = Params::make(p, 0.0);
        CHECK(g_fn(p - 1.0, 1.0, q) == Catch::Approx(0.0).margin(1e-12));
        CHECK(g_fn(1.0, 1.0 / (p - 1.0), q) == Catch::Approx(0.0).margin(1e-12));
    }
    CHECK_THROWS_AS(g_fn(-2.0, 1.0, q3), DomainError);
}

TEST_CASE("bellman_p2: closed form") {
    CHECK(bellman_p2({0, 0, 1}, 0.5) == Catch::Approx(1.25).epsilon(1e-15));
    CHECK(bellman_p2({1, 1, 1}, 0.0) == Catch::Approx(1.0).epsilon(1e-15));
    // boundary point equals the Dirichlet datum
    const double v = bellman_p2({1, 2, 1}, 0.5);
    CHECK(v == Catch::Approx(4.25).epsilon(1e-15));
    CHECK(v == Catch::Approx(2.0 * 2.0 + 0.25 * 1.0).epsilon(1e-15));
}

TEST_CASE("explicit_value: direct formula") {
    const Params q = Params::make(3.0, 0.5);
    CHECK(explicit_value({1, 0, 1}, q).value == Catch::Approx(0.125).epsilon(1e-14));
    // gluing line: B = c_sharp * x3, with 4.25^1.5 checked via sqrt
    const double c = 4.25 * std::sqrt(4.25);
    CHECK(explicit_value({1, 2, 5}, q).value == Catch::Approx(c * 5.0).epsilon(1e-13));
    CHECK(explicit_value({1, 0, 2}, q).value == Catch::Approx(0.125 + c).epsilon(1e-13));
    CHECK_THROWS_AS(explicit_value({1, 4, 2}, q), RegionError);
}

TEST_CASE("explicit_value: two algebraic routes agree") {
    // x-form (x2^2 + tau^2 x1^2)^(p/2) + c (x3 - |x1|^p) versus the rotated
    // form (1+tau^2)^(p/2) (y1^2 + 2 gamma y1 y2 + y2^2)^(p/2) + c (y3 - (y1-y2)^p)
    Rng rng(3);
    for (double p : {1.5, 2.5, 4.0}) {
        const Params q = Params::make(p, p < 2 ? 0.5 : 1.3);
        for (int i = 0; i < 2000; ++i) {
            const double x1 = rng.uniform(0.0, 1.0);
            const double k = q.p_star_minus_1;
            const double x2 = x1 * k * rng.uniform(p < 2 ? 1.0 : 0.0, p < 2 ? 3.0 : 1.0);
            const double x3 = pow_pos(x1, p) * (1.0 + rng.uniform(0.0, 5.0)) + 1e-9;
            const PointX x{x1, x2, x3};
            if (classify_region(x, q) == Region::Implicit) continue;
            const double y1 = (x2 + x1) / 2.0, y2 = (x2 - x1) / 2.0;
            const double rotated =
                std::pow(1.0 + q.tau * q.tau, p / 2.0) *
                    std::pow(y1 * y1 + 2.0 * q.gamma * y1 * y2 + y2 * y2, p / 2.0) +
                q.c_sharp * (x3 - pow_pos(std::fabs(y1 - y2), p));
            CHECK(explicit_value(x, q).value ==
                  Catch::Approx(rotated).epsilon(1e-12).margin(1e-12));
        }
    }
}

TEST_CASE("implicit_solve: frozen oracle values") {
    const Params q3 = Params::make(3.0, 0.0);

    // boundary point: b = x2 exactly
    const BellmanValue bd = implicit_solve({1, 4, 1}, q3);
    CHECK(bd.b == Catch::Approx(4.0).epsilon(1e-12));
    CHECK(bd.value == Catch::Approx(64.0).epsilon(1e-12));

    // dense-scan oracle values, frozen
    const BellmanValue v1 = implicit_solve({1, 4, 2}, q3);
    CHECK(v1.b == Catch::Approx(4.1981978481845132).epsilon(1e-10));
    CHECK(v1.value == Catch::Approx(73.992671041736202).epsilon(1e-10));

    const BellmanValue v2 = implicit_solve({0, 1, 1}, q3);
    CHECK(v2.b == Catch::Approx(2.1038034027355366).epsilon(1e-10));
    CHECK(v2.value == Catch::Approx(9.3114102082066115).epsilon(1e-10));

    const Params q15 = Params::make(1.5, 0.5);
    const BellmanValue v3 = implicit_solve({1, 1, 2}, q15);
    CHECK(v3.b == Catch::Approx(2.472971934966103).epsilon(1e-10));
    CHECK(v3.value == Catch::Approx(4.1856514327161252).epsilon(1e-10));
}

TEST_CASE("implicit_solve: agrees with the scan oracle on random sector points") {
    Rng rng(5);
    for (double p : {2.5, 3.0, 4.0}) {
        const Params q = Params::make(p, 0.7);
        for (int i = 0; i < 300; ++i) {
            const double x1 = rng.uniform(0.0, 1.0);
            const double x2 = (p - 1.0) * x1 + rng.uniform(0.01, 2.0);
            const double x3 = pow_pos(x1, p) * (1.0 + rng.uniform(0.001, 5.0)) +
                              rng.uniform(0.0, 1.0);
            const BellmanValue v = implicit_solve({x1, x2, x3}, q);
            const double ob = oracles::implicit_b(x1, x2, x3, p);
            CHECK(v.b == Catch::Approx(ob).epsilon(1e-8));
            CHECK(v.beta >= p - 1.0 - 1e-12);  // implicit-sector range of beta
        }
    }
    for (double p : {1.3, 1.5, 1.8}) {
        const Params q = Params::make(p, 0.25);
        for (int i = 0; i < 300; ++i) {
            const double x1 = rng.uniform(0.05, 1.0);
            const double x2 = rng.uniform(0.0, x1 / (p - 1.0) * 0.999);
            const double x3 = pow_pos(x1, p) * (1.0 + rng.uniform(0.001, 5.0));
            const BellmanValue v = implicit_solve({x1, x2, x3}, q);
            const double ob = oracles::implicit_b(x1, x2, x3, p);
            CHECK(v.b == Catch::Approx(ob).margin(1e-8).epsilon(1e-8));
            CHECK(v.beta >= -1e-15);
            CHECK(v.beta <= 1.0 / (p - 1.0) + 1e-12);
        }
    }
}

TEST_CASE("bellman_eval: pinned values") {
    // B(0,0,1) = ((p*-1)^2 + tau^2)^(p/2)
    for (double p : {1.3, 1.5, 1.8, 2.0, 2.5, 3.0, 4.0, 6.0}) {
        for (double tau : {0.0, 0.25, 0.5}) {
            const Params q = Params::make(p, tau);
            const double expect = std::pow(q.p_star_minus_1 * q.p_star_minus_1 + tau * tau,
                                           p / 2.0);
            CHECK(bellman_eval({0, 0, 1}, q).value == Catch::Approx(expect).epsilon(1e-13));
        }
    }
    CHECK(bellman_eval({0, 0, 1}, Params::make(3.0, 0.0)).value ==
          Catch::Approx(8.0).epsilon(1e-13));
    CHECK(bellman_eval({1, 2, 4}, Params::make(2.0, 0.3)).value ==
          Catch::Approx(7.36).epsilon(1e-13));
    const BellmanValue v = bellman_eval({1, 1, 2}, Params::make(1.5, 0.5));
    CHECK(v.value == Catch::Approx(4.1856514327161252).epsilon(1e-10));
    // x3 = 0 edge: B(0, x2, 0) = |x2|^p
    CHECK(bellman_eval({0, -2, 0}, Params::make(3.0, 0.5)).value ==
          Catch::Approx(8.0).epsilon(1e-12));
    // origin
    CHECK(bellman_eval({0, 0, 0}, Params::make(3.0, 0.5)).value == 0.0);
    // p within 1e-8 of 2 routes to the closed form (exact equality)
    const Params near2 = Params::make(2.0 + 5e-9, 0.7);
    CHECK(bellman_eval({1, 2, 4}, near2).value == 4.0 - 1.0 + (1.0 + 0.49) * 4.0);
}

TEST_CASE("bellman_eval: homogeneity and symmetry") {
    Rng rng(17);
    for (double p : {1.5, 2.7, 4.0}) {
        const Params q = Params::make(p, 0.4);
        for (int i = 0; i < 3000; ++i) {
            const PointX x = random_domain_point(q, rng);
            const double base = bellman_eval(x, q).value;
            for (double r : {1e-3, 1e3}) {
                const double scaled =
                    bellman_eval({r * x.x1, r * x.x2, pow_pos(r, p) * x.x3}, q).value;
                CHECK(scaled == Catch::Approx(pow_pos(r, p) * base).epsilon(1e-10));
            }
            CHECK(bellman_eval({-x.x1, x.x2, x.x3}, q).value == base);
            CHECK(bellman_eval({x.x1, -x.x2, x.x3}, q).value == base);
            CHECK(bellman_eval({-x.x1, -x.x2, x.x3}, q).value == base);
        }
    }
}

TEST_CASE("bellman_eval: Dirichlet boundary data") {
    Rng rng(23);
    for (double p : {1.4, 2.0, 3.5}) {
        const Params q = Params::make(p, 0.5);
        for (int i = 0; i < 5000; ++i) {
            const double x1 = rng.uniform(-2.0, 2.0);
            const double x2 = rng.uniform(-4.0, 4.0);
            const double x3 = pow_pos(std::fabs(x1), p);
            const double datum = std::pow(x2 * x2 + 0.25 * x1 * x1, p / 2.0);
            CHECK(bellman_eval({x1, x2, x3}, q).value ==
                  Catch::Approx(datum).epsilon(1e-10).margin(1e-300));
        }
    }
}

TEST_CASE("bellman_eval: gluing line value and C1 contact") {
    for (double p : {2.5, 3.0, 4.0, 1.5, 1.8}) {
        const Params q = Params::make(p, p < 2 ? 0.25 : 0.8);
        const double k = q.p_star_minus_1;
        for (double x3 : {1.0, 3.0}) {
            const double x1 = 0.6;
            // both branches at the line
            const double ev = explicit_value({x1, k * x1, x3}, q).value;
            const double iv = implicit_solve({x1, k * x1, x3}, q).value;
            CHECK(ev == Catch::Approx(q.c_sharp * x3).epsilon(1e-10));
            CHECK(iv == Catch::Approx(q.c_sharp * x3).epsilon(1e-10));
            // straddle the line: C1 gluing keeps the branch values close
            const double h = 1e-7;
            const double b_in = bellman_eval({x1, k * x1 + h, x3}, q).value;
            const double b_out = bellman_eval({x1, k * x1 - h, x3}, q).value;
            CHECK(std::fabs(b_in - b_out) <= 1e-5 * q.c_sharp * x3);
            // one-sided difference quotients agree to O(h)
            const double d_in = (bellman_eval({x1, k * x1 + 2 * h, x3}, q).value - b_in) / h;
            const double d_out = (b_out - bellman_eval({x1, k * x1 - 2 * h, x3}, q).value) / h;
            CHECK(std::fabs(d_in - d_out) <= 1e-3 * (1.0 + std::fabs(d_in)));
        }
    }
}

TEST_CASE("bellman_eval: sign law") {
    Rng rng(31);
    for (double p : {1.5, 2.5, 3.0}) {
        const Params q = Params::make(p, p < 2 ? 0.5 : 1.0);
        long checked = 0;
        for (int i = 0; i < 100000; ++i) {
            const PointX x = random_domain_point(q, rng);
            const double k = q.p_star_minus_1;
            const double gap = std::fabs(x.x2) - k * std::fabs(x.x1);
            if (std::fabs(gap) < 1e-6 || x.x3 <= 0.0) continue;
            const double diff = bellman_eval(x, q).value - q.c_sharp * x.x3;
            if (gap > 0.0)
                CHECK(diff > -1e-10 * (1.0 + std::fabs(diff)));
            else
                CHECK(diff < 1e-10 * (1.0 + std::fabs(diff)));
            ++checked;
        }
        CHECK(checked > 50000);
    }
}

TEST_CASE("bellman_eval: restrictive midpoint concavity") {
    Rng rng(37);
    for (double p : {1.5, 3.0}) {
        const Params q = Params::make(p, p < 2 ? 0.25 : 1.0);
        long done = 0;
        for (int i = 0; i < 20000 && done < 5000; ++i) {
            const PointX x = random_domain_point(q, rng);
            const double d1 = rng.uniform(-0.5, 0.5);
            const double d2 = rng.sign() * d1;
            const double d3 = rng.uniform(-0.5, 0.5);
            const double ap = rng.uniform(0.2, 0.8);
            const double am = 1.0 - ap;
            const PointX xp{x.x1 + am * d1, x.x2 + am * d2, x.x3 + am * d3};
            const PointX xm{x.x1 - ap * d1, x.x2 - ap * d2, x.x3 - ap * d3};
            if (!in_domain(xp, q) || !in_domain(xm, q)) continue;
            const double b = bellman_eval(x, q).value;
            const double split = ap * bellman_eval(xp, q).value + am * bellman_eval(xm, q).value;
            CHECK(b - split >= -1e-9 * (1.0 + b));
            ++done;
        }
        CHECK(done >= 2000);
    }
}

TEST_CASE("burkholder relation") {
    // tau = 0 is the identity
    const Params q0 = Params::make(3.0, 0.0);
    CHECK(burkholder_relation_check({1, 4, 2}, q0) == 0.0);

    const Params q1 = Params::make(3.0, 1.0);
    CHECK(burkholder_relation_check({0, 1, 1}, q1) <= 1e-9);
    const Params qh = Params::make(3.0, 0.5);
    CHECK(burkholder_relation_check({1, 4, 2}, qh) <= 1e-9);
    CHECK_THROWS_AS(burkholder_relation_check({1, 0.5, 2}, qh), RegionError);

    // p < 2: relation holds on the u-piece (implicit) sector
    const Params qd = Params::make(1.5, 0.5);
    CHECK(burkholder_relation_check({1, 1, 2}, qd) <= 1e-9);
    CHECK_THROWS_AS(burkholder_relation_check({1, 3, 2}, qd), RegionError);

    // p = 2: exact identity everywhere
    const Params q2 = Params::make(2.0, 0.7);
    CHECK(burkholder_relation_check({1, 5, 3}, q2) <= 1e-12);
}

TEST_CASE("characteristic_u: gluing foot, boundary foot, cross-solver") {
    const Params q = Params::make(3.0, 0.0);

    // on the gluing ray y2 = (p-2)/p y1 the foot is u = y1/3 and beta = p-1
    const PointY glue{1.0, 1.0 / 3.0, 4.0};
    const CharacteristicSolution cs = characteristic_u(glue, q);
    CHECK(cs.u == Catch::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(cs.beta == Catch::Approx(2.0).epsilon(1e-9));

    // Dirichlet boundary: the characteristic's foot is the point itself
    const double y1 = 1.0, y2 = 0.7;
    const PointY bd{y1, y2, std::pow(y1 - y2, 3.0)};
    CHECK(characteristic_u(bd, q).u == Catch::Approx(y2).epsilon(1e-9));

    // interior: M matches the implicit solve (x = (1,4,2))
    const CharacteristicSolution in = characteristic_u({2.5, 1.5, 2.0}, q);
    CHECK(in.M == Catch::Approx(73.992671041736202).epsilon(1e-9));
    CHECK(in.u >= -2.5);
    CHECK(in.u <= 2.5);
    CHECK(in.u == Catch::Approx((in.beta - 1.0) / (in.beta + 1.0) * 2.5).epsilon(1e-9));

    CHECK_THROWS_AS(characteristic_u({2.5, 1.5, 2.0}, Params::make(2.0, 0.0)), RegionError);
}

TEST_CASE("characteristic_u agrees with implicit_solve across sectors") {
    Rng rng(41);
    for (double p : {2.5, 3.0, 4.0, 1.3, 1.8}) {
        const Params q = Params::make(p, p < 2 ? 0.25 : 1.0);
        for (int i = 0; i < 200; ++i) {
            const PointY y = sample_implicit_sector(q, rng, i, 200, 1e-4);
            const PointX x = to_x(y, q);
            const double m_char = characteristic_u(y, q).M;
            const double m_root = bellman_eval(x, q).value;
            CHECK(m_char == Catch::Approx(m_root).epsilon(1e-9));
        }
    }
}

TEST_CASE("p < 2, tau != 0: the branch is convex in x3 on the beta < tau^2 sliver") {
    // Frozen scan-oracle values.  The unique root of the branch relation
    // gives a value convex in x3 at small |x2| near the Dirichlet boundary
    // (second difference ~ +10), so the concavity table genuinely stops at
    // beta = tau^2; any change to the solver must reproduce this, not hide it.
    const Params q = Params::make(1.5, 0.5);
    const double x1 = 0.99743364, x2 = 9.4e-6;
    const BellmanValue lo = bellman_eval({x1, x2, 0.9999}, q);
    const BellmanValue mid = bellman_eval({x1, x2, 1.0}, q);
    const BellmanValue hi = bellman_eval({x1, x2, 1.0001}, q);
    CHECK(lo.value == Catch::Approx(0.364411762969).epsilon(1e-10));
    CHECK(mid.value == Catch::Approx(0.364741034571).epsilon(1e-10));
    CHECK(hi.value == Catch::Approx(0.365070407643).epsilon(1e-10));
    CHECK(mid.beta < 0.25);  // inside the sliver
    const double d2 = (lo.value + hi.value - 2.0 * mid.value) / 1e-8;
    CHECK(d2 == Catch::Approx(10.147).epsilon(1e-3));
}

TEST_CASE("monge-ampere degeneracy of the implicit branch (finite differences)") {
    Rng rng(43);
    for (double p : {2.5, 3.0, 1.5}) {
        const Params q = Params::make(p, p < 2 ? 0.25 : 0.5);
        for (int i = 0; i < 60; ++i) {
            const PointY y = sample_implicit_sector_fd(q, rng, i, 60);
            const FdSecondDerivs fd = fd_second_derivs(y, q, 1e-4);
            const double scale = std::fabs(fd.m22 * fd.m33) + fd.m23 * fd.m23 + 1e-300;
            CHECK(std::fabs(fd.d2) <= 1e-4 * scale);
        }
    }
}
