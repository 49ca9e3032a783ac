#include <catch2/catch_amalgamated.hpp>

#include "bellman_sharp/params.hpp"
#include "bellman_sharp/point.hpp"
#include "bellman_sharp/rng.hpp"

using namespace bellman_sharp;

TEST_CASE("params: derived constants") {
    const Params q = Params::make(3.0, 0.5);
    CHECK(q.p_star_minus_1 == 2.0);
    CHECK(q.c_sharp == Catch::Approx(4.25 * std::sqrt(4.25)).epsilon(1e-14));
    CHECK(q.gamma == Catch::Approx((1.0 - 0.25) / (1.0 + 0.25)).epsilon(1e-15));

    const Params dual = Params::make(1.5, 0.25);
    CHECK(dual.p_star_minus_1 == 2.0);  // 1/(p-1)

    CHECK(Params::make(2.0, 0.0).p_star_minus_1 == 1.0);
    CHECK(Params::make(3.0, 0.0).alpha_glue == Catch::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("params: validity window") {
    CHECK_THROWS_AS(Params::make(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(Params::make(0.5, 0.0), DomainError);
    CHECK_THROWS_AS(Params::make(1.5, 0.6), DomainError);
    CHECK_NOTHROW(Params::make(1.5, 0.5));
    CHECK_NOTHROW(Params::make(2.0, 100.0));
    CHECK_NOTHROW(Params::make(6.0, 2.0));
}

TEST_CASE("to_y / to_x: examples and round trip") {
    const Params q = Params::make(2.0, 0.0);
    const PointY y = to_y({1, 3, 9}, q);
    CHECK(y.y1 == 2.0);
    CHECK(y.y2 == 1.0);
    CHECK(y.y3 == 9.0);

    const PointY fixed = to_y({0, 0, 1}, q);
    CHECK(fixed.y1 == 0.0);
    CHECK(fixed.y2 == 0.0);
    CHECK(fixed.y3 == 1.0);

    const PointY m = to_y({1, -1, 1}, q);
    CHECK(m.y1 == 0.0);
    CHECK(m.y2 == -1.0);
    CHECK(m.y3 == 1.0);

    CHECK_THROWS_AS(to_y({2, 0, 1}, Params::make(3.0, 0.0)), DomainError);
}

TEST_CASE("to_x . to_y is the identity on random points") {
    const Params q = Params::make(2.5, 0.5);
    Rng rng(42);
    double worst = 0.0;
    for (long i = 0; i < 1000000; ++i) {
        const double x1 = rng.uniform(-3.0, 3.0);
        const double x2 = rng.uniform(-3.0, 3.0);
        const double x3 = pow_pos(std::fabs(x1), q.p) * (1.0 + rng.uniform(0.0, 5.0));
        const PointX back = to_x(to_y({x1, x2, x3}, q), q);
        worst = std::max({worst, std::fabs(back.x1 - x1), std::fabs(back.x2 - x2),
                          std::fabs(back.x3 - x3)});
    }
    CHECK(worst <= 1e-15);
}

TEST_CASE("canonicalize: examples") {
    const Params q = Params::make(3.0, 0.0);
    const Canonical a = canonicalize({-1, 2, 8}, q);
    CHECK(a.scale == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(a.x.x1 == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(a.x.x2 == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(a.x.x3 == Catch::Approx(1.0).epsilon(1e-15));

    const Canonical o = canonicalize({0, 0, 0}, q);
    CHECK(o.scale == 1.0);
    CHECK(o.x.x1 == 0.0);
    CHECK(o.x.x3 == 0.0);

    const Canonical b = canonicalize({1, -4, 64}, q);
    CHECK(b.scale == Catch::Approx(4.0).epsilon(1e-15));
    CHECK(b.x.x1 == Catch::Approx(0.25).epsilon(1e-15));
    CHECK(b.x.x2 == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(b.x.x3 == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("canonicalize: scale relation on random points") {
    const Params q = Params::make(1.7, 0.3);
    Rng rng(7);
    for (int i = 0; i < 20000; ++i) {
        const double x1 = rng.uniform(-10.0, 10.0);
        const double x3 = pow_pos(std::fabs(x1), q.p) * (1.0 + rng.uniform(0.0, 9.0)) + 1e-12;
        const PointX x{x1, rng.uniform(-10.0, 10.0), x3};
        const Canonical c = canonicalize(x, q);
        CHECK(pow_pos(c.scale, q.p) * c.x.x3 == Catch::Approx(x.x3).epsilon(1e-12));
        CHECK(std::max({c.x.x1, c.x.x2, pow_pos(c.x.x3, 1.0 / q.p)}) ==
              Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("classify_region: examples and precedence") {
    const Params q = Params::make(3.0, 0.0);
    CHECK(classify_region({1, 4, 2}, q) == Region::Implicit);
    CHECK(classify_region({1, 0, 2}, q) == Region::Explicit);
    CHECK(classify_region({1, 2, 1}, q) == Region::Boundary);  // beats GluingLine
    CHECK(classify_region({1, 2, 5}, q) == Region::GluingLine);
    CHECK(classify_region({0, 0, 0}, q) == Region::Origin);
    CHECK(classify_region({0, 0, 1}, q) == Region::GluingLine);

    const Params d = Params::make(1.5, 0.25);
    CHECK(classify_region({1, 1, 2}, d) == Region::Implicit);   // x2 < x1/(p-1) = 2
    CHECK(classify_region({1, 3, 2}, d) == Region::Explicit);   // x2 > 2
    CHECK(classify_region({1, 2, 2}, d) == Region::GluingLine);

    CHECK(classify_region({1, 5, 2}, Params::make(2.0, 0.5)) == Region::Explicit);
}

TEST_CASE("classify_region: symmetric in sign flips") {
    const Params q = Params::make(2.5, 1.0);
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        const double x1 = rng.uniform(0.0, 2.0);
        const double x2 = rng.uniform(0.0, 2.0);
        const double x3 = pow_pos(x1, q.p) * (1.0 + rng.uniform(0.0, 4.0)) + 1e-9;
        const Region r = classify_region({x1, x2, x3}, q);
        CHECK(classify_region({-x1, x2, x3}, q) == r);
        CHECK(classify_region({x1, -x2, x3}, q) == r);
        CHECK(classify_region({-x1, -x2, x3}, q) == r);
    }
}
