#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bellman_sharp/errors.hpp"
#include "bellman_sharp/params.hpp"
#include "bellman_sharp/point.hpp"
#include "bellman_sharp/root_find.hpp"

namespace bellman_sharp {

/// G(z1, z2) = (z1 + z2)^(p-1) [z1 - (p-1) z2], defined on z1 + z2 >= 0.
/// Both implicit branches of the Bellman function are level relations of G.
inline double g_fn(double z1, double z2, const Params& q) {
    const double sum = z1 + z2;
    if (sum < 0.0) throw DomainError("g_fn: z1 + z2 < 0");
    return pow_pos(sum, q.p - 1.0) * (z1 - (q.p - 1.0) * z2);
}

inline double g_z1(double z1, double z2, const Params& q) {
    return q.p * pow_pos(z1 + z2, q.p - 2.0) * (z1 - (q.p - 2.0) * z2);
}

inline double g_z2(double z1, double z2, const Params& q) {
    return -q.p * (q.p - 1.0) * z2 * pow_pos(z1 + z2, q.p - 2.0);
}

inline double g_z1z2(double z1, double z2, const Params& q) {
    return -q.p * (q.p - 1.0) * (q.p - 2.0) * z2 * pow_pos(z1 + z2, q.p - 3.0);
}

/// Closed form at p = 2: B(x) = x2^2 - x1^2 + (1 + tau^2) x3.
inline double bellman_p2(const PointX& x, double tau) {
    Params q = Params::make(2.0, tau);
    require_in_domain(x, q);
    return x.x2 * x.x2 - x.x1 * x.x1 + (1.0 + tau * tau) * x.x3;
}

/// Value of B plus the solver metadata the cross-checks care about.
struct BellmanValue {
    double value = 0.0;
    double omega = 0.0;     // (B / x3)^(1/p); NaN when x3 == 0
    double beta = 0.0;      // sqrt(omega^2 - tau^2)
    double b = 0.0;         // beta * x3^(1/p)
    Region region = Region::Explicit;
    double residual = 0.0;  // root-equation residual (0 for closed forms)
    int iterations = 0;
};

namespace detail {

inline BellmanValue finish_value(double value, double s, Region reg, const Params& q,
                                 double residual = 0.0, int iterations = 0) {
    BellmanValue out;
    out.value = value;
    out.region = reg;
    out.residual = residual;
    out.iterations = iterations;
    if (s > 0.0) {
        out.omega = pow_pos(value / pow_pos(s, q.p), 1.0 / q.p);
        const double bb = out.omega * out.omega - q.tau * q.tau;
        out.beta = bb > 0.0 ? std::sqrt(bb) : 0.0;
        out.b = out.beta * s;
    } else {
        out.omega = std::numeric_limits<double>::quiet_NaN();
        out.beta = std::numeric_limits<double>::quiet_NaN();
        out.b = 0.0;
    }
    return out;
}

} // namespace detail

/// Explicit branch B = (x2^2 + tau^2 x1^2)^(p/2) + c_sharp (x3 - |x1|^p).
/// Valid on Explicit, GluingLine and Boundary; the implicit interior belongs
/// to the other branch.
inline BellmanValue explicit_value(const PointX& x_in, const Params& q) {
    const Region reg = classify_region(x_in, q);
    if (reg == Region::Implicit && !q.is_p2())
        throw RegionError("explicit_value called on implicit interior");
    const double x1 = std::fabs(x_in.x1), x2 = std::fabs(x_in.x2), x3 = x_in.x3;
    const double datum = std::pow(x2 * x2 + q.tau * q.tau * x1 * x1, q.p / 2.0);
    const double value = datum + q.c_sharp * (x3 - pow_pos(x1, q.p));
    BellmanValue out = detail::finish_value(value, pow_pos(x3, 1.0 / q.p), reg, q);
    if (reg == Region::Origin) out.region = Region::Origin;
    return out;
}

/// Implicit branch.  With s = x3^(1/p) and b = sqrt(B^(2/p) - tau^2 s^2):
///   p > 2:  (x2 + x1)^(p-1) (x2 - (p-1) x1) = (b + s)^(p-1) (b - (p-1) s),
///           unique b in [(p-1) s, inf); the right side is increasing there
///           (derivative p (b+s)^(p-2) (b - (p-2) s) > 0).
///   p < 2:  (x1 + x2)^(p-1) (x1 - (p-1) x2) = (s + b)^(p-1) (s - (p-1) b),
///           unique b in [0, s/(p-1)]; decreasing (-p(p-1) b (s+b)^(p-2)).
/// Both brackets get a small extension past the gluing value so that
/// consistency checks straddling the gluing line still resolve.
inline BellmanValue implicit_solve(const PointX& x_in, const Params& q) {
    const Region reg = classify_region(x_in, q);
    if (reg == Region::Explicit && !q.is_p2())
        throw RegionError("implicit_solve called on explicit interior");
    const double x1 = std::fabs(x_in.x1), x2 = std::fabs(x_in.x2), x3 = x_in.x3;
    const double p = q.p;
    const double s = pow_pos(x3, 1.0 / p);

    if (s == 0.0)  // forces x1 = 0; consistent with the relation at s = 0
        return detail::finish_value(pow_pos(x2, p), 0.0, reg, q);

    double b = 0.0, residual = 0.0;
    int iterations = 0;
    const double scale = std::max(1.0, s);

    if (p >= 2.0) {
        const double target = g_fn(x2, x1, q);
        auto f = [&](double bb) { return g_fn(bb, s, q) - target; };
        auto df = [&](double bb) { return p * pow_pos(bb + s, p - 2.0) * (bb - (p - 2.0) * s); };
        double lo = (p - 1.0) * s;
        if (f(lo) > 0.0) {
            // marginally explicit-side target: extend toward the monotone
            // floor b = (p-2) s
            double step = 1e-12 * scale;
            const double floor_b = (p - 2.0) * s;
            for (int k = 0; k < 200 && f(lo) > 0.0; ++k) {
                lo = std::max(floor_b + 1e-300, lo - step);
                step *= 2.0;
            }
            if (f(lo) > 0.0) throw DomainError("implicit_solve: no root above (p-2)s");
        }
        const double hi = expand_bracket_up(f, lo, scale);
        const RootResult r = solve_monotone(f, df, lo, hi, 1e-13 * (1.0 + std::fabs(target)));
        // the sanity gate is relative to the equation's term magnitude: near
        // the gluing line the target cancels to ~0 while the branch function
        // is built from O(p^p x3)-sized factors
        const double mag = pow_pos(r.x + s, p - 1.0) * (r.x + (p - 1.0) * s);
        if (r.residual > 1e-12 * (1.0 + std::fabs(target) + mag))
            throw ConvergenceError("implicit_solve: residual above tolerance");
        b = r.x;
        residual = r.residual;
        iterations = r.iterations;
    } else {
        const double target = g_fn(x1, x2, q);
        auto f = [&](double bb) { return g_fn(s, bb, q) - target; };
        auto df = [&](double bb) { return -p * (p - 1.0) * bb * pow_pos(s + bb, p - 2.0); };
        const double lo = 0.0;
        double hi = s / (p - 1.0);
        if (f(hi) > 0.0) {
            double step = 1e-12 * scale;
            for (int k = 0; k < 200 && f(hi) > 0.0; ++k) {
                hi += step;
                step *= 2.0;
            }
            if (f(hi) > 0.0) throw DomainError("implicit_solve: no root above s/(p-1)");
        }
        const RootResult r = solve_monotone(f, df, lo, hi, 1e-13 * (1.0 + std::fabs(target)));
        const double mag = pow_pos(s + r.x, p - 1.0) * (s + (p - 1.0) * r.x);
        if (r.residual > 1e-12 * (1.0 + std::fabs(target) + mag))
            throw ConvergenceError("implicit_solve: residual above tolerance");
        b = r.x;
        residual = r.residual;
        iterations = r.iterations;
    }

    const double value = std::pow(b * b + q.tau * q.tau * s * s, p / 2.0);
    BellmanValue out = detail::finish_value(value, s, reg, q, residual, iterations);
    out.b = b;  // keep the solved root rather than the re-derived one
    out.beta = b / s;
    out.omega = std::sqrt(out.beta * out.beta + q.tau * q.tau);
    return out;
}

/// Full evaluator: canonicalize, dispatch on region, undo the scaling.
inline BellmanValue bellman_eval(const PointX& x_in, const Params& q) {
    require_in_domain(x_in, q);
    if (q.is_p2()) {
        BellmanValue out = detail::finish_value(bellman_p2(x_in, q.tau),
                                                pow_pos(x_in.x3, 1.0 / q.p),
                                                Region::Explicit, q);
        return out;
    }
    const Canonical c = canonicalize(x_in, q);
    const Region reg = classify_region(c.x, q);

    BellmanValue out;
    switch (reg) {
        case Region::Origin:
            out = BellmanValue{};
            out.region = Region::Origin;
            out.omega = std::numeric_limits<double>::quiet_NaN();
            out.beta = std::numeric_limits<double>::quiet_NaN();
            return out;
        case Region::Implicit:
            out = implicit_solve(c.x, q);
            break;
        default:
            // Boundary / GluingLine / Explicit all use the explicit branch;
            // on the gluing line both branches agree and this one is cheaper.
            out = explicit_value(c.x, q);
            break;
    }
    const double rp = pow_pos(c.scale, q.p);
    out.value *= rp;
    out.b *= c.scale;
    return out;
}

/// |B_tau - (B_0^(2/p) + tau^2 x3^(2/p))^(p/2)| with the two sides computed
/// by independent evaluator instances.  The relation holds exactly on the
/// implicit sector (both solves share the same G-level), and everywhere at
/// p = 2.
inline double burkholder_relation_check(const PointX& x_in, const Params& q) {
    require_in_domain(x_in, q);
    if (!q.is_p2()) {
        const Canonical c = canonicalize(x_in, q);
        const Region reg = classify_region(c.x, q);
        const bool sector_ok = reg == Region::Implicit || reg == Region::GluingLine ||
                               (reg == Region::Boundary &&
                                (q.p > 2.0 ? c.x.x2 >= q.p_star_minus_1 * c.x.x1
                                           : c.x.x2 <= q.p_star_minus_1 * c.x.x1)) ||
                               reg == Region::Origin;
        if (!sector_ok)
            throw RegionError("burkholder_relation_check: point outside the relation's region");
    }
    const double b_tau = bellman_eval(x_in, q).value;
    const Params q0 = Params::make(q.p, 0.0);
    const double b_0 = bellman_eval(x_in, q0).value;
    if (q.tau == 0.0) return std::fabs(b_tau - b_0);  // the relation collapses
    const double rhs = std::pow(pow_pos(b_0, 2.0 / q.p) +
                                    q.tau * q.tau * pow_pos(x_in.x3, 2.0 / q.p),
                                q.p / 2.0);
    return std::fabs(b_tau - rhs);
}

/// Foot of the characteristic through y, in the y2 x y3 plane.
struct CharacteristicSolution {
    double u = 0.0;     // y2-coordinate of the foot on y3 = (y1 - u)^p
    double beta = 0.0;  // (y1 + u) / (y1 - u)
    double M = 0.0;     // Bellman value recovered from the characteristic
    double residual = 0.0;
    int iterations = 0;
};

/// Solve (y2 + c)/y3 = (u + c)/(y1 - u)^p with c = -|p-2|/p * y1.  The right
/// side is strictly increasing in u on (-y1, y1) (its derivative has sign
/// (p-1)(y1 + u)), so a bracketed solve applies for both exponent ranges:
/// p > 2 feet lie in [(p-2)/p y1, y1), p < 2 feet in (-y1, (2-p)/p y1].
inline CharacteristicSolution characteristic_u(const PointY& y_in, const Params& q) {
    if (q.is_p2()) throw RegionError("characteristic_u: p = 2 has no characteristic machinery");
    const PointX x_in = to_x(y_in, q);
    const Canonical c = canonicalize(x_in, q);
    const Region reg = classify_region(c.x, q);
    if (reg == Region::Explicit)
        throw RegionError("characteristic_u: point in explicit interior");
    if (reg == Region::Origin)
        throw RegionError("characteristic_u: origin has no characteristic");
    const PointY y{(c.x.x2 + c.x.x1) / 2.0, (c.x.x2 - c.x.x1) / 2.0, c.x.x3};
    const double p = q.p;
    const double cc = -std::fabs(p - 2.0) / p * y.y1;
    const double target = (y.y2 + cc) / y.y3;

    auto rhs = [&](double u) { return (u + cc) / pow_pos(y.y1 - u, p); };
    auto drhs = [&](double u) { return (p - 1.0) * (y.y1 + u) / pow_pos(y.y1 - u, p + 1.0); };
    auto f = [&](double u) { return rhs(u) - target; };

    double lo, hi;
    if (p > 2.0) {
        lo = -cc;  // gluing foot, rhs = 0
        if (f(lo) > 0.0) {
            double step = 1e-12;
            for (int k = 0; k < 200 && f(lo) > 0.0; ++k) {
                lo = std::max(-y.y1 * (1.0 - 1e-12), lo - step);
                step *= 2.0;
            }
        }
        // approach the singular end u -> y1 until the sign flips
        double gap = (y.y1 - lo) / 2.0;
        hi = lo + gap;
        int k = 0;
        for (; k < 200 && f(hi) < 0.0; ++k) {
            gap /= 2.0;
            hi = y.y1 - gap;
        }
        if (k >= 200) throw ConvergenceError("characteristic_u: bracket expansion failed");
    } else {
        hi = -cc;
        if (f(hi) < 0.0) {
            double step = 1e-12;
            for (int k = 0; k < 200 && f(hi) < 0.0; ++k) {
                hi = std::min(y.y1 * (1.0 - 1e-12), hi + step);
                step *= 2.0;
            }
        }
        lo = -y.y1 * (1.0 - 1e-14);
        if (f(lo) > 0.0) throw ConvergenceError("characteristic_u: foot below -y1");
    }

    const RootResult r = solve_monotone(f, drhs, lo, hi, 1e-13 * (1.0 + std::fabs(target)));
    CharacteristicSolution sol;
    sol.u = r.x * c.scale;
    sol.beta = (y.y1 + r.x) / (y.y1 - r.x);
    const double omega2 = sol.beta * sol.beta + q.tau * q.tau;
    sol.M = std::pow(omega2, p / 2.0) * y.y3 * pow_pos(c.scale, p);
    sol.residual = r.residual;
    sol.iterations = r.iterations;
    return sol;
}

} // namespace bellman_sharp
