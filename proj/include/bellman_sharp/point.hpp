#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "bellman_sharp/errors.hpp"
#include "bellman_sharp/params.hpp"

namespace bellman_sharp {

/// Point of Omega: x1 = mean of f, x2 = mean of g, x3 = mean of |f|^p.
/// Admissible iff x3 >= 0 and |x1|^p <= x3.
struct PointX {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;
};

/// Same point in the rotated coordinates y1 = (x2+x1)/2, y2 = (x2-x1)/2,
/// y3 = x3, where the transform condition becomes "one of y1, y2 is fixed".
struct PointY {
    double y1 = 0.0;
    double y2 = 0.0;
    double y3 = 0.0;
};

namespace detail {
// Relative tolerance admitting boundary points produced by arithmetic.
constexpr double kDomainTol = 1e-12;
} // namespace detail

inline bool in_domain(const PointX& x, const Params& q) {
    if (!(x.x3 >= 0.0)) return false;
    const double lhs = pow_pos(std::fabs(x.x1), q.p);
    return lhs <= x.x3 * (1.0 + detail::kDomainTol) + detail::kDomainTol;
}

inline void require_in_domain(const PointX& x, const Params& q) {
    if (!std::isfinite(x.x1) || !std::isfinite(x.x2) || !std::isfinite(x.x3))
        throw DomainError("point has non-finite coordinate");
    if (!in_domain(x, q))
        throw DomainError("point outside Omega: |x1|^p > x3 at x1=" + std::to_string(x.x1) +
                          " x3=" + std::to_string(x.x3));
}

inline PointY to_y(const PointX& x, const Params& q) {
    require_in_domain(x, q);
    return {(x.x2 + x.x1) / 2.0, (x.x2 - x.x1) / 2.0, x.x3};
}

inline PointX to_x(const PointY& y, const Params& q) {
    PointX x{y.y1 - y.y2, y.y1 + y.y2, y.y3};
    require_in_domain(x, q);
    return x;
}

/// Symmetry + homogeneity normal form: coordinates made non-negative and
/// rescaled so max(x1, x2, x3^(1/p)) = 1.  B(original) = scale^p * B(canonical).
struct Canonical {
    PointX x;
    double scale = 1.0;
};

inline Canonical canonicalize(const PointX& x_in, const Params& q) {
    require_in_domain(x_in, q);
    PointX x{std::fabs(x_in.x1), std::fabs(x_in.x2), x_in.x3};
    const double r = std::max({x.x1, x.x2, pow_pos(x.x3, 1.0 / q.p)});
    if (r == 0.0) return {PointX{0.0, 0.0, 0.0}, 1.0};
    return {PointX{x.x1 / r, x.x2 / r, x.x3 / pow_pos(r, q.p)}, r};
}

/// Branch dispatch tag.  Boundary takes precedence over GluingLine, which
/// takes precedence over the open Explicit/Implicit sectors.
enum class Region { Boundary, GluingLine, Explicit, Implicit, Origin };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::Boundary: return "Boundary";
        case Region::GluingLine: return "GluingLine";
        case Region::Explicit: return "Explicit";
        case Region::Implicit: return "Implicit";
        case Region::Origin: return "Origin";
    }
    return "?";
}

/// Classify after symmetry reduction (|x1|, |x2| are used).  For p > 2 the
/// implicit sector is x2 > (p-1) x1; for p < 2 it is x2 < x1/(p-1); p = 2
/// is Explicit by convention (closed form everywhere).
inline Region classify_region(const PointX& x_in, const Params& q) {
    require_in_domain(x_in, q);
    const double x1 = std::fabs(x_in.x1), x2 = std::fabs(x_in.x2), x3 = x_in.x3;
    if (x1 == 0.0 && x2 == 0.0 && x3 == 0.0) return Region::Origin;
    if (std::fabs(x3 - pow_pos(x1, q.p)) <= 1e-9 * (1.0 + x3)) return Region::Boundary;
    if (q.is_p2()) return Region::Explicit;
    const double k = q.p_star_minus_1;
    if (std::fabs(x2 - k * x1) <= 1e-9 * (1.0 + x1 + x2)) return Region::GluingLine;
    if (q.p > 2.0) return x2 > k * x1 ? Region::Implicit : Region::Explicit;
    return x2 < k * x1 ? Region::Implicit : Region::Explicit;
}

} // namespace bellman_sharp
