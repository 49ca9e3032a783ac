#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "bellman_sharp/errors.hpp"

namespace bellman_sharp {

/// x^e for x >= 0, safe at x == 0 for positive exponents.
inline double pow_pos(double x, double e) {
    if (x < 0.0) throw DomainError("pow_pos: negative base " + std::to_string(x));
    if (x == 0.0) {
        if (e > 0.0) return 0.0;
        if (e == 0.0) return 1.0;
        throw DomainError("pow_pos: zero base, negative exponent");
    }
    return std::exp(e * std::log(x));
}

/// Exponent pair (p, tau) plus the constants every module keeps re-deriving.
///
/// The validity window is p > 1 with tau unrestricted for p >= 2 and
/// |tau| <= 1/2 for p < 2.
struct Params {
    double p = 2.0;
    double tau = 0.0;

    // derived
    double p_star_minus_1 = 1.0;  // max(p-1, 1/(p-1))
    double c_sharp = 1.0;         // ((p*-1)^2 + tau^2)^(p/2), the sharp constant
    double gamma = 1.0;           // (1 - tau^2) / (1 + tau^2)
    double alpha_glue = 1.0;      // p (1 - 1/p*)^(p-1) (1 + tau^2/(p*-1)^2)^((p-2)/2)

    static Params make(double p, double tau) {
        if (!(p > 1.0) || !std::isfinite(p))
            throw DomainError("Params: require finite p > 1, got p=" + std::to_string(p));
        if (!std::isfinite(tau))
            throw DomainError("Params: tau must be finite");
        if (p < 2.0 && std::fabs(tau) > 0.5 + 1e-15)
            throw DomainError("Params: for p < 2 the sharp constant needs |tau| <= 1/2");

        Params q;
        q.p = p;
        q.tau = tau;
        q.p_star_minus_1 = std::max(p - 1.0, 1.0 / (p - 1.0));
        q.c_sharp = std::pow(q.p_star_minus_1 * q.p_star_minus_1 + tau * tau, p / 2.0);
        q.gamma = (1.0 - tau * tau) / (1.0 + tau * tau);
        const double p_star = q.p_star_minus_1 + 1.0;
        q.alpha_glue = p * pow_pos(1.0 - 1.0 / p_star, p - 1.0) *
                       pow_pos(1.0 + tau * tau / (q.p_star_minus_1 * q.p_star_minus_1),
                               (p - 2.0) / 2.0);
        return q;
    }

    /// The closed form takes over within 1e-8 of p = 2, where both implicit
    /// branch derivations degenerate.
    bool is_p2() const { return std::fabs(p - 2.0) <= 1e-8; }
};

} // namespace bellman_sharp
