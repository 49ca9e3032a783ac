#pragma once

#include <cmath>
#include <string>

#include "bellman_sharp/errors.hpp"

namespace bellman_sharp {

struct RootResult {
    double x = 0.0;
    double residual = 0.0;  // |f(x)| at the returned root
    int iterations = 0;
};

/// Root of a strictly monotone f on [lo, hi] with f(lo), f(hi) of opposite
/// sign (weakly).  Newton steps are taken while they stay inside the current
/// bracket; anything else falls back to bisection, and a bisection probe is
/// inserted whenever the bracket fails to halve, so the bracket width shrinks
/// geometrically.  Converges the root to machine precision in x; `ftol` is
/// the residual budget the final answer must also meet.
template <class F, class DF>
RootResult solve_monotone(F f, DF df, double lo, double hi, double ftol,
                          int max_iter = 500) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if ((flo > 0.0) == (fhi > 0.0))
        throw ConvergenceError("solve_monotone: endpoints do not bracket a root");

    auto admit = [&](double x, double fx) {
        if (fx == 0.0 || (fx > 0.0) == (fhi > 0.0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
    };

    double x = 0.5 * (lo + hi);
    double fx = f(x);
    int it = 0;
    for (; it < max_iter; ++it) {
        admit(x, fx);
        if (fx == 0.0) break;
        const double width = hi - lo;
        if (width <= 4e-16 * (std::fabs(lo) + std::fabs(hi)) + 1e-300) break;

        double x_next = 0.0;
        const double d = df(x);
        bool newton_ok = false;
        if (d != 0.0 && std::isfinite(d)) {
            x_next = x - fx / d;
            newton_ok = std::isfinite(x_next) && x_next > lo && x_next < hi;
        }
        if (!newton_ok) x_next = 0.5 * (lo + hi);
        x = x_next;
        fx = f(x);

        // keep the bracket shrinking even when Newton stalls near one end
        admit(x, fx);
        if (fx == 0.0) break;
        if (hi - lo > 0.5 * width) {
            const double mid = 0.5 * (lo + hi);
            const double fmid = f(mid);
            admit(mid, fmid);
            if (std::fabs(fmid) < std::fabs(fx)) {
                x = mid;
                fx = fmid;
            }
            if (fmid == 0.0) {
                x = mid;
                fx = 0.0;
                break;
            }
        }
    }
    // report the better endpoint if it beats the last iterate
    if (std::fabs(flo) < std::fabs(fx)) {
        x = lo;
        fx = flo;
    }
    if (std::fabs(fhi) < std::fabs(fx)) {
        x = hi;
        fx = fhi;
    }
    // the bracket collapsing to machine width is success even when the
    // residual target is unreachable (stiff f); callers with hard residual
    // postconditions check RootResult::residual themselves
    const bool width_done = hi - lo <= 4e-16 * (std::fabs(lo) + std::fabs(hi)) + 1e-300;
    if (std::fabs(fx) > ftol && !width_done)
        throw ConvergenceError("solve_monotone: no convergence after " +
                               std::to_string(it) + " iterations");
    return {x, std::fabs(fx), it};
}

/// Expand `hi` geometrically from `lo` until f changes sign.  `step0` is the
/// initial offset; at most `max_doublings` doublings are attempted.
template <class F>
double expand_bracket_up(F f, double lo, double step0, int max_doublings = 200) {
    const double flo = f(lo);
    double step = step0;
    for (int k = 0; k < max_doublings; ++k) {
        const double hi = lo + step;
        if ((f(hi) > 0.0) != (flo > 0.0) || f(hi) == 0.0) return hi;
        step *= 2.0;
    }
    throw ConvergenceError("bracket expansion exceeded doubling budget");
}

} // namespace bellman_sharp
