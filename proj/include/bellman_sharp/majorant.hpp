#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bellman_sharp/bellman.hpp"
#include "bellman_sharp/errors.hpp"
#include "bellman_sharp/parallel.hpp"
#include "bellman_sharp/params.hpp"

namespace bellman_sharp {

/// Obstacle v(x,y) = (tau^2 x^2 + y^2)^(p/2) - c_sharp |x|^p.
inline double eval_v(double x, double y, const Params& q) {
    return std::pow(q.tau * q.tau * x * x + y * y, q.p / 2.0) -
           q.c_sharp * pow_pos(std::fabs(x), q.p);
}

/// Ray piece u(x,y) = alpha_glue (|x|+|y|)^(p-1) [|y| - (p*-1)|x|]; vanishes
/// together with v on |y| = (p*-1)|x| and matches its gradient there.
inline double eval_u(double x, double y, const Params& q) {
    const double ax = std::fabs(x), ay = std::fabs(y);
    return q.alpha_glue * pow_pos(ax + ay, q.p - 1.0) * (ay - q.p_star_minus_1 * ax);
}

/// Least zigzag-biconcave majorant of v: the u piece sits on the side of the
/// ray |y| = (p*-1)|x| containing the Bellman function's implicit sector
/// (|y| >= ray for p >= 2, |y| <= ray for p < 2), v on the other.
inline double eval_U(double x, double y, const Params& q) {
    const bool below_ray = std::fabs(y) <= q.p_star_minus_1 * std::fabs(x);
    if (q.p >= 2.0) return below_ray ? eval_v(x, y, q) : eval_u(x, y, q);
    return below_ray ? eval_u(x, y, q) : eval_v(x, y, q);
}

struct Grad {
    double gx = 0.0;
    double gy = 0.0;
};

namespace detail {
inline double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }
} // namespace detail

/// Analytic gradient of U away from the origin.  The sgn() convention gives
/// the correct one-sided limits on the symmetry axes (both pieces have
/// vanishing normal derivative there).
inline Grad grad_U(double x, double y, const Params& q) {
    const double ax = std::fabs(x), ay = std::fabs(y);
    const double k = q.p_star_minus_1, p = q.p, a = q.alpha_glue;
    const bool below_ray = ay <= k * ax;
    const bool u_piece = (p >= 2.0) ? !below_ray : below_ray;
    Grad g;
    if (u_piece) {
        const double s = pow_pos(ax + ay, p - 2.0);
        const double s1 = s * (ax + ay);
        g.gx = a * (p - 1.0) * detail::sgn(x) * s * (ay - k * ax) -
               a * k * detail::sgn(x) * s1;
        g.gy = a * (p - 1.0) * detail::sgn(y) * s * (ay - k * ax) +
               a * detail::sgn(y) * s1;
    } else {
        const double r = q.tau * q.tau * x * x + y * y;
        const double rp = std::pow(r, (p - 2.0) / 2.0);
        g.gx = p * q.tau * q.tau * x * rp -
               p * detail::sgn(x) * q.c_sharp * pow_pos(ax, p - 1.0);
        g.gy = p * y * rp;
    }
    return g;
}

/// sup over a log-spaced t-grid in [|x|^p, t_max] of B(x,y,t) - B(0,0,1) t.
/// The difference is non-decreasing in t, so the sup sits at the last grid
/// point; in the explicit sector it is flat and equals v(x,y) from t = |x|^p.
inline double sup_t_relation(double x, double y, const Params& q, double t_max,
                             int n_grid = 128) {
    const double t0 = pow_pos(std::fabs(x), q.p);
    if (!(t_max >= t0)) throw DomainError("sup_t_relation: t_max < |x|^p");
    double best = bellman_eval({x, y, t0}, q).value - q.c_sharp * t0;
    const double lo = std::max(t0, t_max * 1e-12 + 1e-300);
    if (t_max > lo) {
        const double llo = std::log(lo), lhi = std::log(t_max);
        for (int i = 0; i <= n_grid; ++i) {
            const double t = std::exp(llo + (lhi - llo) * i / n_grid);
            const double h = bellman_eval({x, y, t}, q).value - q.c_sharp * t;
            best = std::max(best, h);
        }
    }
    return best;
}

/// Dense square grid on [-L, L]^2, node (ix, iy) at (-L + ix h, -L + iy h),
/// stored x-major.
struct Grid2D {
    double L = 1.0;
    double h = 1.0;
    int n = 0;  // nodes per side
    std::vector<double> values;

    double& at(int ix, int iy) { return values[static_cast<size_t>(ix) * n + iy]; }
    double at(int ix, int iy) const { return values[static_cast<size_t>(ix) * n + iy]; }
    double x_of(int ix) const { return -L + ix * h; }
    double y_of(int iy) const { return -L + iy * h; }
};

/// v sampled on the lattice with the boundary ring pinned to the analytic U,
/// which supplies the Dirichlet frame for the envelope iteration.
inline Grid2D make_majorant_obstacle(const Params& q, double L, double h) {
    Grid2D g;
    g.L = L;
    g.h = h;
    g.n = static_cast<int>(std::lround(2.0 * L / h)) + 1;
    if (g.n < 3) throw GridError("make_majorant_obstacle: grid too small");
    g.values.resize(static_cast<size_t>(g.n) * g.n);
    for (int ix = 0; ix < g.n; ++ix)
        for (int iy = 0; iy < g.n; ++iy) {
            const bool frame = ix == 0 || iy == 0 || ix == g.n - 1 || iy == g.n - 1;
            const double x = g.x_of(ix), y = g.y_of(iy);
            g.at(ix, iy) = frame ? eval_U(x, y, q) : eval_v(x, y, q);
        }
    return g;
}

struct EnvelopeResult {
    Grid2D grid;
    long sweeps = 0;
    double last_update = 0.0;
};

namespace detail {

/// Least concave majorant of w at uniform abscissas, in place.  Upper hull by
/// monotone chain, then linear interpolation between hull vertices; endpoints
/// are hull vertices so they never move.  Returns the largest raise.
inline double concavify_line(double* w, int m, int* hull) {
    if (m < 3) return 0.0;
    int top = 0;
    hull[top++] = 0;
    for (int k = 1; k < m; ++k) {
        while (top >= 2) {
            const int a = hull[top - 2], b = hull[top - 1];
            // pop b when it lies on or below chord a--k
            if ((w[k] - w[a]) * (b - a) >= (w[b] - w[a]) * (k - a))
                --top;
            else
                break;
        }
        hull[top++] = k;
    }
    double max_up = 0.0;
    for (int seg = 0; seg + 1 < top; ++seg) {
        const int a = hull[seg], b = hull[seg + 1];
        const double slope = (w[b] - w[a]) / (b - a);
        for (int k = a + 1; k < b; ++k) {
            const double env = w[a] + slope * (k - a);
            if (env > w[k]) {
                max_up = std::max(max_up, env - w[k]);
                w[k] = env;
            }
        }
    }
    return max_up;
}

} // namespace detail

/// Alternating one-dimensional concavification along the two diagonal
/// families (x+y constant first, then x-y constant) until the largest
/// pointwise raise in a sweep drops below `tol`.  The result majorizes the
/// obstacle and is midpoint-concave along both diagonal directions.
inline EnvelopeResult zigzag_concavify(Grid2D grid, double tol = 1e-10,
                                       long max_sweeps = 100000, int threads = 0) {
    const int n = grid.n;
    for (double v : grid.values)
        if (!std::isfinite(v)) throw GridError("zigzag_concavify: non-finite obstacle");

    const int t = resolve_threads(threads);
    std::vector<std::vector<double>> scratch(t, std::vector<double>(n));
    std::vector<std::vector<int>> hulls(t, std::vector<int>(n));
    std::vector<double> line_up(2 * n - 1, 0.0);

    EnvelopeResult res;
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_up = 0.0;
        // family x+y = const: cells (ix, d - ix)
        std::fill(line_up.begin(), line_up.end(), 0.0);
        parallel_for(
            2 * n - 1,
            [&](long d, int wid) {
                const int lo = std::max<int>(0, static_cast<int>(d) - (n - 1));
                const int hi = std::min<int>(n - 1, static_cast<int>(d));
                const int m = hi - lo + 1;
                double* w = scratch[wid].data();
                for (int k = 0; k < m; ++k) w[k] = grid.at(lo + k, static_cast<int>(d) - lo - k);
                line_up[d] = detail::concavify_line(w, m, hulls[wid].data());
                for (int k = 0; k < m; ++k) grid.at(lo + k, static_cast<int>(d) - lo - k) = w[k];
            },
            t);
        for (double u : line_up) max_up = std::max(max_up, u);

        // family x-y = const: cells (ix, ix - d), d in [-(n-1), n-1]
        std::fill(line_up.begin(), line_up.end(), 0.0);
        parallel_for(
            2 * n - 1,
            [&](long di, int wid) {
                const int d = static_cast<int>(di) - (n - 1);
                const int lo = std::max(0, d);
                const int hi = std::min(n - 1, n - 1 + d);
                const int m = hi - lo + 1;
                double* w = scratch[wid].data();
                for (int k = 0; k < m; ++k) w[k] = grid.at(lo + k, lo + k - d);
                line_up[di] = detail::concavify_line(w, m, hulls[wid].data());
                for (int k = 0; k < m; ++k) grid.at(lo + k, lo + k - d) = w[k];
            },
            t);
        for (double u : line_up) max_up = std::max(max_up, u);

        res.sweeps = sweep + 1;
        res.last_update = max_up;
        if (max_up <= tol) {
            res.grid = std::move(grid);
            return res;
        }
    }
    throw ConvergenceError("zigzag_concavify: sweep cap reached");
}

inline void write_grid_csv(const Grid2D& g, std::ostream& os) {
    os << "x,y,value\n";
    char buf[96];
    for (int ix = 0; ix < g.n; ++ix)
        for (int iy = 0; iy < g.n; ++iy) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.x_of(ix), g.y_of(iy),
                          g.at(ix, iy));
            os << buf;
        }
}

inline Grid2D read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw GridError("read_grid_csv: empty stream");
    std::vector<double> xs, ys, vs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double x, y, v;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3)
            throw GridError("read_grid_csv: malformed row '" + line + "'");
        xs.push_back(x);
        ys.push_back(y);
        vs.push_back(v);
    }
    const size_t total = vs.size();
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(total))));
    if (static_cast<size_t>(n) * n != total || n < 2)
        throw GridError("read_grid_csv: not a square grid");
    Grid2D g;
    g.n = n;
    g.L = std::max(std::fabs(xs.front()), std::fabs(xs.back()));
    g.h = 2.0 * g.L / (n - 1);
    g.values = std::move(vs);
    return g;
}

} // namespace bellman_sharp
