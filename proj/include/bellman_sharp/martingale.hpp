#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bellman_sharp/bellman.hpp"
#include "bellman_sharp/errors.hpp"
#include "bellman_sharp/majorant.hpp"
#include "bellman_sharp/params.hpp"
#include "bellman_sharp/point.hpp"
#include "bellman_sharp/report.hpp"
#include "bellman_sharp/rng.hpp"

namespace bellman_sharp {

using Vec2 = std::array<double, 2>;

inline double norm_of(const Vec2& v, int dim) {
    return dim == 1 ? std::fabs(v[0]) : std::hypot(v[0], v[1]);
}

/// A finite dyadic tree: heap-indexed full binary tree of the given depth.
/// Internal nodes k = 1 .. 2^depth - 1 carry the weight of their right child
/// (alpha_plus, so |I+| = alpha_plus |I|) and the transform sign; leaves hold
/// the values of f.  g is determined by the signs and its mean: its Haar
/// coefficients are eps_I (f, h_I), which is exactly the martingale-transform
/// condition |(g, h_I)| = |(f, h_I)|.
struct DyadicPair {
    int depth = 1;
    int dim = 1;                      // 1: real, 2: complex as R^2
    std::vector<double> alpha_plus;   // size 2^depth, index 1..2^depth-1 used
    std::vector<int> signs;           // same indexing, values +-1
    std::vector<Vec2> f_leaves;       // size 2^depth
    Vec2 g_mean{0.0, 0.0};

    long n_leaves() const { return 1L << depth; }
    long n_internal() const { return (1L << depth) - 1; }

    void validate() const {
        if (depth < 1 || depth > 24) throw ShapeError("DyadicPair: depth out of range");
        if (dim != 1 && dim != 2) throw ShapeError("DyadicPair: dim must be 1 or 2");
        if (static_cast<long>(alpha_plus.size()) != n_leaves() ||
            static_cast<long>(signs.size()) != n_leaves() ||
            static_cast<long>(f_leaves.size()) != n_leaves())
            throw ShapeError("DyadicPair: array sizes do not match depth");
        for (long k = 1; k < n_leaves(); ++k) {
            if (!(alpha_plus[k] > 0.0 && alpha_plus[k] < 1.0))
                throw ShapeError("DyadicPair: split weight outside (0,1)");
            if (signs[k] != 1 && signs[k] != -1)
                throw ShapeError("DyadicPair: sign must be +-1");
        }
    }
};

/// Haar data of a function on the tree: the global mean and one coefficient
/// per internal node, (f, h_I) = sqrt(|I| a+ a-) (<f>_{I+} - <f>_{I-}).
struct HaarCoeffs {
    int depth = 1;
    int dim = 1;
    Vec2 mean{0.0, 0.0};
    std::vector<Vec2> coeff;  // heap slot 1..2^depth-1
};

namespace detail {

/// Per-node measures |I| (root = 1).
inline std::vector<double> node_measures(const DyadicPair& t) {
    const long n = t.n_leaves();
    std::vector<double> w(2 * n, 0.0);
    w[1] = 1.0;
    for (long k = 1; k < n; ++k) {
        w[2 * k] = w[k] * (1.0 - t.alpha_plus[k]);
        w[2 * k + 1] = w[k] * t.alpha_plus[k];
    }
    return w;
}

/// Node means of the given leaf data, bottom-up.
inline std::vector<Vec2> node_means(const DyadicPair& t, const std::vector<Vec2>& leaves) {
    const long n = t.n_leaves();
    std::vector<Vec2> m(2 * n, Vec2{0.0, 0.0});
    for (long k = 0; k < n; ++k) m[n + k] = leaves[k];
    for (long k = n - 1; k >= 1; --k) {
        const double ap = t.alpha_plus[k];
        for (int c = 0; c < t.dim; ++c)
            m[k][c] = (1.0 - ap) * m[2 * k][c] + ap * m[2 * k + 1][c];
    }
    return m;
}

} // namespace detail

inline HaarCoeffs haar_analyze(const DyadicPair& t, const std::vector<Vec2>& leaves) {
    if (static_cast<long>(leaves.size()) != t.n_leaves())
        throw ShapeError("haar_analyze: leaf count mismatch");
    const auto w = detail::node_measures(t);
    const auto m = detail::node_means(t, leaves);
    HaarCoeffs h;
    h.depth = t.depth;
    h.dim = t.dim;
    h.mean = m[1];
    h.coeff.assign(t.n_leaves(), Vec2{0.0, 0.0});
    for (long k = 1; k < t.n_leaves(); ++k) {
        const double ap = t.alpha_plus[k];
        const double scale = std::sqrt(w[k] * ap * (1.0 - ap));
        for (int c = 0; c < t.dim; ++c) h.coeff[k][c] = scale * (m[2 * k + 1][c] - m[2 * k][c]);
    }
    return h;
}

inline std::vector<Vec2> haar_synthesize(const DyadicPair& t, const HaarCoeffs& h) {
    if (static_cast<long>(h.coeff.size()) != t.n_leaves())
        throw ShapeError("haar_synthesize: coefficient count mismatch");
    const auto w = detail::node_measures(t);
    const long n = t.n_leaves();
    std::vector<Vec2> m(2 * n, Vec2{0.0, 0.0});
    m[1] = h.mean;
    for (long k = 1; k < n; ++k) {
        const double ap = t.alpha_plus[k];
        const double on_plus = std::sqrt((1.0 - ap) / (ap * w[k]));
        const double on_minus = -std::sqrt(ap / ((1.0 - ap) * w[k]));
        for (int c = 0; c < t.dim; ++c) {
            m[2 * k][c] = m[k][c] + h.coeff[k][c] * on_minus;
            m[2 * k + 1][c] = m[k][c] + h.coeff[k][c] * on_plus;
        }
    }
    std::vector<Vec2> leaves(n);
    for (long k = 0; k < n; ++k) leaves[k] = m[n + k];
    return leaves;
}

/// Sign-flip the coefficients, set the mean: the transform itself.
inline HaarCoeffs martingale_transform(const HaarCoeffs& f, const std::vector<int>& signs,
                                       const Vec2& g_mean) {
    HaarCoeffs g = f;
    g.mean = g_mean;
    for (size_t k = 1; k < g.coeff.size(); ++k)
        for (int c = 0; c < g.dim; ++c) g.coeff[k][c] = signs[k] * f.coeff[k][c];
    return g;
}

inline std::vector<Vec2> g_leaves(const DyadicPair& t) {
    const HaarCoeffs f = haar_analyze(t, t.f_leaves);
    const HaarCoeffs g = martingale_transform(f, t.signs, t.g_mean);
    return haar_synthesize(t, g);
}

/// lhs = <(|g|^2 + tau^2 |f|^2)^(p/2)>, rhs = c_sharp <|f|^p>.
struct InequalityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;  // lhs / <|f|^p>
    double slack = 0.0;  // rhs - lhs
};

/// Exact weighted-sum averages over the leaves; the hypothesis
/// |<g>| <= (p*-1) |<f>| is enforced, not clipped.
inline InequalityReport verify_inequality(const DyadicPair& t, const Params& q) {
    t.validate();
    const auto w = detail::node_measures(t);
    const auto fm = detail::node_means(t, t.f_leaves);
    const auto gl = g_leaves(t);
    const double f0 = norm_of(fm[1], t.dim);
    const double g0 = norm_of(t.g_mean, t.dim);
    if (g0 > q.p_star_minus_1 * f0 * (1.0 + 1e-12) + 1e-300)
        throw HypothesisError("verify_inequality: |<g>| > (p*-1) |<f>|");

    const long n = t.n_leaves();
    double lhs = 0.0, fp = 0.0;
    for (long k = 0; k < n; ++k) {
        const double wf = norm_of(t.f_leaves[k], t.dim);
        const double wg = norm_of(gl[k], t.dim);
        lhs += w[n + k] * std::pow(wg * wg + q.tau * q.tau * wf * wf, q.p / 2.0);
        fp += w[n + k] * pow_pos(wf, q.p);
    }
    InequalityReport r;
    r.lhs = lhs;
    r.rhs = q.c_sharp * fp;
    r.ratio = fp > 0.0 ? lhs / fp : 0.0;
    r.slack = r.rhs - r.lhs;
    return r;
}

/// Level averages E_k = sum over level-k nodes of |I| U(<f>_I, <g>_I): the
/// discrete supermartingale chain E_0 >= E_1 >= ... within 1e-10 scale.
/// Works for both value dimensions (U takes the Euclidean norms).
inline AuditReport u_level_audit(const DyadicPair& t, const Params& q) {
    t.validate();
    AuditReport rep;
    rep.kind = "u-levels";
    rep.p = q.p;
    rep.tau = q.tau;
    const auto w = detail::node_measures(t);
    const auto fm = detail::node_means(t, t.f_leaves);
    const auto gm = detail::node_means(t, g_leaves(t));
    std::vector<double> level(t.depth + 1, 0.0);
    double umax = 0.0;
    for (int lvl = 0; lvl <= t.depth; ++lvl) {
        const long first = 1L << lvl;
        double e = 0.0;
        for (long k = first; k < 2 * first; ++k)
            e += w[k] * eval_U(norm_of(fm[k], t.dim), norm_of(gm[k], t.dim), q);
        level[lvl] = e;
        umax = std::max(umax, std::fabs(e));
    }
    for (int lvl = 0; lvl + 1 <= t.depth; ++lvl) {
        const double rise = level[lvl + 1] - level[lvl];
        rep.record(rise > 1e-10 * (1.0 + umax), rise,
                   {static_cast<double>(lvl), level[lvl], level[lvl + 1]});
    }
    return rep;
}

/// (a) node-wise Bellman concavity B(x_I) >= a+ B(x_I+) + a- B(x_I-) up to
/// 1e-9 (1 + B) (real pairs), and (b) the level averages of U non-increasing
/// (any dim).
inline AuditReport bellman_process_audit(const DyadicPair& t, const Params& q) {
    t.validate();
    AuditReport rep;
    rep.kind = "bellman-process";
    rep.p = q.p;
    rep.tau = q.tau;
    const auto fm = detail::node_means(t, t.f_leaves);
    const auto gm = detail::node_means(t, g_leaves(t));
    const long n = t.n_leaves();

    // <|f|^p> per node, bottom-up
    std::vector<double> m3(2 * n, 0.0);
    for (long k = 0; k < n; ++k) m3[n + k] = pow_pos(norm_of(t.f_leaves[k], t.dim), q.p);
    for (long k = n - 1; k >= 1; --k)
        m3[k] = (1.0 - t.alpha_plus[k]) * m3[2 * k] + t.alpha_plus[k] * m3[2 * k + 1];

    if (t.dim == 1) {
        for (long k = 1; k < n; ++k) {
            const double b0 = bellman_eval({fm[k][0], gm[k][0], m3[k]}, q).value;
            const double bl = bellman_eval({fm[2 * k][0], gm[2 * k][0], m3[2 * k]}, q).value;
            const double br =
                bellman_eval({fm[2 * k + 1][0], gm[2 * k + 1][0], m3[2 * k + 1]}, q).value;
            const double split = (1.0 - t.alpha_plus[k]) * bl + t.alpha_plus[k] * br;
            const double slack = b0 - split;
            rep.record(slack < -1e-9 * (1.0 + b0), -slack, {fm[k][0], gm[k][0], m3[k]});
        }
    }
    rep.merge(u_level_audit(t, q));
    return rep;
}

/// Random valid pair.  Split weights stay in [0.2, 0.8]; the adversarial mode
/// pushes the means to the gluing ray |<g>| ~ (p*-1) |<f>| where the
/// inequality's slack is smallest.
inline DyadicPair random_pair(int depth, int dim, const Params& q, Rng& rng,
                              bool adversarial = false) {
    DyadicPair t;
    t.depth = depth;
    t.dim = dim;
    const long n = t.n_leaves();
    t.alpha_plus.assign(n, 0.5);
    t.signs.assign(n, 1);
    t.f_leaves.assign(n, Vec2{0.0, 0.0});
    for (long k = 1; k < n; ++k) {
        t.alpha_plus[k] = rng.uniform(0.2, 0.8);
        t.signs[k] = rng.sign();
    }
    for (long k = 0; k < n; ++k)
        for (int c = 0; c < dim; ++c) t.f_leaves[k][c] = rng.uniform(-1.0, 1.0);

    const auto fm = detail::node_means(t, t.f_leaves);
    const double f0 = norm_of(fm[1], dim);
    const double rho = adversarial ? rng.uniform(0.95, 1.0) : rng.uniform(0.0, 1.0);
    const double r = rho * q.p_star_minus_1 * f0;
    if (dim == 1) {
        t.g_mean = {static_cast<double>(rng.sign()) * r, 0.0};
    } else {
        const double th = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        t.g_mean = {r * std::cos(th), r * std::sin(th)};
    }
    return t;
}

// ---------------------------------------------------------------------------
// Near-extremal search
// ---------------------------------------------------------------------------

struct ExtremalResult {
    DyadicPair pair;
    InequalityReport report;
    int depth = 0;
};

namespace detail {

/// Self-similar template: each level splits off two boundary plateaus of
/// relative width eps carrying -v / +v and recurses on the middle with the
/// values scaled by gamma.  One level consumes two tree levels
/// ((0,eps) | (eps,1), then (eps,1-eps) | (1-eps,1)).  The innermost copy is
/// either the zero pair or, with `terminal_step`, an equal-split +-v step
/// (which keeps oscillation alive at the deepest scale).
inline DyadicPair template_pair(int levels, double eps, double gamma, int s1, int s2,
                                bool terminal_step = false) {
    DyadicPair t;
    t.depth = 2 * levels + (terminal_step ? 1 : 0);
    t.dim = 1;
    const long n = t.n_leaves();
    t.alpha_plus.assign(n, 0.5);
    t.signs.assign(n, 1);
    t.f_leaves.assign(n, Vec2{0.0, 0.0});

    // fill a whole subtree with a constant leaf value
    auto fill_const = [&](long node, double value) {
        long lo = node, hi = node;
        while (lo < n) {
            lo = 2 * lo;
            hi = 2 * hi + 1;
        }
        for (long k = lo; k <= hi; ++k) t.f_leaves[k - n] = {value, 0.0};
    };

    long node = 1;
    double v = 1.0;
    for (int lvl = 0; lvl < levels; ++lvl) {
        t.alpha_plus[node] = 1.0 - eps;  // left = (0,eps)
        t.signs[node] = s1;
        fill_const(2 * node, -v);
        const long right = 2 * node + 1;
        t.alpha_plus[right] = eps / (1.0 - eps);  // right = (1-eps,1)
        t.signs[right] = s2;
        fill_const(2 * right + 1, v);
        node = 2 * right;  // middle (eps,1-eps)
        v *= gamma;
    }
    if (terminal_step) {
        t.signs[node] = s1;
        fill_const(2 * node, -v);
        fill_const(2 * node + 1, v);
    } else {
        fill_const(node, 0.0);
    }
    t.g_mean = {0.0, 0.0};
    return t;
}

/// Golden-section maximization on [a, b].
template <class F>
double golden_max(F f, double a, double b, int iters = 28) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? x1 : x2;
}

} // namespace detail

namespace detail {

struct TemplateParams {
    double eps = 0.25;
    double gamma = 1.0;
    int s1 = 1;
    int s2 = -1;
};

/// Coordinate ascent (golden-section on eps and gamma, exhaustive on the two
/// sign bits) at a fixed level count.
inline TemplateParams optimize_template(const Params& q, int levels, int restarts, Rng& rng) {
    auto ratio_at = [&](double eps, double gamma, int s1, int s2) {
        try {
            return verify_inequality(template_pair(levels, eps, gamma, s1, s2), q).ratio;
        } catch (const HypothesisError&) {
            return -1.0;
        }
    };
    TemplateParams best;
    double best_ratio = -1.0;
    for (int attempt = 0; attempt < std::max(1, restarts); ++attempt) {
        const double eps0 = attempt == 0 ? 0.25 : rng.uniform(0.02, 0.45);
        const double gamma0 = attempt == 0 ? 1.0 : rng.uniform(0.3, 2.5);
        for (const int s1 : {1, -1})
            for (const int s2 : {1, -1}) {
                double e = eps0, g = gamma0;
                for (int round = 0; round < 2; ++round) {
                    e = golden_max([&](double ee) { return ratio_at(ee, g, s1, s2); }, 0.01,
                                   0.49);
                    g = golden_max([&](double gg) { return ratio_at(e, gg, s1, s2); }, 0.05,
                                   3.5);
                }
                const double r = ratio_at(e, g, s1, s2);
                if (r > best_ratio) {
                    best_ratio = r;
                    best = {e, g, s1, s2};
                }
            }
    }
    return best;
}

} // namespace detail

/// Best report per depth d = 1..max_depth, where depth d admits the Haar
/// step plus the self-similar templates of up to d/2 levels.  Entry d is the
/// running best over all candidates of depth <= d, so the ratio sequence is
/// non-decreasing by construction, and every entry was produced by
/// verify_inequality on an explicit pair (the final entry keeps that pair).
inline std::vector<ExtremalResult> extremal_profile(const Params& q, int max_depth,
                                                    int restarts, std::uint64_t seed) {
    if (max_depth < 1 || max_depth > 24)
        throw ShapeError("extremal_profile: depth out of range");
    Rng rng(seed);

    // template parameters per level count (levels above the cap reuse the
    // cap's parameters; the optimization cost grows as 4^levels)
    const int max_levels = max_depth / 2;
    const int level_cap = std::min(max_levels, 6);
    std::vector<detail::TemplateParams> tuned(level_cap + 1);
    for (int lv = 1; lv <= level_cap; ++lv)
        tuned[lv] = detail::optimize_template(q, lv, restarts, rng);

    std::vector<ExtremalResult> out;
    DyadicPair best_pair;
    InequalityReport best_report;
    bool have_best = false;
    auto consider = [&](const DyadicPair& t) {
        const InequalityReport r = verify_inequality(t, q);
        if (!have_best || r.ratio > best_report.ratio) {
            best_pair = t;
            best_report = r;
            have_best = true;
        }
    };

    for (int d = 1; d <= max_depth; ++d) {
        if (d == 1) {
            DyadicPair t;
            t.depth = 1;
            t.dim = 1;
            t.alpha_plus = {0.5, 0.5};
            t.signs = {1, 1};
            t.f_leaves = {Vec2{-1.0, 0.0}, Vec2{1.0, 0.0}};
            t.g_mean = {0.0, 0.0};
            consider(t);
            t.signs[1] = -1;
            consider(t);
        } else if (d % 2 == 0) {
            const int lv = d / 2;
            const detail::TemplateParams& tp = tuned[std::min(lv, level_cap)];
            consider(detail::template_pair(lv, tp.eps, tp.gamma, tp.s1, tp.s2));
        } else {
            // odd depth: same fan with a +-v Haar step as the innermost copy
            const int lv = (d - 1) / 2;
            const detail::TemplateParams& tp = tuned[std::min(lv, level_cap)];
            consider(detail::template_pair(lv, tp.eps, tp.gamma, tp.s1, tp.s2, true));
        }
        ExtremalResult entry;
        entry.depth = d;
        entry.report = best_report;
        out.push_back(std::move(entry));
    }
    out.back().pair = best_pair;
    return out;
}

/// Best pair found over all candidates of depth <= `depth`.
inline ExtremalResult extremal_search(const Params& q, int depth, int restarts,
                                      std::uint64_t seed) {
    auto profile = extremal_profile(q, depth, restarts, seed);
    return std::move(profile.back());
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json pair_to_json(const DyadicPair& t) {
    nlohmann::json j;
    j["depth"] = t.depth;
    j["dim"] = t.dim;
    j["weights"] = std::vector<double>(t.alpha_plus.begin() + 1, t.alpha_plus.end());
    j["signs"] = std::vector<int>(t.signs.begin() + 1, t.signs.end());
    nlohmann::json fl = nlohmann::json::array();
    for (const auto& leaf : t.f_leaves) {
        if (t.dim == 1)
            fl.push_back(leaf[0]);
        else
            fl.push_back({leaf[0], leaf[1]});
    }
    j["f_leaves"] = fl;
    if (t.dim == 1)
        j["g_mean"] = t.g_mean[0];
    else
        j["g_mean"] = {t.g_mean[0], t.g_mean[1]};
    return j;
}

inline DyadicPair pair_from_json(const nlohmann::json& j) {
    DyadicPair t;
    t.depth = j.at("depth").get<int>();
    t.dim = j.value("dim", 1);
    const long n = t.n_leaves();
    t.alpha_plus.assign(n, 0.5);
    t.signs.assign(n, 1);
    t.f_leaves.assign(n, Vec2{0.0, 0.0});
    const auto& wj = j.at("weights");
    const auto& sj = j.at("signs");
    if (static_cast<long>(wj.size()) != n - 1 || static_cast<long>(sj.size()) != n - 1)
        throw ShapeError("pair_from_json: weight/sign count mismatch");
    for (long k = 1; k < n; ++k) {
        t.alpha_plus[k] = wj[k - 1].get<double>();
        t.signs[k] = sj[k - 1].get<int>();
    }
    const auto& fj = j.at("f_leaves");
    if (static_cast<long>(fj.size()) != n) throw ShapeError("pair_from_json: leaf count mismatch");
    for (long k = 0; k < n; ++k) {
        if (t.dim == 1)
            t.f_leaves[k] = {fj[k].get<double>(), 0.0};
        else
            t.f_leaves[k] = {fj[k][0].get<double>(), fj[k][1].get<double>()};
    }
    if (t.dim == 1)
        t.g_mean = {j.at("g_mean").get<double>(), 0.0};
    else
        t.g_mean = {j.at("g_mean")[0].get<double>(), j.at("g_mean")[1].get<double>()};
    t.validate();
    return t;
}

} // namespace bellman_sharp
