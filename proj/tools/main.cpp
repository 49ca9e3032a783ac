// bellman-sharp: evaluations, audits, fuzzing campaigns, envelope and
// characteristic exports for the sharp quadratic perturbation of the
// martingale transform.
//
// Exit codes: 0 success / audit pass; 1 audit failure (first witness on
// stderr); 2 domain error; 3 convergence error; 4 region error;
// 5 hypothesis error; 6 shape/grid error; 64 usage or config error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellman_sharp/bellman.hpp"
#include "bellman_sharp/concavity.hpp"
#include "bellman_sharp/majorant.hpp"
#include "bellman_sharp/martingale.hpp"
#include "bellman_sharp/parallel.hpp"
#include "bellman_sharp/report.hpp"
#include "bellman_sharp/rng.hpp"

using namespace bellman_sharp;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RunConfig {
    double p = 3.0;
    double tau = 0.0;
    std::string x = "0,0,1";
    long samples = 100000;
    long n = 10000;
    int depth = 10;
    int restarts = 2;
    std::uint64_t seed = 1;
    double L = 1.0;
    double h = 1.0 / 256.0;
    int dim = 1;
    bool adversarial = false;
    double y1 = 1.0;
    int count = 24;
    int threads = 0;
    std::string out;
    std::map<std::string, double> tol;
};

// flags win over the JSON config: the config seeds the defaults before parse
void apply_config_file(int argc, char** argv, RunConfig& c) {
    std::string path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") path = argv[i + 1];
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config file not readable: " + path);
    json j = json::parse(in);
    if (j.contains("p")) c.p = j["p"].get<double>();
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    if (j.contains("x")) c.x = j["x"].get<std::string>();
    if (j.contains("samples")) c.samples = j["samples"].get<long>();
    if (j.contains("n")) c.n = j["n"].get<long>();
    if (j.contains("depth")) c.depth = j["depth"].get<int>();
    if (j.contains("restarts")) c.restarts = j["restarts"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("L")) c.L = j["L"].get<double>();
    if (j.contains("h")) c.h = j["h"].get<double>();
    if (j.contains("dim")) c.dim = j["dim"].get<int>();
    if (j.contains("adversarial")) c.adversarial = j["adversarial"].get<bool>();
    if (j.contains("y1")) c.y1 = j["y1"].get<double>();
    if (j.contains("count")) c.count = j["count"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("tol"))
        for (auto& [k, v] : j["tol"].items()) c.tol[k] = v.get<double>();
}

PointX parse_point(const std::string& s) {
    PointX x;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &x.x1, &x.x2, &x.x3) != 3)
        throw std::runtime_error("--x expects three comma-separated reals");
    return x;
}

std::unique_ptr<std::ofstream> file_sink;
std::ostream& out_stream(const RunConfig& c) {
    if (c.out.empty()) return std::cout;
    file_sink = std::make_unique<std::ofstream>(c.out);
    if (!*file_sink) throw std::runtime_error("cannot open output file: " + c.out);
    return *file_sink;
}

double tol_or(const RunConfig& c, const std::string& key, double fallback) {
    auto it = c.tol.find(key);
    return it == c.tol.end() ? fallback : it->second;
}

// ---------------------------------------------------------------- commands

int cmd_eval(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    const PointX x = parse_point(c.x);
    const BellmanValue v = bellman_eval(x, q);
    json j{{"p", c.p},
           {"tau", c.tau},
           {"x", {x.x1, x.x2, x.x3}},
           {"value", v.value},
           {"omega", v.omega},
           {"beta", v.beta},
           {"b", v.b},
           {"region", to_string(v.region)},
           {"residual", v.residual},
           {"iterations", v.iterations}};
    out_stream(c) << j.dump(2) << "\n";
    return 0;
}

int finish_audits(const RunConfig& c, const std::vector<AuditReport>& reports) {
    json j = json::array();
    for (const auto& r : reports) j.push_back(r.to_json());
    out_stream(c) << j.dump(2) << "\n";
    for (const auto& r : reports)
        if (!r.pass()) {
            std::fprintf(stderr,
                         "FAIL %s (p=%g tau=%g): %ld/%ld, worst %.17g at (%.17g, %.17g, %.17g)\n",
                         r.kind.c_str(), r.p, r.tau, r.n_fail, r.n_samples, r.worst_value,
                         r.worst_witness[0], r.worst_witness[1], r.worst_witness[2]);
            return 1;
        }
    return 0;
}

int cmd_audit_concavity(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    std::vector<AuditReport> reports;
    if (q.is_p2()) {
        AuditReport rep;
        rep.kind = "signs-p2";
        rep.p = c.p;
        rep.tau = c.tau;
        rep.note = "skipped: closed form at p = 2, no characteristic machinery";
        reports.push_back(rep);
    } else {
        reports.push_back(sector_sign_audit(q, c.samples, c.seed));
        // finite-difference cross-check on a smaller interior batch
        AuditReport fdrep;
        fdrep.kind = "fd-agreement";
        fdrep.p = c.p;
        fdrep.tau = c.tau;
        Rng rng(c.seed + 1);
        const long nfd = std::min<long>(1000, std::max<long>(50, c.samples / 100));
        const double rel = tol_or(c, "fd_rel", 1e-3);
        for (long i = 0; i < nfd; ++i) {
            const PointY y = sample_implicit_sector_fd(q, rng, i, nfd);
            const SecondDerivs sd = second_derivs_implicit(y, q);
            const FdSecondDerivs fd = fd_second_derivs(y, q, 1e-4);
            const double floor =
                1e-8 * (1.0 + std::fabs(fd.m11) + std::fabs(fd.m22) + std::fabs(fd.m33));
            double worst = 0.0;
            const double pairs[5][2] = {{sd.m33, fd.m33},
                                        {sd.m3i, fd.m13},
                                        {sd.mii, fd.m11},
                                        {sd.m22, fd.m22},
                                        {sd.m32, fd.m23}};
            for (const auto& pr : pairs)
                worst = std::max(worst, std::fabs(pr[0] - pr[1]) /
                                            std::max(rel * std::fabs(pr[1]), floor));
            const double lam_rel = std::fabs(sd.suite.lambda - sd.suite.lambda_from_phi) /
                                   (std::fabs(sd.suite.lambda) + 1e-300);
            fdrep.record(worst > 1.0 || lam_rel > 1e-10, worst, {y.y1, y.y2, y.y3});
        }
        reports.push_back(fdrep);
    }
    return finish_audits(c, reports);
}

int cmd_audit_rejected(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    std::vector<AuditReport> reports{rejected_case_audit(CaseId::C1_1, q, c.samples, c.seed),
                                     rejected_case_audit(CaseId::C3_1, q, c.samples, c.seed + 1)};
    return finish_audits(c, reports);
}

int cmd_audit_glue(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    AuditReport rep;
    rep.kind = "glue";
    rep.p = c.p;
    rep.tau = c.tau;
    if (q.is_p2()) {
        rep.note = "skipped: p = 2 closed form has no gluing line";
        return finish_audits(c, {rep});
    }
    Rng rng(c.seed);
    const double k = q.p_star_minus_1;
    const double tol_val = tol_or(c, "glue_value", 1e-10);
    const double tol_c1 = tol_or(c, "glue_c1", 1e-5);
    for (long i = 0; i < std::max(1L, c.samples / 10); ++i) {
        const double x1 = rng.uniform(0.05, 1.0);
        const double x3 = pow_pos(x1, q.p) * (1.0 + std::exp(rng.uniform(-6.0, 3.0)));
        const double ev = explicit_value({x1, k * x1, x3}, q).value;
        const double iv = implicit_solve({x1, k * x1, x3}, q).value;
        const double ref = q.c_sharp * x3;
        const double mis = std::max(std::fabs(ev - ref), std::fabs(iv - ref)) / ref;
        bool bad = mis > tol_val;
        // C1 contact across the line
        const double h = 1e-7 * x1;
        const double b_in = bellman_eval({x1, k * x1 + h, x3}, q).value;
        const double b_out = bellman_eval({x1, k * x1 - h, x3}, q).value;
        bad = bad || std::fabs(b_in - b_out) > tol_c1 * ref;
        rep.record(bad, mis, {x1, k * x1, x3});
    }
    return finish_audits(c, {rep});
}

int cmd_audit_majorant(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    Rng rng(c.seed);
    AuditReport rep;
    rep.kind = "majorant";
    rep.p = c.p;
    rep.tau = c.tau;
    for (long i = 0; i < c.samples; ++i) {
        const double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
        const double slack = eval_U(x, y, q) - eval_v(x, y, q);
        bool bad = slack < -1e-12;
        const double d = rng.uniform(0.0, 0.5);
        const double scale = 1.0 + std::fabs(eval_U(x, y, q));
        const double mid1 =
            2.0 * eval_U(x, y, q) - eval_U(x + d, y + d, q) - eval_U(x - d, y - d, q);
        const double mid2 =
            2.0 * eval_U(x, y, q) - eval_U(x + d, y - d, q) - eval_U(x - d, y + d, q);
        bad = bad || mid1 < -1e-9 * scale || mid2 < -1e-9 * scale;
        rep.record(bad, -std::min({slack, mid1, mid2}), {x, y, d});
    }
    return finish_audits(c, {rep});
}

int cmd_audit_supermartingale(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    AuditReport total;
    total.kind = "supermartingale";
    total.p = c.p;
    total.tau = c.tau;
    const long n = std::max(1L, c.n);
    std::vector<AuditReport> parts(n);
    parallel_for(
        n,
        [&](long i, int) {
            Rng rng(c.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
            const int depth = 1 + static_cast<int>(rng.below(std::max(1, c.depth)));
            const int dim = 1 + static_cast<int>(rng.below(2));
            const DyadicPair t = random_pair(depth, dim, q, rng, c.adversarial);
            parts[i] = u_level_audit(t, q);
        },
        c.threads);
    for (const auto& r : parts) total.merge(r);
    return finish_audits(c, {total});
}

int cmd_fuzz(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    const long n = c.n;
    struct Row {
        int depth;
        InequalityReport r;
    };
    std::vector<Row> rows(n);
    parallel_for(
        n,
        [&](long i, int) {
            Rng rng(c.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
            const int depth = 1 + static_cast<int>(rng.below(std::max(1, c.depth)));
            const int dim = c.dim == 2 ? 2 : (c.dim == 1 ? 1 : 1 + static_cast<int>(rng.below(2)));
            const DyadicPair t = random_pair(depth, dim, q, rng, c.adversarial);
            rows[i] = {depth, verify_inequality(t, q)};
        },
        c.threads);
    std::ostream& os = out_stream(c);
    os << "p,tau,depth,seed,lhs,rhs,ratio,slack\n";
    double min_slack = 0.0;
    for (long i = 0; i < n; ++i) {
        const auto& r = rows[i].r;
        os << fmt17(c.p) << ',' << fmt17(c.tau) << ',' << rows[i].depth << ',' << c.seed << ','
           << fmt17(r.lhs) << ',' << fmt17(r.rhs) << ',' << fmt17(r.ratio) << ','
           << fmt17(r.slack) << "\n";
        min_slack = std::min(min_slack, r.slack / (1.0 + r.rhs));
    }
    std::fprintf(stderr, "min normalized slack: %.17g over %ld pairs\n", min_slack, n);
    return min_slack >= -1e-9 ? 0 : 1;
}

int cmd_extremal(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    const auto profile = extremal_profile(q, c.depth, c.restarts, c.seed);
    std::ostream& os = out_stream(c);
    os << "p,tau,depth,seed,lhs,rhs,ratio,slack\n";
    for (const auto& e : profile)
        os << fmt17(c.p) << ',' << fmt17(c.tau) << ',' << e.depth << ',' << c.seed << ','
           << fmt17(e.report.lhs) << ',' << fmt17(e.report.rhs) << ',' << fmt17(e.report.ratio)
           << ',' << fmt17(e.report.slack) << "\n";
    std::fprintf(stderr, "best ratio %.17g of sharp constant %.17g\n",
                 profile.back().report.ratio, q.c_sharp);
    return 0;
}

int cmd_envelope(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    const double tol = tol_or(c, "envelope_stop", 1e-10);
    EnvelopeResult res =
        zigzag_concavify(make_majorant_obstacle(q, c.L, c.h), tol, 100000, c.threads);
    double worst = 0.0;
    for (int ix = 0; ix < res.grid.n; ++ix)
        for (int iy = 0; iy < res.grid.n; ++iy)
            worst = std::max(worst, std::fabs(res.grid.at(ix, iy) -
                                              eval_U(res.grid.x_of(ix), res.grid.y_of(iy), q)));
    write_grid_csv(res.grid, out_stream(c));
    std::fprintf(stderr, "sweeps %ld, last update %.3g, max deviation from analytic %.17g\n",
                 res.sweeps, res.last_update, worst);
    return 0;
}

int cmd_characteristics(const RunConfig& c) {
    const Params q = Params::make(c.p, c.tau);
    if (q.is_p2()) throw RegionError("characteristics: p = 2 has no characteristic fan");
    std::ostream& os = out_stream(c);
    os << "branch,line_id,y1,y2,y3\n";
    const double y1 = c.y1;
    const double glue = (q.p > 2.0 ? (q.p - 2.0) : -(2.0 - q.p)) / q.p * y1;
    const double cc = -std::fabs(q.p - 2.0) / q.p * y1;
    const int pts = 33;
    // implicit fan: straight lines from the boundary foot to the sector wall
    for (int i = 0; i < c.count; ++i) {
        const double fr = (i + 0.5) / c.count;
        const double u = q.p > 2.0 ? glue + fr * (y1 * 0.999 - glue)
                                   : -y1 * 0.999 + fr * (glue + y1 * 0.999);
        const double wall = q.p > 2.0 ? y1 : -y1;
        for (int k = 0; k < pts; ++k) {
            const double y2 = u + (wall - u) * k / (pts - 1.0);
            const double y3 = (y2 + cc) * pow_pos(y1 - u, q.p) / (u + cc);
            os << "implicit," << i << ',' << fmt17(y1) << ',' << fmt17(y2) << ',' << fmt17(y3)
               << "\n";
        }
    }
    // explicit side: characteristics parallel to the y3 axis
    for (int i = 0; i < c.count; ++i) {
        const double fr = (i + 0.5) / c.count;
        const double y2 = q.p > 2.0 ? -y1 + fr * (glue + y1) : glue + fr * (y1 - glue);
        const double base = pow_pos(y1 - y2, q.p);
        for (int k = 0; k < pts; ++k)
            os << "explicit," << i << ',' << fmt17(y1) << ',' << fmt17(y2) << ','
               << fmt17(base * (1.0 + 3.0 * k / (pts - 1.0))) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sharp-constant laboratory for the quadratically perturbed martingale transform"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    RunConfig c;
    try {
        apply_config_file(argc, argv, c);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 64;
    }

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags win on conflict)");
    app.add_option("--threads", c.threads,
                   "worker threads (default: BELLMAN_SHARP_THREADS or logical processors)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--p", c.p, "exponent p > 1");
        sub->add_option("--tau", c.tau, "perturbation tau");
        sub->add_option("--seed", c.seed, "RNG seed");
        sub->add_option("--out", c.out, "output file (default stdout)");
        sub->add_option("--tol", c.tol, "tolerance overrides key=value");
    };

    CLI::App* eval = app.add_subcommand("eval", "evaluate the Bellman function at a point");
    add_common(eval);
    eval->add_option("--x", c.x, "point x1,x2,x3");

    CLI::App* audit = app.add_subcommand("audit", "run an audit suite");
    audit->require_subcommand(1);
    audit->fallthrough();
    CLI::App* a_conc = audit->add_subcommand("concavity", "implicit-branch sign tables + FD");
    CLI::App* a_rej = audit->add_subcommand("rejected-cases", "D2 < 0 scans");
    CLI::App* a_glue = audit->add_subcommand("glue", "gluing-line agreement");
    CLI::App* a_maj = audit->add_subcommand("majorant", "U >= v and zigzag concavity");
    CLI::App* a_super = audit->add_subcommand("supermartingale", "level averages of U");
    for (CLI::App* sub : {a_conc, a_rej, a_glue, a_maj}) {
        add_common(sub);
        sub->add_option("--samples", c.samples, "sample count");
    }
    add_common(a_super);
    a_super->add_option("--n", c.n, "number of simulated pairs");
    a_super->add_option("--depth", c.depth, "maximum tree depth");

    CLI::App* fuzz = app.add_subcommand("fuzz", "random dyadic pairs through the inequality");
    add_common(fuzz);
    fuzz->add_option("--n", c.n, "number of pairs");
    fuzz->add_option("--depth", c.depth, "maximum tree depth");
    fuzz->add_option("--dim", c.dim, "value dimension 1 or 2 (0 = mixed)");
    fuzz->add_flag("--adversarial", c.adversarial, "sample means near the gluing ray");

    CLI::App* extremal = app.add_subcommand("extremal", "near-extremal pair search");
    add_common(extremal);
    extremal->add_option("--depth", c.depth, "maximum tree depth (<= 24)");
    extremal->add_option("--restarts", c.restarts, "search restarts");

    CLI::App* envelope = app.add_subcommand("envelope", "zigzag-biconcave envelope of v");
    envelope->set_help_flag("--help", "print help");  // frees -h for the grid step
    add_common(envelope);
    envelope->add_option("--L", c.L, "half-width of the grid window");
    envelope->add_option("--h", c.h, "grid step");

    CLI::App* chars = app.add_subcommand("characteristics", "sector fans as polyline CSV");
    add_common(chars);
    chars->add_option("--y1", c.y1, "fixed y1 of the fan plane");
    chars->add_option("--count", c.count, "lines per family");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 64;
    }

    try {
        if (*eval) return cmd_eval(c);
        if (*a_conc) return cmd_audit_concavity(c);
        if (*a_rej) return cmd_audit_rejected(c);
        if (*a_glue) return cmd_audit_glue(c);
        if (*a_maj) return cmd_audit_majorant(c);
        if (*a_super) return cmd_audit_supermartingale(c);
        if (*fuzz) return cmd_fuzz(c);
        if (*extremal) return cmd_extremal(c);
        if (*envelope) return cmd_envelope(c);
        if (*chars) return cmd_characteristics(c);
    } catch (const DomainError& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return 2;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "convergence error: %s\n", e.what());
        return 3;
    } catch (const RegionError& e) {
        std::fprintf(stderr, "region error: %s\n", e.what());
        return 4;
    } catch (const HypothesisError& e) {
        std::fprintf(stderr, "hypothesis error: %s\n", e.what());
        return 5;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "shape error: %s\n", e.what());
        return 6;
    } catch (const GridError& e) {
        std::fprintf(stderr, "grid error: %s\n", e.what());
        return 6;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 64;
    }
    return 64;
}
