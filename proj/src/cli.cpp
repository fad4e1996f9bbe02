#include "douba/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "douba/barycenter.hpp"
#include "douba/gaussian.hpp"
#include "douba/io.hpp"
#include "douba/npgd.hpp"
#include "douba/parallel.hpp"
#include "douba/rng.hpp"

namespace douba {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

json load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw InvalidInputError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InvalidInputError("config " + path.string() + ": not an object");
    return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw InvalidInputError(ctx + ": unknown key '" + it.key() + "'");
        }
    }
}

const json& need(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw InvalidInputError(ctx + ": missing key '" + key + "'");
    return *it;
}

double need_number(const json& j, const char* key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_number()) throw InvalidInputError(ctx + ": key '" + key + "' must be a number");
    return v.get<double>();
}

double opt_number(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<double>();
}

int opt_int(const json& j, const char* key, int fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<int>();
}

Vector vector_from(const json& v, const char* key, const std::string& ctx) {
    if (!v.is_array() || v.empty()) {
        throw InvalidInputError(ctx + ": key '" + std::string(key) + "' must be a nonempty array");
    }
    Vector out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    return out;
}

BoxDomain box_from(const json& j, const std::string& ctx) {
    const json& b = need(j, "box", ctx);
    return BoxDomain(vector_from(need(b, "lo", ctx + ".box"), "lo", ctx + ".box"),
                     vector_from(need(b, "hi", ctx + ".box"), "hi", ctx + ".box"));
}

std::vector<int> cells_from(const json& j, int dim, const std::string& ctx) {
    const json& c = need(j, "grid_cells", ctx);
    std::vector<int> cells;
    if (c.is_number_integer()) {
        cells.assign(dim, c.get<int>());
    } else if (c.is_array()) {
        for (const auto& v : c) cells.push_back(v.get<int>());
    }
    if (static_cast<int>(cells.size()) != dim) {
        throw InvalidInputError(ctx + ": key 'grid_cells' must give one count per axis");
    }
    return cells;
}

fs::path resolve(const fs::path& config_path, const std::string& rel) {
    fs::path p(rel);
    if (p.is_absolute()) return p;
    return config_path.parent_path() / p;
}

std::vector<DiscreteMeasure> load_marginals(const json& j, const fs::path& config_path,
                                            const std::string& ctx) {
    const json& list = need(j, "marginals", ctx);
    if (!list.is_array() || list.empty()) {
        throw InvalidInputError(ctx + ": key 'marginals' must be a nonempty array of paths");
    }
    std::vector<DiscreteMeasure> out;
    out.reserve(list.size());
    for (const auto& item : list) {
        const fs::path p = resolve(config_path, item.get<std::string>());
        if (!fs::exists(p)) {
            throw InvalidInputError(ctx + ": marginal file not found: " + p.string());
        }
        out.push_back(read_measure_csv(p));
    }
    return out;
}

void write_summary(const fs::path& out_dir, const json& j) {
    write_text_file(out_dir / "summary.json", j.dump(2) + "\n");
}

void write_barycenter_trace(const fs::path& path, const std::vector<BarycenterTraceRow>& rows) {
    std::ostringstream out;
    out << "iter,objective,grad_norm,certificate_upper\n";
    for (const auto& r : rows) {
        out << r.iter << "," << format_double(r.objective) << "," << format_double(r.grad_norm)
            << "," << format_double(r.certificate_upper) << "\n";
    }
    write_text_file(path, out.str());
}

int run_guarded(const char* name, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        std::cerr << name << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << name << ": " << e.what() << "\n";
        return 1;
    }
}

struct GridProblem {
    BarycenterProblem problem;
    Grid grid;
};

GridProblem grid_problem_from(const json& j, const fs::path& config_path, const std::string& ctx) {
    BoxDomain box = box_from(j, ctx);
    Grid grid(box, cells_from(j, box.dim(), ctx));
    BarycenterProblem problem(load_marginals(j, config_path, ctx),
                              vector_from(need(j, "weights", ctx), "weights", ctx),
                              need_number(j, "lambda", ctx), need_number(j, "tau", ctx),
                              CostFunction::squared_half(), box);
    return GridProblem{std::move(problem), std::move(grid)};
}

}  // namespace

// ---------------------------------------------------------------------------
// barycenter

int cmd_barycenter(const CliOptions& opts) {
    return run_guarded("barycenter", [&]() -> int {
        const auto t0 = Clock::now();
        const std::string ctx = "barycenter config";
        json j = load_config(opts.config_path);
        check_keys(j,
                   {"marginals", "weights", "lambda", "tau", "box", "grid_cells", "solver", "step",
                    "tol", "max_iter"},
                   ctx);
        auto gp = grid_problem_from(j, opts.config_path, ctx);
        const std::string solver = need(j, "solver", ctx).get<std::string>();
        const double tol = opt_number(j, "tol", 1e-9);
        const int max_iter = opt_int(j, "max_iter", 100000);

        fs::create_directories(opts.out_dir);
        bool converged = false;
        int iterations = 0;
        double objective = 0.0;
        double certificate_upper = 0.0;
        DiscreteMeasure bary = gp.grid.uniform_measure();
        std::vector<BarycenterTraceRow> trace_rows;

        if (solver == "dual_ascent") {
            DualAscentOptions dopts;
            dopts.step = opt_number(j, "step", 0.0);
            dopts.tol = tol;
            dopts.max_iter = max_iter;
            if (opts.trace) {
                dopts.trace_certificate = true;
                dopts.trace = [&](const BarycenterTraceRow& r) { trace_rows.push_back(r); };
            }
            DualAscentResult res = solve_dual_ascent(gp.problem, gp.grid, dopts);
            converged = res.converged;
            iterations = res.iterations;
            objective = res.state.objective;
            certificate_upper = res.certificate_upper;
            bary = res.barycenter;
        } else if (solver == "alternating") {
            AlternatingResult res =
                solve_alternating_tau_eq_lambda(gp.problem, gp.grid, tol, max_iter);
            converged = res.converged;
            iterations = res.iterations;
            certificate_upper =
                suboptimality_certificate(res.barycenter, gp.problem, tol, max_iter).upper;
            objective = -primal_objective(res.barycenter, gp.problem, tol, max_iter);
            bary = res.barycenter;
        } else {
            throw InvalidInputError(ctx + ": key 'solver' must be dual_ascent or alternating");
        }

        write_measure_csv(opts.out_dir / "barycenter.csv", bary);
        if (opts.trace) write_barycenter_trace(opts.out_dir / "trace.csv", trace_rows);
        json summary;
        summary["objective"] = objective;
        summary["certificate_upper"] = certificate_upper;
        summary["iterations"] = iterations;
        summary["wall_time_ms"] = elapsed_ms(t0);
        summary["converged"] = converged;
        summary["solver"] = solver;
        write_summary(opts.out_dir, summary);
        return converged ? 0 : 2;
    });
}

// ---------------------------------------------------------------------------
// npgd

int cmd_npgd(const CliOptions& opts) {
    return run_guarded("npgd", [&]() -> int {
        const auto t0 = Clock::now();
        const std::string ctx = "npgd config";
        json j = load_config(opts.config_path);
        check_keys(j,
                   {"m", "eta", "lambda", "tau", "iterations", "seed", "box", "marginals",
                    "weights", "init", "eot_tol", "eot_max_iter"},
                   ctx);
        BoxDomain box = box_from(j, ctx);
        const double lambda = need_number(j, "lambda", ctx);
        const double tau = need_number(j, "tau", ctx);
        BarycenterProblem problem(load_marginals(j, opts.config_path, ctx),
                                  vector_from(need(j, "weights", ctx), "weights", ctx), lambda,
                                  tau, CostFunction::squared_half(), box);
        const fs::path init_path =
            resolve(opts.config_path, need(j, "init", ctx).get<std::string>());
        if (!fs::exists(init_path)) {
            throw InvalidInputError(ctx + ": init file not found: " + init_path.string());
        }
        NpgdConfig config(static_cast<int>(need_number(j, "m", ctx)), need_number(j, "eta", ctx),
                          lambda, tau, static_cast<int>(need_number(j, "iterations", ctx)),
                          static_cast<std::uint64_t>(need_number(j, "seed", ctx)),
                          read_measure_csv(init_path));
        config.eot_tol = opt_number(j, "eot_tol", 1e-9);
        config.eot_max_iter = opt_int(j, "eot_max_iter", 100000);

        fs::create_directories(opts.out_dir);
        std::function<void(int, const ParticleCloud&)> snapshot;
        if (opts.snapshot_every > 0) {
            snapshot = [&](int iter, const ParticleCloud& cloud) {
                if (iter % opts.snapshot_every != 0) return;
                char name[32];
                std::snprintf(name, sizeof(name), "cloud_%06d.csv", iter);
                write_measure_csv(opts.out_dir / name, cloud.measure());
            };
        }

        int exit_code = 0;
        NpgdResult res{ParticleCloud{Matrix::Zero(1, box.dim()), box, 0}, {}};
        try {
            res = npgd_run(problem, config, snapshot);
        } catch (const NumericalError& e) {
            std::cerr << "npgd: " << e.what() << "\n";
            exit_code = 2;
        }
        write_measure_csv(opts.out_dir / "cloud.csv", res.cloud.measure());
        std::ostringstream trace;
        trace << "iter,G_lambda,drift_sup,mean_disp\n";
        for (const auto& r : res.trace) {
            trace << r.iter << "," << format_double(r.g_lambda) << ","
                  << format_double(r.drift_sup) << "," << format_double(r.mean_disp) << "\n";
        }
        write_text_file(opts.out_dir / "trace.csv", trace.str());
        json summary;
        summary["iterations"] = static_cast<int>(res.trace.size());
        summary["final_g_lambda"] = res.trace.empty() ? 0.0 : res.trace.back().g_lambda;
        summary["wall_time_ms"] = elapsed_ms(t0);
        write_summary(opts.out_dir, summary);
        return exit_code;
    });
}

// ---------------------------------------------------------------------------
// rate-study

int cmd_rate_study(const CliOptions& opts) {
    return run_guarded("rate-study", [&]() -> int {
        const auto t0 = Clock::now();
        const std::string ctx = "rate-study config";
        json j = load_config(opts.config_path);
        check_keys(j,
                   {"marginals", "weights", "lambda", "tau", "box", "grid_cells", "n_list",
                    "trials", "seed", "step", "tol", "max_iter"},
                   ctx);
        auto gp = grid_problem_from(j, opts.config_path, ctx);
        std::vector<int> n_list;
        for (const auto& v : need(j, "n_list", ctx)) n_list.push_back(v.get<int>());
        const int trials = static_cast<int>(need_number(j, "trials", ctx));
        const auto seed = static_cast<std::uint64_t>(need_number(j, "seed", ctx));
        if (n_list.empty() || trials < 1) {
            throw InvalidInputError(ctx + ": keys 'n_list' and 'trials' must be nonempty/positive");
        }

        DualAscentOptions dopts;
        dopts.step = opt_number(j, "step", 0.0);
        dopts.tol = opt_number(j, "tol", 1e-9);
        dopts.max_iter = opt_int(j, "max_iter", 100000);

        const DiscreteMeasure mu_star = solve_dual_ascent(gp.problem, gp.grid, dopts).barycenter;

        const int K = gp.problem.k_count();
        const int jobs = static_cast<int>(n_list.size()) * trials;
        std::vector<double> kl(jobs, 0.0);
        parallel_for(jobs, [&](int job) {
            const int ni = job / trials;
            std::vector<DiscreteMeasure> empirical;
            empirical.reserve(K);
            for (int k = 0; k < K; ++k) {
                empirical.push_back(
                    sample(gp.problem.marginals[k], n_list[static_cast<size_t>(ni)],
                           mix_seed(seed, static_cast<std::uint64_t>(job) * K + k + 1)));
            }
            BarycenterProblem hat(std::move(empirical), gp.problem.weights, gp.problem.lambda,
                                  gp.problem.tau, gp.problem.cost, gp.problem.domain);
            const DiscreteMeasure mu_hat = solve_dual_ascent(hat, gp.grid, dopts).barycenter;
            kl[job] = relative_entropy(mu_hat, mu_star);
        });

        fs::create_directories(opts.out_dir);
        std::ostringstream csv;
        csv << "n,trial,kl\n";
        for (int job = 0; job < jobs; ++job) {
            csv << n_list[static_cast<size_t>(job / trials)] << "," << (job % trials) << ","
                << format_double(kl[job]) << "\n";
        }
        write_text_file(opts.out_dir / "rates.csv", csv.str());

        // Log-log slope of the trial means.
        std::vector<double> xs, ys, means;
        for (size_t i = 0; i < n_list.size(); ++i) {
            double mean = 0.0;
            for (int t = 0; t < trials; ++t) mean += kl[static_cast<int>(i) * trials + t];
            mean /= trials;
            means.push_back(mean);
            xs.push_back(std::log(static_cast<double>(n_list[i])));
            ys.push_back(std::log(std::max(mean, 1e-300)));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

        json summary;
        summary["slope"] = slope;
        summary["n"] = n_list;
        summary["mean_kl"] = means;
        summary["wall_time_ms"] = elapsed_ms(t0);
        write_summary(opts.out_dir, summary);
        return 0;
    });
}

// ---------------------------------------------------------------------------
// gaussian-map

namespace {

std::string heat_color(double t) {
    // Two-segment ramp dark blue -> teal -> yellow.
    t = std::clamp(t, 0.0, 1.0);
    auto lerp = [](int a, int b, double s) { return static_cast<int>(a + (b - a) * s + 0.5); };
    int r, g, b;
    if (t < 0.5) {
        const double s = t / 0.5;
        r = lerp(0x20, 0x1f, s);
        g = lerp(0x22, 0x9e, s);
        b = lerp(0x5e, 0x89, s);
    } else {
        const double s = (t - 0.5) / 0.5;
        r = lerp(0x1f, 0xf5, s);
        g = lerp(0x9e, 0xe6, s);
        b = lerp(0x89, 0x36, s);
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string heatmap_svg(double a, const std::vector<double>& lams, const std::vector<double>& taus,
                        const std::vector<std::vector<double>>& val) {
    const int W = 640, H = 480, ML = 60, MB = 40, MT = 20, MR = 20;
    const double pw = static_cast<double>(W - ML - MR) / lams.size();
    const double ph = static_cast<double>(H - MT - MB) / taus.size();
    double vmax = 0.0;
    for (const auto& row : val) {
        for (double v : row) vmax = std::max(vmax, v);
    }
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n";
    for (size_t i = 0; i < lams.size(); ++i) {
        for (size_t jt = 0; jt < taus.size(); ++jt) {
            const double x = ML + i * pw;
            const double y = H - MB - (jt + 1) * ph;
            const double t = vmax > 0 ? std::sqrt(val[i][jt] / vmax) : 0.0;
            s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << pw + 0.5
              << "\" height=\"" << ph + 0.5 << "\" fill=\"" << heat_color(t) << "\"/>\n";
        }
    }
    // tau*(lambda) overlay
    s << "<polyline fill=\"none\" stroke=\"white\" stroke-width=\"2\" points=\"";
    const double lmax = lams.back(), tmax = taus.back();
    for (size_t i = 0; i < lams.size(); ++i) {
        const double ts = tau_star(a, lams[i]);
        if (ts < 0 || ts > tmax) continue;
        const double x = ML + (lmax > 0 ? lams[i] / lmax : 0.0) * (W - ML - MR);
        const double y = H - MB - (tmax > 0 ? ts / tmax : 0.0) * (H - MT - MB);
        s << x << "," << y << " ";
    }
    s << "\"/>\n";
    s << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << (W - ML - MR) << "\" height=\""
      << (H - MT - MB) << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 8) << "\">lambda (0.." << lmax
      << ")</text>\n";
    s << "<text x=\"12\" y=\"" << (H / 2) << "\" transform=\"rotate(-90 12 " << (H / 2)
      << ")\">tau (0.." << tmax << ")</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace

int cmd_gaussian_map(const CliOptions& opts) {
    return run_guarded("gaussian-map", [&]() -> int {
        const std::string ctx = "gaussian-map config";
        json j = load_config(opts.config_path);
        check_keys(j,
                   {"a", "lambda_min", "lambda_max", "lambda_count", "tau_min", "tau_max",
                    "tau_count", "svg"},
                   ctx);
        const double a = opt_number(j, "a", 1.0);
        const double lmin = opt_number(j, "lambda_min", 0.0);
        const double lmax = need_number(j, "lambda_max", ctx);
        const int lcount = static_cast<int>(need_number(j, "lambda_count", ctx));
        const double tmin = opt_number(j, "tau_min", 0.0);
        const double tmax = need_number(j, "tau_max", ctx);
        const int tcount = static_cast<int>(need_number(j, "tau_count", ctx));
        if (lcount < 2 || tcount < 2) {
            throw InvalidInputError(ctx + ": lambda_count and tau_count must be >= 2");
        }

        std::vector<double> lams(lcount), taus(tcount);
        for (int i = 0; i < lcount; ++i) lams[i] = lmin + (lmax - lmin) * i / (lcount - 1);
        for (int i = 0; i < tcount; ++i) taus[i] = tmin + (tmax - tmin) * i / (tcount - 1);

        std::vector<std::vector<double>> val(lcount, std::vector<double>(tcount));
        parallel_for(lcount, [&](int i) {
            for (int t = 0; t < tcount; ++t) {
                val[i][t] = gaussian_w2_iso(a, barycenter_variance(a, lams[i], taus[t]));
            }
        });

        fs::create_directories(opts.out_dir);
        std::ostringstream heat;
        heat << "lambda,tau,w2_distance\n";
        for (int i = 0; i < lcount; ++i) {
            for (int t = 0; t < tcount; ++t) {
                heat << format_double(lams[i]) << "," << format_double(taus[t]) << ","
                     << format_double(val[i][t]) << "\n";
            }
        }
        write_text_file(opts.out_dir / "heatmap.csv", heat.str());

        std::ostringstream curve;
        curve << "lambda,tau_star\n";
        for (int i = 0; i < lcount; ++i) {
            curve << format_double(lams[i]) << "," << format_double(tau_star(a, lams[i])) << "\n";
        }
        write_text_file(opts.out_dir / "tau_star.csv", curve.str());

        if (j.value("svg", false)) {
            write_text_file(opts.out_dir / "heatmap.svg", heatmap_svg(a, lams, taus, val));
        }
        return 0;
    });
}

// ---------------------------------------------------------------------------
// stability-probe

int cmd_stability_probe(const CliOptions& opts) {
    return run_guarded("stability-probe", [&]() -> int {
        const auto t0 = Clock::now();
        const std::string ctx = "stability-probe config";
        json j = load_config(opts.config_path);
        check_keys(j,
                   {"marginals", "weights", "lambda", "tau", "box", "grid_cells", "deltas",
                    "seed", "step", "tol", "max_iter"},
                   ctx);
        auto gp = grid_problem_from(j, opts.config_path, ctx);
        std::vector<double> deltas;
        for (const auto& v : need(j, "deltas", ctx)) deltas.push_back(v.get<double>());
        const auto seed = static_cast<std::uint64_t>(need_number(j, "seed", ctx));

        DualAscentOptions dopts;
        dopts.step = opt_number(j, "step", 0.0);
        dopts.tol = opt_number(j, "tol", 1e-9);
        dopts.max_iter = opt_int(j, "max_iter", 100000);

        const DiscreteMeasure mu_star = solve_dual_ascent(gp.problem, gp.grid, dopts).barycenter;
        const int K = gp.problem.k_count();
        const int d = gp.problem.domain.dim();
        // c(x,.) Lipschitz constant for the squared cost on the box.
        const double L = gp.problem.domain.diameter();
        const double slack = std::max(1e-8, 100.0 * dopts.tol);

        struct Row {
            double delta, w1_sum, kl, bound;
            bool violation;
        };
        std::vector<Row> rows(deltas.size());
        parallel_for(static_cast<int>(deltas.size()), [&](int di) {
            const double delta = deltas[static_cast<size_t>(di)];
            std::vector<DiscreteMeasure> perturbed;
            double w1_sum = 0.0;
            for (int k = 0; k < K; ++k) {
                const DiscreteMeasure& nu = gp.problem.marginals[k];
                Rng rng(mix_seed(seed, static_cast<std::uint64_t>(di) * K + k + 1));
                Matrix pts = nu.points();
                for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                    for (int a = 0; a < d; ++a) {
                        pts(i, a) += delta * (2.0 * rng.uniform01() - 1.0);
                    }
                    pts.row(i) = gp.problem.domain.project(pts.row(i).transpose()).transpose();
                }
                DiscreteMeasure hat(pts, nu.weights());
                double w1;
                if (d == 1) {
                    w1 = wasserstein1_1d(nu, hat);
                } else {
                    // atom-displacement upper bound on W1
                    w1 = 0.0;
                    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                        w1 += nu.weights()[i] * (pts.row(i) - nu.points().row(i)).norm();
                    }
                }
                w1_sum += gp.problem.weights[k] * w1;
                perturbed.push_back(std::move(hat));
            }
            BarycenterProblem hat_problem(std::move(perturbed), gp.problem.weights,
                                          gp.problem.lambda, gp.problem.tau, gp.problem.cost,
                                          gp.problem.domain);
            const DiscreteMeasure mu_hat =
                solve_dual_ascent(hat_problem, gp.grid, dopts).barycenter;
            const double kl = relative_entropy(mu_hat, mu_star);
            const double bound = 2.0 * L / gp.problem.tau * w1_sum;
            rows[static_cast<size_t>(di)] = Row{delta, w1_sum, kl, bound, kl > bound + slack};
        });

        fs::create_directories(opts.out_dir);
        std::ostringstream csv;
        csv << "delta,w1_sum,kl\n";
        bool violated = false;
        json jrows = json::array();
        for (const auto& r : rows) {
            csv << format_double(r.delta) << "," << format_double(r.w1_sum) << ","
                << format_double(r.kl) << "\n";
            violated = violated || r.violation;
            jrows.push_back({{"delta", r.delta},
                             {"w1_sum", r.w1_sum},
                             {"kl", r.kl},
                             {"bound", r.bound},
                             {"violation", r.violation}});
        }
        write_text_file(opts.out_dir / "stability.csv", csv.str());
        json summary;
        summary["rows"] = jrows;
        summary["w1_kind"] = (d == 1) ? "exact" : "upper_bound";
        summary["lipschitz_L"] = L;
        summary["wall_time_ms"] = elapsed_ms(t0);
        write_summary(opts.out_dir, summary);
        return violated ? 2 : 0;
    });
}

// ---------------------------------------------------------------------------
// eot (single solve, debugging)

int cmd_eot(const CliOptions& opts) {
    return run_guarded("eot", [&]() -> int {
        const std::string ctx = "eot config";
        json j = load_config(opts.config_path);
        check_keys(j, {"mu", "nu", "lambda", "tol", "max_iter"}, ctx);
        const fs::path mu_path = resolve(opts.config_path, need(j, "mu", ctx).get<std::string>());
        const fs::path nu_path = resolve(opts.config_path, need(j, "nu", ctx).get<std::string>());
        for (const auto& p : {mu_path, nu_path}) {
            if (!fs::exists(p)) throw InvalidInputError(ctx + ": file not found: " + p.string());
        }
        EotOptions eopts;
        eopts.tol = opt_number(j, "tol", 1e-9);
        eopts.max_iter = opt_int(j, "max_iter", 100000);
        EotSolution sol = solve_eot(read_measure_csv(mu_path), read_measure_csv(nu_path),
                                    need_number(j, "lambda", ctx), CostFunction::squared_half(),
                                    eopts);
        fs::create_directories(opts.out_dir);
        write_potentials_csv(opts.out_dir / "phi.csv", sol.potentials.phi);
        write_potentials_csv(opts.out_dir / "psi.csv", sol.potentials.psi);
        json summary;
        summary["cost"] = sol.cost;
        summary["marginal_error"] = sol.marginal_error;
        summary["iterations"] = sol.iterations;
        summary["converged"] = sol.converged;
        write_summary(opts.out_dir, summary);
        return sol.converged ? 0 : 2;
    });
}

}  // namespace douba
