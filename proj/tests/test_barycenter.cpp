#include <doctest.h>

#include <cmath>

#include "douba/barycenter.hpp"
#include "test_helpers.hpp"

using namespace douba;
using namespace douba::test;

namespace {

const CostFunction kSq = CostFunction::squared_half();

BarycenterProblem two_marginal_problem(double lambda, double tau) {
    std::vector<DiscreteMeasure> marginals{measure_1d({0.15, 0.4}, {0.75, 0.25}),
                                           measure_1d({0.6, 0.9}, {0.5, 0.5})};
    return BarycenterProblem(marginals, vec({0.5, 0.5}), lambda, tau, kSq,
                             BoxDomain(vec({0.0}), vec({1.0})));
}

DualState random_state(Rng& rng, const BarycenterProblem& problem, const Grid& grid,
                       double scale = 0.3) {
    std::vector<Vector> psis;
    for (const auto& nu : problem.marginals) {
        Vector p(nu.size());
        for (int j = 0; j < nu.size(); ++j) p[j] = scale * (2.0 * rng.uniform01() - 1.0);
        psis.push_back(std::move(p));
    }
    return DualState{std::move(psis), grid, 0.0};
}

// Straightforward unstabilized transcription of the dual objective for tiny
// instances: plain loops, no log-sum-exp tricks.
double naive_dual_objective(const DualState& state, const BarycenterProblem& problem) {
    const Grid& grid = state.grid;
    const double lambda = problem.lambda, tau = problem.tau;
    double first = 0.0;
    for (int k = 0; k < problem.k_count(); ++k) {
        first += problem.weights[k] *
                 problem.marginals[k].weights().dot(state.psis[static_cast<size_t>(k)]);
    }
    double integral = 0.0;
    for (int i = 0; i < grid.cell_count(); ++i) {
        double inner = 0.0;
        for (int k = 0; k < problem.k_count(); ++k) {
            const auto& nu = problem.marginals[k];
            double s = 0.0;
            for (int j = 0; j < nu.size(); ++j) {
                const double c = kSq(grid.centers().row(i).transpose(),
                                     nu.points().row(j).transpose());
                s += nu.weights()[j] *
                     std::exp((state.psis[static_cast<size_t>(k)][j] - c) / lambda);
            }
            inner += problem.weights[k] * std::log(s);
        }
        integral += grid.cell_volume() * std::exp(lambda / tau * inner);
    }
    return first - tau * std::log(integral);
}

}  // namespace

TEST_SUITE_BEGIN("barycenter");

TEST_CASE("dual objective: zero potentials, zero cost, K = 1") {
    auto zero_cost = CostFunction::custom(
        [](const auto&, const auto&) { return 0.0; },
        [](const auto& x, const auto&) { return Vector(Vector::Zero(x.size())); });
    BoxDomain box(vec({0.0}), vec({2.0}));
    BarycenterProblem problem({measure_1d({0.5, 1.5}, {0.5, 0.5})}, vec({1.0}), 1.0, 0.7,
                              zero_cost, box);
    Grid grid(box, {16});
    DualState state{{Vector::Zero(2)}, grid, 0.0};
    CHECK(dual_objective(state, problem) ==
          doctest::Approx(-0.7 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("dual objective is invariant under constant shifts") {
    Rng rng(3);
    BarycenterProblem problem = two_marginal_problem(0.5, 0.3);
    Grid grid(problem.domain, {32});
    DualState state = random_state(rng, problem, grid);
    const double e0 = dual_objective(state, problem);
    DualState shifted = state;
    shifted.psis[0].array() += 5.0;
    shifted.psis[1].array() -= 2.25;
    CHECK(dual_objective(shifted, problem) == doctest::Approx(e0).epsilon(1e-10));
    // the recovered measure does not move either
    CHECK(tv_distance(recover_barycenter(state, problem), recover_barycenter(shifted, problem)) <=
          1e-12);
}

TEST_CASE("dual objective matches a naive direct evaluation") {
    Rng rng(5);
    BoxDomain box(vec({0.0}), vec({1.0}));
    BarycenterProblem problem({measure_1d({0.2, 0.7}, {0.4, 0.6}),
                               measure_1d({0.35, 0.8}, {0.5, 0.5})},
                              vec({0.5, 0.5}), 1.0, 1.0, kSq, box);
    Grid grid(box, {8});
    for (int trial = 0; trial < 20; ++trial) {
        DualState state = random_state(rng, problem, grid, 0.5);
        CHECK(dual_objective(state, problem) ==
              doctest::Approx(naive_dual_objective(state, problem)).epsilon(1e-10));
    }
}

TEST_CASE("dual gradient matches finite differences and conserves mass") {
    Rng rng(7);
    BarycenterProblem problem = two_marginal_problem(0.6, 0.35);
    Grid grid(problem.domain, {24});
    for (int trial = 0; trial < 10; ++trial) {
        DualState state = random_state(rng, problem, grid);
        auto grads = dual_gradient(state, problem);
        for (int k = 0; k < problem.k_count(); ++k) {
            // per-block mass conservation
            CHECK(std::abs(grads[static_cast<size_t>(k)].sum()) <= 1e-12);
            for (int j = 0; j < problem.marginals[k].size(); ++j) {
                const double h = 1e-6;
                DualState up = state, dn = state;
                up.psis[static_cast<size_t>(k)][j] += h;
                dn.psis[static_cast<size_t>(k)][j] -= h;
                const double fd =
                    (dual_objective(up, problem) - dual_objective(dn, problem)) / (2.0 * h);
                CHECK(grads[static_cast<size_t>(k)][j] ==
                      doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("dual gradient vanishes at the maximizer") {
    BarycenterProblem problem = two_marginal_problem(0.5, 0.5);
    Grid grid(problem.domain, {40});
    DualAscentOptions opts;
    opts.tol = 1e-10;
    DualAscentResult res = solve_dual_ascent(problem, grid, opts);
    REQUIRE(res.converged);
    auto grads = dual_gradient(res.state, problem);
    double sup = 0.0;
    for (const auto& g : grads) sup = std::max(sup, g.lpNorm<Eigen::Infinity>());
    CHECK(sup <= 10 * opts.tol);
}

TEST_CASE("concavity and 1-Lipschitz continuity of E") {
    Rng rng(11);
    BarycenterProblem problem = two_marginal_problem(0.4, 0.25);
    Grid grid(problem.domain, {20});
    for (int trial = 0; trial < 100; ++trial) {
        DualState a = random_state(rng, problem, grid);
        DualState b = random_state(rng, problem, grid);
        const double t = rng.uniform01();
        DualState mid = a;
        for (size_t k = 0; k < mid.psis.size(); ++k) {
            mid.psis[k] = (1.0 - t) * a.psis[k] + t * b.psis[k];
        }
        const double ea = dual_objective(a, problem);
        const double eb = dual_objective(b, problem);
        CHECK(dual_objective(mid, problem) >= (1.0 - t) * ea + t * eb - 1e-9);

        // |E(psi + delta) - E(psi)| <= sum_k w_k osc(delta_k)
        DualState pert = a;
        double budget = 0.0;
        for (size_t k = 0; k < pert.psis.size(); ++k) {
            Vector d(pert.psis[k].size());
            for (Eigen::Index j = 0; j < d.size(); ++j) d[j] = 0.4 * (2 * rng.uniform01() - 1);
            pert.psis[k] += d;
            budget += problem.weights[static_cast<Eigen::Index>(k)] * oscillation(d);
        }
        CHECK(std::abs(dual_objective(pert, problem) - ea) <= budget + 1e-9);
    }
}

TEST_CASE("single Dirac marginal: the barycenter is the tangent Gibbs") {
    // K = 1, nu = delta_b, squared cost: mu(cell) ~ exp(-|x-b|^2 / (2 tau))
    const double tau = 0.2, b = 0.3;
    BoxDomain box(vec({-2.0}), vec({2.0}));
    BarycenterProblem problem({DiscreteMeasure::dirac(vec({b}))}, vec({1.0}), 0.5, tau, kSq, box);
    Grid grid(box, {100});
    DualAscentOptions opts;
    opts.tol = 1e-11;
    DualAscentResult res = solve_dual_ascent(problem, grid, opts);
    REQUIRE(res.converged);
    DiscreteMeasure expected = gaussian_on_grid(grid, vec({b}), tau);
    CHECK(tv_distance(res.barycenter, expected) <= 1e-10);
    CHECK(res.iterations <= 3);  // potentials are scalar shifts here
}

TEST_CASE("Dirac marginals: N(xbar, tau) moments, independent of lambda") {
    BoxDomain box(vec({-3.0}), vec({3.0}));
    std::vector<DiscreteMeasure> diracs{DiscreteMeasure::dirac(vec({-1.0})),
                                        DiscreteMeasure::dirac(vec({0.4})),
                                        DiscreteMeasure::dirac(vec({1.2}))};
    Vector w = vec({0.3, 0.3, 0.4});
    const double xbar = -1.0 * 0.3 + 0.4 * 0.3 + 1.2 * 0.4;
    const double tau = 0.3;
    Grid grid(box, {200});
    DualAscentOptions opts;
    opts.tol = 1e-10;
    DiscreteMeasure prev = grid.uniform_measure();
    for (double lambda : {0.1, 1.0}) {
        BarycenterProblem problem(diracs, w, lambda, tau, kSq, box);
        DualAscentResult res = solve_dual_ascent(problem, grid, opts);
        REQUIRE(res.converged);
        CHECK(std::abs(mean_1d(res.barycenter) - xbar) <= 1e-3);
        CHECK(variance_1d(res.barycenter) == doctest::Approx(tau).epsilon(0.02));
        if (lambda > 0.5) CHECK(tv_distance(res.barycenter, prev) <= 1e-3);
        prev = res.barycenter;
    }
}

TEST_CASE("recovered barycenter: normalization, flat case, fixed point") {
    BarycenterProblem problem = two_marginal_problem(0.5, 0.4);
    Grid grid(problem.domain, {50});

    SUBCASE("weights sum to one and have full support") {
        Rng rng(13);
        DualState state = random_state(rng, problem, grid);
        DiscreteMeasure mu = recover_barycenter(state, problem);
        CHECK(std::abs(mu.weights().sum() - 1.0) <= 1e-12);
        CHECK((mu.weights().array() > 0.0).all());
    }

    SUBCASE("constant V: uniform output") {
        auto zero_cost = CostFunction::custom(
            [](const auto&, const auto&) { return 0.0; },
            [](const auto& x, const auto&) { return Vector(Vector::Zero(x.size())); });
        BarycenterProblem flat({measure_1d({0.5}, {1.0})}, vec({1.0}), 0.5, 0.4, zero_cost,
                               problem.domain);
        DualState state{{Vector::Zero(1)}, grid, 0.0};
        DiscreteMeasure mu = recover_barycenter(state, flat);
        CHECK(tv_distance(mu, grid.uniform_measure()) <= 1e-12);
    }

    SUBCASE("optimum is a fixed point of the Gibbs map") {
        DualAscentOptions opts;
        opts.tol = 1e-11;
        DualAscentResult res = solve_dual_ascent(problem, grid, opts);
        REQUIRE(res.converged);
        // re-solve EOT from the recovered measure, rebuild exp(-V/tau)
        FirstVariation fv = first_variation(res.barycenter, problem, 1e-12);
        Vector t = -fv.values_at_mu_atoms() / problem.tau;
        t.array() -= log_sum_exp(t);
        Vector gibbs = t.array().exp();
        gibbs /= gibbs.sum();
        CHECK(0.5 * (gibbs - res.barycenter.weights()).lpNorm<1>() <= 1e-8);
    }
}

TEST_CASE("monotone ascent and convergence flags") {
    BarycenterProblem problem = two_marginal_problem(0.5, 0.25);
    Grid grid(problem.domain, {40});
    DualAscentOptions opts;
    opts.tol = 1e-10;
    std::vector<double> objectives;
    opts.trace = [&](const BarycenterTraceRow& r) { objectives.push_back(r.objective); };
    DualAscentResult res = solve_dual_ascent(problem, grid, opts);
    CHECK(res.converged);
    REQUIRE(objectives.size() >= 2);
    for (size_t i = 1; i < objectives.size(); ++i) {
        CHECK(objectives[i] >= objectives[i - 1] - 1e-11);
    }
    CHECK(res.certificate_upper <= 10 * problem.tau * opts.tol);

    SUBCASE("max_iter exhaustion is flagged") {
        DualAscentOptions tight;
        tight.tol = 1e-13;
        tight.max_iter = 3;
        DualAscentResult r2 = solve_dual_ascent(problem, grid, tight);
        CHECK_FALSE(r2.converged);
        CHECK(r2.iterations == 3);
    }

    SUBCASE("a forced oversized step raises StepSizeError") {
        DualAscentOptions bad;
        bad.step = 250.0;
        CHECK_THROWS_AS(solve_dual_ascent(problem, grid, bad), StepSizeError);
    }

    SUBCASE("plain Euclidean ascent also converges on small instances") {
        DualAscentOptions eu;
        eu.preconditioned = false;
        eu.tol = 1e-8;
        eu.step = 2.0;  // atom weights rescale the step in this geometry
        DualAscentResult r3 = solve_dual_ascent(problem, grid, eu);
        CHECK(tv_distance(r3.barycenter, res.barycenter) <= 1e-5);
    }
}

TEST_CASE("grid solvers reject degenerate tau") {
    BarycenterProblem problem = two_marginal_problem(0.5, 0.0);
    Grid grid(problem.domain, {16});
    CHECK_THROWS_AS(solve_dual_ascent(problem, grid, {}), InvalidInputError);
    CHECK_THROWS_AS(dual_objective(DualState{{Vector::Zero(2), Vector::Zero(2)}, grid, 0.0},
                                   problem),
                    InvalidInputError);
}

TEST_CASE("alternating scheme agrees with dual ascent at tau = lambda") {
    BarycenterProblem problem = two_marginal_problem(0.5, 0.5);
    Grid grid(problem.domain, {60});
    DualAscentOptions opts;
    opts.tol = 1e-10;
    DualAscentResult ascent = solve_dual_ascent(problem, grid, opts);
    AlternatingResult alt = solve_alternating_tau_eq_lambda(problem, grid, 1e-10);
    REQUIRE(ascent.converged);
    REQUIRE(alt.converged);
    CHECK(alt.consistency_error <= 1e-8);
    CHECK(tv_distance(alt.barycenter, ascent.barycenter) <= 1e-6);

    SUBCASE("tau != lambda is rejected") {
        BarycenterProblem off = two_marginal_problem(0.5, 0.4);
        CHECK_THROWS_AS(solve_alternating_tau_eq_lambda(off, grid), InvalidInputError);
    }
}

TEST_CASE("alternating scheme on closed-form instances") {
    SUBCASE("Dirac marginals give N(xbar, tau)") {
        BoxDomain box(vec({-3.0}), vec({3.0}));
        std::vector<DiscreteMeasure> diracs{DiscreteMeasure::dirac(vec({-0.8})),
                                            DiscreteMeasure::dirac(vec({0.6}))};
        const double tau = 0.25;
        BarycenterProblem problem(diracs, vec({0.5, 0.5}), tau, tau, kSq, box);
        Grid grid(box, {150});
        AlternatingResult res = solve_alternating_tau_eq_lambda(problem, grid, 1e-10);
        REQUIRE(res.converged);
        CHECK(std::abs(mean_1d(res.barycenter) - (-0.1)) <= 1e-3);
        CHECK(variance_1d(res.barycenter) == doctest::Approx(tau).epsilon(0.02));
    }

    SUBCASE("K = 1, uniform marginal, zero cost: uniform output") {
        auto zero_cost = CostFunction::custom(
            [](const auto&, const auto&) { return 0.0; },
            [](const auto& x, const auto&) { return Vector(Vector::Zero(x.size())); });
        BoxDomain box(vec({0.0}), vec({1.0}));
        Grid grid(box, {32});
        BarycenterProblem problem({grid.uniform_measure()}, vec({1.0}), 0.5, 0.5, zero_cost, box);
        AlternatingResult res = solve_alternating_tau_eq_lambda(problem, grid, 1e-11);
        CHECK(tv_distance(res.barycenter, grid.uniform_measure()) <= 1e-10);
    }
}

TEST_CASE("primal objective: entropy term and minimizer property") {
    BoxDomain box(vec({0.0}), vec({1.0}));
    Grid grid(box, {40});
    BarycenterProblem problem({measure_1d({0.2, 0.5}, {0.5, 0.5}), measure_1d({0.7}, {1.0})},
                              vec({0.5, 0.5}), 0.5, 0.3, kSq, box);

    // uniform mu on [0,1]: H = 0, so F is the pure transport part
    DiscreteMeasure uniform = grid.uniform_measure();
    double g = 0.0;
    EotOptions eopts;
    eopts.tol = 1e-10;
    for (int k = 0; k < problem.k_count(); ++k) {
        g += problem.weights[k] *
             solve_eot(uniform, problem.marginals[k], problem.lambda, problem.cost, eopts).cost;
    }
    CHECK(primal_objective(uniform, problem, 1e-10) == doctest::Approx(g).epsilon(1e-9));

    DualAscentOptions opts;
    opts.tol = 1e-10;
    DualAscentResult res = solve_dual_ascent(problem, grid, opts);
    const double f_star = primal_objective(res.barycenter, problem, 1e-10);
    // value at the optimum is below the value at marginal projections
    Rng rng(17);
    for (int k = 0; k < problem.k_count(); ++k) {
        DiscreteMeasure proj = gaussian_on_grid(grid, vec({mean_1d(problem.marginals[k])}), 0.01);
        CHECK(f_star <= primal_objective(proj, problem, 1e-10) + 1e-8);
    }
    CHECK(f_star <= primal_objective(grid.uniform_measure(), problem, 1e-10) + 1e-8);
    // strong duality at the optimum: primal value meets the dual objective
    CHECK(f_star == doctest::Approx(res.state.objective).epsilon(1e-7));
}

TEST_CASE("F is tau-strongly convex in total variation") {
    // F(mid) <= F(a)/2 + F(b)/2 - (tau/8) |a - b|_1^2 over random grid pairs
    Rng rng(19);
    BoxDomain box(vec({0.0}), vec({1.0}));
    Grid grid(box, {12});
    BarycenterProblem problem({measure_1d({0.3, 0.8}, {0.6, 0.4})}, vec({1.0}), 0.5, 0.45, kSq,
                              box);
    for (int trial = 0; trial < 100; ++trial) {
        DiscreteMeasure a = random_grid_measure(rng, grid);
        DiscreteMeasure b = random_grid_measure(rng, grid);
        DiscreteMeasure mid = grid.measure(0.5 * (a.weights() + b.weights()));
        const double l1 = (a.weights() - b.weights()).lpNorm<1>();
        const double fa = primal_objective(a, problem, 1e-10);
        const double fb = primal_objective(b, problem, 1e-10);
        const double fm = primal_objective(mid, problem, 1e-10);
        CHECK(fm <= 0.5 * fa + 0.5 * fb - problem.tau / 8.0 * l1 * l1 + 1e-9);
    }
}

TEST_CASE("suboptimality certificate") {
    BarycenterProblem problem = two_marginal_problem(0.5, 0.3);
    Grid grid(problem.domain, {50});
    DualAscentOptions opts;
    opts.tol = 1e-11;
    DualAscentResult res = solve_dual_ascent(problem, grid, opts);
    REQUIRE(res.converged);

    SUBCASE("tight at the optimum") {
        CertificateBounds b = suboptimality_certificate(res.barycenter, problem, 1e-11);
        CHECK(b.lower == 0.0);
        CHECK(b.upper <= 10 * 1e-11 * problem.tau + 1e-12);
    }

    SUBCASE("uniform mu on a Dirac problem matches the direct relative entropy") {
        BoxDomain box(vec({-2.0}), vec({2.0}));
        std::vector<DiscreteMeasure> diracs{DiscreteMeasure::dirac(vec({-0.5})),
                                            DiscreteMeasure::dirac(vec({0.7}))};
        Vector w = vec({0.4, 0.6});
        const double tau = 0.35;
        BarycenterProblem dp(diracs, w, 0.6, tau, kSq, box);
        Grid g(box, {80});
        const double xbar = -0.5 * 0.4 + 0.7 * 0.6;
        // tangent Gibbs: exp(-sum_k w_k |x - x_k|^2 / (2 tau)) ~ N(xbar, tau)
        DiscreteMeasure tangent = gaussian_on_grid(g, vec({xbar}), tau);
        const double direct = tau * relative_entropy(g.uniform_measure(), tangent);
        CertificateBounds b = suboptimality_certificate(g.uniform_measure(), dp, 1e-11);
        CHECK(b.upper == doctest::Approx(direct).epsilon(1e-9));
    }

    SUBCASE("sandwich consistency on perturbations of the optimum") {
        Rng rng(23);
        const double f_opt = primal_objective(res.barycenter, problem, 1e-11);
        for (int trial = 0; trial < 20; ++trial) {
            Vector w = res.barycenter.weights();
            for (int i = 0; i < w.size(); ++i) w[i] *= 1.0 + 0.3 * (2 * rng.uniform01() - 1);
            w /= w.sum();
            DiscreteMeasure mu = grid.measure(w);
            CertificateBounds b = suboptimality_certificate(mu, problem, 1e-11);
            const double gap = primal_objective(mu, problem, 1e-11) - f_opt;
            CHECK(b.upper >= gap - 1e-9);
            CHECK(gap >= -1e-9);  // the recovered optimum is the minimizer
        }
    }

    SUBCASE("zero-mass cells are rejected") {
        Vector w = Vector::Zero(grid.cell_count());
        w[0] = w[1] = 0.5;
        CHECK_THROWS_AS(suboptimality_certificate(grid.measure(w), problem, 1e-9),
                        InvalidInputError);
    }
}

TEST_SUITE_END();
