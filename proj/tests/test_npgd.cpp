#include <doctest.h>

#include <cmath>

#include "douba/barycenter.hpp"
#include "douba/npgd.hpp"
#include "test_helpers.hpp"

using namespace douba;
using namespace douba::test;

namespace {

const CostFunction kSq = CostFunction::squared_half();

}  // namespace

TEST_SUITE_BEGIN("npgd");

TEST_CASE("zero noise, single Dirac target: geometric contraction to b") {
    // drift is x - b, so each step multiplies the gap by (1 - eta) exactly
    BoxDomain box(vec({-4.0, -4.0}), vec({4.0, 4.0}));
    Vector b = vec({0.5, -1.0});
    BarycenterProblem problem({DiscreteMeasure::dirac(b)}, vec({1.0}), 0.3, 0.0, kSq, box);
    NpgdConfig config(8, 0.25, 0.3, 0.0, 30, 5, DiscreteMeasure::dirac(vec({2.0, 2.0})));
    NpgdResult res = npgd_run(problem, config);
    const double expected_gap = (vec({2.0, 2.0}) - b).norm() * std::pow(0.75, 30);
    for (int i = 0; i < 8; ++i) {
        const double gap = (res.cloud.positions.row(i).transpose() - b).norm();
        CHECK(gap == doctest::Approx(expected_gap).epsilon(1e-9));
    }
    // the trace drift decays geometrically as well
    CHECK(res.trace.front().drift_sup == doctest::Approx((vec({2.0, 2.0}) - b).norm()));
    CHECK(res.trace.back().drift_sup < res.trace.front().drift_sup);
}

TEST_CASE("eta = 0 leaves the cloud in place, step counter advances") {
    BoxDomain box(vec({-1.0}), vec({1.0}));
    BarycenterProblem problem({DiscreteMeasure::dirac(vec({0.4}))}, vec({1.0}), 0.2, 0.1, kSq,
                              box);
    NpgdConfig config(5, 0.0, 0.2, 0.1, 3, 11, measure_1d({-0.5, 0.5}, {0.5, 0.5}));
    NpgdResult res = npgd_run(problem, config);
    CHECK(res.cloud.step_count == 3);
    for (int i = 0; i < 5; ++i) {
        const double x = res.cloud.positions(i, 0);
        CHECK((x == -0.5 || x == 0.5));
    }
}

TEST_CASE("projection returns boundary escapees exactly onto the face") {
    BoxDomain box(vec({0.0}), vec({1.0}));
    BarycenterProblem problem({DiscreteMeasure::dirac(vec({1.0}))}, vec({1.0}), 0.5, 4.0, kSq,
                              box);
    // huge noise: essentially every particle leaves the box and is clamped
    NpgdConfig config(64, 0.9, 0.5, 4.0, 1, 17, DiscreteMeasure::dirac(vec({0.5})));
    NpgdResult res = npgd_run(problem, config);
    int clamped = 0;
    for (int i = 0; i < 64; ++i) {
        const double x = res.cloud.positions(i, 0);
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        if (x == 0.0 || x == 1.0) ++clamped;
    }
    CHECK(clamped > 0);
}

TEST_CASE("same seed gives a bitwise-identical run") {
    BoxDomain box(vec({-2.0, -2.0}), vec({2.0, 2.0}));
    std::vector<DiscreteMeasure> marginals{
        DiscreteMeasure(
            (Matrix(2, 2) << -1.0, 0.0, 1.0, 0.5).finished(), vec({0.5, 0.5})),
        DiscreteMeasure::dirac(vec({0.0, -1.0}))};
    BarycenterProblem problem(marginals, vec({0.5, 0.5}), 0.2, 0.1, kSq, box);
    NpgdConfig config(20, 0.3, 0.2, 0.1, 25, 42, DiscreteMeasure::dirac(vec({0.0, 0.0})));
    NpgdResult a = npgd_run(problem, config);
    NpgdResult b = npgd_run(problem, config);
    CHECK(a.cloud.positions == b.cloud.positions);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].g_lambda == b.trace[i].g_lambda);
        CHECK(a.trace[i].drift_sup == b.trace[i].drift_sup);
        CHECK(a.trace[i].mean_disp == b.trace[i].mean_disp);
    }
}

TEST_CASE("warm-started potentials match a cold solve during a run") {
    BoxDomain box(vec({-2.0}), vec({2.0}));
    std::vector<DiscreteMeasure> marginals{measure_1d({-1.0, 0.5}, {0.5, 0.5}),
                                           measure_1d({0.0, 1.0}, {0.3, 0.7})};
    BarycenterProblem problem(marginals, vec({0.5, 0.5}), 0.3, 0.05, kSq, box);
    NpgdConfig config(30, 0.2, 0.3, 0.05, 50, 7, measure_1d({0.0}, {1.0}));

    DiscreteMeasure start = sample(config.init, config.particle_count, mix_seed(config.seed, 0));
    ParticleCloud cloud{start.points(), box, 0};
    std::vector<Vector> warm(problem.k_count());
    EotOptions eopts;
    eopts.tol = config.eot_tol;
    for (int l = 0; l < config.iterations; ++l) {
        Rng noise(mix_seed(config.seed, static_cast<std::uint64_t>(l) + 1));
        cloud = npgd_step(cloud, problem, config, noise, &warm);
        if (l % 10 == 0) {
            // spot check: warm-started potentials equal a cold solve
            for (int k = 0; k < problem.k_count(); ++k) {
                EotSolution cold =
                    solve_eot(cloud.measure(), problem.marginals[k], problem.lambda, problem.cost,
                              eopts);
                // warm[k] belongs to the pre-step cloud; re-solve from it
                EotOptions wopts = eopts;
                wopts.warm_psi = &warm[k];
                EotSolution rewarm =
                    solve_eot(cloud.measure(), problem.marginals[k], problem.lambda, problem.cost,
                              wopts);
                CHECK((rewarm.potentials.psi - cold.potentials.psi).lpNorm<Eigen::Infinity>() <=
                      10 * config.eot_tol);
            }
        }
    }
    CHECK(cloud.step_count == config.iterations);
}

TEST_CASE("K = 1 gaussian marginal: the cloud variance approaches the closed form") {
    // nu = N(0, a) discretized; tau = lambda/2; second moment of the cloud
    // should settle near b(a, lambda, tau) up to sampling error
    const double a = 0.3, lambda = 0.2, tau = 0.1;
    BoxDomain box(vec({-3.0}), vec({3.0}));
    Grid grid(box, {200});
    DiscreteMeasure nu = gaussian_on_grid(grid, vec({0.0}), a);
    BarycenterProblem problem({nu}, vec({1.0}), lambda, tau, kSq, box);
    NpgdConfig config(300, 0.25, lambda, tau, 400, 23, grid.uniform_measure());
    NpgdResult res = npgd_run(problem, config);
    double m1 = res.cloud.positions.col(0).mean();
    double m2 = (res.cloud.positions.col(0).array() - m1).square().mean();
    const double b = 0.3302775637731995;  // barycenter_variance(0.3, 0.2, 0.1)
    CHECK(std::abs(m2 - b) < 0.08);       // sampling noise at m = 300
}

TEST_CASE("smoothing a cloud onto a grid") {
    BoxDomain box(vec({0.0}), vec({1.0}));
    Grid grid(box, {64});
    Matrix pos(2, 1);
    pos << 0.25, 0.75;
    ParticleCloud cloud{pos, box, 0};
    DiscreteMeasure sm = smooth_cloud_to_grid(cloud, grid, 0.05);
    CHECK((sm.weights().array() > 0.0).all());
    CHECK(std::abs(sm.weights().sum() - 1.0) <= 1e-12);
    CHECK(std::abs(mean_1d(sm) - 0.5) <= 1e-3);
    CHECK_THROWS_AS(smooth_cloud_to_grid(cloud, grid, 0.0), InvalidInputError);
}

TEST_CASE("cloud_kde_compare identities") {
    BoxDomain box(vec({0.0}), vec({1.0}));
    Grid grid(box, {128});
    Rng rng(31);
    Matrix pos(50, 1);
    for (int i = 0; i < 50; ++i) pos(i, 0) = 0.3 + 0.4 * rng.uniform01();
    ParticleCloud cloud{pos, box, 0};
    const double h = 0.03;

    SUBCASE("identical supports and weights give zero") {
        DiscreteMeasure ref = smooth_cloud_to_grid(cloud, grid, h);
        CHECK(cloud_kde_compare(cloud, ref, h) <= 1e-12);
    }

    SUBCASE("a translated copy is W2 = |delta| away in 1D") {
        // shift by a whole number of cells so the discretized densities are
        // exact translates of each other
        BoxDomain wide_box(vec({-1.0}), vec({2.0}));
        Grid wide(wide_box, {384});
        const double delta = 14.0 * wide.cell_volume();
        DiscreteMeasure ref = smooth_cloud_to_grid(cloud, wide, h);
        ParticleCloud shifted{(pos.array() + delta).matrix(), wide_box, 0};
        CHECK(cloud_kde_compare(shifted, ref, h) == doctest::Approx(delta).epsilon(1e-6));
    }

    SUBCASE("a matching cloud sits at the resampling noise floor") {
        DiscreteMeasure ref = gaussian_on_grid(grid, vec({0.5}), 0.02);
        auto make_cloud = [&](std::uint64_t seed) {
            DiscreteMeasure s = sample(ref, 10000, seed);
            return ParticleCloud{s.points(), box, 0};
        };
        const double stat = cloud_kde_compare(make_cloud(1), ref, h);
        const double baseline = cloud_kde_compare(make_cloud(2), ref, h);
        CHECK(stat <= 2.0 * baseline + 1e-12);
    }
}

TEST_CASE("energy distance branch for planar clouds") {
    BoxDomain box(vec({0.0, 0.0}), vec({1.0, 1.0}));
    Grid grid(box, {24, 24});
    Rng rng(37);
    Matrix pos(40, 2);
    for (int i = 0; i < 40; ++i) {
        pos(i, 0) = 0.2 + 0.6 * rng.uniform01();
        pos(i, 1) = 0.2 + 0.6 * rng.uniform01();
    }
    ParticleCloud cloud{pos, box, 0};
    DiscreteMeasure self = smooth_cloud_to_grid(cloud, grid, 0.05);
    CHECK(cloud_kde_compare(cloud, self, 0.05) <= 1e-12);
    // against a far-off reference the statistic is clearly positive
    DiscreteMeasure far = gaussian_on_grid(grid, vec({0.1, 0.1}), 0.002);
    CHECK(cloud_kde_compare(cloud, far, 0.05) > 0.01);
}

TEST_CASE("config validation") {
    BoxDomain box(vec({0.0}), vec({1.0}));
    BarycenterProblem problem({DiscreteMeasure::dirac(vec({0.5}))}, vec({1.0}), 0.2, 0.1, kSq,
                              box);
    CHECK_THROWS_AS(NpgdConfig(0, 0.1, 0.2, 0.1, 5, 1, DiscreteMeasure::dirac(vec({0.5}))),
                    InvalidInputError);
    // (lambda, tau) must match between problem and config
    NpgdConfig mismatched(4, 0.1, 0.9, 0.1, 2, 1, DiscreteMeasure::dirac(vec({0.5})));
    CHECK_THROWS_AS(npgd_run(problem, mismatched), InvalidInputError);
}

TEST_SUITE_END();
