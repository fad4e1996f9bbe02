#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "douba/eot.hpp"
#include "douba/measures.hpp"
#include "douba/problem.hpp"
#include "douba/rng.hpp"

namespace douba {

// m particles inside a box; induces the uniform-weight empirical measure.
struct ParticleCloud {
    Matrix positions;  // m x d
    BoxDomain domain;
    int step_count = 0;

    DiscreteMeasure measure() const {
        return DiscreteMeasure(positions,
                               Vector::Constant(positions.rows(), 1.0 / positions.rows()));
    }
};

struct NpgdConfig {
    int particle_count = 0;
    double eta = 0.0;     // step size
    double lambda = 0.0;  // inner regularization (must match the problem)
    double tau = 0.0;     // outer regularization; drives the noise only
    int iterations = 0;
    std::uint64_t seed = 0;
    double eot_tol = 1e-9;
    int eot_max_iter = 100000;
    DiscreteMeasure init;  // sampling law of the initial particles

    NpgdConfig(int m, double eta_in, double lambda_in, double tau_in, int iters,
               std::uint64_t seed_in, DiscreteMeasure init_in)
        : particle_count(m),
          eta(eta_in),
          lambda(lambda_in),
          tau(tau_in),
          iterations(iters),
          seed(seed_in),
          init(std::move(init_in)) {
        if (m < 1) throw InvalidInputError("npgd: particle_count must be >= 1");
        if (eta < 0.0 || !(lambda > 0.0) || tau < 0.0 || iters < 0) {
            throw InvalidInputError("npgd: eta, tau >= 0, lambda > 0, iterations >= 0 required");
        }
    }
};

struct NpgdTraceRow {
    int iter = 0;
    double g_lambda = 0.0;   // G_lambda(mu_hat) before the move
    double drift_sup = 0.0;  // sup_i |grad V[mu_hat](X_i)|_2
    double mean_disp = 0.0;  // mean |X_i' - X_i|_2 of the move
};

struct NpgdResult {
    ParticleCloud cloud;
    std::vector<NpgdTraceRow> trace;
};

// One update X <- P_X(X - eta grad V[mu_hat](X) + sqrt(2 eta tau) Z). The
// noise block comes from `noise`, m x d standard normals in fixed order;
// warm_psis (one psi per marginal) carries EOT potentials across steps.
ParticleCloud npgd_step(const ParticleCloud& cloud, const BarycenterProblem& problem,
                        const NpgdConfig& config, Rng& noise,
                        std::vector<Vector>* warm_psis = nullptr, NpgdTraceRow* row = nullptr);

// Samples m initial particles i.i.d. from config.init and runs the scheme.
// Noise for iteration l comes from a stream seeded with mix_seed(seed, l), so
// runs are reproducible and different particle counts share their draws.
NpgdResult npgd_run(const BarycenterProblem& problem, const NpgdConfig& config,
                    const std::function<void(int, const ParticleCloud&)>& snapshot = {});

// Gaussian-kernel projection of a cloud onto a grid; a small uniform floor
// keeps every cell positive so the result works with the certificate.
DiscreteMeasure smooth_cloud_to_grid(const ParticleCloud& cloud, const Grid& grid,
                                     double bandwidth);

// W2 in 1D (exact, via quantiles) or energy distance in d >= 2 between the
// Gaussian-smoothed cloud and a reference grid measure.
double cloud_kde_compare(const ParticleCloud& cloud, const DiscreteMeasure& reference,
                         double bandwidth);

}  // namespace douba
