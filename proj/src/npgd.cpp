#include "douba/npgd.hpp"

#include <cmath>

namespace douba {

namespace {

void check_config(const BarycenterProblem& problem, const NpgdConfig& config) {
    if (std::abs(problem.lambda - config.lambda) > 1e-15 ||
        std::abs(problem.tau - config.tau) > 1e-15) {
        throw InvalidInputError("npgd: config (lambda, tau) must match the problem");
    }
    if (config.init.dim() != problem.domain.dim()) {
        throw DomainMismatchError("npgd: init measure dimension mismatch");
    }
}

}  // namespace

ParticleCloud npgd_step(const ParticleCloud& cloud, const BarycenterProblem& problem,
                        const NpgdConfig& config, Rng& noise, std::vector<Vector>* warm_psis,
                        NpgdTraceRow* row) {
    const int m = static_cast<int>(cloud.positions.rows());
    const int d = static_cast<int>(cloud.positions.cols());
    const int K = problem.k_count();

    // Fixed-order noise block, drawn before anything else so the stream
    // position never depends on solver internals.
    Matrix Z(m, d);
    noise.reset_spare();
    if (config.eta > 0.0 && config.tau > 0.0) {
        for (int i = 0; i < m; ++i) {
            for (int a = 0; a < d; ++a) Z(i, a) = noise.normal();
        }
    } else {
        Z.setZero();
    }

    const DiscreteMeasure mu_hat = cloud.measure();
    EotOptions opts;
    opts.tol = config.eot_tol;
    opts.max_iter = config.eot_max_iter;

    std::vector<EotSolution> sols;
    sols.reserve(K);
    for (int k = 0; k < K; ++k) {
        if (warm_psis && (*warm_psis)[k].size() == problem.marginals[k].size()) {
            opts.warm_psi = &(*warm_psis)[k];
        } else {
            opts.warm_psi = nullptr;
        }
        try {
            sols.push_back(solve_eot(mu_hat, problem.marginals[k], problem.lambda, problem.cost,
                                     opts));
        } catch (const Error& e) {
            throw NumericalError("npgd: step " + std::to_string(cloud.step_count) +
                                 ", marginal k=" + std::to_string(k) + ": " + e.what());
        }
        if (warm_psis) (*warm_psis)[k] = sols.back().potentials.psi;
    }
    FirstVariation fv(problem, std::move(sols));

    // Drift: grad V[mu_hat] at every particle. Squared cost uses the closed
    // softmax form  grad_i = x_i - P y  rowwise.
    Matrix drift(m, d);
    if (problem.cost.kind() == CostFunction::Kind::squared_half) {
        drift.setZero();
        Matrix buf;
        for (int k = 0; k < K; ++k) {
            const auto& sol = fv.solutions()[k];
            const Matrix& Y = problem.marginals[k].points();
            Vector q = sol.potentials.psi +
                       problem.lambda *
                           problem.marginals[k].weights().array().log().matrix();
            Matrix C = problem.cost.pairwise(cloud.positions, Y);
            buf = ((-C).rowwise() + q.transpose()) / problem.lambda;
            // rowwise softmax, stabilized
            Vector mx = buf.rowwise().maxCoeff();
            Matrix P = (buf.colwise() - mx).array().exp();
            Vector norm = P.rowwise().sum();
            P.array().colwise() /= norm.array();
            drift += problem.weights[k] * (cloud.positions - P * Y);
        }
    } else {
        for (int i = 0; i < m; ++i) {
            drift.row(i) = fv.gradient(cloud.positions.row(i).transpose()).transpose();
        }
    }

    ParticleCloud next{Matrix(m, d), cloud.domain, cloud.step_count + 1};
    const double noise_scale = std::sqrt(2.0 * config.eta * config.tau);
    double disp = 0.0;
    for (int i = 0; i < m; ++i) {
        Vector x = cloud.positions.row(i).transpose() -
                   config.eta * drift.row(i).transpose() + noise_scale * Z.row(i).transpose();
        next.positions.row(i) = cloud.domain.project(std::move(x)).transpose();
        disp += (next.positions.row(i) - cloud.positions.row(i)).norm();
    }

    if (row) {
        row->iter = cloud.step_count;
        row->g_lambda = fv.g_value();
        row->drift_sup = drift.rowwise().norm().maxCoeff();
        row->mean_disp = disp / m;
    }
    return next;
}

NpgdResult npgd_run(const BarycenterProblem& problem, const NpgdConfig& config,
                    const std::function<void(int, const ParticleCloud&)>& snapshot) {
    check_config(problem, config);

    // Initial positions: i.i.d. from config.init.
    DiscreteMeasure start = sample(config.init, config.particle_count, mix_seed(config.seed, 0));
    Matrix pos = start.points();
    for (Eigen::Index i = 0; i < pos.rows(); ++i) {
        pos.row(i) = problem.domain.project(pos.row(i).transpose()).transpose();
    }
    ParticleCloud cloud{std::move(pos), problem.domain, 0};

    NpgdResult res{cloud, {}};
    res.trace.reserve(config.iterations);
    std::vector<Vector> warm(problem.k_count());
    if (snapshot) snapshot(0, cloud);
    for (int l = 0; l < config.iterations; ++l) {
        Rng noise(mix_seed(config.seed, static_cast<std::uint64_t>(l) + 1));
        NpgdTraceRow row;
        cloud = npgd_step(cloud, problem, config, noise, &warm, &row);
        res.trace.push_back(row);
        if (snapshot) snapshot(l + 1, cloud);
    }
    res.cloud = std::move(cloud);
    return res;
}

DiscreteMeasure smooth_cloud_to_grid(const ParticleCloud& cloud, const Grid& grid,
                                     double bandwidth) {
    if (!(bandwidth > 0.0)) throw InvalidInputError("smooth: bandwidth must be positive");
    const Matrix& X = grid.centers();
    const int n = grid.cell_count();
    const int m = static_cast<int>(cloud.positions.rows());
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    Vector w = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int p = 0; p < m; ++p) {
            s += std::exp(-(X.row(i) - cloud.positions.row(p)).squaredNorm() * inv2h2);
        }
        w[i] = s;
    }
    w /= w.sum();
    // Uniform floor so far-away cells stay strictly positive.
    const double floor = 1e-12 / n;
    w = (1.0 - 1e-12) * w;
    w.array() += floor;
    w /= w.sum();
    return grid.measure(std::move(w));
}

double cloud_kde_compare(const ParticleCloud& cloud, const DiscreteMeasure& reference,
                         double bandwidth) {
    if (!reference.grid()) {
        throw DomainMismatchError("cloud_kde_compare: reference must be a grid measure");
    }
    const Grid& grid = *reference.grid();
    DiscreteMeasure smoothed = smooth_cloud_to_grid(cloud, grid, bandwidth);
    if (reference.dim() == 1) return wasserstein2_1d(smoothed, reference);

    // Energy distance on the shared support:
    //   ED = - sum_ij (u_i - v_i)(u_j - v_j) |x_i - x_j|
    const Vector delta = smoothed.weights() - reference.weights();
    const Matrix& X = grid.centers();
    const int n = grid.cell_count();
    double ed = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            ed -= 2.0 * delta[i] * delta[j] * (X.row(i) - X.row(j)).norm();
        }
    }
    return std::max(0.0, ed);
}

}  // namespace douba
