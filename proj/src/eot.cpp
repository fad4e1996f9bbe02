#include "douba/eot.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace douba {

namespace {

// One side of the generalized Schrodinger system. The plan ansatz is
//   gamma_ij = r_i s_j exp((phi_i + psi_j - C_ij) / lambda)
// with marginal targets (u, v) and reference weights (r, s); matching the
// row marginals gives
//   phi_i = lambda (log u_i - log r_i) - lambda LSE_j((q_j - C_ij)/lambda),
//   q_j = psi_j + lambda log s_j,
// and symmetrically for psi. The standard problem has r = u, s = v.
struct SinkhornState {
    const Matrix& C;
    Vector adj_u, adj_v;    // lambda * (log target - log reference)
    Vector log_r, log_s;
    double lambda;

    Vector phi, psi;
    Matrix buf;

    void update_phi() {
        Vector q = psi + lambda * log_s;
        soft_ctransform_rows(C, q, lambda, buf, phi);
        phi += adj_u;
    }
    void update_psi() {
        Vector p = phi + lambda * log_r;
        soft_ctransform_cols(C, p, lambda, buf, psi);
        psi += adj_v;
    }
};

struct SinkhornOutcome {
    Vector phi, psi;
    int iterations = 0;
    bool converged = false;
    double marginal_error = 0.0;
};

SinkhornOutcome run_sinkhorn(const Matrix& C, const Vector& u, const Vector& v,
                             const Vector& log_r, const Vector& log_s, double lambda, double tol,
                             int max_iter, const Vector* warm_psi) {
    SinkhornState st{C,
                     lambda * (u.array().log() - log_r.array()).matrix(),
                     lambda * (v.array().log() - log_s.array()).matrix(),
                     log_r,
                     log_s,
                     lambda,
                     Vector::Zero(C.rows()),
                     warm_psi ? *warm_psi : Vector::Zero(C.cols()),
                     Matrix()};

    SinkhornOutcome out;
    st.update_phi();  // row marginals exact from here on
    Vector psi_old, phi_old;
    for (int it = 1; it <= max_iter; ++it) {
        psi_old = st.psi;
        st.update_psi();
        const double sup_change = (st.psi - psi_old).lpNorm<Eigen::Infinity>();
        phi_old = st.phi;
        st.update_phi();
        // Row violation of the intermediate (phi_old, psi) pair: its row sums
        // are u_i * exp((phi_old_i - phi_i)/lambda).
        const double row_err =
            (u.array() * ((phi_old - st.phi) / lambda).array().expm1().abs()).sum();
        out.iterations = it;
        if (!st.psi.allFinite() || !st.phi.allFinite()) {
            throw NumericalError("eot: non-finite potentials during Sinkhorn iteration");
        }
        if (sup_change <= tol && row_err <= tol) {
            out.converged = true;
            break;
        }
    }
    // Returned state has exact row marginals; measure the column violation.
    Vector p = st.phi + lambda * st.log_r;
    Vector psi_next;
    Matrix buf;
    soft_ctransform_cols(C, p, lambda, buf, psi_next);
    psi_next += st.adj_v;
    out.marginal_error =
        (v.array() * ((st.psi - psi_next) / lambda).array().expm1().abs()).sum();
    out.phi = std::move(st.phi);
    out.psi = std::move(st.psi);
    return out;
}

struct Support {
    std::vector<int> idx;
    Matrix points;
    Vector weights;
    bool full = false;
};

Support positive_support(const DiscreteMeasure& m) {
    Support s;
    for (int i = 0; i < m.size(); ++i) {
        if (m.weights()[i] > 0.0) s.idx.push_back(i);
    }
    s.full = static_cast<int>(s.idx.size()) == m.size();
    if (s.full) {
        s.points = m.points();
        s.weights = m.weights();
    } else {
        if (s.idx.empty()) throw InvalidInputError("eot: measure has no positive-weight atoms");
        s.points.resize(s.idx.size(), m.dim());
        s.weights.resize(s.idx.size());
        for (size_t k = 0; k < s.idx.size(); ++k) {
            s.points.row(k) = m.points().row(s.idx[k]);
            s.weights[k] = m.weights()[s.idx[k]];
        }
    }
    return s;
}

}  // namespace

EotSolution solve_eot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                      const CostFunction& cost, const EotOptions& opts) {
    if (!(lambda > 0.0)) throw InvalidInputError("eot: lambda must be positive");
    if (!(opts.tol > 0.0)) throw InvalidInputError("eot: tol must be positive");
    if (mu.dim() != nu.dim()) throw DomainMismatchError("eot: measures of mixed dimension");

    // Zero-weight atoms carry no information and break log-domain updates;
    // solve on the positive supports, extend afterwards.
    const Support su = positive_support(mu);
    const Support sv = positive_support(nu);

    Matrix C = cost.pairwise(su.points, sv.points);
    Vector log_u = su.weights.array().log();
    Vector log_v = sv.weights.array().log();

    Vector warm;
    const Vector* warm_ptr = nullptr;
    if (opts.warm_psi) {
        if (opts.warm_psi->size() != nu.size()) {
            throw InvalidInputError("eot: warm-start psi has the wrong length");
        }
        if (sv.full) {
            warm_ptr = opts.warm_psi;
        } else {
            warm.resize(sv.idx.size());
            for (size_t k = 0; k < sv.idx.size(); ++k) warm[k] = (*opts.warm_psi)[sv.idx[k]];
            warm_ptr = &warm;
        }
    }

    SinkhornOutcome out =
        run_sinkhorn(C, su.weights, sv.weights, log_u, log_v, lambda, opts.tol, opts.max_iter,
                     warm_ptr);

    EotSolution sol;
    sol.iterations = out.iterations;
    sol.converged = out.converged;
    sol.marginal_error = out.marginal_error;
    sol.cost = su.weights.dot(out.phi) + sv.weights.dot(out.psi);
    if (!std::isfinite(sol.cost)) throw NumericalError("eot: non-finite cost value");

    // Feasible product plan bound: T_lambda <= int c d(mu x nu).
    if (sol.converged) {
        const double bound = su.weights.dot(C * sv.weights);
        if (sol.cost > bound + 1e-9 * std::max(1.0, std::abs(bound))) {
            throw NumericalError("eot: dual value exceeds the product-plan cost bound");
        }
    }

    Vector phi_full, psi_full;
    if (su.full && sv.full) {
        phi_full = std::move(out.phi);
        psi_full = std::move(out.psi);
    } else {
        // Extend through the Schrodinger system; on the support this recomputes
        // the converged values.
        Matrix buf;
        Matrix C_mu_side = cost.pairwise(mu.points(), sv.points);
        Vector q = out.psi + lambda * log_v;
        soft_ctransform_rows(C_mu_side, q, lambda, buf, phi_full);
        Matrix C_nu_side = cost.pairwise(su.points, nu.points());
        Vector p = out.phi + lambda * log_u;
        soft_ctransform_cols(C_nu_side, p, lambda, buf, psi_full);
    }

    // mean_zero_phi normalization; the shift leaves the dual value unchanged.
    const double shift = mu.weights().dot(phi_full);
    phi_full.array() -= shift;
    psi_full.array() += shift;

    sol.potentials = PotentialPair{std::move(phi_full), std::move(psi_full), lambda};
    return sol;
}

double eot_cost_with_reference(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                               double alpha, const Grid& grid, const CostFunction& cost,
                               double tol, int max_iter) {
    if (!(lambda > 0.0)) throw InvalidInputError("eot: lambda must be positive");
    if (alpha > 1.0) throw InvalidInputError("eot: alpha must be <= 1");
    if (!mu.grid() || !(*mu.grid() == grid)) {
        throw DomainMismatchError("eot: mu must be a grid measure on the given grid");
    }

    const Support su = positive_support(mu);
    const Support sv = positive_support(nu);
    Matrix C = cost.pairwise(su.points, sv.points);

    // Reference sigma_alpha = mu^alpha (x) nu with density (u_i/vol)^alpha:
    // per-cell reference weight r_i = u_i^alpha vol^(1-alpha).
    const double logvol = std::log(grid.cell_volume());
    Vector log_r = alpha * su.weights.array().log() + (1.0 - alpha) * logvol;
    Vector log_s = sv.weights.array().log();

    SinkhornOutcome out = run_sinkhorn(C, su.weights, sv.weights, log_r, log_s, lambda, tol,
                                       max_iter, nullptr);
    const double value = su.weights.dot(out.phi) + sv.weights.dot(out.psi);
    if (!std::isfinite(value)) throw NumericalError("eot: non-finite cost value");
    return value;
}

double sinkhorn_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                           const CostFunction& cost, double tol, int max_iter) {
    EotOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    const double t_mn = solve_eot(mu, nu, lambda, cost, opts).cost;
    const double t_mm = solve_eot(mu, mu, lambda, cost, opts).cost;
    const double t_nn = solve_eot(nu, nu, lambda, cost, opts).cost;
    return t_mn - 0.5 * t_mm - 0.5 * t_nn;
}

// ---------------------------------------------------------------------------
// First variation

FirstVariation::FirstVariation(const BarycenterProblem& problem,
                               std::vector<EotSolution> solutions)
    : solutions_(std::move(solutions)),
      w_(problem.weights),
      lambda_(problem.lambda),
      cost_(problem.cost) {
    const int K = problem.k_count();
    atoms_.reserve(K);
    lognu_.reserve(K);
    for (int k = 0; k < K; ++k) {
        atoms_.push_back(problem.marginals[k].points());
        lognu_.push_back(problem.marginals[k].weights().array().log().matrix());
    }
    g_value_ = 0.0;
    for (int k = 0; k < K; ++k) g_value_ += w_[k] * solutions_[k].cost;
    at_mu_atoms_ = w_[0] * solutions_[0].potentials.phi;
    for (int k = 1; k < K; ++k) at_mu_atoms_ += w_[k] * solutions_[k].potentials.phi;
}

double FirstVariation::operator()(const Eigen::Ref<const Vector>& x) const {
    double v = 0.0;
    for (size_t k = 0; k < atoms_.size(); ++k) {
        const auto& Y = atoms_[k];
        const Vector& psi = solutions_[k].potentials.psi;
        Vector scores(Y.rows());
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            scores[j] = lognu_[k][j] + (psi[j] - cost_(x, Y.row(j).transpose())) / lambda_;
        }
        v += w_[static_cast<Eigen::Index>(k)] * (-lambda_ * log_sum_exp(scores));
    }
    return v;
}

Vector FirstVariation::gradient(const Eigen::Ref<const Vector>& x) const {
    Vector g = Vector::Zero(x.size());
    for (size_t k = 0; k < atoms_.size(); ++k) {
        const auto& Y = atoms_[k];
        const Vector& psi = solutions_[k].potentials.psi;
        Vector scores(Y.rows());
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            scores[j] = lognu_[k][j] + (psi[j] - cost_(x, Y.row(j).transpose())) / lambda_;
        }
        const double m = scores.maxCoeff();
        Vector p = (scores.array() - m).exp();
        p /= p.sum();
        Vector gk = Vector::Zero(x.size());
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            if (p[j] > 0.0) gk += p[j] * cost_.grad_x(x, Y.row(j).transpose());
        }
        g += w_[static_cast<Eigen::Index>(k)] * gk;
    }
    return g;
}

Vector FirstVariation::values_at(const Matrix& X) const {
    Vector v = Vector::Zero(X.rows());
    Matrix buf;
    Vector phi_k;
    for (size_t k = 0; k < atoms_.size(); ++k) {
        Matrix C = cost_.pairwise(X, atoms_[k]);
        Vector q = solutions_[k].potentials.psi + lambda_ * lognu_[k];
        soft_ctransform_rows(C, q, lambda_, buf, phi_k);
        v += w_[static_cast<Eigen::Index>(k)] * phi_k;
    }
    return v;
}

FirstVariation first_variation(const DiscreteMeasure& mu, const BarycenterProblem& problem,
                               double tol, int max_iter) {
    EotOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    std::vector<EotSolution> sols;
    sols.reserve(problem.k_count());
    for (int k = 0; k < problem.k_count(); ++k) {
        const std::string tag = "first_variation: marginal k=" + std::to_string(k) + ": ";
        try {
            sols.push_back(solve_eot(mu, problem.marginals[k], problem.lambda, problem.cost, opts));
        } catch (const NumericalError& e) {
            throw NumericalError(tag + e.what());
        } catch (const InvalidInputError& e) {
            throw InvalidInputError(tag + e.what());
        } catch (const DomainMismatchError& e) {
            throw DomainMismatchError(tag + e.what());
        }
    }
    return FirstVariation(problem, std::move(sols));
}

Vector grad_first_variation(const DiscreteMeasure& mu, const BarycenterProblem& problem,
                            const Eigen::Ref<const Vector>& x, double tol, int max_iter) {
    return first_variation(mu, problem, tol, max_iter).gradient(x);
}

}  // namespace douba
