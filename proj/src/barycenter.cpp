#include "douba/barycenter.hpp"

#include <cmath>

namespace douba {

namespace {

// Dropped zero-weight atoms of one marginal, for the dual solvers.
struct MarginalData {
    std::vector<int> idx;   // positions in the original marginal
    Matrix atoms;           // m_k x d
    Vector nu, lognu;
    bool full = false;
};

MarginalData strip_marginal(const DiscreteMeasure& m) {
    MarginalData md;
    for (int i = 0; i < m.size(); ++i) {
        if (m.weights()[i] > 0.0) md.idx.push_back(i);
    }
    md.full = static_cast<int>(md.idx.size()) == m.size();
    md.atoms.resize(md.idx.size(), m.dim());
    md.nu.resize(md.idx.size());
    for (size_t k = 0; k < md.idx.size(); ++k) {
        md.atoms.row(k) = m.points().row(md.idx[k]);
        md.nu[k] = m.weights()[md.idx[k]];
    }
    md.lognu = md.nu.array().log();
    return md;
}

void check_problem_grid(const BarycenterProblem& problem, const Grid& grid) {
    if (!(grid.domain() == problem.domain)) {
        throw DomainMismatchError("barycenter: grid domain must equal the problem domain");
    }
    if (!(problem.tau > 0.0)) {
        throw InvalidInputError("barycenter: grid solvers require tau > 0");
    }
}

// Shared evaluation machinery for E, its gradient and the recovered measure.
// All quantities live in the log domain.
class DualEvaluator {
public:
    DualEvaluator(const BarycenterProblem& problem, const Grid& grid)
        : grid_(grid), w_(problem.weights), lambda_(problem.lambda), tau_(problem.tau) {
        check_problem_grid(problem, grid);
        const int K = problem.k_count();
        marg_.reserve(K);
        C_.reserve(K);
        for (int k = 0; k < K; ++k) {
            marg_.push_back(strip_marginal(problem.marginals[k]));
            C_.push_back(problem.cost.pairwise(grid.centers(), marg_.back().atoms));
        }
        logvol_ = std::log(grid.cell_volume());
        phi_.assign(K, Vector());
        logpi_.assign(K, Vector());
    }

    int k_count() const { return static_cast<int>(marg_.size()); }
    const MarginalData& marginal(int k) const { return marg_[k]; }

    // phi_k on the cells, V, log mu_psi and E for the given psis (on the
    // stripped atoms).
    void eval_objective(const std::vector<Vector>& psis) {
        const int n = grid_.cell_count();
        V_ = Vector::Zero(n);
        for (int k = 0; k < k_count(); ++k) {
            Vector q = psis[k] + lambda_ * marg_[k].lognu;
            soft_ctransform_rows(C_[k], q, lambda_, buf_, phi_[k]);
            V_ += w_[k] * phi_[k];
        }
        cell_log_ = (-V_ / tau_).array() + logvol_;
        logZ_ = log_sum_exp(cell_log_);
        logmu_ = cell_log_.array() - logZ_;
        E_ = -tau_ * logZ_;
        for (int k = 0; k < k_count(); ++k) E_ += w_[k] * marg_[k].nu.dot(psis[k]);
        if (!std::isfinite(E_)) throw NumericalError("barycenter: non-finite dual objective");
    }

    // log pi_k, the second marginal of the implied plan; requires a prior
    // eval_objective with the same psis.
    void eval_plan_marginals(const std::vector<Vector>& psis) {
        for (int k = 0; k < k_count(); ++k) {
            Vector p = phi_[k] + lambda_ * logmu_;
            Vector t;
            soft_ctransform_cols(C_[k], p, lambda_, buf_, t);  // -lambda LSE_i(...)
            logpi_[k] = marg_[k].lognu + (psis[k] - t) / lambda_;
        }
    }

    double objective() const { return E_; }
    const Vector& logmu() const { return logmu_; }
    const Vector& phi(int k) const { return phi_[k]; }
    const Vector& logpi(int k) const { return logpi_[k]; }
    double weight(int k) const { return w_[k]; }
    const Grid& grid() const { return grid_; }

    DiscreteMeasure recovered() const {
        Vector w = logmu_.array().exp();
        w /= w.sum();
        return grid_.measure(std::move(w));
    }

private:
    Grid grid_;
    Vector w_;
    double lambda_, tau_, logvol_ = 0.0;
    std::vector<MarginalData> marg_;
    std::vector<Matrix> C_;
    Matrix buf_;

    std::vector<Vector> phi_, logpi_;
    Vector V_, cell_log_, logmu_;
    double logZ_ = 0.0, E_ = 0.0;
};

std::vector<Vector> strip_psis(const DualState& state, const DualEvaluator& ev) {
    std::vector<Vector> psis(ev.k_count());
    for (int k = 0; k < ev.k_count(); ++k) {
        const auto& md = ev.marginal(k);
        if (state.psis[static_cast<size_t>(k)].size() ==
            static_cast<Eigen::Index>(md.idx.size())) {
            psis[k] = state.psis[static_cast<size_t>(k)];
        } else {
            psis[k].resize(md.idx.size());
            for (size_t j = 0; j < md.idx.size(); ++j) {
                psis[k][static_cast<Eigen::Index>(j)] =
                    state.psis[static_cast<size_t>(k)][md.idx[j]];
            }
        }
    }
    return psis;
}

// nu_k-weighted mean removal; the stored DualState representative.
void center_psis(std::vector<Vector>& psis, const DualEvaluator& ev) {
    for (int k = 0; k < ev.k_count(); ++k) {
        psis[k].array() -= ev.marginal(k).nu.dot(psis[k]);
    }
}

double certificate_upper_from(const DiscreteMeasure& mu, const BarycenterProblem& problem,
                              double tol, int max_iter, const std::vector<Vector>* warm) {
    EotOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    std::vector<EotSolution> sols;
    sols.reserve(problem.k_count());
    for (int k = 0; k < problem.k_count(); ++k) {
        Vector warm_full;
        if (warm) {
            warm_full = Vector::Zero(problem.marginals[k].size());
            const auto md = strip_marginal(problem.marginals[k]);
            for (size_t j = 0; j < md.idx.size(); ++j) {
                warm_full[md.idx[j]] = (*warm)[static_cast<size_t>(k)][static_cast<Eigen::Index>(j)];
            }
            opts.warm_psi = &warm_full;
        }
        sols.push_back(solve_eot(mu, problem.marginals[k], problem.lambda, problem.cost, opts));
        opts.warm_psi = nullptr;
    }
    FirstVariation fv(problem, std::move(sols));
    const Vector& V = fv.values_at_mu_atoms();

    // Tangent Gibbs nu ~ vol * exp(-V/tau) on mu's grid; upper = tau H(mu|nu).
    Vector t = -V / problem.tau;
    const double logZ = log_sum_exp(t);  // common vol factor cancels
    double h = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
        const double u = mu.weights()[i];
        if (u > 0.0) h += u * (std::log(u) - (t[i] - logZ));
    }
    return problem.tau * h;
}

}  // namespace

double dual_objective(const DualState& state, const BarycenterProblem& problem) {
    DualEvaluator ev(problem, state.grid);
    ev.eval_objective(strip_psis(state, ev));
    return ev.objective();
}

std::vector<Vector> dual_gradient(const DualState& state, const BarycenterProblem& problem) {
    DualEvaluator ev(problem, state.grid);
    auto psis = strip_psis(state, ev);
    ev.eval_objective(psis);
    ev.eval_plan_marginals(psis);
    std::vector<Vector> grads(ev.k_count());
    for (int k = 0; k < ev.k_count(); ++k) {
        const auto& md = ev.marginal(k);
        Vector g_sub =
            -ev.weight(k) *
            (md.nu.array() * (ev.logpi(k) - md.lognu).array().expm1()).matrix();
        if (md.full) {
            grads[k] = std::move(g_sub);
        } else {
            grads[k] = Vector::Zero(problem.marginals[k].size());
            for (size_t j = 0; j < md.idx.size(); ++j) {
                grads[k][md.idx[j]] = g_sub[static_cast<Eigen::Index>(j)];
            }
        }
    }
    return grads;
}

DiscreteMeasure recover_barycenter(const DualState& state, const BarycenterProblem& problem) {
    DualEvaluator ev(problem, state.grid);
    ev.eval_objective(strip_psis(state, ev));
    return ev.recovered();
}

namespace {

// Extends stripped psis back to the original atom layout through the
// Schrodinger system, then re-centers.
std::vector<Vector> extend_psis(const std::vector<Vector>& psis, const DualEvaluator& ev,
                                const BarycenterProblem& problem, const Grid& grid) {
    std::vector<Vector> full(psis.size());
    Matrix buf;
    for (int k = 0; k < ev.k_count(); ++k) {
        const auto& md = ev.marginal(k);
        if (md.full) {
            full[static_cast<size_t>(k)] = psis[static_cast<size_t>(k)];
            continue;
        }
        // psi(y) = -lambda log sum_cells mu_psi(x) exp((phi_k(x) - c(x,y))/lambda)
        Matrix C = problem.cost.pairwise(grid.centers(), problem.marginals[k].points());
        Vector p = ev.phi(k) + problem.lambda * ev.logmu();
        Vector t;
        soft_ctransform_cols(C, p, problem.lambda, buf, t);
        Vector out = t;
        for (size_t j = 0; j < md.idx.size(); ++j) {
            out[md.idx[j]] = psis[static_cast<size_t>(k)][static_cast<Eigen::Index>(j)];
        }
        full[static_cast<size_t>(k)] = std::move(out);
    }
    return full;
}

}  // namespace

DualAscentResult solve_dual_ascent(const BarycenterProblem& problem, const Grid& grid,
                                   const DualAscentOptions& opts) {
    DualEvaluator ev(problem, grid);
    if (!(opts.tol > 0.0)) throw InvalidInputError("dual ascent: tol must be positive");

    const bool forced_step = opts.step > 0.0;
    double step = forced_step ? opts.step : std::min(problem.lambda, problem.tau);

    std::vector<Vector> psis(ev.k_count());
    for (int k = 0; k < ev.k_count(); ++k) {
        psis[k] = Vector::Zero(static_cast<Eigen::Index>(ev.marginal(k).idx.size()));
    }

    ev.eval_objective(psis);
    double E_prev = ev.objective();
    std::vector<Vector> psis_prev = psis;

    DualAscentResult res{DualState{{}, grid, 0.0}, grid.uniform_measure(), false, 0, kInf, kInf};
    const double cert_gate = 10.0 * problem.tau * opts.tol;

    for (int it = 1; it <= opts.max_iter; ++it) {
        res.iterations = it;
        ev.eval_plan_marginals(psis);

        double grad_sup = 0.0;
        for (int k = 0; k < ev.k_count(); ++k) {
            const auto& md = ev.marginal(k);
            Vector delta = (ev.logpi(k) - md.lognu).array().expm1();  // pi/nu - 1
            grad_sup = std::max(
                grad_sup, ev.weight(k) * (md.nu.array() * delta.array().abs()).maxCoeff());
            if (opts.preconditioned) {
                psis[k] -= step * delta;
            } else {
                psis[k] -= step * ev.weight(k) * (md.nu.array() * delta.array()).matrix();
            }
            psis[k].array() -= md.nu.dot(psis[k]);  // keep the centered representative
        }
        res.grad_sup = grad_sup;

        ev.eval_objective(psis);
        const double E = ev.objective();

        if (E < E_prev - 1e-12 * std::max(1.0, std::abs(E_prev))) {
            if (forced_step) {
                throw StepSizeError("dual ascent: objective decreased; use a smaller step");
            }
            // Smoothness default was too optimistic here; halve and restart
            // the step from the previous iterate.
            step *= 0.5;
            psis = psis_prev;
            ev.eval_objective(psis);
            continue;
        }
        E_prev = E;
        psis_prev = psis;

        if (opts.trace) {
            BarycenterTraceRow row{it, E, grad_sup, -1.0};
            if (opts.trace_certificate) {
                row.certificate_upper = certificate_upper_from(ev.recovered(), problem, opts.tol,
                                                               opts.max_iter, &psis);
            }
            opts.trace(row);
        }

        if (grad_sup <= opts.tol) {
            res.certificate_upper = certificate_upper_from(ev.recovered(), problem, opts.tol,
                                                           opts.max_iter, &psis);
            if (res.certificate_upper <= cert_gate) {
                res.converged = true;
                break;
            }
        }
    }

    if (!res.converged && std::isinf(res.certificate_upper)) {
        res.certificate_upper =
            certificate_upper_from(ev.recovered(), problem, opts.tol, opts.max_iter, &psis);
    }

    res.barycenter = ev.recovered();
    center_psis(psis, ev);
    res.state = DualState{extend_psis(psis, ev, problem, grid), grid, E_prev};
    return res;
}

AlternatingResult solve_alternating_tau_eq_lambda(const BarycenterProblem& problem,
                                                  const Grid& grid, double tol, int max_iter) {
    if (std::abs(problem.tau - problem.lambda) >= 1e-12) {
        throw InvalidInputError("alternating solver requires tau = lambda");
    }
    check_problem_grid(problem, grid);
    const double lambda = problem.lambda;
    const int K = problem.k_count();
    const int n = grid.cell_count();
    const double logvol = std::log(grid.cell_volume());

    std::vector<MarginalData> marg;
    std::vector<Matrix> C;
    marg.reserve(K);
    C.reserve(K);
    for (int k = 0; k < K; ++k) {
        marg.push_back(strip_marginal(problem.marginals[k]));
        C.push_back(problem.cost.pairwise(grid.centers(), marg.back().atoms));
    }

    std::vector<Vector> phi(K, Vector::Zero(n)), psi(K), phi_tilde(K);
    for (int k = 0; k < K; ++k) {
        psi[k] = Vector::Zero(static_cast<Eigen::Index>(marg[k].idx.size()));
    }

    AlternatingResult res{grid.uniform_measure(), 0, false, 0.0};
    Matrix buf;
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        // psi block: psi_kj = -lambda log sum_cells vol exp((phi_k - C_kj)/lambda)
        double sup_change = 0.0;
        for (int k = 0; k < K; ++k) {
            Vector p = phi[k].array() + lambda * logvol;
            Vector psi_new;
            soft_ctransform_cols(C[k], p, lambda, buf, psi_new);
            sup_change = std::max(sup_change, (psi_new - psi[k]).lpNorm<Eigen::Infinity>());
            psi[k] = std::move(psi_new);
        }
        // phi block, then project onto sum_k w_k phi_k = 0.
        Vector mean = Vector::Zero(n);
        for (int k = 0; k < K; ++k) {
            Vector q = psi[k] + lambda * marg[k].lognu;
            soft_ctransform_rows(C[k], q, lambda, buf, phi_tilde[k]);
            mean += problem.weights[k] * phi_tilde[k];
        }
        for (int k = 0; k < K; ++k) phi[k] = phi_tilde[k] - mean;
        if (!mean.allFinite()) throw NumericalError("alternating: non-finite potentials");
        if (sup_change <= tol && it > 1) {
            res.converged = true;
            break;
        }
    }

    // Recover mu from every k independently; all must agree.
    // log mu_k(cell) = logvol + (phi_k + lambda lognu LSE ... - c)/lambda
    std::vector<Vector> mus(K);
    for (int k = 0; k < K; ++k) {
        Vector q = psi[k] + lambda * marg[k].lognu;
        Vector t;
        soft_ctransform_rows(C[k], q, lambda, buf, t);  // fresh phi_tilde_k
        Vector logm = (phi[k] - t) / lambda;
        logm.array() += logvol;
        Vector m = logm.array().exp();
        m /= m.sum();
        mus[k] = std::move(m);
    }
    for (int k = 1; k < K; ++k) {
        res.consistency_error =
            std::max(res.consistency_error, 0.5 * (mus[k] - mus[0]).lpNorm<1>());
    }
    if (res.consistency_error > 100.0 * tol) {
        throw ConsistencyError("alternating: per-marginal recoveries disagree");
    }
    res.barycenter = grid.measure(std::move(mus[0]));
    return res;
}

double primal_objective(const DiscreteMeasure& mu, const BarycenterProblem& problem, double tol,
                        int max_iter) {
    EotOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    double f = 0.0;
    for (int k = 0; k < problem.k_count(); ++k) {
        f += problem.weights[k] *
             solve_eot(mu, problem.marginals[k], problem.lambda, problem.cost, opts).cost;
    }
    return f + problem.tau * entropy(mu);
}

CertificateBounds suboptimality_certificate(const DiscreteMeasure& mu,
                                            const BarycenterProblem& problem, double tol,
                                            int max_iter) {
    if (!mu.grid()) throw DomainMismatchError("certificate: mu must be a grid measure");
    if (!(problem.tau > 0.0)) throw InvalidInputError("certificate: requires tau > 0");
    if ((mu.weights().array() <= 0.0).any()) {
        throw InvalidInputError("certificate: undefined for zero-mass cells in mu");
    }
    CertificateBounds b;
    b.lower = 0.0;  // tau H(mu|mu*) is unavailable without mu*
    b.upper = certificate_upper_from(mu, problem, tol, max_iter, nullptr);
    return b;
}

}  // namespace douba
