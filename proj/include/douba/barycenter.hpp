#pragma once

#include <functional>
#include <vector>

#include "douba/eot.hpp"
#include "douba/measures.hpp"
#include "douba/problem.hpp"

namespace douba {

// Dual variables of the barycenter problem: one potential psi_k per marginal,
// plus the quadrature grid carrying the Lebesgue integral of the dual
// objective. The stored representative has mean-zero psi_k under nu_k; the
// objective is invariant under shifting any psi_k by a constant.
struct DualState {
    std::vector<Vector> psis;
    Grid grid;
    double objective = 0.0;
};

// E(psi) = sum_k w_k <nu_k, psi_k> - tau log int exp(-V_psi(x)/tau) dx with
// V_psi = sum_k w_k phi_{psi_k} and phi_{psi_k} the soft c-transform of
// psi_k; the integral is midpoint quadrature on the grid, log-sum-exp
// stabilized throughout.
double dual_objective(const DualState& state, const BarycenterProblem& problem);

// Per-atom gradients g_k(y_j) = w_k nu_kj - w_k pi_kj where pi_k is the
// second marginal of the plan implied by (phi_{psi_k}, psi_k, mu_psi). Each
// block sums to zero.
std::vector<Vector> dual_gradient(const DualState& state, const BarycenterProblem& problem);

// Grid Gibbs measure mu_psi with cell weights proportional to
// vol * exp(-V_psi(x_cell)/tau), normalized.
DiscreteMeasure recover_barycenter(const DualState& state, const BarycenterProblem& problem);

struct BarycenterTraceRow {
    int iter = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double certificate_upper = 0.0;
};

struct DualAscentOptions {
    double step = 0.0;  // <= 0 selects the default min(lambda, tau)
    double tol = 1e-9;
    int max_iter = 100000;
    // Ascent in L2(w_k nu_k): atom gradients divided by w_k nu_kj. The plain
    // Euclidean direction is kept behind this flag.
    bool preconditioned = true;
    // Per-iteration trace; certificate_upper is only filled (at extra cost)
    // when with_certificate is set.
    std::function<void(const BarycenterTraceRow&)> trace;
    bool trace_certificate = false;
};

struct DualAscentResult {
    DualState state;
    DiscreteMeasure barycenter;
    bool converged = false;
    int iterations = 0;
    double grad_sup = 0.0;
    double certificate_upper = 0.0;
};

// Gradient ascent on E. Convergence requires the gradient sup-norm <= tol
// and the entropy-sandwich certificate <= 10 * tau * tol; hitting max_iter
// returns the last iterate flagged. A caller-forced step that produces an
// objective decrease raises StepSizeError; the default step is halved
// instead.
DualAscentResult solve_dual_ascent(const BarycenterProblem& problem, const Grid& grid,
                                   const DualAscentOptions& opts = {});

struct AlternatingResult {
    DiscreteMeasure barycenter;
    int iterations = 0;
    bool converged = false;
    double consistency_error = 0.0;  // max TV disagreement across the K recoveries
};

// Sinkhorn-like alternating block maximization of the tau = lambda dual with
// the constraint sum_k w_k phi_k = 0 enforced by subtracting the weighted
// average after each phi block. The barycenter is recovered independently
// from every k and the recoveries must agree within 100 * tol.
AlternatingResult solve_alternating_tau_eq_lambda(const BarycenterProblem& problem,
                                                  const Grid& grid, double tol = 1e-9,
                                                  int max_iter = 100000);

// F(mu) = sum_k w_k T_lambda(mu, nu_k) + tau H(mu) for a grid measure mu.
double primal_objective(const DiscreteMeasure& mu, const BarycenterProblem& problem,
                        double tol = 1e-9, int max_iter = 100000);

struct CertificateBounds {
    double lower = 0.0;  // tau H(mu | mu*) needs the unknown optimum; 0 by convention
    double upper = 0.0;  // tau H(mu | nu), nu the tangent Gibbs exp(-V[mu]/tau)
};

// Entropy-sandwich certificate: upper bounds F(mu) - F(mu*) from above, so
// upper <= eps certifies eps-suboptimality. mu must be strictly positive on
// its grid.
CertificateBounds suboptimality_certificate(const DiscreteMeasure& mu,
                                            const BarycenterProblem& problem, double tol = 1e-9,
                                            int max_iter = 100000);

}  // namespace douba
