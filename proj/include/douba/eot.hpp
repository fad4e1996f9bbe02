#pragma once

#include <vector>

#include "douba/measures.hpp"
#include "douba/problem.hpp"

namespace douba {

// Schrodinger potentials (phi, psi) of an EOT problem with reference mu x nu:
//   phi(x) = -lambda log sum_j nu_j exp((psi(y_j) - c(x,y_j)) / lambda)
// and symmetrically for psi. The constant-shift ambiguity is fixed by the
// mean_zero_phi convention: sum_i mu_i phi(x_i) = 0.
struct PotentialPair {
    Vector phi;  // on the atoms of mu
    Vector psi;  // on the atoms of nu
    double lambda = 0.0;
};

struct EotSolution {
    PotentialPair potentials;
    double cost = 0.0;            // dual value sum_i mu_i phi_i + sum_j nu_j psi_j
    double marginal_error = 0.0;  // max L1 violation of the implied plan marginals
    int iterations = 0;
    bool converged = false;
};

struct EotOptions {
    double tol = 1e-9;
    int max_iter = 100000;
    // Optional warm start on nu's atoms (zero-weight atoms included).
    const Vector* warm_psi = nullptr;
};

// Log-domain Sinkhorn on the Schrodinger system. Stops when the sup-norm
// change of psi and the plan marginal L1 error both fall below tol; a run
// that exhausts max_iter is returned flagged, potentials intact.
EotSolution solve_eot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                      const CostFunction& cost, const EotOptions& opts = {});

// EOT cost with reference sigma_alpha = mu^alpha (x) nu, mu a grid measure so
// its density is well defined. alpha = 1 is the plain mu (x) nu problem;
// alpha = 0 uses Lebesgue on the mu side.
double eot_cost_with_reference(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                               double alpha, const Grid& grid, const CostFunction& cost,
                               double tol = 1e-9, int max_iter = 100000);

// S_lambda(mu, nu) = T(mu,nu) - T(mu,mu)/2 - T(nu,nu)/2 from three solves.
double sinkhorn_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                           const CostFunction& cost, double tol = 1e-9, int max_iter = 100000);

// First variation V[mu] = sum_k w_k phi_k[mu] of the barycenter functional
// G_lambda(mu) = sum_k w_k T_lambda(mu, nu_k). Each phi_k extends to any
// x in X through the soft c-transform of its converged psi_k, which also
// yields the analytic spatial gradient
//   grad V[mu](x) = sum_k w_k sum_j p_j^k(x) grad_x c(x, y_j^k),
// p^k(x) the softmax distribution ~ nu_kj exp((psi_kj - c(x,y_j))/lambda).
class FirstVariation {
public:
    FirstVariation(const BarycenterProblem& problem, std::vector<EotSolution> solutions);

    double operator()(const Eigen::Ref<const Vector>& x) const;
    Vector gradient(const Eigen::Ref<const Vector>& x) const;
    Vector values_at(const Matrix& X) const;  // batched evaluation

    // V at the atoms of the mu the potentials were solved from.
    const Vector& values_at_mu_atoms() const { return at_mu_atoms_; }
    // G_lambda(mu) = sum_k w_k T_lambda(mu, nu_k).
    double g_value() const { return g_value_; }
    const std::vector<EotSolution>& solutions() const { return solutions_; }

private:
    std::vector<Matrix> atoms_;   // per k: m_k x d
    std::vector<Vector> lognu_;   // per k
    std::vector<EotSolution> solutions_;
    Vector w_;
    double lambda_;
    CostFunction cost_;
    Vector at_mu_atoms_;
    double g_value_;
};

// Solves the K EOT problems (mu, nu_k); errors are rethrown tagged with the
// failing marginal index.
FirstVariation first_variation(const DiscreteMeasure& mu, const BarycenterProblem& problem,
                               double tol = 1e-9, int max_iter = 100000);

// Convenience single-point gradient; prefer FirstVariation for repeated use.
Vector grad_first_variation(const DiscreteMeasure& mu, const BarycenterProblem& problem,
                            const Eigen::Ref<const Vector>& x, double tol = 1e-9,
                            int max_iter = 100000);

}  // namespace douba
