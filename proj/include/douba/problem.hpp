#pragma once

#include <vector>

#include "douba/measures.hpp"

namespace douba {

// K marginals with weights, inner strength lambda, outer strength tau, the
// ground cost and the box domain. lambda must be positive; tau may be zero
// (the particle solver runs without noise then, the grid solvers refuse).
struct BarycenterProblem {
    std::vector<DiscreteMeasure> marginals;
    Vector weights;
    double lambda;
    double tau;
    CostFunction cost;
    BoxDomain domain;

    BarycenterProblem(std::vector<DiscreteMeasure> marginals_in, Vector weights_in,
                      double lambda_in, double tau_in, CostFunction cost_in, BoxDomain domain_in)
        : marginals(std::move(marginals_in)),
          weights(std::move(weights_in)),
          lambda(lambda_in),
          tau(tau_in),
          cost(std::move(cost_in)),
          domain(std::move(domain_in)) {
        if (marginals.empty()) throw InvalidInputError("problem: needs K >= 1 marginals");
        if (static_cast<Eigen::Index>(marginals.size()) != weights.size()) {
            throw InvalidInputError("problem: weights length must equal the marginal count");
        }
        if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
            throw InvalidInputError("problem: weights must be nonnegative and sum to 1");
        }
        if (!(lambda > 0.0)) throw InvalidInputError("problem: lambda must be positive");
        if (!(tau >= 0.0)) throw InvalidInputError("problem: tau must be nonnegative");
        const double slack = 1e-9 * std::max(1.0, domain.diameter());
        for (const auto& nu : marginals) {
            if (nu.dim() != domain.dim()) {
                throw DomainMismatchError("problem: marginal dimension mismatch");
            }
            for (int i = 0; i < nu.size(); ++i) {
                if (!domain.contains(nu.points().row(i).transpose(), slack)) {
                    throw DomainMismatchError("problem: marginal atom outside the domain");
                }
            }
        }
    }

    int k_count() const { return static_cast<int>(marginals.size()); }
};

}  // namespace douba
