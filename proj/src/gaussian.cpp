#include "douba/gaussian.hpp"

#include <cmath>

#include "douba/errors.hpp"

namespace douba {

double barycenter_variance(double a, double lambda, double tau) {
    if (a < 0.0 || lambda < 0.0 || tau < 0.0) {
        throw InvalidInputError("barycenter_variance: a, lambda, tau must be nonnegative");
    }
    if (a == 0.0) return tau;  // point-mass limit, independent of lambda
    const double s = a + std::sqrt((a - lambda) * (a - lambda) + 4.0 * a * tau);
    return (s * s - lambda * lambda) / (4.0 * a);
}

double tau_star(double a, double lambda) {
    if (!(a > 0.0)) throw InvalidInputError("tau_star: a must be positive");
    if (lambda < 0.0) throw InvalidInputError("tau_star: lambda must be nonnegative");
    const double r = lambda / (2.0 * a);
    return 0.5 * lambda + a * (1.0 - std::sqrt(1.0 + r * r));
}

GaussianEotQuantities gaussian_eot_quantities(double a, double b, double lambda) {
    GaussianEotQuantities q;
    q.xi = std::sqrt(4.0 * a * b + lambda * lambda);
    q.u_tilde = 1.0 - 2.0 * b / (q.xi + lambda);
    q.v_tilde = 1.0 - 2.0 * a / (q.xi + lambda);
    return q;
}

Table2Row table2_row_from_name(const std::string& name) {
    if (name == "unregularized") return Table2Row::unregularized;
    if (name == "inner_only") return Table2Row::inner_only;
    if (name == "outer_only") return Table2Row::outer_only;
    if (name == "schrodinger") return Table2Row::schrodinger;
    if (name == "debiased_half") return Table2Row::debiased_half;
    throw InvalidInputError("table2_row: unknown tag '" + name + "'");
}

double table2_row(Table2Row row, double a, double lambda, double tau) {
    switch (row) {
        case Table2Row::unregularized:
            return a;
        case Table2Row::inner_only:
            return std::max(a - lambda, 0.0);
        case Table2Row::outer_only:
            return a + 2.0 * tau - tau * tau / a;
        case Table2Row::schrodinger:
            return a + lambda;
        case Table2Row::debiased_half:
            return a + lambda * lambda / (4.0 * a);
    }
    throw InvalidInputError("table2_row: unknown tag");
}

double gaussian_w2_iso(double a, double b) {
    return std::abs(std::sqrt(b) - std::sqrt(a));
}

}  // namespace douba
