#pragma once

#include <string>

namespace douba {

// Closed forms for barycenters of isotropic Gaussians N(x_k, a I_d) with a
// shared variance a. Means factor out (the barycenter mean is always the
// weighted mean), so everything below is scalar in the variance.

// Variance b of the (lambda, tau)-barycenter:
//   b = ((a + sqrt((a - lambda)^2 + 4 a tau))^2 - lambda^2) / (4a),  a > 0,
// with the point-mass limit b = tau at a = 0.
double barycenter_variance(double a, double lambda, double tau);

// Outer strength tau*(lambda) = lambda/2 + a (1 - sqrt(1 + lambda^2/(4a^2)))
// for which b = a exactly.
double tau_star(double a, double lambda);

// Dual potential coefficients of the Gaussian EOT pair N(0,a), N(0,b): the
// quadratics phi = u~ |x|^2 / 2 and psi = v~ |y|^2 / 2 solve the Schrodinger
// system with
//   xi = sqrt(4ab + lambda^2), u~ = 1 - 2b/(xi+lambda), v~ = 1 - 2a/(xi+lambda).
struct GaussianEotQuantities {
    double xi = 0.0;
    double u_tilde = 0.0;
    double v_tilde = 0.0;
};
GaussianEotQuantities gaussian_eot_quantities(double a, double b, double lambda);

// Reference variances of the regularization regimes, for regression-testing
// the limits of barycenter_variance. outer_only and debiased_half are the
// small-regularization expansions, the others are exact.
enum class Table2Row { unregularized, inner_only, outer_only, schrodinger, debiased_half };
Table2Row table2_row_from_name(const std::string& name);
double table2_row(Table2Row row, double a, double lambda, double tau);

// |sqrt(b) - sqrt(a)|: the per-dimension W2 distance between N(0, b I) and
// N(0, a I), i.e. d^{-1/2} W2.
double gaussian_w2_iso(double a, double b);

}  // namespace douba
