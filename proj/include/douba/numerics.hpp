#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace douba {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(sum_i exp(v[i])) with max subtraction; -inf for an empty or all -inf input.
inline double log_sum_exp(const Eigen::Ref<const Vector>& v) {
    if (v.size() == 0) return -kInf;
    const double c = v.maxCoeff();
    if (!std::isfinite(c)) return c;
    return c + std::log((v.array() - c).exp().sum());
}

// out[i] = log sum_j exp(M(i,j))
inline void log_sum_exp_rowwise(const Eigen::Ref<const Matrix>& M, Vector& out) {
    Vector c = M.rowwise().maxCoeff();
    Vector safe = (c.array().isFinite()).select(c, 0.0);
    out = safe.array() + ((M.colwise() - safe).array().exp().rowwise().sum()).log();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (!std::isfinite(c[i]) && c[i] < 0) out[i] = -kInf;
    }
}

// out[j] = log sum_i exp(M(i,j))
inline void log_sum_exp_colwise(const Eigen::Ref<const Matrix>& M, Vector& out) {
    Vector c = M.colwise().maxCoeff();
    Vector safe = (c.array().isFinite()).select(c, 0.0);
    out = safe.array() +
          ((M.rowwise() - safe.transpose()).array().exp().colwise().sum()).transpose().log();
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        if (!std::isfinite(c[j]) && c[j] < 0) out[j] = -kInf;
    }
}

// Soft c-transform over the columns of C:
//   out_i = -lambda * log sum_j exp((q_j - C(i,j)) / lambda)
// where q_j typically packs psi_j + lambda * log nu_j. buf is workspace,
// resized to the shape of C.
inline void soft_ctransform_rows(const Eigen::Ref<const Matrix>& C,
                                 const Eigen::Ref<const Vector>& q, double lambda, Matrix& buf,
                                 Vector& out) {
    buf = ((-C).rowwise() + q.transpose()) / lambda;
    log_sum_exp_rowwise(buf, out);
    out *= -lambda;
}

// Symmetric transform over the rows of C:
//   out_j = -lambda * log sum_i exp((p_i - C(i,j)) / lambda)
inline void soft_ctransform_cols(const Eigen::Ref<const Matrix>& C,
                                 const Eigen::Ref<const Vector>& p, double lambda, Matrix& buf,
                                 Vector& out) {
    buf = ((-C).colwise() + p) / lambda;
    log_sum_exp_colwise(buf, out);
    out *= -lambda;
}

// sup f - inf f; the natural seminorm for potentials defined up to constants.
inline double oscillation(const Eigen::Ref<const Vector>& f) {
    if (f.size() == 0) return 0.0;
    return f.maxCoeff() - f.minCoeff();
}

}  // namespace douba
