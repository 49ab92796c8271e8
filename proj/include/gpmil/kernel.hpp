#pragma once

#include <Eigen/Dense>

#include "gpmil/common.hpp"

namespace gpmil {

// Which norm the RBF exponent uses. Squared is the standard RBF; unsquared
// (plain Euclidean distance) matches the Laplace-type variant.
enum class NormMode { kSquared, kUnsquared };

struct KernelParams {
  double v = 0.5;  // signal variance, > 0
  double l = 1.0;  // lengthscale, > 0
  NormMode norm_mode = NormMode::kSquared;
};

// k(x, x') = v * exp(-d / (2 l)) with d = |x-x'|^2 (squared mode) or
// d = |x-x'| (unsquared mode).
double rbf(const Eigen::Ref<const Eigen::VectorXd>& x,
           const Eigen::Ref<const Eigen::VectorXd>& y,
           const KernelParams& p);

// Gram block K[i, j] = k(A.row(i), B.row(j)). Rows are computed in parallel;
// entries are identical to the serial reference for any thread count.
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& A,
                              const Eigen::Ref<const Eigen::MatrixXd>& B,
                              const KernelParams& p);

// Cholesky factor of K + jitter*I. The jitter escalates geometrically from
// 1e-10 to 1e-4 times the mean diagonal until the factorization succeeds.
class PsdFactor {
 public:
  // K must be symmetric to 1e-10 relative tolerance; throws numeric_error
  // when no jitter level in range yields a positive-definite matrix.
  static PsdFactor compute(const Eigen::Ref<const Eigen::MatrixXd>& K);

  const Eigen::MatrixXd& matrix_l() const { return L_; }
  double jitter() const { return jitter_; }
  Eigen::Index dim() const { return L_.rows(); }

  // Solves (K + jitter*I) X = B via two triangular solves.
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& B) const;
  // Solves L X = B (forward substitution only).
  Eigen::MatrixXd solve_lower(const Eigen::Ref<const Eigen::MatrixXd>& B) const;
  // log det(K + jitter*I).
  double log_det() const;

 private:
  Eigen::MatrixXd L_;
  double jitter_ = 0.0;
};

// Low-rank conditional of a GP at X given inducing values at Z:
// projection P = (Kzz^{-1} Kzx)^T (N x M) and conditional variance diagonal
// cond_var[n] = Kxx[n,n] - P.row(n) . Kxz.row(n).
struct FitcConditional {
  Eigen::MatrixXd projection;   // N x M
  Eigen::VectorXd cond_var;     // N, clamped at >= 0
};

// kxx_diag holds the prior variances k(x_n, x_n). Entries of cond_var more
// negative than -1e-8 raise numeric_error; smaller negatives clamp to 0.
FitcConditional fitc_conditional(const Eigen::Ref<const Eigen::MatrixXd>& Kxz,
                                 const PsdFactor& kzz_factor,
                                 const Eigen::Ref<const Eigen::VectorXd>& kxx_diag);

// diag(P S P^T): marginal variance contribution of a covariance S pushed
// through the projection. Parallel over rows.
Eigen::VectorXd projected_variance_diag(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                        const Eigen::Ref<const Eigen::MatrixXd>& S);

// Single-thread reference implementations; tests assert equality with the
// parallel versions and the benchmark compares their throughput.
namespace serial {

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& A,
                              const Eigen::Ref<const Eigen::MatrixXd>& B,
                              const KernelParams& p);

Eigen::VectorXd conditional_variance_diag(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                          const Eigen::Ref<const Eigen::MatrixXd>& Kxz,
                                          const Eigen::Ref<const Eigen::VectorXd>& kxx_diag);

Eigen::VectorXd projected_variance_diag(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                        const Eigen::Ref<const Eigen::MatrixXd>& S);

}  // namespace serial

}  // namespace gpmil
