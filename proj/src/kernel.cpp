#include "gpmil/kernel.hpp"

#include <cmath>
#include <sstream>

namespace gpmil {

namespace {

void check_params(const KernelParams& p) {
  if (!(p.v > 0.0) || !(p.l > 0.0)) {
    throw std::invalid_argument("kernel: v and l must be positive");
  }
}

inline double rbf_from_sq(double d2, const KernelParams& p) {
  if (p.norm_mode == NormMode::kSquared) {
    return p.v * std::exp(-d2 / (2.0 * p.l));
  }
  return p.v * std::exp(-std::sqrt(d2) / (2.0 * p.l));
}

}  // namespace

double rbf(const Eigen::Ref<const Eigen::VectorXd>& x,
           const Eigen::Ref<const Eigen::VectorXd>& y,
           const KernelParams& p) {
  check_params(p);
  if (x.size() != y.size()) {
    throw std::invalid_argument("rbf: dimension mismatch");
  }
  return rbf_from_sq((x - y).squaredNorm(), p);
}

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& A,
                              const Eigen::Ref<const Eigen::MatrixXd>& B,
                              const KernelParams& p) {
  check_params(p);
  if (A.cols() != B.cols()) {
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  }
  const Eigen::Index n = A.rows(), m = B.rows();
  Eigen::MatrixXd K(n, m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      K(i, j) = rbf_from_sq((A.row(i) - B.row(j)).squaredNorm(), p);
    }
  }
  return K;
}

PsdFactor PsdFactor::compute(const Eigen::Ref<const Eigen::MatrixXd>& K) {
  if (K.rows() != K.cols()) {
    throw std::invalid_argument("PsdFactor: matrix must be square");
  }
  const double fro = K.norm();
  const double asym = (K - K.transpose()).norm();
  if (asym > 1e-10 * std::max(fro, 1e-300)) {
    throw std::invalid_argument("PsdFactor: matrix not symmetric");
  }
  const double mean_diag = K.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
  PsdFactor f;
  for (double level = 1e-10; level <= 1e-4 * 1.0000001; level *= 10.0) {
    const double jitter = level * scale;
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      f.L_ = llt.matrixL();
      f.jitter_ = jitter;
      return f;
    }
  }
  std::ostringstream msg;
  msg << "PsdFactor: factorization failed up to jitter " << 1e-4 * scale;
  throw numeric_error(msg.str());
}

Eigen::MatrixXd PsdFactor::solve(const Eigen::Ref<const Eigen::MatrixXd>& B) const {
  Eigen::MatrixXd X = L_.triangularView<Eigen::Lower>().solve(B);
  L_.triangularView<Eigen::Lower>().transpose().solveInPlace(X);
  return X;
}

Eigen::MatrixXd PsdFactor::solve_lower(const Eigen::Ref<const Eigen::MatrixXd>& B) const {
  return L_.triangularView<Eigen::Lower>().solve(B);
}

double PsdFactor::log_det() const {
  return 2.0 * L_.diagonal().array().log().sum();
}

FitcConditional fitc_conditional(const Eigen::Ref<const Eigen::MatrixXd>& Kxz,
                                 const PsdFactor& kzz_factor,
                                 const Eigen::Ref<const Eigen::VectorXd>& kxx_diag) {
  if (Kxz.cols() != kzz_factor.dim() || Kxz.rows() != kxx_diag.size()) {
    throw std::invalid_argument("fitc_conditional: shape mismatch");
  }
  FitcConditional out;
  out.projection = kzz_factor.solve(Kxz.transpose()).transpose();
  const Eigen::Index n = Kxz.rows();
  out.cond_var.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    out.cond_var[i] = kxx_diag[i] - out.projection.row(i).dot(Kxz.row(i));
  }
  const double lo = out.cond_var.minCoeff();
  if (lo < -1e-8) {
    std::ostringstream msg;
    msg << "fitc_conditional: conditional variance " << lo << " below tolerance";
    throw numeric_error(msg.str());
  }
  out.cond_var = out.cond_var.cwiseMax(0.0);
  return out;
}

Eigen::VectorXd projected_variance_diag(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                        const Eigen::Ref<const Eigen::MatrixXd>& S) {
  if (P.cols() != S.rows() || S.rows() != S.cols()) {
    throw std::invalid_argument("projected_variance_diag: shape mismatch");
  }
  const Eigen::MatrixXd T = P * S;  // N x M
  const Eigen::Index n = P.rows();
  Eigen::VectorXd d(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    d[i] = T.row(i).dot(P.row(i));
  }
  return d;
}

namespace serial {

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& A,
                              const Eigen::Ref<const Eigen::MatrixXd>& B,
                              const KernelParams& p) {
  check_params(p);
  if (A.cols() != B.cols()) {
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  }
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = rbf_from_sq((A.row(i) - B.row(j)).squaredNorm(), p);
    }
  }
  return K;
}

Eigen::VectorXd conditional_variance_diag(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                          const Eigen::Ref<const Eigen::MatrixXd>& Kxz,
                                          const Eigen::Ref<const Eigen::VectorXd>& kxx_diag) {
  Eigen::VectorXd d(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    d[i] = kxx_diag[i] - P.row(i).dot(Kxz.row(i));
  }
  return d;
}

Eigen::VectorXd projected_variance_diag(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                        const Eigen::Ref<const Eigen::MatrixXd>& S) {
  const Eigen::MatrixXd T = P * S;
  Eigen::VectorXd d(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    d[i] = T.row(i).dot(P.row(i));
  }
  return d;
}

}  // namespace serial

}  // namespace gpmil
