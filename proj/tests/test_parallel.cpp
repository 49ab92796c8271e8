#include <doctest.h>

#include <random>

#include "gpmil/kernel.hpp"

using namespace gpmil;

namespace {

Eigen::MatrixXd randn(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = n(rng);
  return out;
}

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("parallel kernel matrix is bitwise equal to the serial reference") {
  const Eigen::MatrixXd A = randn(83, 5, 11);
  const Eigen::MatrixXd B = randn(41, 5, 12);
  for (NormMode mode : {NormMode::kSquared, NormMode::kUnsquared}) {
    KernelParams k;
    k.v = 1.3;
    k.l = 2.1;
    k.norm_mode = mode;
    const Eigen::MatrixXd par = kernel_matrix(A, B, k);
    const Eigen::MatrixXd ser = serial::kernel_matrix(A, B, k);
    CHECK((par - ser).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("parallel conditional variance matches serial after clamping") {
  const Eigen::MatrixXd X = randn(97, 4, 21);
  const Eigen::MatrixXd Z = randn(12, 4, 22);
  KernelParams k;
  k.v = 0.8;
  k.l = 1.7;
  const Eigen::MatrixXd Kzz = kernel_matrix(Z, Z, k);
  const Eigen::MatrixXd Kxz = kernel_matrix(X, Z, k);
  const Eigen::VectorXd kxx = Eigen::VectorXd::Constant(X.rows(), k.v);
  const FitcConditional fc =
      fitc_conditional(Kxz, PsdFactor::compute(Kzz), kxx);
  Eigen::VectorXd ser =
      serial::conditional_variance_diag(fc.projection, Kxz, kxx);
  ser = ser.cwiseMax(0.0);  // fitc_conditional clamps; mirror it
  CHECK((fc.cond_var - ser).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parallel projected variance diagonal is bitwise serial") {
  const Eigen::MatrixXd P = randn(120, 9, 31);
  const Eigen::MatrixXd G = randn(9, 9, 32);
  const Eigen::MatrixXd S = G * G.transpose();
  const Eigen::VectorXd par = projected_variance_diag(P, S);
  const Eigen::VectorXd ser = serial::projected_variance_diag(P, S);
  CHECK((par - ser).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
