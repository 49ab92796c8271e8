#pragma once

#include <Eigen/Dense>
#include <random>

#include "gpmil/inference.hpp"

namespace gpmil {

// Random-feature draws and settings for the hyperparameter objective. The
// standard-normal frequency block is scaled by the candidate lengthscale at
// evaluation time, so one workspace serves every candidate; it is redrawn
// only when the feature count or seed changes.
struct HyperoptWorkspace {
  Eigen::MatrixXd freq;      // R x D standard normal draws
  Eigen::VectorXd freq_aux;  // R auxiliary normals (heavy-tail scale for the
                             // unsquared norm mode)
  Eigen::VectorXd phase;     // R phases in [0, 2 pi)
  int mc_z = 64;             // prior samples for the log-normalizer estimate
  int mc_f = 64;             // marginal samples per instance
  double fd_step = 1e-4;     // central-difference step in log-parameters
  double rate = 1e-2;        // ascent rate
  Eigen::Vector2d log_lambda = Eigen::Vector2d::Zero();  // last iterate
                                                         // (log v, log l)
};

HyperoptWorkspace make_hyperopt_workspace(int rff_features, int dim,
                                          const ModelConfig& cfg,
                                          std::mt19937_64& rng);

// One approximate prior draw f ~ N(0, Kxx(kernel)) through the feature map
// f = Phi(X) w, w ~ N(0, (v/R) I). Consumes 2R normals from rng.
Eigen::VectorXd rff_sample_prior_f(const HyperoptWorkspace& ws,
                                   const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const KernelParams& kernel,
                                   std::mt19937_64& rng);

// log of the Monte Carlo estimate of the psi-vs-Gaussian normalizer ratio
// under the prior at these hyperparameters: log mean_s exp(sum_n log psi(f_n)
// - log phi(f_n)) over ws.mc_z prior draws. Exactly 0 for the
// hyperbolic-secant family (psi == phi), with no rng consumption.
double log_z_estimate(const HyperoptWorkspace& ws,
                      const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const KernelParams& kernel, const GsmDensity& psi,
                      std::mt19937_64& rng);

// Marginal-likelihood style objective for the kernel hyperparameters at the
// current variational state:
//   J = -KL(q(u)||p(u)) + (pi - 1/2)^T mu + sum_n E_q[log psi(f_n)] - log Z.
// rng is taken by value: calls with equal-state generators share their draws,
// which gives common random numbers across candidates. Returns -inf when a
// candidate kernel cannot be factorized.
double objective_J(const VariationalState& state, const MilDataset& data,
                   const HyperoptWorkspace& ws, const KernelParams& kernel,
                   const GsmDensity& psi, std::mt19937_64 rng);

// Projected gradient ascent in (log v, log l) with central differences of
// step ws.fd_step, cfg.hyperopt_steps steps at rate cfg.hyperopt_rate. All
// evaluations in one call reuse one frozen draw seed, so the trajectory is
// deterministic and iterates are comparable; returns the best-J iterate
// (the input kernel when nothing improves).
KernelParams optimize_hyperparams(const VariationalState& state,
                                  const MilDataset& data,
                                  HyperoptWorkspace& ws,
                                  const KernelParams& kernel,
                                  const GsmDensity& psi,
                                  const ModelConfig& cfg,
                                  std::mt19937_64& rng);

}  // namespace gpmil
