#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "gpmil/data.hpp"
#include "gpmil/gsm.hpp"
#include "gpmil/kernel.hpp"

namespace gpmil {

// Lower clamp for Bernoulli responsibilities; keeps logs and products finite.
inline constexpr double kPiEps = 1e-12;

struct ModelConfig {
  double H = 100.0;           // bag-likelihood strength, > 1
  int inducing = 50;          // number of inducing points M
  int max_epochs = 100;
  int patience = 10;          // epochs without monitor improvement
  int pred_samples = 1000;    // L, latent samples per prediction
  int rff_features = 100;     // R, random Fourier features
  int mc_samples = 64;        // marginal samples per instance in the objective
  int hyperopt_steps = 10;
  double hyperopt_rate = 1e-2;
  bool hyperopt_enabled = true;
  std::uint64_t seed = 0;
};

// Kernel blocks shared by every update; rebuilt only when the kernel
// hyperparameters or inducing points change.
struct KernelCache {
  Eigen::MatrixXd Kzz;       // M x M
  PsdFactor kzz_factor;
  Eigen::MatrixXd Kxz;       // N x M
  Eigen::VectorXd kxx_diag;  // N prior variances
  Eigen::MatrixXd P;         // N x M projection (Kzz^{-1} Kzx)^T
  Eigen::VectorXd cond_var;  // N conditional variances
};

struct VariationalState {
  Eigen::MatrixXd Z;           // M x D inducing inputs (fixed after init)
  Eigen::VectorXd m;           // M posterior mean of u
  Eigen::MatrixXd S;           // M x M posterior covariance of u, symmetric
  Eigen::VectorXd pi;          // N responsibilities in [kPiEps, 1 - kPiEps]
  Eigen::VectorXd c;           // N tilt magnitudes sqrt(E[f_n^2])
  Eigen::VectorXd theta_diag;  // N mixing-precision means theta(psi, c_n)
  KernelParams kernel;
  KernelCache cache;
};

struct TrainedModel {
  int format_version = 1;
  Eigen::MatrixXd Z;
  Eigen::VectorXd m;
  Eigen::MatrixXd S;
  KernelParams kernel;
  GsmDensity psi;
  double H = 100.0;
  int dim = 0;  // feature dimension the model operates in
  std::optional<PcaTransform> pca;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_score = 0.0;
  std::string monitor;  // "val_bag_auc", "train_bag_auc" or "elbo"
  std::uint64_t seed = 0;
};

// Draws M distinct instances as inducing inputs, m ~ N(0, I), S = I,
// pi ~ U(0,1) clamped, and assembles the kernel cache. Consumes rng in the
// order: inducing indices, m, pi.
VariationalState init_state(const MilDataset& data, const ModelConfig& cfg,
                            const KernelParams& kernel, std::mt19937_64& rng);

// Rebuilds the cached kernel blocks for the current state.kernel and Z.
void refresh_kernel_cache(VariationalState& state,
                          const Eigen::Ref<const Eigen::MatrixXd>& X);

// Marginal moments of q(f): mu = P m, var = cond_var + diag(P S P^T).
std::pair<Eigen::VectorXd, Eigen::VectorXd> q_f_moments(
    const VariationalState& state);

// 1 - prod_{j in bag, j != exclude} (1 - pi_j), accumulated in log space.
// An empty product set yields 0.
double expected_bag_max_excluding(const Eigen::Ref<const Eigen::VectorXd>& pi,
                                  const std::vector<int>& bag, int exclude);

// c_n = sqrt(mu_n^2 + var_n); theta_diag = theta(psi, c_n).
void update_theta(VariationalState& state, const GsmDensity& psi);

// Closed-form coordinate update of q(u) = N(m, S):
//   S = Kzz (Kzx Theta Kxz + Kzz)^{-1} Kzz   (symmetrized),
//   m = Kzz (Kzx Theta Kxz + Kzz)^{-1} Kzx (pi - 1/2).
void update_qu(VariationalState& state);

// Sequential sweep over instances in ascending order using the freshest pi:
//   pi_n = logistic(mu_n + log(H) (2 T_b - 1) (1 - E[max excluding n])).
void update_pi(VariationalState& state, const MilDataset& data, double H);

// One full coordinate sweep: theta, then q(u), then pi.
void sweep(VariationalState& state, const MilDataset& data,
           const GsmDensity& psi, double H);

// KL(N(m, S) || N(0, Kzz)) through the cached factor.
double gaussian_kl(const Eigen::Ref<const Eigen::VectorXd>& m,
                   const Eigen::Ref<const Eigen::MatrixXd>& S,
                   const PsdFactor& kzz_factor);

// Per-instance mixing-variable contribution to the bound at tilt xi:
// E_q[log psihat(omega)] + entropy and half-log-precision terms. For the
// hyperbolic-secant family this is -log 2 - pg_kl(xi) in closed form; for
// GammaMix it is evaluated by adaptive quadrature.
double omega_elbo_term(const GsmDensity& psi, double xi);

// Evidence lower bound of the augmented model. The mixing posteriors q(omega)
// sit at tilts xi (defaulting to state.c, the coordinate optimum).
double elbo_augmented(const VariationalState& state, const MilDataset& data,
                      const GsmDensity& psi, double H);
double elbo_augmented(const VariationalState& state, const MilDataset& data,
                      const GsmDensity& psi, double H,
                      const Eigen::Ref<const Eigen::VectorXd>& xi);

// Runs coordinate-ascent epochs with optional hyperparameter steps, keeps the
// best epoch under the monitor (validation bag AUC when val is usable, else
// training bag AUC, else ELBO), and stops after cfg.patience epochs without
// improvement. Deterministic for a fixed config.
TrainedModel train(const MilDataset& data, const MilDataset* val,
                   const KernelParams& kernel_init, const GsmDensity& psi,
                   const ModelConfig& cfg);

// Same, with per-epoch progress lines "epoch=<k> elbo=<v> <monitor>=<v>"
// written to log when non-null.
TrainedModel train(const MilDataset& data, const MilDataset* val,
                   const KernelParams& kernel_init, const GsmDensity& psi,
                   const ModelConfig& cfg, std::ostream* log);

}  // namespace gpmil
