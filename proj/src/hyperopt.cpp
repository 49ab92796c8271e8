#include "gpmil/hyperopt.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include "gpmil/common.hpp"

namespace gpmil {

HyperoptWorkspace make_hyperopt_workspace(int rff_features, int dim,
                                          const ModelConfig& cfg,
                                          std::mt19937_64& rng) {
  if (rff_features < 1 || dim < 1) {
    throw std::invalid_argument("hyperopt workspace: R and D must be >= 1");
  }
  HyperoptWorkspace ws;
  ws.freq.resize(rff_features, dim);
  ws.freq_aux.resize(rff_features);
  ws.phase.resize(rff_features);
  ws.mc_z = cfg.mc_samples;
  ws.mc_f = cfg.mc_samples;
  ws.rate = cfg.hyperopt_rate;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
  for (int r = 0; r < rff_features; ++r) {
    for (int d = 0; d < dim; ++d) ws.freq(r, d) = normal(rng);
  }
  for (int r = 0; r < rff_features; ++r) ws.freq_aux[r] = normal(rng);
  for (int r = 0; r < rff_features; ++r) ws.phase[r] = unif(rng);
  return ws;
}

namespace {

// Feature matrix Phi(X), N x 2R, with rows [cos(w_r.x + b_r), sin(...)].
// Scaled frequencies: squared mode w_r = freq_r / sqrt(l); unsquared mode
// draws from the heavy-tailed spectral measure of the exponential kernel,
// w_r = freq_r / (2 l |aux_r|).
Eigen::MatrixXd rff_features_matrix(const HyperoptWorkspace& ws,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const KernelParams& kernel) {
  const Eigen::Index r_count = ws.freq.rows();
  Eigen::MatrixXd W(r_count, X.cols());
  if (kernel.norm_mode == NormMode::kSquared) {
    W = ws.freq / std::sqrt(kernel.l);
  } else {
    for (Eigen::Index r = 0; r < r_count; ++r) {
      const double s = std::max(std::abs(ws.freq_aux[r]), 1e-12);
      W.row(r) = ws.freq.row(r) / (2.0 * kernel.l * s);
    }
  }
  Eigen::MatrixXd angles = X * W.transpose();  // N x R
  angles.rowwise() += ws.phase.transpose();
  Eigen::MatrixXd phi(X.rows(), 2 * r_count);
  phi.leftCols(r_count) = angles.array().cos();
  phi.rightCols(r_count) = angles.array().sin();
  return phi;
}

}  // namespace

Eigen::VectorXd rff_sample_prior_f(const HyperoptWorkspace& ws,
                                   const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const KernelParams& kernel,
                                   std::mt19937_64& rng) {
  const Eigen::MatrixXd phi = rff_features_matrix(ws, X, kernel);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(kernel.v / static_cast<double>(ws.freq.rows()));
  Eigen::VectorXd w(phi.cols());
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = scale * normal(rng);
  return phi * w;
}

double log_z_estimate(const HyperoptWorkspace& ws,
                      const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const KernelParams& kernel, const GsmDensity& psi,
                      std::mt19937_64& rng) {
  if (psi.family() == GsmDensity::Family::kHyperbolicSecant) {
    return 0.0;  // psi is the reference density; every ratio is 1.
  }
  const GsmDensity reference = GsmDensity::hyperbolic_secant();
  const Eigen::MatrixXd phi = rff_features_matrix(ws, X, kernel);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(kernel.v / static_cast<double>(ws.freq.rows()));
  std::vector<double> ratios(static_cast<std::size_t>(ws.mc_z));
  Eigen::VectorXd w(phi.cols());
  for (int s = 0; s < ws.mc_z; ++s) {
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = scale * normal(rng);
    const Eigen::VectorXd f = phi * w;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      acc += log_psi(psi, f[i]) - log_psi(reference, f[i]);
    }
    ratios[static_cast<std::size_t>(s)] = acc;
  }
  return log_mean_exp(ratios);
}

double objective_J(const VariationalState& state, const MilDataset& data,
                   const HyperoptWorkspace& ws, const KernelParams& kernel,
                   const GsmDensity& psi, std::mt19937_64 rng) {
  try {
    Eigen::MatrixXd kzz = kernel_matrix(state.Z, state.Z, kernel);
    kzz = 0.5 * (kzz + kzz.transpose()).eval();
    const PsdFactor factor = PsdFactor::compute(kzz);
    const Eigen::MatrixXd kxz = kernel_matrix(data.X, state.Z, kernel);
    const Eigen::VectorXd kxx =
        Eigen::VectorXd::Constant(data.num_instances(), kernel.v);
    const FitcConditional fc = fitc_conditional(kxz, factor, kxx);
    const Eigen::VectorXd mu = fc.projection * state.m;
    const Eigen::VectorXd var =
        (fc.cond_var + projected_variance_diag(fc.projection, state.S))
            .cwiseMax(0.0);

    double j = -gaussian_kl(state.m, state.S, factor);
    j += ((state.pi.array() - 0.5) * mu.array()).sum();

    // E_q[log psi(f_n)] by per-instance marginal sampling; the draw order
    // (instance-major) is part of the common-random-numbers contract.
    std::normal_distribution<double> normal(0.0, 1.0);
    const double inv = 1.0 / static_cast<double>(ws.mc_f);
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const double sd = std::sqrt(var[i]);
      double acc = 0.0;
      for (int s = 0; s < ws.mc_f; ++s) {
        acc += log_psi(psi, mu[i] + sd * normal(rng));
      }
      j += acc * inv;
    }
    j -= log_z_estimate(ws, data.X, kernel, psi, rng);
    return j;
  } catch (const numeric_error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

KernelParams optimize_hyperparams(const VariationalState& state,
                                  const MilDataset& data,
                                  HyperoptWorkspace& ws,
                                  const KernelParams& kernel,
                                  const GsmDensity& psi,
                                  const ModelConfig& cfg,
                                  std::mt19937_64& rng) {
  // One frozen draw seed for the whole call: every candidate and iterate is
  // scored on the same sample-average objective, making the trajectory
  // deterministic and the best-iterate comparison meaningful.
  const std::uint64_t draw_seed = rng();
  auto j_at = [&](const KernelParams& k) {
    return objective_J(state, data, ws, k, psi, std::mt19937_64(draw_seed));
  };

  const double h = ws.fd_step;
  KernelParams cur = kernel;
  KernelParams best = kernel;
  double best_j = j_at(kernel);
  bool any_success = std::isfinite(best_j);

  for (int step = 0; step < cfg.hyperopt_steps; ++step) {
    KernelParams vp = cur, vm = cur, lp = cur, lm = cur;
    vp.v = cur.v * std::exp(h);
    vm.v = cur.v * std::exp(-h);
    lp.l = cur.l * std::exp(h);
    lm.l = cur.l * std::exp(-h);
    const double jvp = j_at(vp), jvm = j_at(vm);
    const double jlp = j_at(lp), jlm = j_at(lm);
    if (!std::isfinite(jvp) || !std::isfinite(jvm) || !std::isfinite(jlp) ||
        !std::isfinite(jlm)) {
      continue;  // candidate rejected; try again from the same iterate
    }
    const double gv = (jvp - jvm) / (2.0 * h);
    const double gl = (jlp - jlm) / (2.0 * h);
    KernelParams next = cur;
    next.v = cur.v * std::exp(cfg.hyperopt_rate * gv);
    next.l = cur.l * std::exp(cfg.hyperopt_rate * gl);
    const double jn = j_at(next);
    if (!std::isfinite(jn)) continue;
    cur = next;
    any_success = true;
    if (jn > best_j) {
      best_j = jn;
      best = next;
    }
  }
  if (!any_success) {
    std::cerr << "optimize_hyperparams: every candidate was rejected; "
                 "keeping current kernel\n";
    return kernel;
  }
  ws.log_lambda << std::log(best.v), std::log(best.l);
  return best;
}

}  // namespace gpmil
