#include "gpmil/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>
#include <vector>

#include "gpmil/common.hpp"
#include "gpmil/hyperopt.hpp"
#include "gpmil/metrics.hpp"
#include "gpmil/predict.hpp"
#include "gpmil/quadrature.hpp"

namespace gpmil {

namespace {

constexpr std::uint64_t kTagInit = 0x171;
constexpr std::uint64_t kTagHyper = 0x447;
constexpr std::uint64_t kTagEpochEval = 0xE7A1;
constexpr std::uint64_t kTagBag = 0xBA6;

void check_config(const MilDataset& data, const ModelConfig& cfg) {
  if (!(cfg.H > 1.0)) {
    throw std::invalid_argument("config: H must exceed 1");
  }
  if (cfg.inducing < 1 || cfg.inducing > data.num_instances()) {
    throw std::invalid_argument(
        "config: inducing count must be in [1, num_instances]");
  }
  if (cfg.max_epochs < 1 || cfg.patience < 1) {
    throw std::invalid_argument("config: epochs and patience must be >= 1");
  }
}

}  // namespace

VariationalState init_state(const MilDataset& data, const ModelConfig& cfg,
                            const KernelParams& kernel, std::mt19937_64& rng) {
  data.validate();
  check_config(data, cfg);
  const Eigen::Index n = data.num_instances();
  const int m_count = cfg.inducing;

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(m_count));
  std::sample(all.begin(), all.end(), std::back_inserter(chosen),
              static_cast<std::size_t>(m_count), rng);

  VariationalState st;
  st.kernel = kernel;
  st.Z.resize(m_count, data.dim());
  for (int j = 0; j < m_count; ++j) {
    st.Z.row(j) = data.X.row(chosen[static_cast<std::size_t>(j)]);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  st.m.resize(m_count);
  for (int j = 0; j < m_count; ++j) st.m[j] = normal(rng);
  st.S = Eigen::MatrixXd::Identity(m_count, m_count);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  st.pi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    st.pi[i] = std::clamp(unif(rng), kPiEps, 1.0 - kPiEps);
  }
  st.c = Eigen::VectorXd::Zero(n);
  st.theta_diag = Eigen::VectorXd::Ones(n);
  refresh_kernel_cache(st, data.X);
  return st;
}

void refresh_kernel_cache(VariationalState& state,
                          const Eigen::Ref<const Eigen::MatrixXd>& X) {
  KernelCache& c = state.cache;
  c.Kzz = kernel_matrix(state.Z, state.Z, state.kernel);
  c.Kzz = 0.5 * (c.Kzz + c.Kzz.transpose()).eval();
  c.kzz_factor = PsdFactor::compute(c.Kzz);
  c.Kxz = kernel_matrix(X, state.Z, state.kernel);
  c.kxx_diag = Eigen::VectorXd::Constant(X.rows(), state.kernel.v);
  FitcConditional fc = fitc_conditional(c.Kxz, c.kzz_factor, c.kxx_diag);
  c.P = std::move(fc.projection);
  c.cond_var = std::move(fc.cond_var);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> q_f_moments(
    const VariationalState& state) {
  Eigen::VectorXd mu = state.cache.P * state.m;
  Eigen::VectorXd var =
      state.cache.cond_var + projected_variance_diag(state.cache.P, state.S);
  var = var.cwiseMax(0.0);
  return {std::move(mu), std::move(var)};
}

double expected_bag_max_excluding(const Eigen::Ref<const Eigen::VectorXd>& pi,
                                  const std::vector<int>& bag, int exclude) {
  double log_none = 0.0;
  for (int j : bag) {
    if (j == exclude) continue;
    log_none += std::log1p(-pi[j]);
  }
  return 1.0 - std::exp(log_none);
}

void update_theta(VariationalState& state, const GsmDensity& psi) {
  auto [mu, var] = q_f_moments(state);
  const Eigen::Index n = mu.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    state.c[i] = std::sqrt(mu[i] * mu[i] + var[i]);
    state.theta_diag[i] = theta(psi, state.c[i]);
  }
}

void update_qu(VariationalState& state) {
  const KernelCache& c = state.cache;
  Eigen::MatrixXd C =
      c.Kxz.transpose() * state.theta_diag.asDiagonal() * c.Kxz + c.Kzz;
  C = 0.5 * (C + C.transpose()).eval();
  const PsdFactor fc = PsdFactor::compute(C);
  state.S = c.Kzz * fc.solve(c.Kzz);
  state.S = 0.5 * (state.S + state.S.transpose()).eval();
  const Eigen::VectorXd r =
      c.Kxz.transpose() * (state.pi.array() - 0.5).matrix();
  state.m = c.Kzz * fc.solve(r);
}

void update_pi(VariationalState& state, const MilDataset& data, double H) {
  const Eigen::VectorXd mu_proj = state.cache.P * state.m;
  const double log_h = std::log(H);
  const Eigen::Index n = data.num_instances();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int b = data.bag_of[i];
    const double none_rest = 1.0 - expected_bag_max_excluding(
                                       state.pi, data.bags[b],
                                       static_cast<int>(i));
    const double sign = data.T[b] == 1 ? 1.0 : -1.0;
    const double arg = mu_proj[i] + log_h * sign * none_rest;
    state.pi[i] = std::clamp(logistic(arg), kPiEps, 1.0 - kPiEps);
  }
}

void sweep(VariationalState& state, const MilDataset& data,
           const GsmDensity& psi, double H) {
  update_theta(state, psi);
  update_qu(state);
  update_pi(state, data, H);
}

double gaussian_kl(const Eigen::Ref<const Eigen::VectorXd>& m,
                   const Eigen::Ref<const Eigen::MatrixXd>& S,
                   const PsdFactor& kzz_factor) {
  const Eigen::Index dim = m.size();
  const double trace_term = kzz_factor.solve(S).trace();
  const Eigen::VectorXd kinv_m = kzz_factor.solve(m);
  const double quad_term = m.dot(kinv_m);
  const double logdet_s = PsdFactor::compute(S).log_det();
  return 0.5 * (trace_term + quad_term - static_cast<double>(dim) +
                kzz_factor.log_det() - logdet_s);
}

double omega_elbo_term(const GsmDensity& psi, double xi) {
  if (psi.family() == GsmDensity::Family::kHyperbolicSecant) {
    return -M_LN2 - pg_kl(xi);
  }
  const double alpha = psi.alpha();
  const double beta = psi.beta();
  const double rate = beta + 0.5 * xi * xi;
  const double log_norm = alpha * std::log(rate) - std::lgamma(alpha);
  auto integrand = [&](double w) {
    const double lw = std::log(w);
    const double log_q = log_norm + (alpha - 1.0) * lw - rate * w;
    const double log_psihat = (alpha - 1.5) * lw - beta * w;
    return std::exp(log_q) * (0.5 * lw + log_psihat - log_q);
  };
  const double w_max = (alpha + 15.0 * std::sqrt(alpha) + 50.0) / rate;
  return integrate(integrand, 0.0, w_max, 1e-10) -
         0.5 * std::log(2.0 * M_PI);
}

double elbo_augmented(const VariationalState& state, const MilDataset& data,
                      const GsmDensity& psi, double H) {
  return elbo_augmented(state, data, psi, H, state.c);
}

double elbo_augmented(const VariationalState& state, const MilDataset& data,
                      const GsmDensity& psi, double H,
                      const Eigen::Ref<const Eigen::VectorXd>& xi) {
  const Eigen::Index n = data.num_instances();
  if (xi.size() != n) {
    throw std::invalid_argument("elbo_augmented: xi length mismatch");
  }
  auto [mu, var] = q_f_moments(state);

  // Mixing-variable terms are pure per-instance quadratures/closed forms;
  // evaluated in parallel, then summed in index order for determinism.
  Eigen::VectorXd omega_terms(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    omega_terms[i] = omega_elbo_term(psi, xi[i]);
  }

  double total = -gaussian_kl(state.m, state.S, state.cache.kzz_factor);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = theta(psi, xi[i]);
    total += (state.pi[i] - 0.5) * mu[i] -
             0.5 * th * (mu[i] * mu[i] + var[i]) +
             bernoulli_entropy(state.pi[i]) + omega_terms[i];
  }
  const double log_h = std::log(H);
  const double log_h1 = std::log(H + 1.0);
  for (int b = 0; b < data.num_bags(); ++b) {
    double log_none = 0.0;
    for (int i : data.bags[b]) log_none += std::log1p(-state.pi[i]);
    const double p0 = std::exp(log_none);
    const double expected_g =
        data.T[b] == 1 ? (1.0 - p0) : p0;
    total += log_h * expected_g - log_h1;
  }
  return total;
}

namespace {

struct EpochMonitor {
  std::string name;
  double value = std::numeric_limits<double>::quiet_NaN();
  double val_auc = std::numeric_limits<double>::quiet_NaN();
};

bool has_both_classes(const std::vector<int>& labels) {
  bool any0 = false, any1 = false;
  for (int t : labels) (t == 1 ? any1 : any0) = true;
  return any0 && any1;
}

TrainedModel snapshot_model(const VariationalState& st, const GsmDensity& psi,
                            const ModelConfig& cfg, int dim) {
  TrainedModel m;
  m.Z = st.Z;
  m.m = st.m;
  m.S = st.S;
  m.kernel = st.kernel;
  m.psi = psi;
  m.H = cfg.H;
  m.dim = dim;
  m.seed = cfg.seed;
  return m;
}

double bag_auc_of(const TrainedModel& model, const MilDataset& ds,
                  const ModelConfig& cfg, std::uint64_t stream) {
  const Predictor pred(model);
  std::vector<double> scores(ds.bags.size());
  std::vector<int> labels = ds.T;
  for (int b = 0; b < ds.num_bags(); ++b) {
    const auto& members = ds.bags[b];
    Eigen::MatrixXd xb(members.size(), ds.dim());
    for (std::size_t j = 0; j < members.size(); ++j) {
      xb.row(static_cast<Eigen::Index>(j)) = ds.X.row(members[j]);
    }
    std::mt19937_64 rng(derive_seed(stream, kTagBag, b));
    scores[b] = pred.predict_bag(xb, cfg.pred_samples, rng).prob;
  }
  return auc(scores, labels);
}

}  // namespace

TrainedModel train(const MilDataset& data, const MilDataset* val,
                   const KernelParams& kernel_init, const GsmDensity& psi,
                   const ModelConfig& cfg) {
  return train(data, val, kernel_init, psi, cfg, nullptr);
}

TrainedModel train(const MilDataset& data, const MilDataset* val,
                   const KernelParams& kernel_init, const GsmDensity& psi,
                   const ModelConfig& cfg, std::ostream* log) {
  data.validate();
  if (val != nullptr) val->validate();
  check_config(data, cfg);

  std::mt19937_64 init_rng(derive_seed(cfg.seed, kTagInit));
  VariationalState st = init_state(data, cfg, kernel_init, init_rng);

  // Monitor choice is fixed up front: validation bag AUC when a usable
  // validation set exists, else training bag AUC, else the bound itself.
  std::string monitor = "elbo";
  const MilDataset* auc_set = nullptr;
  if (val != nullptr && has_both_classes(val->T)) {
    monitor = "val_bag_auc";
    auc_set = val;
  } else if (val != nullptr) {
    if (log != nullptr) {
      *log << "validation bag AUC undefined (single class); monitoring elbo\n";
    }
  } else if (has_both_classes(data.T)) {
    monitor = "train_bag_auc";
    auc_set = &data;
  } else if (log != nullptr) {
    *log << "training bag AUC undefined (single class); monitoring elbo\n";
  }

  HyperoptWorkspace ws;
  if (cfg.hyperopt_enabled) {
    std::mt19937_64 ws_rng(derive_seed(cfg.seed, kTagHyper));
    ws = make_hyperopt_workspace(cfg.rff_features,
                                 static_cast<int>(data.dim()), cfg, ws_rng);
  }

  const int dim = static_cast<int>(data.dim());
  double best_score = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  Eigen::VectorXd best_m = st.m;
  Eigen::MatrixXd best_s = st.S;
  KernelParams best_kernel = st.kernel;
  int since_best = 0;
  int epochs_run = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    epochs_run = epoch;
    sweep(st, data, psi, cfg.H);
    if (cfg.hyperopt_enabled && cfg.hyperopt_steps > 0) {
      std::mt19937_64 hyper_rng(derive_seed(cfg.seed, kTagHyper, epoch));
      const KernelParams next =
          optimize_hyperparams(st, data, ws, st.kernel, psi, cfg, hyper_rng);
      if (next.v != st.kernel.v || next.l != st.kernel.l) {
        st.kernel = next;
        refresh_kernel_cache(st, data.X);
      }
    }

    const double elbo = elbo_augmented(st, data, psi, cfg.H);
    EpochMonitor mon;
    mon.name = monitor;
    if (auc_set != nullptr) {
      const TrainedModel snap = snapshot_model(st, psi, cfg, dim);
      mon.val_auc = bag_auc_of(snap, *auc_set, cfg,
                               derive_seed(cfg.seed, kTagEpochEval, epoch));
      mon.value = mon.val_auc;
    } else {
      mon.value = elbo;
    }
    if (log != nullptr) {
      *log << "epoch=" << epoch << " elbo=" << elbo << " " << monitor << "="
           << (auc_set != nullptr ? mon.val_auc : elbo) << "\n";
    }

    if (mon.value > best_score) {
      best_score = mon.value;
      best_epoch = epoch;
      best_m = st.m;
      best_s = st.S;
      best_kernel = st.kernel;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }

  TrainedModel out;
  out.Z = st.Z;
  out.m = std::move(best_m);
  out.S = std::move(best_s);
  out.kernel = best_kernel;
  out.psi = psi;
  out.H = cfg.H;
  out.dim = dim;
  out.epochs_run = epochs_run;
  out.best_epoch = best_epoch;
  out.best_score = best_score;
  out.monitor = monitor;
  out.seed = cfg.seed;
  return out;
}

}  // namespace gpmil
