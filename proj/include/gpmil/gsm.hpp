#pragma once

#include <cstdint>
#include <random>

namespace gpmil {

// Symmetric density on f whose Gaussian-scale-mixture structure drives the
// variational updates. HyperbolicSecant recovers the Polya-Gamma logistic
// model; GammaMix uses a Gamma mixing density over the precision.
class GsmDensity {
 public:
  enum class Family { kHyperbolicSecant, kGammaMix };

  static GsmDensity hyperbolic_secant();
  // alpha > 0, beta > 0. The implied mixing density Gamma(alpha - 1/2, beta)
  // is proper only for alpha > 1/2; smaller alpha is accepted with a one-time
  // warning on stderr because the updates stay well-defined.
  static GsmDensity gamma_mix(double alpha, double beta);

  Family family() const { return family_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  Family family_ = Family::kHyperbolicSecant;
  double alpha_ = 1.0;
  double beta_ = 4.0;
};

// Posterior mean of the mixing precision under the tilt c >= 0:
//   HyperbolicSecant: tanh(c/2) / (2c), series-guarded near 0 (value 1/4).
//   GammaMix:         alpha / (beta + c^2/2).
// Strictly decreasing in c for both families.
double theta(const GsmDensity& d, double c);

// log density of f (HyperbolicSecant: exact, -log(2 pi) - log cosh(f/2);
// GammaMix: unnormalized, -alpha log(beta + f^2/2); the dropped normalizer
// does not depend on the kernel hyperparameters, so objective comparisons
// are unaffected).
double log_psi(const GsmDensity& d, double f);

// lambda(xi) = tanh(xi/2) / (4 xi) = theta(HS, xi) / 2.
double jaakkola_lambda(double xi);

// Quadratic lower bound on the Bernoulli log-likelihood of y in {0,1} given
// logit f, tight at xi = |f|:
//   log pi(y|f) >= log logistic bound evaluated at xi.
double log_jaakkola_bound(double y, double f, double xi);

// KL(PG(1, xi) || PG(1, 0)) = log cosh(xi/2) - (xi/4) tanh(xi/2); >= 0 and
// 0 exactly at xi = 0.
double pg_kl(double xi);

// One draw from PG(1, 0) via the truncated weighted sum of Exp(1) variables
// plus the deterministic mean of the dropped tail. E[omega] = 1/4.
double sample_pg_10(std::mt19937_64& rng, int truncation = 1000);

// Tilted mixing posterior q(omega) given c: for GammaMix this is
// Gamma(alpha, beta + c^2/2); for HyperbolicSecant it is PG(1, c). The mean
// equals theta(d, c) in both cases.
struct OmegaPosterior {
  double mean = 0.0;
  // Gamma parameters; meaningful only for the GammaMix family.
  double shape = 0.0;
  double rate = 0.0;
};

OmegaPosterior omega_posterior(const GsmDensity& d, double c);

}  // namespace gpmil
