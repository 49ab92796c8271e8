#include "gpmil/gsm.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "gpmil/common.hpp"

namespace gpmil {

GsmDensity GsmDensity::hyperbolic_secant() {
  GsmDensity d;
  d.family_ = Family::kHyperbolicSecant;
  return d;
}

GsmDensity GsmDensity::gamma_mix(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("gamma_mix: alpha and beta must be positive");
  }
  if (alpha <= 0.5) {
    std::cerr << "gamma_mix: alpha=" << alpha
              << " <= 0.5, mixing density is improper (updates remain valid)\n";
  }
  GsmDensity d;
  d.family_ = Family::kGammaMix;
  d.alpha_ = alpha;
  d.beta_ = beta;
  return d;
}

namespace {

// tanh(c/2) / (2c); 4th-order series below 1e-4 keeps the 0/0 limit exact
// to ~1e-18.
double theta_hs(double c) {
  c = std::abs(c);
  if (c < 1e-4) {
    const double c2 = c * c;
    return 0.25 - c2 / 48.0 + c2 * c2 / 480.0;
  }
  return std::tanh(0.5 * c) / (2.0 * c);
}

}  // namespace

double theta(const GsmDensity& d, double c) {
  if (d.family() == GsmDensity::Family::kHyperbolicSecant) {
    return theta_hs(c);
  }
  return d.alpha() / (d.beta() + 0.5 * c * c);
}

double log_psi(const GsmDensity& d, double f) {
  if (d.family() == GsmDensity::Family::kHyperbolicSecant) {
    return -std::log(2.0 * M_PI) - log_cosh(0.5 * f);
  }
  return -d.alpha() * std::log(d.beta() + 0.5 * f * f);
}

double jaakkola_lambda(double xi) { return 0.5 * theta_hs(xi); }

double log_jaakkola_bound(double y, double f, double xi) {
  if (y != 0.0 && y != 1.0) {
    throw std::invalid_argument("log_jaakkola_bound: y must be 0 or 1");
  }
  const double lam = jaakkola_lambda(xi);
  // log phi(xi) with phi(xi) = (2 pi cosh(xi/2))^{-1}.
  const double log_phi = -std::log(2.0 * M_PI) - log_cosh(0.5 * xi);
  return std::log(M_PI) + (y - 0.5) * f - lam * f * f + log_phi + lam * xi * xi;
}

double pg_kl(double xi) {
  xi = std::abs(xi);
  return log_cosh(0.5 * xi) - 0.25 * xi * std::tanh(0.5 * xi);
}

double sample_pg_10(std::mt19937_64& rng, int truncation) {
  if (truncation < 1) {
    throw std::invalid_argument("sample_pg_10: truncation must be >= 1");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double s = 0.0;
  double partial = 0.0;  // sum of (m - 1/2)^{-2} over kept terms
  for (int m = 1; m <= truncation; ++m) {
    const double denom = (m - 0.5) * (m - 0.5);
    partial += 1.0 / denom;
    const double g = -std::log1p(-unif(rng));  // Exp(1)
    s += g / denom;
  }
  // E[g] = 1 for the dropped terms; their weight sum is pi^2/2 - partial.
  const double tail = M_PI * M_PI / 2.0 - partial;
  return (s + tail) / (2.0 * M_PI * M_PI);
}

OmegaPosterior omega_posterior(const GsmDensity& d, double c) {
  OmegaPosterior q;
  q.mean = theta(d, c);
  if (d.family() == GsmDensity::Family::kGammaMix) {
    q.shape = d.alpha();
    q.rate = d.beta() + 0.5 * c * c;
  }
  return q;
}

}  // namespace gpmil
