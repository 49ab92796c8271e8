#include <doctest.h>

#include <cmath>
#include <random>

#include "gpmil/common.hpp"
#include "gpmil/gsm.hpp"
#include "oracles.hpp"

using namespace gpmil;

TEST_SUITE("gsm") {

TEST_CASE("theta limits and frozen values, hyperbolic secant") {
  const GsmDensity hs = GsmDensity::hyperbolic_secant();
  CHECK(theta(hs, 0.0) == 0.25);
  CHECK(theta(hs, 1.0) ==
        doctest::Approx(0.23105857863000487).epsilon(1e-15));
  // tanh(c/2)/(2c) directly, away from the series region.
  for (double c : {0.5, 2.0, 7.0}) {
    CHECK(theta(hs, c) ==
          doctest::Approx(std::tanh(0.5 * c) / (2.0 * c)).epsilon(1e-15));
  }
}

TEST_CASE("theta is continuous across the series boundary") {
  const GsmDensity hs = GsmDensity::hyperbolic_secant();
  const double below = theta(hs, 0.99999e-4);
  const double above = theta(hs, 1.00001e-4);
  CHECK(std::abs(below - above) < 1e-14);
  CHECK(below > above);  // strictly decreasing through the boundary
}

TEST_CASE("theta for the gamma family is alpha over the tilted rate") {
  const GsmDensity g = GsmDensity::gamma_mix(2.0, 3.0);
  for (double c : {0.0, 0.4, 1.3, 6.0}) {
    CHECK(theta(g, c) == doctest::Approx(2.0 / (3.0 + 0.5 * c * c)).epsilon(1e-15));
  }
  CHECK(theta(GsmDensity::gamma_mix(1.0, 2.5), 1.3) ==
        doctest::Approx(0.29895366218236173).epsilon(1e-15));
  CHECK(theta(g, 0.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("jaakkola_lambda is half of the hyperbolic-secant theta") {
  const GsmDensity hs = GsmDensity::hyperbolic_secant();
  for (double x : {0.0, 1e-6, 1e-4, 0.3, 1.0, 10.0}) {
    CHECK(jaakkola_lambda(x) == 0.5 * theta(hs, x));
  }
}

TEST_CASE("pg_kl frozen value, zero at zero, nonnegative") {
  CHECK(pg_kl(0.0) == 0.0);
  CHECK(pg_kl(2.0) == doctest::Approx(0.0529837525051447).epsilon(1e-14));
  for (double x : {0.1, 0.5, 1.0, 5.0, 30.0}) {
    CHECK(pg_kl(x) > 0.0);
    CHECK(pg_kl(x) == pg_kl(-x));  // even in xi
  }
}

TEST_CASE("log_psi: exact hyperbolic-secant density, stable at large f") {
  const GsmDensity hs = GsmDensity::hyperbolic_secant();
  CHECK(log_psi(hs, 0.0) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-15));
  // Integrates to 1 over the real line.
  const double mass = integrate(
      [&](double f) { return std::exp(log_psi(hs, f)); }, -60.0, 60.0, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  const double big = log_psi(hs, 1400.0);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(-std::log(2.0 * M_PI) - 700.0 + M_LN2)
                   .epsilon(1e-12));
}

TEST_CASE("log_psi: gamma family is the unnormalized power form") {
  const GsmDensity g = GsmDensity::gamma_mix(1.5, 4.0);
  for (double f : {0.0, 0.7, -2.0, 9.0}) {
    CHECK(log_psi(g, f) ==
          doctest::Approx(-1.5 * std::log(4.0 + 0.5 * f * f)).epsilon(1e-15));
  }
}

TEST_CASE("the quadratic bound is tight at xi = |f| and valid elsewhere") {
  for (double f : {-3.0, -0.4, 0.8, 2.5}) {
    const double tight1 = log_jaakkola_bound(1.0, f, std::abs(f));
    CHECK(tight1 == doctest::Approx(std::log(logistic(f))).epsilon(1e-12));
    const double tight0 = log_jaakkola_bound(0.0, f, std::abs(f));
    CHECK(tight0 == doctest::Approx(std::log(logistic(-f))).epsilon(1e-12));
    for (double xi : {0.1, 1.0, 4.0}) {
      CHECK(log_jaakkola_bound(1.0, f, xi) <=
            std::log(logistic(f)) + 1e-12);
      CHECK(log_jaakkola_bound(0.0, f, xi) <=
            std::log(logistic(-f)) + 1e-12);
    }
  }
  CHECK_THROWS_AS(log_jaakkola_bound(0.5, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("pg sampler: determinism, positivity, and the exact mean 1/4") {
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 50; ++i) {
    CHECK(sample_pg_10(a) == sample_pg_10(b));
  }
  std::mt19937_64 rng(7);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = sample_pg_10(rng);
    CHECK(w > 0.0);
    sum += w;
    sumsq += w * w;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean - 0.25) < 3.0 * se);
}

TEST_CASE("omega posterior mean equals theta in both families") {
  const GsmDensity hs = GsmDensity::hyperbolic_secant();
  const GsmDensity g = GsmDensity::gamma_mix(1.2, 0.8);
  for (double c : {0.0, 0.5, 2.0}) {
    CHECK(omega_posterior(hs, c).mean == theta(hs, c));
    const OmegaPosterior og = omega_posterior(g, c);
    CHECK(og.mean == doctest::Approx(theta(g, c)).epsilon(1e-15));
    CHECK(og.shape == 1.2);
    CHECK(og.rate == doctest::Approx(0.8 + 0.5 * c * c).epsilon(1e-15));
  }
}

TEST_CASE("gamma_mix parameter validation") {
  CHECK_THROWS_AS(GsmDensity::gamma_mix(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GsmDensity::gamma_mix(1.0, -0.5), std::invalid_argument);
  // alpha <= 1/2 is allowed (warns once): the updates stay defined.
  const GsmDensity weak = GsmDensity::gamma_mix(0.4, 1.0);
  CHECK(theta(weak, 1.0) == doctest::Approx(0.4 / 1.5).epsilon(1e-15));
}

}  // TEST_SUITE
