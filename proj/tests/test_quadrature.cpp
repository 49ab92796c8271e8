#include <doctest.h>

#include <cmath>

#include "gpmil/common.hpp"
#include "gpmil/quadrature.hpp"

using namespace gpmil;

TEST_SUITE("quadrature") {

TEST_CASE("polynomials and smooth integrands to tight tolerance") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 40.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standard normal mass over a wide interval") {
  const double z = 1.0 / std::sqrt(2.0 * M_PI);
  const double got = integrate(
      [&](double x) { return z * std::exp(-0.5 * x * x); }, -10.0, 10.0);
  CHECK(got == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("integrable endpoint singularities resolve") {
  // Nodes are interior, so log x at 0 is never touched directly.
  CHECK(integrate([](double x) { return std::log(x); }, 0.0, 1.0, 1e-9) ==
        doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                  1e-8) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("oscillatory integrand with many needed panels") {
  // int_0^1 cos(40 x) dx = sin(40)/40.
  CHECK(integrate([](double x) { return std::cos(40.0 * x); }, 0.0, 1.0) ==
        doctest::Approx(std::sin(40.0) / 40.0).epsilon(1e-11));
}

TEST_CASE("an exhausted interval budget raises numeric_error") {
  CHECK_THROWS_AS(
      integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-13,
                3),
      numeric_error);
}

TEST_CASE("degenerate and reversed intervals") {
  CHECK(integrate([](double x) { return x; }, 2.0, 2.0) == 0.0);
}

}  // TEST_SUITE
