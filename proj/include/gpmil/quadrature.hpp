#pragma once

#include <functional>

namespace gpmil {

// Adaptive Gauss-Kronrod (7-15) integration of f over [a, b]. Intervals are
// bisected until the embedded error estimate of every subinterval sum falls
// below abs_tol; throws numeric_error if max_intervals is exhausted first.
// Kronrod nodes are interior, so f is never evaluated at a or b, which makes
// integrable endpoint singularities (e.g. w^{alpha-1} log w near 0) safe.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_intervals = 4096);

}  // namespace gpmil
