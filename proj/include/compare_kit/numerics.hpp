#pragma once

#include <functional>

namespace compare_kit::numerics {

struct ToleranceSpec {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    int max_iter = 200;

    void validate() const;
};

using Function1D = std::function<double(double)>;
using Function2D = std::function<double(double, double)>;

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

// Globally adaptive Gauss-Kronrod (7/15) quadrature. max_iter bounds the
// number of interval bisections. Endpoints are never evaluated, so
// integrable endpoint singularities are tolerated.
//
// Throws NumericFailure (QUADRATURE_FAILURE) carrying the best estimate when
// the tolerance is not met within max_iter bisections.
QuadratureResult integrate_1d_detailed(const Function1D& f, double a, double b,
                                       const ToleranceSpec& tol = {});

double integrate_1d(const Function1D& f, double a, double b, const ToleranceSpec& tol = {});

// Nested adaptive quadrature over [0,1]^2. The inner integral runs with a
// tenth of the outer tolerance.
double integrate_2d_unit_square(const Function2D& f, const ToleranceSpec& tol = {});

// Brent's method on a bracketing interval. Requires f(lo)*f(hi) <= 0.
// Returns x with |f(x)| <= abs_tol or a final bracket narrower than abs_tol.
double find_root(const Function1D& f, double lo, double hi, const ToleranceSpec& tol = {});

// Standard normal quantile and distribution function.
double normal_quantile(double p);
double normal_cdf(double x);

}  // namespace compare_kit::numerics
