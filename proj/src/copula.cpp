#include "compare_kit/copula.hpp"

#include "compare_kit/errors.hpp"
#include "compare_kit/numerics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace compare_kit::copula {

namespace {

void check_theta(double theta) {
    if (!(theta >= 1.0) || !std::isfinite(theta)) {
        throw Error(ErrorCode::Validation,
                    "Gumbel copula parameter must satisfy theta >= 1 (got " + std::to_string(theta) +
                        ")",
                    "theta");
    }
}

void check_unit(double w, const char* field) {
    if (!(w >= 0.0 && w <= 1.0)) fail_validation(field, "copula argument must lie in [0, 1]");
}

constexpr double kMaxTheta = 50.0;

}  // namespace

GumbelPoint gumbel_from_logs(double x, double y, double theta) {
    if (x == 0.0 && y == 0.0) {
        const double slope = std::pow(2.0, 1.0 / theta - 1.0);
        return {1.0, slope, slope};
    }
    if (std::isinf(x) || std::isinf(y)) {
        // One argument is 0: C = 0; the partial along the zero coordinate is
        // the other argument (theta = 1) or 0 by lower-tail independence.
        const double other_x = std::isinf(x) ? (std::isinf(y) ? 0.0 : std::exp(-y)) : 0.0;
        const double other_y = std::isinf(y) ? (std::isinf(x) ? 0.0 : std::exp(-x)) : 0.0;
        if (theta == 1.0) return {0.0, other_x, other_y};
        return {0.0, 0.0, 0.0};
    }
    const double xt = std::pow(x, theta);
    const double yt = std::pow(y, theta);
    const double a = xt + yt;
    const double s = std::pow(a, 1.0 / theta);
    const double log_c = -s;
    const double log_scale = log_c + (1.0 / theta - 1.0) * std::log(a);
    // dC/du = C * A^(1/theta-1) * x^(theta-1) / u with 1/u = e^x.
    const double du = x > 0.0 ? std::exp(log_scale + (theta - 1.0) * std::log(x) + x)
                              : (theta == 1.0 ? std::exp(-y) : 0.0);
    const double dv = y > 0.0 ? std::exp(log_scale + (theta - 1.0) * std::log(y) + y)
                              : (theta == 1.0 ? std::exp(-x) : 0.0);
    return {std::exp(log_c), du, dv};
}

double gumbel_cdf(double u, double v, double theta) {
    check_theta(theta);
    check_unit(u, "u");
    check_unit(v, "v");
    if (u == 0.0 || v == 0.0) return 0.0;
    return gumbel_from_logs(-std::log(u), -std::log(v), theta).value;
}

double gumbel_du(double u, double v, double theta) {
    check_theta(theta);
    check_unit(u, "u");
    check_unit(v, "v");
    const double x = u == 0.0 ? INFINITY : -std::log(u);
    const double y = v == 0.0 ? INFINITY : -std::log(v);
    return gumbel_from_logs(x, y, theta).du;
}

double gumbel_dv(double u, double v, double theta) { return gumbel_du(v, u, theta); }

double spearman_of_gumbel(double theta) {
    check_theta(theta);
    if (theta == 1.0) return 0.0;
    numerics::ToleranceSpec tol{1e-11, 1e-11, 2000};
    const double mass = numerics::integrate_2d_unit_square(
        [theta](double u, double v) {
            return gumbel_from_logs(-std::log(u), -std::log(v), theta).value;
        },
        tol);
    return 12.0 * mass - 3.0;
}

double gumbel_theta_from_spearman(double rho_s) {
    if (!std::isfinite(rho_s) || rho_s < 0.0) {
        throw Error(ErrorCode::Validation,
                    "the Gumbel copula supports nonnegative association only (Spearman rho = " +
                        std::to_string(rho_s) +
                        "); use rho = 0 for independence or a different copula family",
                    "spearman_rho");
    }
    if (rho_s >= 1.0) fail_validation("spearman_rho", "must be strictly below 1");
    if (rho_s == 0.0) return 1.0;
    static const double upper = spearman_of_gumbel(kMaxTheta);
    if (rho_s > upper) {
        fail_validation("spearman_rho", "exceeds the largest supported association " +
                                            std::to_string(upper) + " (theta = 50)");
    }
    // Memoised per rho_s.
    static std::mutex mutex;
    static std::map<double, double> memo;
    {
        std::lock_guard lock(mutex);
        if (auto it = memo.find(rho_s); it != memo.end()) return it->second;
    }
    numerics::ToleranceSpec tol{1e-10, 1e-10, 200};
    const double theta = numerics::find_root(
        [rho_s](double t) { return spearman_of_gumbel(t) - rho_s; }, 1.0, kMaxTheta, tol);
    std::lock_guard lock(mutex);
    memo.emplace(rho_s, theta);
    return theta;
}

double kendall_of_gumbel(double theta) {
    check_theta(theta);
    return 1.0 - 1.0 / theta;
}

}  // namespace compare_kit::copula
