#include "compare_kit/numerics.hpp"

#include "compare_kit/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace compare_kit {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InfeasibleAssociation: return "INFEASIBLE_ASSOCIATION";
        case ErrorCode::UndetectableEffect: return "UNDETECTABLE_EFFECT";
        case ErrorCode::QuadratureFailure: return "QUADRATURE_FAILURE";
        case ErrorCode::Validation: return "VALIDATION";
        case ErrorCode::Busy: return "BUSY";
        case ErrorCode::Internal: return "INTERNAL";
    }
    return "INTERNAL";
}

void fail_validation(const std::string& field, const std::string& message) {
    throw Error(ErrorCode::Validation, field + ": " + message, field);
}

}  // namespace compare_kit

namespace compare_kit::numerics {

namespace {

// Kronrod 15-point abscissae (non-negative half) and weights; every second
// abscissa is a Gauss 7-point node.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
};

struct ByError {
    bool operator()(const Segment& x, const Segment& y) const {
        if (x.error != y.error) return x.error < y.error;
        return x.a > y.a;
    }
};

Segment gauss_kronrod(const Function1D& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    if (!std::isfinite(kronrod)) {
        std::ostringstream os;
        os << "quadrature failure: non-finite integrand on [" << a << ", " << b << "]";
        throw NumericFailure(os.str(), kronrod, std::numeric_limits<double>::infinity());
    }
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

void ToleranceSpec::validate() const {
    if (!(abs_tol > 0.0)) fail_validation("tol.abs_tol", "must be strictly positive");
    if (!(rel_tol > 0.0)) fail_validation("tol.rel_tol", "must be strictly positive");
    if (max_iter < 1) fail_validation("tol.max_iter", "must be at least 1");
}

QuadratureResult integrate_1d_detailed(const Function1D& f, double a, double b,
                                       const ToleranceSpec& tol) {
    tol.validate();
    if (!(a <= b)) fail_validation("a", "integration bounds require a <= b");
    if (a == b) return {0.0, 0.0, 0};

    std::priority_queue<Segment, std::vector<Segment>, ByError> heap;
    Segment first = gauss_kronrod(f, a, b);
    double total = first.value;
    double error = first.error;
    heap.push(first);

    int bisections = 0;
    while (error > std::max(tol.abs_tol, tol.rel_tol * std::abs(total))) {
        if (bisections >= tol.max_iter) {
            std::ostringstream os;
            os << "quadrature failure: tolerance not met after " << bisections
               << " bisections (estimate " << total << ", error bound " << error << ")";
            throw NumericFailure(os.str(), total, error);
        }
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            throw NumericFailure("quadrature failure: interval collapsed below machine precision",
                                 total, error);
        }
        const Segment left = gauss_kronrod(f, worst.a, mid);
        const Segment right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++bisections;
    }

    // Re-sum from the segments so the result does not carry the running
    // update's cancellation error.
    double value = 0.0;
    double err = 0.0;
    std::vector<Segment> segments;
    segments.reserve(heap.size());
    while (!heap.empty()) {
        segments.push_back(heap.top());
        heap.pop();
    }
    std::sort(segments.begin(), segments.end(),
              [](const Segment& x, const Segment& y) { return x.a < y.a; });
    for (const auto& s : segments) {
        value += s.value;
        err += s.error;
    }
    return {value, err, static_cast<int>(segments.size())};
}

double integrate_1d(const Function1D& f, double a, double b, const ToleranceSpec& tol) {
    return integrate_1d_detailed(f, a, b, tol).value;
}

double integrate_2d_unit_square(const Function2D& f, const ToleranceSpec& tol) {
    tol.validate();
    ToleranceSpec inner = tol;
    inner.abs_tol = tol.abs_tol * 0.1;
    inner.rel_tol = tol.rel_tol * 0.1;
    auto row = [&](double u) {
        return integrate_1d([&](double v) { return f(u, v); }, 0.0, 1.0, inner);
    };
    return integrate_1d(row, 0.0, 1.0, tol);
}

double find_root(const Function1D& f, double lo, double hi, const ToleranceSpec& tol) {
    tol.validate();
    double a = lo;
    double b = hi;
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (!(fa * fb < 0.0)) {
        std::ostringstream os;
        os << "root not bracketed: f(" << lo << ") = " << fa << ", f(" << hi << ") = " << fb;
        throw Error(ErrorCode::Validation, os.str(), "bracket");
    }

    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    for (int iter = 0; iter < tol.max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) +
                            0.5 * tol.abs_tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || std::abs(fb) <= tol.abs_tol) {
            return b;
        }
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // Secant or inverse quadratic interpolation.
            const double s = fb / fa;
            double p;
            double q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    std::ostringstream os;
    os << "root finding failed to converge in " << tol.max_iter << " iterations; last bracket ["
       << std::min(b, c) << ", " << std::max(b, c) << "]";
    throw NumericFailure(os.str(), b, std::abs(c - b));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) fail_validation("p", "normal quantile requires 0 < p < 1");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace compare_kit::numerics
