#include "compare_kit/survival.hpp"

#include "compare_kit/copula.hpp"
#include "compare_kit/errors.hpp"
#include "compare_kit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace compare_kit::survival {

namespace {

const numerics::ToleranceSpec kTimeTol{1e-12, 1e-11, 1000};

struct ArmMargins {
    const WeibullMargin& m1;
    const WeibullMargin& m2;
    double hr1;
    double hr2;
};

CompositeLaw::Point evaluate_point(const ArmMargins& arm, double theta, CopulaScale scale,
                                   double t) {
    CompositeLaw::Point out;
    if (t <= 0.0) return out;
    const double h1 = arm.hr1 * arm.m1.cumulative_hazard(t);
    const double h2 = arm.hr2 * arm.m2.cumulative_hazard(t);
    const double f1 = std::exp(-h1) * arm.hr1 * arm.m1.hazard(t);
    const double f2 = std::exp(-h2) * arm.hr2 * arm.m2.hazard(t);
    if (scale == CopulaScale::Survival) {
        const auto g = copula::gumbel_from_logs(h1, h2, theta);
        out.survival = g.value;
        out.sub1 = g.du * f1;
        out.sub2 = g.dv * f2;
    } else {
        const double big_f1 = -std::expm1(-h1);
        const double big_f2 = -std::expm1(-h2);
        const double x = big_f1 > 0.0 ? -std::log(big_f1) : std::numeric_limits<double>::infinity();
        const double y = big_f2 > 0.0 ? -std::log(big_f2) : std::numeric_limits<double>::infinity();
        const auto g = copula::gumbel_from_logs(x, y, theta);
        // P(T1 > t, T2 > t) = 1 - F1 - F2 + C(F1, F2); e^{-h1} - F2 avoids
        // cancellation when both margins are small.
        out.survival = std::exp(-h1) - big_f2 + g.value;
        out.sub1 = f1 * (1.0 - g.du);
        out.sub2 = f2 * (1.0 - g.dv);
    }
    out.density = out.sub1 + out.sub2;
    return out;
}

double observed_eps2(const ArmMargins& arm, double theta, CopulaScale scale, double tau) {
    return integrate_time(
        [&](double t) { return evaluate_point(arm, theta, scale, t).sub2; }, tau);
}

void check_open_probability(double p, const char* field) {
    if (!(p > 0.0 && p < 1.0)) fail_validation(field, "must lie strictly between 0 and 1");
}

}  // namespace

std::string_view to_string(CopulaScale s) {
    return s == CopulaScale::Distribution ? "distribution" : "survival";
}

double shape_from_name(std::string_view name) {
    if (name == "constant") return 1.0;
    if (name == "increasing") return 2.0;
    if (name == "decreasing") return 0.5;
    fail_validation("shape", "unknown hazard shape '" + std::string(name) +
                                 "' (expected constant, increasing or decreasing)");
}

std::string shape_name(double shape) {
    if (shape == 1.0) return "constant";
    if (shape == 2.0) return "increasing";
    if (shape == 0.5) return "decreasing";
    std::ostringstream os;
    os << shape;
    return os.str();
}

double WeibullMargin::cumulative_hazard(double t) const {
    if (t <= 0.0) return 0.0;
    return std::pow(t / scale, shape);
}

double WeibullMargin::hazard(double t) const {
    if (t <= 0.0) return shape < 1.0 ? std::numeric_limits<double>::infinity()
                                     : (shape == 1.0 ? 1.0 / scale : 0.0);
    return shape / scale * std::pow(t / scale, shape - 1.0);
}

double WeibullMargin::survival(double t) const { return std::exp(-cumulative_hazard(t)); }

double WeibullMargin::density(double t) const { return survival(t) * hazard(t); }

double WeibullMargin::time_at_cumulative_hazard(double h) const {
    return scale * std::pow(h, 1.0 / shape);
}

double weibull_scale_from_event_prob(double event_prob, double shape, double tau) {
    check_open_probability(event_prob, "event_prob");
    if (!(shape > 0.0)) fail_validation("shape", "must be strictly positive");
    if (!(tau > 0.0)) fail_validation("tau", "must be strictly positive");
    return tau / std::pow(-std::log1p(-event_prob), 1.0 / shape);
}

void SurvivalScenario::validate() const {
    check_open_probability(p1, "p1");
    check_open_probability(p2, "p2");
    if (eps1_terminal && !(p1 + p2 < 1.0)) {
        fail_validation("p2", "p1 + p2 must stay below 1 when eps1 is terminal");
    }
    if (!(shape1 > 0.0) || !std::isfinite(shape1)) fail_validation("shape1", "must be positive");
    if (!(shape2 > 0.0) || !std::isfinite(shape2)) fail_validation("shape2", "must be positive");
    if (!(hr1 > 0.0 && hr1 <= 1.0)) fail_validation("hr1", "must lie in (0, 1]");
    if (!(hr2 > 0.0 && hr2 <= 1.0)) fail_validation("hr2", "must lie in (0, 1]");
    if (!std::isfinite(spearman_rho) || spearman_rho < 0.0) {
        throw Error(ErrorCode::Validation,
                    "spearman_rho: the Gumbel copula supports nonnegative association only; use "
                    "0 for independence or a different copula family",
                    "spearman_rho");
    }
    if (!(spearman_rho < 1.0)) fail_validation("spearman_rho", "must be strictly below 1");
    if (!(tau > 0.0) || !std::isfinite(tau)) fail_validation("tau", "must be strictly positive");
}

double integrate_time(const std::function<double(double)>& g, double upper) {
    return numerics::integrate_1d(
        [&](double s) {
            const double t = upper * s * s;
            return g(t) * 2.0 * upper * s;
        },
        0.0, 1.0, kTimeTol);
}

CompositeLaw::CompositeLaw(const SurvivalScenario& scenario, double theta)
    : scenario_(scenario), theta_(theta) {
    scenario_.validate();
    if (!(theta >= 1.0)) fail_validation("theta", "must satisfy theta >= 1");
    margin1_ = {scenario_.shape1,
                weibull_scale_from_event_prob(scenario_.p1, scenario_.shape1, scenario_.tau)};
    margin2_ = {scenario_.shape2,
                weibull_scale_from_event_prob(scenario_.p2, scenario_.shape2, scenario_.tau)};
    if (!scenario_.eps1_terminal) return;

    // Find the latent cumulative hazard of T2 at tau whose observable
    // (pre-death) event probability equals p2.
    const double tau = scenario_.tau;
    const double shape2 = scenario_.shape2;
    auto gap = [&](double log_h_tau) {
        const WeibullMargin candidate{shape2, tau / std::pow(std::exp(log_h_tau), 1.0 / shape2)};
        return observed_eps2({margin1_, candidate, 1.0, 1.0}, theta_, scenario_.copula_scale, tau) -
               scenario_.p2;
    };
    const double lo = std::log(-std::log1p(-scenario_.p2));
    const double hi = std::log(60.0);
    if (gap(hi) < 0.0) {
        fail_validation("p2", "observed probability of eps2 is not attainable before eps1 under "
                              "this association");
    }
    const double log_h = numerics::find_root(gap, lo, hi, {1e-13, 1e-12, 200});
    margin2_.scale = tau / std::pow(std::exp(log_h), 1.0 / shape2);
}

double CompositeLaw::hazard_ratio(int component) const {
    return component == 1 ? scenario_.hr1 : scenario_.hr2;
}

CompositeLaw::Point CompositeLaw::evaluate(Arm arm, double t) const {
    const bool treated = arm == Arm::Treatment;
    return evaluate_point(
        {margin1_, margin2_, treated ? scenario_.hr1 : 1.0, treated ? scenario_.hr2 : 1.0}, theta_,
        scenario_.copula_scale, t);
}

double CompositeLaw::hr_star(double t) const {
    return hazard(Arm::Treatment, t) / hazard(Arm::Control, t);
}

double CompositeLaw::margin_cdf(Arm arm, int component, double t) const {
    const double hr = arm == Arm::Treatment ? hazard_ratio(component) : 1.0;
    const auto& m = component == 1 ? margin1_ : margin2_;
    return -std::expm1(-hr * m.cumulative_hazard(t));
}

double CompositeLaw::composite_event_prob(Arm arm) const {
    return 1.0 - survival(arm, scenario_.tau);
}

double CompositeLaw::relevant_event_prob(Arm arm) const {
    return margin_cdf(arm, 1, scenario_.tau);
}

double CompositeLaw::observed_eps2_prob(Arm arm) const {
    return integrate_time([&](double t) { return evaluate(arm, t).sub2; }, scenario_.tau);
}

CompositeLaw build_composite_law(const SurvivalScenario& scenario) {
    scenario.validate();
    return CompositeLaw(scenario, copula::gumbel_theta_from_spearman(scenario.spearman_rho));
}

double log_hr_moment(const CompositeLaw& law) {
    return integrate_time(
        [&](double t) {
            const auto control = law.evaluate(Arm::Control, t);
            const auto treated = law.evaluate(Arm::Treatment, t);
            if (control.density <= 0.0) return 0.0;
            const double log_hr = std::log(treated.hazard() / control.hazard());
            return log_hr * control.density;
        },
        law.tau());
}

double effective_hr(const CompositeLaw& law, double tau) {
    if (tau != law.tau()) fail_validation("tau", "must equal the follow-up the law was built for");
    return std::exp(log_hr_moment(law) / law.composite_event_prob(Arm::Control));
}

double are_survival(const CompositeLaw& law) {
    const double hr1 = law.scenario().hr1;
    if (hr1 == 1.0) {
        throw Error(ErrorCode::UndetectableEffect,
                    "ARE undefined for null effect on relevant endpoint (hr1 = 1)", "hr1");
    }
    const double moment = log_hr_moment(law);
    const double log_hr1 = std::log(hr1);
    return moment * moment / (log_hr1 * log_hr1 * law.relevant_event_prob(Arm::Control) *
                              law.composite_event_prob(Arm::Control));
}

double are_survival(const SurvivalScenario& scenario) {
    return are_survival(build_composite_law(scenario));
}

FreedmanResult freedman(double summary_hr, double event_prob_avg, double alpha, double power,
                        Sidedness sidedness) {
    if (!(summary_hr > 0.0) || !std::isfinite(summary_hr)) {
        fail_validation("hr", "must be strictly positive");
    }
    if (!(event_prob_avg > 0.0 && event_prob_avg <= 1.0)) {
        fail_validation("event_prob", "must lie in (0, 1]");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) fail_validation("alpha", "must lie in (0, 0.5)");
    if (!(power > 0.5 && power < 1.0)) fail_validation("power", "must lie in (0.5, 1)");
    if (summary_hr == 1.0) {
        throw Error(ErrorCode::UndetectableEffect, "undetectable effect: hazard ratio equals 1",
                    "hr");
    }
    const double z = critical_z(alpha, sidedness) + numerics::normal_quantile(power);
    const double ratio = (1.0 + summary_hr) / (1.0 - summary_hr);
    FreedmanResult out;
    out.events = ratio * ratio * z * z;
    out.n_exact = out.events / event_prob_avg;
    out.n_total = 2 * static_cast<int>(std::ceil(out.events / (2.0 * event_prob_avg)));
    return out;
}

int freedman_sample_size(double summary_hr, double event_prob_avg, double alpha, double power,
                         Sidedness sidedness) {
    return freedman(summary_hr, event_prob_avg, alpha, power, sidedness).n_total;
}

PhDiagnostic ph_diagnostic(const CompositeLaw& law, double tau, int grid_size) {
    if (grid_size < 2) fail_validation("grid_size", "must be at least 2");
    if (!(tau > 0.0)) fail_validation("tau", "must be strictly positive");
    PhDiagnostic out;
    out.curve.reserve(static_cast<std::size_t>(grid_size));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 1; i <= grid_size; ++i) {
        const double t = tau * static_cast<double>(i) / grid_size;
        const double hr = law.hr_star(t);
        out.curve.emplace_back(t, hr);
        lo = std::min(lo, hr);
        hi = std::max(hi, hr);
    }
    out.non_proportionality_index = hi - lo;
    return out;
}

SurvivalEfficiency efficiency_survival(const SurvivalScenario& scenario, double alpha,
                                       double power, Sidedness sidedness) {
    const CompositeLaw law = build_composite_law(scenario);
    SurvivalEfficiency out;
    out.theta = law.theta();
    out.p1_control = law.relevant_event_prob(Arm::Control);
    out.p1_treatment = law.relevant_event_prob(Arm::Treatment);
    out.p_star_control = law.composite_event_prob(Arm::Control);
    out.p_star_treatment = law.composite_event_prob(Arm::Treatment);
    out.latent_p2_control = law.margin_cdf(Arm::Control, 2, law.tau());
    out.log_hr_moment = log_hr_moment(law);
    out.effective_hr = std::exp(out.log_hr_moment / out.p_star_control);
    out.are = are_survival(law);
    out.composite = freedman(out.effective_hr, 0.5 * (out.p_star_control + out.p_star_treatment),
                             alpha, power, sidedness);
    out.relevant = freedman(scenario.hr1, 0.5 * (out.p1_control + out.p1_treatment), alpha, power,
                            sidedness);
    out.non_proportionality_index = ph_diagnostic(law, law.tau(), 100).non_proportionality_index;
    return out;
}

}  // namespace compare_kit::survival
