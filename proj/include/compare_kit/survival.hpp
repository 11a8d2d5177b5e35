#pragma once

#include "compare_kit/binary.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace compare_kit::survival {

enum class Arm { Control, Treatment };

// Which pair of marginal functions the Gumbel copula couples.
//   Distribution: P(T1 <= s, T2 <= t) = C(F1(s), F2(t))
//   Survival:     P(T1 >  s, T2 >  t) = C(S1(s), S2(t))
enum class CopulaScale { Distribution, Survival };

std::string_view to_string(CopulaScale s);

// Named hazard shapes: constant (exponential), increasing (Weibull shape 2),
// decreasing (Weibull shape 0.5).
double shape_from_name(std::string_view name);
// "constant", "increasing", "decreasing" for the three canonical shapes,
// otherwise the numeric value.
std::string shape_name(double shape);

// S(t) = exp(-(t/scale)^shape).
struct WeibullMargin {
    double shape = 1.0;
    double scale = 1.0;

    double cumulative_hazard(double t) const;
    double hazard(double t) const;
    double survival(double t) const;
    double density(double t) const;
    // Time t with cumulative hazard h, i.e. S(t) = exp(-h).
    double time_at_cumulative_hazard(double h) const;
};

// Scale b such that 1 - exp(-(tau/b)^shape) = event_prob.
double weibull_scale_from_event_prob(double event_prob, double shape, double tau);

struct SurvivalScenario {
    double p1 = 0.0;  // P(eps1 by tau), control arm
    double p2 = 0.0;  // P(eps2 observed by tau), control arm
    double shape1 = 1.0;
    double shape2 = 1.0;
    double hr1 = 1.0;
    double hr2 = 1.0;
    double spearman_rho = 0.0;
    double tau = 1.0;
    // eps1 is death: eps2 can only be observed before eps1, so p2 is matched
    // against P(T2 <= min(T1, tau)) rather than the latent margin.
    bool eps1_terminal = false;
    CopulaScale copula_scale = CopulaScale::Distribution;

    void validate() const;
};

// Joint law of (T1, T2) per arm with the composite T* = min(T1, T2).
// Treatment margins follow proportional hazards: S_j^(1) = (S_j^(0))^HR_j.
// Immutable after construction.
class CompositeLaw {
public:
    struct Point {
        double survival = 1.0;  // S*(t)
        double density = 0.0;   // f*(t)
        double sub1 = 0.0;      // P(T1 in dt, T2 > t) / dt
        double sub2 = 0.0;      // P(T2 in dt, T1 > t) / dt
        double hazard() const { return density / survival; }
    };

    CompositeLaw(const SurvivalScenario& scenario, double theta);

    const SurvivalScenario& scenario() const { return scenario_; }
    double theta() const { return theta_; }
    double tau() const { return scenario_.tau; }
    // Latent control-arm margins.
    const WeibullMargin& margin1() const { return margin1_; }
    const WeibullMargin& margin2() const { return margin2_; }
    double hazard_ratio(int component) const;

    Point evaluate(Arm arm, double t) const;
    double survival(Arm arm, double t) const { return evaluate(arm, t).survival; }
    double density(Arm arm, double t) const { return evaluate(arm, t).density; }
    double hazard(Arm arm, double t) const { return evaluate(arm, t).hazard(); }
    double hr_star(double t) const;

    // Marginal P(T_j <= t) in the given arm.
    double margin_cdf(Arm arm, int component, double t) const;

    // 1 - S*(tau).
    double composite_event_prob(Arm arm) const;
    // P(T1 <= tau).
    double relevant_event_prob(Arm arm) const;
    // P(T2 <= min(T1, tau)), by quadrature of the sub-density.
    double observed_eps2_prob(Arm arm) const;

private:
    SurvivalScenario scenario_;
    double theta_;
    WeibullMargin margin1_;
    WeibullMargin margin2_;
};

// Integral of g over (0, upper] after t = upper * s^2, which removes the
// t^(-1/2) head singularity of decreasing-hazard densities.
double integrate_time(const std::function<double(double)>& g, double upper);

CompositeLaw build_composite_law(const SurvivalScenario& scenario);

// Integral of ln HR*(t) f*^(0)(t) over (0, tau].
double log_hr_moment(const CompositeLaw& law);

// exp(log_hr_moment / p*^(0)).
double effective_hr(const CompositeLaw& law, double tau);

double are_survival(const CompositeLaw& law);
double are_survival(const SurvivalScenario& scenario);

struct FreedmanResult {
    double events = 0.0;
    double n_exact = 0.0;  // events / event_prob_avg
    int n_total = 0;       // 2 * ceil(n_exact / 2)
};

// E = ((1+HR)/(1-HR))^2 (z_alpha + z_beta)^2, patients = E / event_prob_avg.
FreedmanResult freedman(double summary_hr, double event_prob_avg, double alpha, double power,
                        Sidedness sidedness);

int freedman_sample_size(double summary_hr, double event_prob_avg, double alpha, double power,
                         Sidedness sidedness);

struct PhDiagnostic {
    std::vector<std::pair<double, double>> curve;  // (t, HR*(t))
    double non_proportionality_index = 0.0;        // max - min over the grid
};

// Grid t_i = tau * i / grid_size, i = 1..grid_size.
PhDiagnostic ph_diagnostic(const CompositeLaw& law, double tau, int grid_size);

struct SurvivalEfficiency {
    double theta = 1.0;
    double p1_control = 0.0;
    double p1_treatment = 0.0;
    double p_star_control = 0.0;
    double p_star_treatment = 0.0;
    double latent_p2_control = 0.0;
    double log_hr_moment = 0.0;
    double effective_hr = 1.0;
    double are = 0.0;
    FreedmanResult composite;
    FreedmanResult relevant;
    double non_proportionality_index = 0.0;
};

SurvivalEfficiency efficiency_survival(const SurvivalScenario& scenario, double alpha,
                                       double power, Sidedness sidedness);

}  // namespace compare_kit::survival
