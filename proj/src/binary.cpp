#include "compare_kit/binary.hpp"

#include "compare_kit/errors.hpp"
#include "compare_kit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace compare_kit {

std::string_view to_string(Sidedness s) { return s == Sidedness::One ? "one" : "two"; }

std::string_view to_string(VarianceVariant v) {
    return v == VarianceVariant::Pooled ? "pooled" : "unpooled";
}

double critical_z(double alpha, Sidedness sidedness) {
    return numerics::normal_quantile(1.0 - (sidedness == Sidedness::Two ? alpha / 2.0 : alpha));
}

}  // namespace compare_kit

namespace compare_kit::binary {

namespace {

// Slack for rho sitting exactly on a bound after a decimal round trip.
constexpr double kBoundSlack = 1e-12;

void check_probability_open(double p, const std::string& field) {
    if (!(p > 0.0 && p < 1.0)) fail_validation(field, "must lie strictly between 0 and 1");
}

std::string describe_interval(double lo, double hi) {
    std::ostringstream os;
    os.precision(6);
    os << "[" << lo << ", " << hi << "]";
    return os.str();
}

void require_feasible(const BinaryMarginals& m, double rho, std::string_view arm) {
    if (!std::isfinite(rho)) fail_validation("rho", "must be finite");
    const auto b = correlation_bounds(m);
    if (rho < b.rho_min - kBoundSlack || rho > b.rho_max + kBoundSlack) {
        std::ostringstream os;
        os.precision(6);
        os << "infeasible association";
        if (!arm.empty()) os << " in " << arm << " arm";
        os << ": rho = " << rho << " lies outside the Frechet interval "
           << describe_interval(b.rho_min, b.rho_max) << " for p1 = " << m.p1 << ", p2 = " << m.p2;
        throw Error(ErrorCode::InfeasibleAssociation, os.str(), "rho");
    }
}

double unchecked_joint(const BinaryMarginals& m, double rho) {
    const double lo = std::max(0.0, m.p1 + m.p2 - 1.0);
    const double hi = std::min(m.p1, m.p2);
    const double p12 =
        m.p1 * m.p2 + rho * std::sqrt(m.p1 * (1.0 - m.p1) * m.p2 * (1.0 - m.p2));
    return std::clamp(p12, lo, hi);
}

}  // namespace

void BinaryMarginals::validate(std::string_view path) const {
    const std::string prefix = path.empty() ? std::string{} : std::string(path) + ".";
    check_probability_open(p1, prefix + "p1");
    check_probability_open(p2, prefix + "p2");
}

void BinaryDesignInput::validate() const {
    marginals.validate("");
    if (!(effect.delta1 >= 0.0 && effect.delta1 < marginals.p1)) {
        fail_validation("delta1", "risk reduction must satisfy 0 <= delta1 < p1 = " +
                                      std::to_string(marginals.p1));
    }
    if (!(effect.delta2 >= 0.0 && effect.delta2 < marginals.p2)) {
        fail_validation("delta2", "risk reduction must satisfy 0 <= delta2 < p2 = " +
                                      std::to_string(marginals.p2));
    }
    if (!(alpha > 0.0 && alpha < 0.5)) fail_validation("alpha", "must lie in (0, 0.5)");
    if (!(power > 0.5 && power < 1.0)) fail_validation("power", "must lie in (0.5, 1)");
    require_feasible(marginals, rho, "control");
    require_feasible(treatment_marginals(), rho, "treatment");
}

CorrelationBounds correlation_bounds(const BinaryMarginals& m) {
    m.validate("");
    const double p1 = m.p1;
    const double p2 = m.p2;
    const double q1 = 1.0 - p1;
    const double q2 = 1.0 - p2;
    const double rho_max = std::min(std::sqrt(p1 * q2 / (q1 * p2)), std::sqrt(p2 * q1 / (q2 * p1)));
    const double rho_min =
        std::max(-std::sqrt(p1 * p2 / (q1 * q2)), -std::sqrt(q1 * q2 / (p1 * p2)));
    return {rho_min, rho_max};
}

double joint_prob_from_correlation(const BinaryMarginals& m, double rho) {
    require_feasible(m, rho, "");
    return unchecked_joint(m, rho);
}

Conditionals conditionals_from_correlation(const BinaryMarginals& m, double rho) {
    const double p12 = joint_prob_from_correlation(m, rho);
    return {p12 / m.p2, p12 / m.p1};
}

double correlation_from_conditional(const BinaryMarginals& m, double eps1_given_eps2) {
    m.validate("");
    const double lo = std::max(0.0, m.p1 + m.p2 - 1.0) / m.p2;
    const double hi = std::min(m.p1, m.p2) / m.p2;
    if (!(eps1_given_eps2 >= lo - kBoundSlack && eps1_given_eps2 <= hi + kBoundSlack)) {
        throw Error(ErrorCode::InfeasibleAssociation,
                    "infeasible conditional probability P(eps1|eps2) = " +
                        std::to_string(eps1_given_eps2) + "; feasible range " +
                        describe_interval(lo, hi),
                    "conditional_eps1_given_eps2");
    }
    const double p12 = eps1_given_eps2 * m.p2;
    return (p12 - m.p1 * m.p2) / std::sqrt(m.p1 * (1.0 - m.p1) * m.p2 * (1.0 - m.p2));
}

double correlation_from_reverse_conditional(const BinaryMarginals& m, double eps2_given_eps1) {
    m.validate("");
    const double lo = std::max(0.0, m.p1 + m.p2 - 1.0) / m.p1;
    const double hi = std::min(m.p1, m.p2) / m.p1;
    if (!(eps2_given_eps1 >= lo - kBoundSlack && eps2_given_eps1 <= hi + kBoundSlack)) {
        throw Error(ErrorCode::InfeasibleAssociation,
                    "infeasible conditional probability P(eps2|eps1) = " +
                        std::to_string(eps2_given_eps1) + "; feasible range " +
                        describe_interval(lo, hi),
                    "conditional_eps2_given_eps1");
    }
    const double p12 = eps2_given_eps1 * m.p1;
    return (p12 - m.p1 * m.p2) / std::sqrt(m.p1 * (1.0 - m.p1) * m.p2 * (1.0 - m.p2));
}

double composite_probability(const BinaryMarginals& m, double rho) {
    return m.p1 + m.p2 - joint_prob_from_correlation(m, rho);
}

double composite_effect(const BinaryDesignInput& input) {
    input.validate();
    const double control = composite_probability(input.marginals, input.rho);
    const double treatment = composite_probability(input.treatment_marginals(), input.rho);
    return control - treatment;
}

double sample_size_per_arm(double p_control, double p_treatment, double alpha, double power,
                           Sidedness sidedness, VarianceVariant variant) {
    if (!(p_control >= 0.0 && p_control <= 1.0)) fail_validation("p_control", "must lie in [0, 1]");
    if (!(p_treatment >= 0.0 && p_treatment <= 1.0)) {
        fail_validation("p_treatment", "must lie in [0, 1]");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) fail_validation("alpha", "must lie in (0, 0.5)");
    if (!(power > 0.5 && power < 1.0)) fail_validation("power", "must lie in (0.5, 1)");
    const double delta = p_control - p_treatment;
    if (delta == 0.0) {
        throw Error(ErrorCode::UndetectableEffect,
                    "undetectable effect: control and treatment probabilities coincide",
                    "p_treatment");
    }
    const double z_alpha = critical_z(alpha, sidedness);
    const double z_beta = numerics::normal_quantile(power);
    const double var_alt = p_control * (1.0 - p_control) + p_treatment * (1.0 - p_treatment);
    if (variant == VarianceVariant::Pooled) {
        const double p_bar = 0.5 * (p_control + p_treatment);
        const double root =
            z_alpha * std::sqrt(2.0 * p_bar * (1.0 - p_bar)) + z_beta * std::sqrt(var_alt);
        return root * root / (delta * delta);
    }
    const double z = z_alpha + z_beta;
    return z * z * var_alt / (delta * delta);
}

int sample_size_binary(double p_control, double p_treatment, double alpha, double power,
                       Sidedness sidedness, VarianceVariant variant) {
    const double n = sample_size_per_arm(p_control, p_treatment, alpha, power, sidedness, variant);
    return 2 * static_cast<int>(std::ceil(n));
}

BinaryEfficiency efficiency_binary(const BinaryDesignInput& input) {
    input.validate();
    if (input.effect.delta1 == 0.0) {
        throw Error(ErrorCode::UndetectableEffect,
                    "undetectable effect: ARE needs a nonzero effect on the relevant endpoint",
                    "delta1");
    }
    const auto treatment = input.treatment_marginals();
    BinaryEfficiency out;
    out.p_star_control = composite_probability(input.marginals, input.rho);
    out.p_star_treatment = composite_probability(treatment, input.rho);
    out.delta_star = out.p_star_control - out.p_star_treatment;
    out.n_relevant_per_arm =
        sample_size_per_arm(input.marginals.p1, treatment.p1, input.alpha, input.power,
                            input.sidedness, input.variance);
    if (out.delta_star == 0.0) {
        throw Error(ErrorCode::UndetectableEffect,
                    "undetectable effect: composite probabilities coincide in both arms", "delta2");
    }
    out.n_composite_per_arm =
        sample_size_per_arm(out.p_star_control, out.p_star_treatment, input.alpha, input.power,
                            input.sidedness, input.variance);
    out.are = out.n_relevant_per_arm / out.n_composite_per_arm;
    return out;
}

double are_binary(const BinaryDesignInput& input) { return efficiency_binary(input).are; }

}  // namespace compare_kit::binary
