#pragma once

#include <string_view>

namespace compare_kit {

enum class Sidedness { One, Two };
enum class VarianceVariant { Pooled, Unpooled };

std::string_view to_string(Sidedness s);
std::string_view to_string(VarianceVariant v);

// z_{1-alpha} for one-sided designs, z_{1-alpha/2} for two-sided.
double critical_z(double alpha, Sidedness sidedness);

}  // namespace compare_kit

namespace compare_kit::binary {

// Control-arm probabilities of the relevant event (p1) and the additional
// event (p2).
struct BinaryMarginals {
    double p1 = 0.0;
    double p2 = 0.0;

    void validate(std::string_view path = "marginals") const;
};

// Absolute risk reductions; the treatment arm has p_j - delta_j.
struct RiskDifferenceEffect {
    double delta1 = 0.0;
    double delta2 = 0.0;
};

struct CorrelationBounds {
    double rho_min = 0.0;
    double rho_max = 0.0;
};

struct Conditionals {
    double eps1_given_eps2 = 0.0;
    double eps2_given_eps1 = 0.0;
};

struct BinaryDesignInput {
    BinaryMarginals marginals;
    RiskDifferenceEffect effect;
    double rho = 0.0;  // Pearson correlation, assumed equal in both arms
    double alpha = 0.05;
    double power = 0.80;
    Sidedness sidedness = Sidedness::One;
    VarianceVariant variance = VarianceVariant::Pooled;

    BinaryMarginals treatment_marginals() const {
        return {marginals.p1 - effect.delta1, marginals.p2 - effect.delta2};
    }

    // Checks ranges and association feasibility in both arms.
    void validate() const;
};

CorrelationBounds correlation_bounds(const BinaryMarginals& m);

// p12 = p1 p2 + rho sqrt(p1 q1 p2 q2). Throws INFEASIBLE_ASSOCIATION naming
// the feasible interval when rho is outside the Frechet bounds.
double joint_prob_from_correlation(const BinaryMarginals& m, double rho);

Conditionals conditionals_from_correlation(const BinaryMarginals& m, double rho);

// Inverse of the linear map above, driven by P(eps1 | eps2).
double correlation_from_conditional(const BinaryMarginals& m, double eps1_given_eps2);

// Same, driven by P(eps2 | eps1).
double correlation_from_reverse_conditional(const BinaryMarginals& m, double eps2_given_eps1);

// P(eps1 or eps2) = p1 + p2 - p12.
double composite_probability(const BinaryMarginals& m, double rho);

// p*(control) - p*(treatment) with the same rho in both arms.
double composite_effect(const BinaryDesignInput& input);

// Per-arm sample size from the normal-approximation two-proportion test,
// before rounding.
double sample_size_per_arm(double p_control, double p_treatment, double alpha, double power,
                           Sidedness sidedness, VarianceVariant variant);

// Total sample size, 2 * ceil(per-arm).
int sample_size_binary(double p_control, double p_treatment, double alpha, double power,
                       Sidedness sidedness, VarianceVariant variant);

struct BinaryEfficiency {
    double p_star_control = 0.0;
    double p_star_treatment = 0.0;
    double delta_star = 0.0;
    double n_relevant_per_arm = 0.0;   // unrounded
    double n_composite_per_arm = 0.0;  // unrounded
    double are = 0.0;
};

BinaryEfficiency efficiency_binary(const BinaryDesignInput& input);

// Ratio of unrounded sample sizes n(eps1) / n(eps*).
double are_binary(const BinaryDesignInput& input);

}  // namespace compare_kit::binary
