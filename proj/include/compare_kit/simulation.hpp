#pragma once

#include "compare_kit/binary.hpp"
#include "compare_kit/rng.hpp"
#include "compare_kit/survival.hpp"

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace compare_kit::simulation {

// Arms are allocated 1:1. Replication r draws from CounterRng(seed, r), so
// results are independent of thread count and evaluation order.
struct SimConfig {
    std::int64_t n_subjects = 1;
    std::int64_t n_replications = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PowerEstimate {
    double power_hat = 0.0;
    double mc_standard_error = 0.0;
    std::int64_t n_replications = 0;
    std::int64_t rejections = 0;
};

enum class Endpoint { Relevant, Composite };
std::string_view to_string(Endpoint e);
Endpoint endpoint_from_name(std::string_view name);

struct BinaryCounts {
    std::int64_t n11 = 0;  // eps1 and eps2
    std::int64_t n10 = 0;  // eps1 only
    std::int64_t n01 = 0;  // eps2 only
    std::int64_t n00 = 0;  // neither

    std::int64_t total() const { return n11 + n10 + n01 + n00; }
};

// n_subjects independent pairs from the joint Bernoulli law with
// P(both) = joint_prob_from_correlation(marginals, rho).
BinaryCounts sample_correlated_binary(const binary::BinaryMarginals& marginals, double rho,
                                      const SimConfig& config);

// One draw from the Gumbel copula by the Marshall-Olkin construction with a
// positive stable frailty of index 1/theta. Returns (-ln U1, -ln U2).
std::pair<double, double> sample_gumbel_log_uniforms(double theta, CounterRng& rng);

// n draws of (U1, U2) from CounterRng(seed, 0).
std::vector<std::pair<double, double>> sample_gumbel_uniforms(double theta, std::int64_t n,
                                                              std::uint64_t seed);

struct TimePair {
    double t1 = 0.0;
    double t2 = 0.0;
    double t_star = 0.0;       // min(t1, t2)
    bool composite_event = false;  // t_star <= tau
    bool relevant_event = false;   // t1 <= tau
    // False when eps1 is terminal and occurs first, i.e. t2 is latent.
    bool eps2_observable = true;
};

std::vector<TimePair> sample_gumbel_times(const survival::CompositeLaw& law, survival::Arm arm,
                                          const SimConfig& config);
std::vector<TimePair> sample_gumbel_times(const survival::SurvivalScenario& scenario,
                                          survival::Arm arm, const SimConfig& config);

struct TestSpec {
    double alpha = 0.05;
    Sidedness sidedness = Sidedness::One;
};

// Two-proportion z statistic, oriented so that positive values favour
// treatment (fewer events). Zero when the variance estimate is zero.
double two_proportion_z(std::int64_t events_control, std::int64_t events_treatment,
                        std::int64_t n_per_arm, VarianceVariant variant);

// Replicates 1:1 trials of n_total subjects and returns the rejection rate
// of the configured two-proportion test (variant, alpha and sidedness taken
// from input). config.n_subjects is ignored in favour of n_total.
PowerEstimate simulate_power_binary(const binary::BinaryDesignInput& input, Endpoint endpoint,
                                    std::int64_t n_total, const SimConfig& config);

struct LogrankObservation {
    double time = 0.0;
    bool event = false;
    bool treated = false;
};

// Unweighted logrank Z, positive when the control arm has more events than
// expected. Sorts the observations in place.
double logrank_z(std::vector<LogrankObservation>& obs);

PowerEstimate simulate_power_survival(const survival::SurvivalScenario& scenario,
                                      Endpoint endpoint, std::int64_t n_total,
                                      const SimConfig& config, const TestSpec& test);
PowerEstimate simulate_power_survival(const survival::CompositeLaw& law, Endpoint endpoint,
                                      std::int64_t n_total, const SimConfig& config,
                                      const TestSpec& test);

// Rank correlations of a sample, used to check the copula sampler.
double empirical_spearman(const std::vector<std::pair<double, double>>& sample);
double empirical_kendall(const std::vector<std::pair<double, double>>& sample);

}  // namespace compare_kit::simulation
