#include "compare_kit/simulation.hpp"

#include "compare_kit/copula.hpp"
#include "compare_kit/errors.hpp"
#include "compare_kit/numerics.hpp"
#include "compare_kit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace compare_kit::simulation {

using survival::Arm;
using survival::CompositeLaw;
using survival::CopulaScale;

void SimConfig::validate() const {
    if (n_subjects < 1) fail_validation("n_subjects", "must be a positive integer");
    if (n_replications < 1) fail_validation("n_replications", "must be a positive integer");
}

std::string_view to_string(Endpoint e) {
    return e == Endpoint::Relevant ? "relevant" : "composite";
}

Endpoint endpoint_from_name(std::string_view name) {
    if (name == "relevant") return Endpoint::Relevant;
    if (name == "composite") return Endpoint::Composite;
    fail_validation("endpoint", "expected 'relevant' or 'composite'");
}

namespace {

PowerEstimate summarize(std::int64_t rejections, std::int64_t replications) {
    PowerEstimate out;
    out.rejections = rejections;
    out.n_replications = replications;
    out.power_hat = static_cast<double>(rejections) / static_cast<double>(replications);
    out.mc_standard_error =
        std::sqrt(out.power_hat * (1.0 - out.power_hat) / static_cast<double>(replications));
    return out;
}

struct CellProbabilities {
    double p11, p10, p01;
};

CellProbabilities cells(const binary::BinaryMarginals& m, double rho) {
    const double p12 = binary::joint_prob_from_correlation(m, rho);
    return {p12, m.p1 - p12, m.p2 - p12};
}

// Draws one subject; returns (eps1, eps2).
inline std::pair<bool, bool> draw_pair(const CellProbabilities& c, CounterRng& rng) {
    const double u = rng.uniform();
    if (u < c.p11) return {true, true};
    if (u < c.p11 + c.p10) return {true, false};
    if (u < c.p11 + c.p10 + c.p01) return {false, true};
    return {false, false};
}

bool rejects(double z, const TestSpec& test) {
    if (test.sidedness == Sidedness::One) return z > critical_z(test.alpha, Sidedness::One);
    return std::abs(z) > critical_z(test.alpha, Sidedness::Two);
}

// Cumulative hazard at which a margin reaches the drawn uniform.
inline double margin_cumhaz(double log_u, CopulaScale scale) {
    if (scale == CopulaScale::Survival) return log_u;  // S(T) = U
    return -std::log(-std::expm1(-log_u));              // F(T) = U
}

TimePair draw_times(const CompositeLaw& law, Arm arm, CounterRng& rng) {
    const auto [x, y] = sample_gumbel_log_uniforms(law.theta(), rng);
    const auto& sc = law.scenario();
    const double hr1 = arm == Arm::Treatment ? sc.hr1 : 1.0;
    const double hr2 = arm == Arm::Treatment ? sc.hr2 : 1.0;
    TimePair p;
    p.t1 = law.margin1().time_at_cumulative_hazard(margin_cumhaz(x, sc.copula_scale) / hr1);
    p.t2 = law.margin2().time_at_cumulative_hazard(margin_cumhaz(y, sc.copula_scale) / hr2);
    p.t_star = std::min(p.t1, p.t2);
    p.composite_event = p.t_star <= sc.tau;
    p.relevant_event = p.t1 <= sc.tau;
    p.eps2_observable = !sc.eps1_terminal || p.t2 < p.t1;
    return p;
}

std::vector<double> ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> r(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = mid;
        i = j + 1;
    }
    return r;
}

// Counts inversions of v by merge sort.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                              std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += static_cast<std::int64_t>(mid - i);
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace

BinaryCounts sample_correlated_binary(const binary::BinaryMarginals& marginals, double rho,
                                      const SimConfig& config) {
    config.validate();
    const auto c = cells(marginals, rho);
    CounterRng rng(config.seed, 0);
    BinaryCounts counts;
    for (std::int64_t i = 0; i < config.n_subjects; ++i) {
        const auto [e1, e2] = draw_pair(c, rng);
        if (e1 && e2) {
            ++counts.n11;
        } else if (e1) {
            ++counts.n10;
        } else if (e2) {
            ++counts.n01;
        } else {
            ++counts.n00;
        }
    }
    return counts;
}

std::pair<double, double> sample_gumbel_log_uniforms(double theta, CounterRng& rng) {
    const double e1 = rng.exponential();
    const double e2 = rng.exponential();
    if (theta == 1.0) return {e1, e2};
    // Kanter's representation of a positive stable variable with Laplace
    // transform exp(-s^a), a = 1/theta.
    const double a = 1.0 / theta;
    const double angle = std::numbers::pi * rng.uniform();
    const double w = rng.exponential();
    const double v = std::sin(a * angle) / std::pow(std::sin(angle), 1.0 / a) *
                     std::pow(std::sin((1.0 - a) * angle) / w, (1.0 - a) / a);
    return {std::pow(e1 / v, a), std::pow(e2 / v, a)};
}

std::vector<std::pair<double, double>> sample_gumbel_uniforms(double theta, std::int64_t n,
                                                              std::uint64_t seed) {
    if (!(theta >= 1.0)) fail_validation("theta", "must satisfy theta >= 1");
    if (n < 1) fail_validation("n", "must be a positive integer");
    CounterRng rng(seed, 0);
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto [x, y] = sample_gumbel_log_uniforms(theta, rng);
        out.emplace_back(std::exp(-x), std::exp(-y));
    }
    return out;
}

std::vector<TimePair> sample_gumbel_times(const CompositeLaw& law, Arm arm,
                                          const SimConfig& config) {
    config.validate();
    CounterRng rng(config.seed, 0);
    std::vector<TimePair> out;
    out.reserve(static_cast<std::size_t>(config.n_subjects));
    for (std::int64_t i = 0; i < config.n_subjects; ++i) out.push_back(draw_times(law, arm, rng));
    return out;
}

std::vector<TimePair> sample_gumbel_times(const survival::SurvivalScenario& scenario, Arm arm,
                                          const SimConfig& config) {
    return sample_gumbel_times(survival::build_composite_law(scenario), arm, config);
}

double two_proportion_z(std::int64_t events_control, std::int64_t events_treatment,
                        std::int64_t n_per_arm, VarianceVariant variant) {
    const double n = static_cast<double>(n_per_arm);
    const double pc = static_cast<double>(events_control) / n;
    const double pt = static_cast<double>(events_treatment) / n;
    double var;
    if (variant == VarianceVariant::Pooled) {
        const double p_bar = 0.5 * (pc + pt);
        var = 2.0 * p_bar * (1.0 - p_bar) / n;
    } else {
        var = (pc * (1.0 - pc) + pt * (1.0 - pt)) / n;
    }
    if (var <= 0.0) return 0.0;
    return (pc - pt) / std::sqrt(var);
}

PowerEstimate simulate_power_binary(const binary::BinaryDesignInput& input, Endpoint endpoint,
                                    std::int64_t n_total, const SimConfig& config) {
    input.validate();
    if (n_total < 2) fail_validation("n_total", "must be at least 2");
    if (config.n_replications < 1) fail_validation("n_replications", "must be a positive integer");
    const std::int64_t per_arm = n_total / 2;
    const auto control = cells(input.marginals, input.rho);
    const auto treated = cells(input.treatment_marginals(), input.rho);
    const TestSpec test{input.alpha, input.sidedness};

    std::vector<char> rejected(static_cast<std::size_t>(config.n_replications), 0);
    parallel_for(rejected.size(), [&](std::size_t r) {
        CounterRng rng(config.seed, r);
        auto count_events = [&](const CellProbabilities& c) {
            std::int64_t events = 0;
            for (std::int64_t i = 0; i < per_arm; ++i) {
                const auto [e1, e2] = draw_pair(c, rng);
                events += endpoint == Endpoint::Relevant ? e1 : (e1 || e2);
            }
            return events;
        };
        const std::int64_t ec = count_events(control);
        const std::int64_t et = count_events(treated);
        rejected[r] = rejects(two_proportion_z(ec, et, per_arm, input.variance), test);
    });
    const auto hits = std::count(rejected.begin(), rejected.end(), 1);
    return summarize(hits, config.n_replications);
}

double logrank_z(std::vector<LogrankObservation>& obs) {
    std::sort(obs.begin(), obs.end(), [](const LogrankObservation& a, const LogrankObservation& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.event > b.event;
    });
    double at_risk_control = 0.0;
    double at_risk_treated = 0.0;
    for (const auto& o : obs) (o.treated ? at_risk_treated : at_risk_control) += 1.0;

    double observed_minus_expected = 0.0;
    double variance = 0.0;
    std::size_t i = 0;
    while (i < obs.size()) {
        std::size_t j = i;
        double deaths = 0.0;
        double deaths_control = 0.0;
        double leaving_control = 0.0;
        double leaving_treated = 0.0;
        while (j < obs.size() && obs[j].time == obs[i].time) {
            if (obs[j].event) {
                deaths += 1.0;
                if (!obs[j].treated) deaths_control += 1.0;
            }
            (obs[j].treated ? leaving_treated : leaving_control) += 1.0;
            ++j;
        }
        const double at_risk = at_risk_control + at_risk_treated;
        if (deaths > 0.0 && at_risk > 1.0) {
            observed_minus_expected += deaths_control - deaths * at_risk_control / at_risk;
            variance += deaths * (at_risk_control / at_risk) * (at_risk_treated / at_risk) *
                        (at_risk - deaths) / (at_risk - 1.0);
        }
        at_risk_control -= leaving_control;
        at_risk_treated -= leaving_treated;
        i = j;
    }
    if (variance <= 0.0) return 0.0;
    return observed_minus_expected / std::sqrt(variance);
}

PowerEstimate simulate_power_survival(const CompositeLaw& law, Endpoint endpoint,
                                      std::int64_t n_total, const SimConfig& config,
                                      const TestSpec& test) {
    if (n_total < 2) fail_validation("n_total", "must be at least 2");
    if (config.n_replications < 1) fail_validation("n_replications", "must be a positive integer");
    const std::int64_t per_arm = n_total / 2;
    const double tau = law.tau();

    std::vector<char> rejected(static_cast<std::size_t>(config.n_replications), 0);
    parallel_for(rejected.size(), [&](std::size_t r) {
        CounterRng rng(config.seed, r);
        std::vector<LogrankObservation> obs;
        obs.reserve(static_cast<std::size_t>(2 * per_arm));
        for (int arm = 0; arm < 2; ++arm) {
            const Arm a = arm == 0 ? Arm::Control : Arm::Treatment;
            for (std::int64_t i = 0; i < per_arm; ++i) {
                const TimePair p = draw_times(law, a, rng);
                const double t = endpoint == Endpoint::Relevant ? p.t1 : p.t_star;
                obs.push_back({std::min(t, tau), t <= tau, arm == 1});
            }
        }
        rejected[r] = rejects(logrank_z(obs), test);
    });
    const auto hits = std::count(rejected.begin(), rejected.end(), 1);
    return summarize(hits, config.n_replications);
}

PowerEstimate simulate_power_survival(const survival::SurvivalScenario& scenario,
                                      Endpoint endpoint, std::int64_t n_total,
                                      const SimConfig& config, const TestSpec& test) {
    return simulate_power_survival(survival::build_composite_law(scenario), endpoint, n_total,
                                   config, test);
}

double empirical_spearman(const std::vector<std::pair<double, double>>& sample) {
    if (sample.size() < 2) fail_validation("sample", "needs at least two points");
    std::vector<double> xs, ys;
    xs.reserve(sample.size());
    ys.reserve(sample.size());
    for (const auto& [x, y] : sample) {
        xs.push_back(x);
        ys.push_back(y);
    }
    const auto rx = ranks(xs);
    const auto ry = ranks(ys);
    const double n = static_cast<double>(sample.size());
    const double mean = 0.5 * (n + 1.0);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    return sxy / std::sqrt(sxx * syy);
}

double empirical_kendall(const std::vector<std::pair<double, double>>& sample) {
    if (sample.size() < 2) fail_validation("sample", "needs at least two points");
    auto sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> ys;
    ys.reserve(sorted.size());
    for (const auto& p : sorted) ys.push_back(p.second);
    std::vector<double> scratch(ys.size());
    const double discordant = static_cast<double>(count_inversions(ys, scratch, 0, ys.size()));
    const double n = static_cast<double>(sample.size());
    const double pairs = n * (n - 1.0) / 2.0;
    return (pairs - 2.0 * discordant) / pairs;
}

}  // namespace compare_kit::simulation
