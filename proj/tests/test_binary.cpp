#include "compare_kit/binary.hpp"
#include "compare_kit/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace compare_kit;
using namespace compare_kit::binary;

namespace {

double round_to(double x, int digits) {
    const double scale = std::pow(10.0, digits);
    return std::round(x * scale) / scale;
}

BinaryDesignInput tuxedo(double rho) {
    BinaryDesignInput in;
    in.marginals = {0.059, 0.032};
    in.effect = {0.0196, 0.0098};
    in.rho = rho;
    return in;
}

}  // namespace

TEST_SUITE("binary") {

TEST_CASE("Frechet bounds on the correlation") {
    const auto b = correlation_bounds({0.059, 0.032});
    // Closed forms sqrt(p2 q1 / (q2 p1)) and -sqrt(p1 p2 / (q1 q2)).
    CHECK(b.rho_max == doctest::Approx(0.72611618364044062).epsilon(1e-14));
    CHECK(b.rho_min == doctest::Approx(-0.045526944564065884).epsilon(1e-14));

    const auto same = correlation_bounds({0.2, 0.2});
    CHECK(same.rho_max == doctest::Approx(1.0));
}

TEST_CASE("joint probability from the correlation") {
    CHECK(joint_prob_from_correlation({0.3, 0.2}, 0.0) == doctest::Approx(0.06));
    // Comonotone at rho_max with equal margins: p12 = p.
    CHECK(joint_prob_from_correlation({0.2, 0.2}, 1.0) == doctest::Approx(0.2));
}

TEST_CASE("infeasible correlation names the bound") {
    try {
        joint_prob_from_correlation({0.059, 0.032}, 0.9);
        FAIL("expected infeasibility");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleAssociation);
        CHECK(e.field() == "rho");
        CHECK(std::string(e.what()).find("0.726") != std::string::npos);
    }
    CHECK_THROWS_AS(joint_prob_from_correlation({0.059, 0.032}, -0.2), Error);
}

TEST_CASE("conditionals of the three association rows") {
    const double expected_12[] = {0.19, 0.58, 0.97};
    const double expected_21[] = {0.10, 0.31, 0.52};
    const double rhos[] = {0.1, 0.4, 0.7};
    for (int i = 0; i < 3; ++i) {
        const auto c = conditionals_from_correlation({0.059, 0.032}, rhos[i]);
        CHECK(round_to(c.eps1_given_eps2, 2) == doctest::Approx(expected_12[i]));
        CHECK(round_to(c.eps2_given_eps1, 2) == doctest::Approx(expected_21[i]));
    }
    // Full-precision values from an independent evaluation.
    const auto mid = conditionals_from_correlation({0.059, 0.032}, 0.4);
    CHECK(mid.eps1_given_eps2 == doctest::Approx(0.577374343501).epsilon(1e-10));
    CHECK(mid.eps2_given_eps1 == doctest::Approx(0.313152186306).epsilon(1e-10));
}

TEST_CASE("correlation from a conditional probability") {
    const double rho = correlation_from_conditional({0.059, 0.032}, 0.58);
    CHECK(round_to(rho, 1) == doctest::Approx(0.4));
    CHECK(rho == doctest::Approx(0.40202606979454786).epsilon(1e-12));
    CHECK(conditionals_from_correlation({0.059, 0.032}, rho).eps1_given_eps2 ==
          doctest::Approx(0.58));

    const double back = correlation_from_reverse_conditional({0.059, 0.032}, 0.313152186306);
    CHECK(back == doctest::Approx(0.4).epsilon(1e-10));
    CHECK_THROWS_AS(correlation_from_conditional({0.059, 0.032}, 1.2), Error);
}

TEST_CASE("low-frequency conditional relation") {
    // With p1 = p2 = p the conditional is exactly p + rho (1 - p).
    for (double p : {0.01, 0.05}) {
        for (double rho : {0.1, 0.35, 0.6}) {
            const auto c = conditionals_from_correlation({p, p}, rho);
            CHECK(c.eps1_given_eps2 == doctest::Approx(p + rho * (1.0 - p)).epsilon(1e-14));
        }
    }
}

TEST_CASE("composite probability and effect") {
    const double p_star[] = {0.084965005252, 0.072524021008, 0.0600830367639};
    const double delta_star[] = {0.0271059803818, 0.0232638815271, 0.0194217826724};
    const double shown_p[] = {0.08, 0.07, 0.06};
    const double shown_pp[] = {2.7, 2.3, 2.0};
    const double rhos[] = {0.1, 0.4, 0.7};
    for (int i = 0; i < 3; ++i) {
        const auto in = tuxedo(rhos[i]);
        CHECK(composite_probability(in.marginals, rhos[i]) ==
              doctest::Approx(p_star[i]).epsilon(1e-10));
        CHECK(composite_effect(in) == doctest::Approx(delta_star[i]).epsilon(1e-10));
        CHECK(round_to(composite_probability(in.marginals, rhos[i]), 2) ==
              doctest::Approx(shown_p[i]));
        if (i < 2) CHECK(round_to(100.0 * composite_effect(in), 1) == doctest::Approx(shown_pp[i]));
    }
    // The strong row displays 1.9 rather than 2.0.
    CHECK(round_to(100.0 * composite_effect(tuxedo(0.7)), 1) == doctest::Approx(1.9));
}

TEST_CASE("two-proportion sample size") {
    const double n = sample_size_per_arm(0.084965005252, 0.084965005252 - 0.0271059803818, 0.05,
                                         0.80, Sidedness::One, VarianceVariant::Pooled);
    CHECK(n == doctest::Approx(1114.948187).epsilon(1e-8));
    CHECK(sample_size_binary(0.2, 0.1, 0.05, 0.8, Sidedness::One, VarianceVariant::Pooled) ==
          2 * static_cast<int>(std::ceil(sample_size_per_arm(0.2, 0.1, 0.05, 0.8, Sidedness::One,
                                                             VarianceVariant::Pooled))));

    // Textbook check: p = 0.5 vs 0.4, two-sided 5 %, 80 % power, pooled:
    // n = (1.96 sqrt(2 * .45 * .55) + 0.8416 sqrt(.25 + .24))^2 / 0.01 = 387.3.
    CHECK(sample_size_per_arm(0.5, 0.4, 0.05, 0.8, Sidedness::Two, VarianceVariant::Pooled) ==
          doctest::Approx(387.3).epsilon(1e-3));

    const double pooled = sample_size_per_arm(0.2, 0.1, 0.05, 0.8, Sidedness::Two,
                                              VarianceVariant::Pooled);
    const double unpooled = sample_size_per_arm(0.2, 0.1, 0.05, 0.8, Sidedness::Two,
                                                VarianceVariant::Unpooled);
    CHECK(unpooled < pooled);
    CHECK(sample_size_per_arm(0.2, 0.1, 0.05, 0.8, Sidedness::One, VarianceVariant::Pooled) <
          pooled);
    CHECK_THROWS_AS(
        sample_size_per_arm(0.2, 0.2, 0.05, 0.8, Sidedness::One, VarianceVariant::Pooled), Error);
}

TEST_CASE("reference sample sizes within five percent") {
    const int reference[] = {2187, 2561, 3076};
    const int derived[] = {2230, 2612, 3136};
    const double rhos[] = {0.1, 0.4, 0.7};
    for (int i = 0; i < 3; ++i) {
        const auto in = tuxedo(rhos[i]);
        const auto eff = efficiency_binary(in);
        const int n = 2 * static_cast<int>(std::ceil(eff.n_composite_per_arm));
        CHECK(n == derived[i]);
        CHECK(std::abs(n - reference[i]) <= 0.05 * reference[i]);
    }
}

TEST_CASE("asymptotic relative efficiency") {
    CHECK(are_binary(tuxedo(0.1)) == doctest::Approx(1.34953323379).epsilon(1e-9));
    CHECK(are_binary(tuxedo(0.4)) == doctest::Approx(1.1525937429).epsilon(1e-9));
    CHECK(are_binary(tuxedo(0.7)) == doctest::Approx(0.960205970405).epsilon(1e-9));
    CHECK(are_binary(tuxedo(0.1)) > are_binary(tuxedo(0.7)));

    auto diluted = tuxedo(0.1);
    diluted.effect.delta2 = 0.0;
    CHECK(are_binary(diluted) < 1.0);
}

TEST_CASE("duplicated component has unit efficiency") {
    BinaryDesignInput in;
    in.marginals = {0.12, 0.12};
    in.effect = {0.04, 0.04};
    in.rho = 1.0;
    CHECK(composite_probability(in.marginals, 1.0) == doctest::Approx(0.12).epsilon(1e-14));
    CHECK(are_binary(in) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("design validation") {
    auto in = tuxedo(0.4);
    in.effect.delta1 = 0.059;
    CHECK_THROWS_AS(in.validate(), Error);
    in = tuxedo(0.4);
    in.alpha = 0.7;
    CHECK_THROWS_AS(in.validate(), Error);
    in = tuxedo(0.74);  // feasible in treatment only
    try {
        in.validate();
        FAIL("expected infeasibility");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleAssociation);
        CHECK(std::string(e.what()).find("control") != std::string::npos);
    }
    CHECK_THROWS_AS(BinaryMarginals({0.0, 0.3}).validate(), Error);
}

}  // TEST_SUITE
