#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "divq/stats.hpp"

using namespace divq;

TEST_CASE("z-scores") {
    SECTION("population std in the denominator") {
        const std::vector<double> pop = {1.0, 2.0, 3.0};
        const auto z = z_scores(pop);
        CHECK(z[2] == Catch::Approx(1.2247448713915889).epsilon(1e-12));
        CHECK(z[0] == Catch::Approx(-1.2247448713915889).epsilon(1e-12));
        CHECK(z[1] == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("degenerate population") {
        CHECK_THROWS_AS(z_scores(std::vector<double>{2.0, 2.0, 2.0}), domain_error);
    }
    SECTION("count-weighted method means sum to zero") {
        std::vector<ScoreSample> samples;
        std::mt19937_64 gen(3);
        std::uniform_real_distribution<double> dist(-3, 3);
        const std::vector<std::pair<std::string, int>> method_counts = {
            {"baseline", 5}, {"gini", 5}, {"theil", 3}};
        for (const auto& [label, n] : method_counts)
            for (int i = 0; i < n; ++i)
                samples.push_back(ScoreSample{label, static_cast<std::uint64_t>(i), dist(gen)});
        const auto avg = averaged_z_scores(samples);
        double weighted = 0.0;
        for (const auto& [label, n] : method_counts) weighted += avg.at(label) * n;
        CHECK(weighted == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("welch t-test") {
    SECTION("identical groups") {
        const std::vector<double> a = {1, 2, 3};
        const auto r = welch_t_test(a, a);
        CHECK(r.t == 0.0);
        CHECK(r.p == Catch::Approx(1.0));
    }
    SECTION("hand example, cross-checked against an external oracle") {
        const std::vector<double> a = {1, 2, 3, 4, 5};
        const std::vector<double> b = {2, 3, 4, 5, 6};
        const auto r = welch_t_test(a, b);
        CHECK(r.t == Catch::Approx(-1.0).epsilon(1e-12));
        CHECK(r.nu == Catch::Approx(8.0).epsilon(1e-12));
        CHECK(r.p == Catch::Approx(0.34659350708733416).margin(5e-4));
    }
    SECTION("antisymmetry in the group order") {
        const std::vector<double> a = {0.3, 1.2, -0.5, 2.0};
        const std::vector<double> b = {1.1, 0.9, 1.4};
        const auto ab = welch_t_test(a, b);
        const auto ba = welch_t_test(b, a);
        CHECK(ab.t == Catch::Approx(-ba.t).epsilon(1e-12));
        CHECK(ab.p == Catch::Approx(ba.p).epsilon(1e-12));
        CHECK(ab.nu == Catch::Approx(ba.nu).epsilon(1e-12));
    }
    SECTION("p decreases as the mean separation grows") {
        const std::vector<double> base = {-1.0, -0.3, 0.1, 0.6, 1.1};
        double prev_p = 1.1;
        for (double shift : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            std::vector<double> moved = base;
            for (double& v : moved) v += shift;
            const double p = welch_t_test(moved, base).p;
            if (shift > 0.0) CHECK(p < prev_p);
            prev_p = p;
        }
    }
    SECTION("too few samples") {
        CHECK_THROWS_AS(welch_t_test(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                        domain_error);
    }
}

TEST_CASE("student-t cdf") {
    SECTION("center and symmetry") {
        CHECK(student_t_cdf(0.0, 7.0) == 0.5);
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> td(-4, 4), nud(1, 50);
        for (int i = 0; i < 200; ++i) {
            const double t = td(gen), nu = nud(gen);
            REQUIRE(student_t_cdf(t, nu) + student_t_cdf(-t, nu) ==
                    Catch::Approx(1.0).margin(1e-12));
        }
    }
    SECTION("normal limit at nu = 1000") {
        const double p = 2.0 * student_t_cdf(-1.96, 1000.0);
        CHECK(p == Catch::Approx(0.05).margin(0.001));
    }
    SECTION("monotone in t") {
        double prev = 0.0;
        for (double t = -5; t <= 5; t += 0.25) {
            const double c = student_t_cdf(t, 3.0);
            CHECK(c > prev);
            prev = c;
        }
    }
}

TEST_CASE("incomplete beta sanity") {
    CHECK(incomplete_beta_reg(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta_reg(2.0, 3.0, 1.0) == 1.0);
    // I_x(1, 1) = x
    for (double x : {0.1, 0.35, 0.8})
        CHECK(incomplete_beta_reg(1.0, 1.0, x) == Catch::Approx(x).epsilon(1e-12));
    CHECK_THROWS_AS(incomplete_beta_reg(-1.0, 1.0, 0.5), domain_error);
}

TEST_CASE("sign test") {
    CHECK(sign_test_p(0, 10) == Catch::Approx(1.0));
    CHECK(sign_test_p(10, 10) == Catch::Approx(std::pow(0.5, 10)).epsilon(1e-10));
    // P(X >= 8 | n=10) = (45 + 10 + 1) / 1024
    CHECK(sign_test_p(8, 10) == Catch::Approx(56.0 / 1024.0).epsilon(1e-10));
    CHECK_THROWS_AS(sign_test_p(11, 10), domain_error);
}
