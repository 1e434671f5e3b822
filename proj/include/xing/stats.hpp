#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace xing {

struct Aggregate {
    int n = 0;
    double mean = 0.0;
    double std_error = 0.0;  // sample sd / sqrt(n); 0 when n == 1
    std::vector<double> values;
};

// Throws std::invalid_argument on an empty sample.
Aggregate aggregate_of(std::vector<double> values);

enum class TestKind { WelchT, MannWhitneyU };
std::string_view to_string(TestKind k);

struct TestResult {
    TestKind kind = TestKind::WelchT;
    double statistic = 0.0;
    double p_value = 1.0;
    bool exact = false;  // Mann-Whitney only: p from the full permutation distribution
};

// Samples with n * m at or below this use the exact permutation distribution.
inline constexpr int kExactMannWhitneyLimit = 400;

// U is reported for sample_a: the number of (a, b) pairs with a > b, ties
// counting one half. Ties receive midranks. The two-sided p-value is
// P(|U - nm/2| >= |U_obs - nm/2|) under random assignment of the pooled
// (midranked) values; exact when n * m <= 400, otherwise the normal
// approximation with tie and continuity corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);
TestResult mann_whitney_u_exact(std::span<const double> a, std::span<const double> b);
TestResult mann_whitney_u_normal(std::span<const double> a, std::span<const double> b);

// Welch's unequal-variance t-test; t = (mean_a - mean_b) / se, two-sided p
// from the Student t survival function at Welch-Satterthwaite df. Needs at
// least two values per sample.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz),
// relative accuracy around 1e-14.
double incomplete_beta(double a, double b, double x);

// Two-sided tail P(|T| >= |t|) for Student t with df degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace xing
