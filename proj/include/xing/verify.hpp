#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace xing {

struct OracleResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 12345;
    // Added to one analytic gradient entry per sample; nonzero values are a
    // negative control that the gradient check must catch.
    double gradient_perturbation = 0.0;
};

// Backprop gradients against central finite differences (h = 1e-5) on 100
// random networks, inputs, actions and targets; passes when every parameter
// has relative error below 1e-4.
OracleResult check_gradients(const VerifyOptions& opt);

// detect_collision against overlap sampling on the grid spanned by all
// rectangle edges, over 1000 random placements.
OracleResult check_collisions(const VerifyOptions& opt);

// Discounted returns against gamma^(T-i) * r_T on 1000 random episodes.
OracleResult check_return_backprop(const VerifyOptions& opt);

// Two-decision deterministic task: Q after 500 replay rounds against value
// iteration, max error below 0.05.
OracleResult check_toy_mdp(const VerifyOptions& opt);

// Exact Mann-Whitney p against full enumeration of rank assignments for all
// sample sizes up to 8 x 8.
OracleResult check_mann_whitney(const VerifyOptions& opt);

std::vector<OracleResult> run_oracle_suite(const VerifyOptions& opt);

}  // namespace xing
