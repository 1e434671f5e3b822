// Reference implementations used only by the tests. Each one is written
// against the definitions directly and shares no code with src/.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
    double x0, x1, y0, y1;
};

// Point sampling on an n x n grid of cell centres over [lo, hi]^2. A pair
// overlaps when some sample lies strictly inside both rectangles. Exact for
// rectangles whose edges lie on the grid lines, since any positive-area
// overlap then contains a whole cell.
inline bool grid_overlap(const Rect& a, const Rect& b, double lo, double hi, int n = 200) {
    const auto inside = [](const Rect& r, double x, double y) {
        return x > r.x0 && x < r.x1 && y > r.y0 && y < r.y1;
    };
    const double cell = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (i + 0.5) * cell;
        if (!(x > a.x0 && x < a.x1 && x > b.x0 && x < b.x1)) continue;
        for (int j = 0; j < n; ++j) {
            const double y = lo + (j + 0.5) * cell;
            if (inside(a, x, y) && inside(b, x, y)) return true;
        }
    }
    return false;
}

// Dense network in plain nested vectors: w[l][o][i], b[l][o].
struct Mlp {
    std::vector<std::vector<std::vector<double>>> w;
    std::vector<std::vector<double>> b;
};

inline std::vector<double> mlp_forward(const Mlp& net, std::vector<double> x) {
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        std::vector<double> y(net.w[l].size());
        for (std::size_t o = 0; o < y.size(); ++o) {
            double acc = net.b[l][o];
            for (std::size_t i = 0; i < x.size(); ++i) acc += net.w[l][o][i] * x[i];
            y[o] = (l + 1 < net.w.size()) ? std::max(acc, 0.0) : acc;
        }
        x = std::move(y);
    }
    return x;
}

inline double mlp_loss(const Mlp& net, const std::vector<double>& x, std::size_t a, double target) {
    const double d = mlp_forward(net, x)[a] - target;
    return d * d;
}

// Rewards by accumulating gamma backward from the terminal step.
inline std::vector<double> discounted_rewards(std::size_t length, double r_terminal, double gamma) {
    std::vector<double> out(length);
    double acc = r_terminal;
    for (std::size_t k = length; k-- > 0;) {
        out[k] = acc;
        acc = acc * gamma;
    }
    return out;
}

// Two-sided exact Mann-Whitney p by listing every way of choosing which n of
// the pooled values carry label a. U counts a > b pairs, ties one half.
inline double mann_whitney_enumerated(const std::vector<double>& a, const std::vector<double>& b,
                                      double* u_out = nullptr) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = a.size(), N = pooled.size();
    const auto u_of = [&](const std::vector<bool>& is_a) {
        double u = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (!is_a[i]) continue;
            for (std::size_t j = 0; j < N; ++j) {
                if (is_a[j]) continue;
                if (pooled[i] > pooled[j]) u += 1.0;
                else if (pooled[i] == pooled[j]) u += 0.5;
            }
        }
        return u;
    };
    std::vector<bool> observed(N, false);
    for (std::size_t i = 0; i < n; ++i) observed[i] = true;
    const double nm = static_cast<double>(n) * static_cast<double>(N - n);
    const double u_obs = u_of(observed);
    if (u_out) *u_out = u_obs;
    const double dev_obs = std::fabs(2.0 * u_obs - nm);

    std::uint64_t total = 0, extreme = 0;
    std::vector<bool> mask(N, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n), true);
    do {
        ++total;
        if (std::fabs(2.0 * u_of(mask) - nm) >= dev_obs) ++extreme;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

// Optimal Q of the two-decision replay task in closed form. R[a0][a1] is the
// terminal reward; the first transition carries gamma * R, so its expected
// reward under uniform second actions is gamma * mean_a1 R[a0][a1].
inline void toy_optimal_q(const std::array<std::array<double, 3>, 3>& R, double gamma,
                          std::array<double, 3>& q0, std::array<std::array<double, 3>, 3>& q1) {
    for (std::size_t a0 = 0; a0 < 3; ++a0) {
        q1[a0] = R[a0];
        const double mean = (R[a0][0] + R[a0][1] + R[a0][2]) / 3.0;
        const double best = std::max({R[a0][0], R[a0][1], R[a0][2]});
        q0[a0] = gamma * mean + gamma * best;
    }
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 salt{std::random_device{}()};
    auto dir = std::filesystem::temp_directory_path() / ("xing_test_" + tag + "_" + std::to_string(salt()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
