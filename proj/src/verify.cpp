#include "xing/verify.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

#include "xing/agent.hpp"
#include "xing/mdp.hpp"
#include "xing/qnet.hpp"
#include "xing/sim.hpp"
#include "xing/stats.hpp"

namespace xing {

namespace {

template <typename F>
OracleResult timed(const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    OracleResult r;
    r.name = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

double squared_error(const NetworkParams& net, std::span<const double> x, std::size_t a,
                     double target) {
    const double d = forward(net, x)[a] - target;
    return d * d;
}

// Points strictly inside both rectangles exist iff one of the cell centres
// of the grid spanned by all four x edges and all four y edges is inside both.
bool grid_overlap(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    // rectangles as {x_lo, x_hi, y_lo, y_hi}
    const auto centres = [](double p, double q, double r, double s) {
        std::array<double, 4> e{p, q, r, s};
        std::sort(e.begin(), e.end());
        std::vector<double> c;
        for (std::size_t i = 0; i + 1 < e.size(); ++i) {
            if (e[i] < e[i + 1]) c.push_back(0.5 * (e[i] + e[i + 1]));
        }
        return c;
    };
    const auto inside = [](const std::array<double, 4>& r, double x, double y) {
        return r[0] < x && x < r[1] && r[2] < y && y < r[3];
    };
    for (double x : centres(a[0], a[1], b[0], b[1])) {
        for (double y : centres(a[2], a[3], b[2], b[3])) {
            if (inside(a, x, y) && inside(b, x, y)) return true;
        }
    }
    return false;
}

bool near_any(const std::array<double, 4>& a, const std::array<double, 4>& b, double band) {
    for (int axis = 0; axis < 2; ++axis) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                if (std::fabs(a[2 * axis + i] - b[2 * axis + j]) < band) return true;
            }
        }
    }
    return false;
}

StateVector toy_state(double x, double y, double flag) {
    StateVector s;
    s.size = kAwareDim;
    s.data = {x, y, 0.5, 0.5, -1.0 + 0.1 * (x + 1.0), 0.0, 0.0, 0.0, flag};
    return s;
}

}  // namespace

OracleResult check_gradients(const VerifyOptions& opt) {
    return timed("gradient check", [&](OracleResult& r) {
        constexpr int kSamples = 100;
        constexpr double h = 1e-5;
        constexpr double kTol = 1e-4;
        Rng rng = make_rng(opt.seed, RngStream::Agent);
        double worst = 0.0;
        std::size_t checked = 0;
        for (int s = 0; s < kSamples; ++s) {
            NetworkSpec spec;
            spec.input_dim = uniform_index(rng, 2) == 0 ? kUnawareDim : kAwareDim;
            NetworkParams net = init_network(spec, rng);
            for (auto& layer : net.layers) {
                for (auto& b : layer.b) b = uniform(rng, -0.5, 0.5);
            }
            std::vector<double> x(spec.input_dim);
            for (auto& v : x) v = uniform(rng, -1.0, 1.0);
            const std::size_t a = uniform_index(rng, kActionCount);
            const double target = uniform(rng, -10.0, 10.0);

            BackwardResult br = backward(net, x, a, target);
            if (opt.gradient_perturbation != 0.0) {
                auto& layer = br.grads.layers[uniform_index(rng, br.grads.layers.size())];
                layer.w[uniform_index(rng, layer.w.size())] += opt.gradient_perturbation;
            }
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                for (int kind = 0; kind < 2; ++kind) {
                    auto& params = kind == 0 ? net.layers[l].w : net.layers[l].b;
                    const auto& grads = kind == 0 ? br.grads.layers[l].w : br.grads.layers[l].b;
                    for (std::size_t i = 0; i < params.size(); ++i) {
                        const double saved = params[i];
                        params[i] = saved + h;
                        const double up = squared_error(net, x, a, target);
                        params[i] = saved - h;
                        const double down = squared_error(net, x, a, target);
                        params[i] = saved;
                        const double fd = (up - down) / (2.0 * h);
                        const double scale = std::max({std::fabs(fd), std::fabs(grads[i]), 1e-4});
                        worst = std::max(worst, std::fabs(fd - grads[i]) / scale);
                        ++checked;
                    }
                }
            }
        }
        r.passed = worst < kTol;
        std::ostringstream os;
        os << checked << " parameters over " << kSamples << " samples, max relative error " << worst;
        r.detail = os.str();
    });
}

OracleResult check_collisions(const VerifyOptions& opt) {
    return timed("collision oracle", [&](OracleResult& r) {
        constexpr int kPairs = 1000;
        constexpr double kBand = 1e-9;
        Rng rng = make_rng(opt.seed, RngStream::World);
        int disagreements = 0, in_band = 0, overlapping = 0;
        for (int i = 0; i < kPairs; ++i) {
            WorldConfig cfg;
            cfg.vehicle_length = uniform(rng, 0.02, 0.12);
            cfg.vehicle_width = uniform(rng, 0.01, cfg.vehicle_length);
            const double c = cfg.intersection_center;
            const double reach = cfg.vehicle_length + cfg.vehicle_width;
            VehicleState agent, human;
            agent.progress = uniform(rng, c - reach, c + reach);
            human.progress = uniform(rng, c - reach, c + reach);
            if (i % 10 == 0) {
                // Exactly touching edges along one axis.
                human.progress = c - cfg.vehicle_width / 2 - cfg.vehicle_length / 2;
            }
            const double hl = cfg.vehicle_length / 2, hw = cfg.vehicle_width / 2;
            const std::array<double, 4> ra{agent.progress - hl, agent.progress + hl, c - hw, c + hw};
            const std::array<double, 4> rh{c - hw, c + hw, human.progress - hl, human.progress + hl};
            if (near_any(ra, rh, kBand)) {
                ++in_band;
                continue;
            }
            const bool expected = grid_overlap(ra, rh);
            overlapping += expected;
            if (detect_collision(agent, human, cfg) != expected) ++disagreements;
        }
        r.passed = disagreements == 0;
        std::ostringstream os;
        os << kPairs << " pairs (" << overlapping << " overlapping, " << in_band
           << " within the boundary band), " << disagreements << " disagreements";
        r.detail = os.str();
    });
}

OracleResult check_return_backprop(const VerifyOptions& opt) {
    return timed("return backprop", [&](OracleResult& r) {
        constexpr int kEpisodes = 1000;
        Rng rng = make_rng(opt.seed, RngStream::Plan);
        double worst = 0.0;
        int telescoping_failures = 0;
        for (int e = 0; e < kEpisodes; ++e) {
            RewardParams params;
            params.gamma = e % 2 == 0 ? 0.9 : uniform(rng, 0.05, 0.999);
            const int length = 1 + static_cast<int>(uniform_index(rng, 6));
            const double terminal = uniform(rng, -200.0, 0.0);
            EpisodeTrace ep;
            for (int i = 0; i < length; ++i) {
                Transition t;
                t.a = action_at(uniform_index(rng, kActionCount));
                t.terminal = i == length - 1;
                ep.transitions.push_back(t);
            }
            ep = backpropagate_returns(std::move(ep), terminal, params);
            const int T = length - 1;
            for (int i = 0; i < length; ++i) {
                const double expected = std::pow(params.gamma, T - i) * terminal;
                worst = std::max(worst, std::fabs(ep.transitions[i].r - expected));
                if (i < T && ep.transitions[i].r != params.gamma * ep.transitions[i + 1].r) {
                    ++telescoping_failures;
                }
            }
        }
        r.passed = worst < 1e-12 && telescoping_failures == 0;
        std::ostringstream os;
        os << kEpisodes << " episodes, max |r_i - gamma^(T-i) r_T| = " << worst << ", "
           << telescoping_failures << " telescoping failures";
        r.detail = os.str();
    });
}

OracleResult check_toy_mdp(const VerifyOptions& opt) {
    return timed("toy MDP convergence", [&](OracleResult& r) {
        constexpr int kRounds = 500;
        const RewardParams reward;
        const LearningParams learning;
        const double g = reward.gamma;
        // Terminal reward of the episode taking a0 at the first decision and a1
        // at the second.
        const std::array<std::array<double, 3>, 3> R{{{-4.0, -4.2, -4.4},
                                                      {-3.0, -3.1, -3.4},
                                                      {-5.0, -4.8, -4.9}}};
        const StateVector s0 = toy_state(-1.0, -1.0, 1.0);
        std::array<StateVector, 3> s1;
        for (std::size_t a = 0; a < 3; ++a) s1[a] = toy_state(-0.5 + 0.4 * a, -0.2 * a, 1.0);
        const StateVector end = toy_state(1.0, 1.0, 1.0);

        ReplayHistory history;
        for (std::size_t a0 = 0; a0 < 3; ++a0) {
            for (std::size_t a1 = 0; a1 < 3; ++a1) {
                EpisodeTrace ep;
                ep.transitions.push_back(Transition{s0, action_at(a0), 0.0, s1[a0], false});
                ep.transitions.push_back(Transition{s1[a0], action_at(a1), 0.0, end, true});
                history.append(backpropagate_returns(std::move(ep), R[a0][a1], reward));
            }
        }

        // Value iteration on the expected per-transition reward the replay
        // sees: gamma * R averaged over the second action at the first step,
        // R itself at the terminal step.
        std::array<double, 3> q0{};
        std::array<std::array<double, 3>, 3> q1{};
        for (int it = 0; it < 1000; ++it) {
            double change = 0.0;
            for (std::size_t a0 = 0; a0 < 3; ++a0) {
                for (std::size_t a1 = 0; a1 < 3; ++a1) {
                    change = std::max(change, std::fabs(q1[a0][a1] - R[a0][a1]));
                    q1[a0][a1] = R[a0][a1];
                }
                double mean_r = 0.0;
                for (std::size_t a1 = 0; a1 < 3; ++a1) mean_r += g * R[a0][a1] / 3.0;
                const double next = mean_r + g * *std::max_element(q1[a0].begin(), q1[a0].end());
                change = std::max(change, std::fabs(q0[a0] - next));
                q0[a0] = next;
            }
            if (change == 0.0) break;
        }

        Rng init = make_rng(opt.seed, RngStream::NetInit);
        ModelPair pair = ModelPair::create(init);
        Rng rng = make_rng(opt.seed, RngStream::Agent);
        for (int round = 0; round < kRounds; ++round) {
            train_after_trial(pair, history, reward, learning, rng);
        }
        double worst = 0.0, worst_first = 0.0, worst_second = 0.0;
        for (const NetworkParams* net : {&pair.unaware, &pair.aware}) {
            const auto view = [&](const StateVector& s) {
                return std::span<const double>(s.data.data(), net->input_dim());
            };
            const QValues q_s0 = forward(*net, view(s0));
            for (std::size_t a0 = 0; a0 < 3; ++a0) {
                worst_first = std::max(worst_first, std::fabs(q_s0[a0] - q0[a0]));
                const QValues q_s1 = forward(*net, view(s1[a0]));
                for (std::size_t a1 = 0; a1 < 3; ++a1) {
                    worst_second = std::max(worst_second, std::fabs(q_s1[a1] - q1[a0][a1]));
                }
            }
        }
        worst = std::max(worst_first, worst_second);
        r.passed = worst < 0.05;
        std::ostringstream os;
        os << kRounds << " replay rounds, max |Q - Q*| = " << worst << " (first decision " << worst_first
           << ", second " << worst_second << ")";
        r.detail = os.str();
    });
}

OracleResult check_mann_whitney(const VerifyOptions& opt) {
    return timed("Mann-Whitney enumeration", [&](OracleResult& r) {
        Rng rng = make_rng(opt.seed, RngStream::Driver);
        double worst = 0.0;
        int cases = 0;
        for (int n = 1; n <= 8; ++n) {
            for (int m = 1; m <= 8; ++m) {
                // Small integer values force ties.
                std::vector<double> pooled(static_cast<std::size_t>(n + m));
                for (auto& v : pooled) v = static_cast<double>(uniform_index(rng, 6));
                const std::vector<double> a(pooled.begin(), pooled.begin() + n);
                const std::vector<double> b(pooled.begin() + n, pooled.end());
                const auto u_of = [&](unsigned mask) {
                    double u = 0.0;
                    for (int i = 0; i < n + m; ++i) {
                        if (!(mask >> i & 1u)) continue;
                        for (int j = 0; j < n + m; ++j) {
                            if (mask >> j & 1u) continue;
                            u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
                        }
                    }
                    return u;
                };
                const double centre = n * m / 2.0;
                const double observed = std::fabs(u_of((1u << n) - 1u) - centre);
                std::uint64_t extreme = 0, total = 0;
                for (unsigned mask = 0; mask < (1u << (n + m)); ++mask) {
                    if (std::popcount(mask) != n) continue;
                    ++total;
                    if (std::fabs(u_of(mask) - centre) >= observed) ++extreme;
                }
                const double p = static_cast<double>(extreme) / static_cast<double>(total);
                worst = std::max(worst, std::fabs(mann_whitney_u_exact(a, b).p_value - p));
                ++cases;
            }
        }
        r.passed = worst <= 1e-12;
        std::ostringstream os;
        os << cases << " sample-size pairs, max |p - p_enum| = " << worst;
        r.detail = os.str();
    });
}

std::vector<OracleResult> run_oracle_suite(const VerifyOptions& opt) {
    return {check_gradients(opt), check_collisions(opt), check_return_backprop(opt),
            check_toy_mdp(opt), check_mann_whitney(opt)};
}

}  // namespace xing
