#include "xing/agent.hpp"

#include <algorithm>
#include <string>

namespace xing {

namespace {

std::span<const double> view_for(const StateVector& s, const NetworkParams& net) {
    if (net.input_dim() > s.size) {
        throw std::invalid_argument("state vector narrower than network input");
    }
    return {s.data.data(), net.input_dim()};
}

double train_one(NetworkParams& net, GradientBundle& grads, const Transition& tr, double gamma,
                 const LearningParams& learning) {
    const auto x = view_for(tr.s, net);
    double target = q_target(tr, net, gamma);
    if (learning.td_error_clip > 0.0) {
        const double q = forward(net, x)[index_of(tr.a)];
        target = q + std::clamp(target - q, -learning.td_error_clip, learning.td_error_clip);
    }
    const double loss = backward_into(net, x, index_of(tr.a), target, grads);
    sgd_step(net, grads, learning.lr);
    return loss;
}

}  // namespace

std::string_view to_string(AgentMode m) {
    switch (m) {
        case AgentMode::Explore: return "explore";
        case AgentMode::ExploitUnaware: return "exploit_unaware";
        case AgentMode::ExploitAware: return "exploit_aware";
    }
    return "?";
}

AgentMode mode_from_string(std::string_view s) {
    if (s == "explore") return AgentMode::Explore;
    if (s == "exploit_unaware") return AgentMode::ExploitUnaware;
    if (s == "exploit_aware") return AgentMode::ExploitAware;
    throw std::invalid_argument("unknown agent mode '" + std::string(s) + "'");
}

AgentMode mode_for_trial(int trial_index, bool aware_first, int total_trials) {
    if (trial_index < 0 || trial_index >= total_trials) {
        throw ContractViolation("mode_for_trial: trial index " + std::to_string(trial_index) +
                                " outside [0, " + std::to_string(total_trials) + ")");
    }
    const int explore_end = total_trials / 2;
    const int first_end = explore_end + (total_trials - explore_end) / 2;
    if (trial_index < explore_end) return AgentMode::Explore;
    const bool first_half = trial_index < first_end;
    const bool aware = first_half == aware_first;
    return aware ? AgentMode::ExploitAware : AgentMode::ExploitUnaware;
}

ModelPair ModelPair::create(Rng& rng) {
    NetworkSpec unaware_spec;
    unaware_spec.input_dim = kUnawareDim;
    NetworkSpec aware_spec;
    aware_spec.input_dim = kAwareDim;
    ModelPair pair;
    pair.unaware = init_network(unaware_spec, rng);
    pair.aware = init_network(aware_spec, rng);
    return pair;
}

void LearningParams::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("learning: lr must be > 0");
    if (replay_sample_size < 1) throw std::invalid_argument("learning: replay_sample_size must be >= 1");
    if (replay_iterations < 0) throw std::invalid_argument("learning: replay_iterations must be >= 0");
    if (td_error_clip < 0.0) throw std::invalid_argument("learning: td_error_clip must be >= 0");
}

Action greedy_action(const QValues& q) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] > q[best]) best = i;
    }
    return action_at(best);
}

Action select_action(AgentMode mode, const ModelPair& pair, const WorldState& world,
                     MusicCondition condition, const WorldConfig& cfg, Rng& rng) {
    switch (mode) {
        case AgentMode::Explore:
            return action_at(uniform_index(rng, kActionCount));
        case AgentMode::ExploitUnaware:
            return greedy_action(forward(pair.unaware, encode_state(world, condition, false, cfg)));
        case AgentMode::ExploitAware:
            return greedy_action(forward(pair.aware, encode_state(world, condition, true, cfg)));
    }
    return Action::Fast;
}

double q_target(const Transition& tr, const NetworkParams& net, double gamma) {
    if (tr.terminal) return tr.r;
    const QValues q = forward(net, view_for(tr.s_next, net));
    return tr.r + gamma * *std::max_element(q.begin(), q.end());
}

TrainStats train_after_trial(ModelPair& pair, const ReplayHistory& history,
                             const RewardParams& reward, const LearningParams& learning,
                             Rng& rng) {
    if (history.empty()) throw ContractViolation("train_after_trial: empty replay history");
    if (pair.unaware.input_dim() != kUnawareDim || pair.aware.input_dim() != kAwareDim) {
        throw ContractViolation("train_after_trial: model pair has wrong input widths");
    }
    const auto& episodes = history.episodes();
    GradientBundle g_unaware = GradientBundle::zeros_like(pair.unaware);
    GradientBundle g_aware = GradientBundle::zeros_like(pair.aware);

    TrainStats stats;
    double loss_unaware = 0.0, loss_aware = 0.0;
    std::vector<std::size_t> drawn(static_cast<std::size_t>(learning.replay_sample_size));
    for (int it = 0; it < learning.replay_iterations; ++it) {
        for (auto& d : drawn) d = uniform_index(rng, episodes.size());
        for (std::size_t idx : drawn) {
            for (const Transition& tr : episodes[idx].transitions) {
                loss_unaware += train_one(pair.unaware, g_unaware, tr, reward.gamma, learning);
                loss_aware += train_one(pair.aware, g_aware, tr, reward.gamma, learning);
                ++stats.updates;
            }
        }
    }
    if (stats.updates > 0) {
        stats.mean_loss_unaware = loss_unaware / static_cast<double>(stats.updates);
        stats.mean_loss_aware = loss_aware / static_cast<double>(stats.updates);
    }
    return stats;
}

}  // namespace xing
