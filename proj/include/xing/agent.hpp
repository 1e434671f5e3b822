#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "xing/mdp.hpp"
#include "xing/qnet.hpp"
#include "xing/rng.hpp"

namespace xing {

enum class AgentMode { Explore, ExploitUnaware, ExploitAware };

std::string_view to_string(AgentMode m);
AgentMode mode_from_string(std::string_view s);

inline constexpr int kProtocolTrials = 192;

// Phase schedule: the first half explores, the next quarter exploits one
// model and the last quarter the other. total_trials defaults to the full
// 192-trial protocol (boundaries 96 and 144); shortened live sessions pass
// their own length. Throws ContractViolation when trial_index is out of range.
AgentMode mode_for_trial(int trial_index, bool aware_first, int total_trials = kProtocolTrials);

// Music-unaware (8 inputs) and music-aware (9 inputs) Q-networks, trained on
// the same episodes.
struct ModelPair {
    NetworkParams unaware;
    NetworkParams aware;

    static ModelPair create(Rng& rng);
    bool operator==(const ModelPair&) const = default;
};

class ReplayHistory {
public:
    void append(EpisodeTrace episode) { episodes_.push_back(std::move(episode)); }
    const std::vector<EpisodeTrace>& episodes() const { return episodes_; }
    std::size_t size() const { return episodes_.size(); }
    bool empty() const { return episodes_.empty(); }

private:
    std::vector<EpisodeTrace> episodes_;
};

struct LearningParams {
    double lr = 1e-3;
    int replay_sample_size = 20;  // episodes drawn (with replacement) per iteration
    int replay_iterations = 100;
    bool freeze_after_exploration = false;
    // Bound on |target - Q(s, a)| used for an update (0 disables). Keeps
    // per-sample SGD on -100 crash returns from diverging.
    double td_error_clip = 2.0;

    void validate() const;
    bool operator==(const LearningParams&) const = default;
};

struct TrainStats {
    std::size_t updates = 0;  // SGD steps per network
    double mean_loss_unaware = 0.0;
    double mean_loss_aware = 0.0;
};

// Greedy action of a network; ties go to the lowest action index.
Action greedy_action(const QValues& q);

// Explore draws uniformly from the three actions; the exploit modes act
// greedily on the corresponding network.
Action select_action(AgentMode mode, const ModelPair& pair, const WorldState& world,
                     MusicCondition condition, const WorldConfig& cfg, Rng& rng);

// Bootstrapped target r + gamma * max_a' Q(s', a'); terminal transitions
// return r without evaluating the network. The state width used for s' is the
// network's input width (8 reads the unaware prefix).
double q_target(const Transition& tr, const NetworkParams& net, double gamma);

// Experience replay after a trial: replay_iterations rounds, each drawing
// replay_sample_size episodes uniformly with replacement and sweeping their
// transitions in order, one SGD step per transition on each network.
// Throws ContractViolation on an empty history.
TrainStats train_after_trial(ModelPair& pair, const ReplayHistory& history,
                             const RewardParams& reward, const LearningParams& learning,
                             Rng& rng);

}  // namespace xing
