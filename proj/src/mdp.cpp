#include "xing/mdp.hpp"

#include <string>

namespace xing {

std::string_view to_string(Action a) {
    switch (a) {
        case Action::Fast: return "FAST";
        case Action::Slow: return "SLOW";
        case Action::Brake: return "BRAKE";
    }
    return "?";
}

Action action_from_string(std::string_view s) {
    if (s == "FAST") return Action::Fast;
    if (s == "SLOW") return Action::Slow;
    if (s == "BRAKE") return Action::Brake;
    throw std::invalid_argument("unknown action '" + std::string(s) + "'");
}

std::string_view to_string(MusicCondition c) {
    return c == MusicCondition::Happy ? "happy" : "sad";
}

MusicCondition condition_from_string(std::string_view s) {
    if (s == "happy") return MusicCondition::Happy;
    if (s == "sad") return MusicCondition::Sad;
    throw std::invalid_argument("unknown music condition '" + std::string(s) + "'");
}

void RewardParams::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("reward: gamma must be in (0, 1)");
    if (!(crash_penalty > 0.0)) throw std::invalid_argument("reward: crash_penalty must be > 0");
}

StateVector encode_state(const WorldState& world, MusicCondition condition, bool aware,
                         const WorldConfig& cfg) {
    const auto to_unit = [](double value, double span) { return 2.0 * value / span - 1.0; };
    StateVector v;
    v.data[0] = to_unit(world.agent.progress, cfg.road_length);
    v.data[1] = to_unit(world.human.progress, cfg.road_length);
    v.data[2] = world.agent.speed / cfg.speed_fast;
    v.data[3] = world.human.speed / cfg.speed_fast;
    v.data[4] = to_unit(std::min(world.elapsed, cfg.max_trial_time), cfg.max_trial_time);
    v.data[5] = world.agent.reached_end ? 1.0 : 0.0;
    v.data[6] = world.human.reached_end ? 1.0 : 0.0;
    v.data[7] = world.crashed ? 1.0 : 0.0;
    if (aware) {
        v.data[8] = music_flag(condition);
        v.size = kAwareDim;
    }
    return v;
}

double terminal_reward(double completion_time, bool crashed, const RewardParams& params) {
    return -completion_time - (crashed ? params.crash_penalty : 0.0);
}

double episode_reward(const TrialOutcome& outcome, const RewardParams& params,
                      const WorldConfig& cfg) {
    if (outcome.crashed) return terminal_reward(outcome.end_time, true, params);
    if (outcome.timed_out) {
        return terminal_reward(outcome.agent_completion_time.value_or(cfg.max_trial_time), false,
                               params);
    }
    return terminal_reward(outcome.agent_completion_time.value_or(outcome.end_time), false,
                           params);
}

EpisodeTrace backpropagate_returns(EpisodeTrace episode, double terminal_r,
                                   const RewardParams& params) {
    auto& trs = episode.transitions;
    if (trs.empty()) throw std::invalid_argument("backpropagate_returns: empty episode");
    for (std::size_t i = 0; i + 1 < trs.size(); ++i) {
        if (trs[i].terminal) {
            throw std::invalid_argument("backpropagate_returns: terminal transition before the end");
        }
    }
    if (!trs.back().terminal) {
        throw std::invalid_argument("backpropagate_returns: last transition is not terminal");
    }
    double r = terminal_r;
    for (auto it = trs.rbegin(); it != trs.rend(); ++it) {
        it->r = r;
        r *= params.gamma;
    }
    return episode;
}

EpisodeTrace backpropagate_returns(EpisodeTrace episode, const RewardParams& params,
                                   const WorldConfig& cfg) {
    const double r_t = episode_reward(episode.outcome, params, cfg);
    return backpropagate_returns(std::move(episode), r_t, params);
}

}  // namespace xing
