#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "xing/sim.hpp"

namespace xing {

// Index order is fixed: network outputs and analytics tables rely on it.
enum class Action : int { Fast = 0, Slow = 1, Brake = 2 };
inline constexpr std::size_t kActionCount = 3;
inline constexpr std::array<Action, kActionCount> kAllActions{Action::Fast, Action::Slow,
                                                              Action::Brake};

inline constexpr std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }
inline constexpr Action action_at(std::size_t i) { return static_cast<Action>(i); }
std::string_view to_string(Action a);
Action action_from_string(std::string_view s);

enum class MusicCondition { Happy, Sad };

inline constexpr double music_flag(MusicCondition c) {
    return c == MusicCondition::Happy ? 1.0 : 0.0;
}
std::string_view to_string(MusicCondition c);
MusicCondition condition_from_string(std::string_view s);

inline constexpr std::size_t kUnawareDim = 8;
inline constexpr std::size_t kAwareDim = 9;

/// Learning-state features, in this exact order:
///   0 agent_x   1 human_y   2 agent_speed   3 human_speed   4 elapsed
///   5 agent_done   6 human_done   7 crashed   [8 music_flag, aware only]
/// Positions and elapsed time are mapped linearly onto [-1, 1]; speeds are
/// divided by speed_fast; flags are 0/1.
struct StateVector {
    std::array<double, kAwareDim> data{};
    std::size_t size = kUnawareDim;

    bool aware() const { return size == kAwareDim; }
    std::span<const double> features() const { return {data.data(), size}; }
    double operator[](std::size_t i) const { return data[i]; }
    // The music-blind prefix of this vector.
    StateVector unaware_view() const {
        StateVector v = *this;
        v.size = kUnawareDim;
        v.data[kUnawareDim] = 0.0;
        return v;
    }

    bool operator==(const StateVector&) const = default;
};

struct Transition {
    StateVector s;  // aware (9-feature) encoding; the unaware view is its prefix
    Action a = Action::Fast;
    double r = 0.0;
    StateVector s_next;
    bool terminal = false;
};

struct EpisodeTrace {
    std::vector<Transition> transitions;
    TrialOutcome outcome;
    int block_index = 0;
    int trial_index = 0;
    MusicCondition condition = MusicCondition::Happy;
};

struct RewardParams {
    double crash_penalty = 100.0;
    double gamma = 0.9;

    void validate() const;
    bool operator==(const RewardParams&) const = default;
};

StateVector encode_state(const WorldState& world, MusicCondition condition, bool aware,
                         const WorldConfig& cfg);

// r = -t - crash_penalty * crashed
double terminal_reward(double completion_time, bool crashed, const RewardParams& params);

// Terminal reward of a finished trial. A crash is charged at the crash time.
// A timeout is charged max_trial_time unless the agent had already finished,
// in which case it is charged its own completion time.
double episode_reward(const TrialOutcome& outcome, const RewardParams& params,
                      const WorldConfig& cfg);

// Gives transition i the reward gamma^(T - i) * r_T, T being the index of the
// terminal (last) transition. Throws std::invalid_argument on a malformed
// episode.
EpisodeTrace backpropagate_returns(EpisodeTrace episode, double terminal_r,
                                   const RewardParams& params);
EpisodeTrace backpropagate_returns(EpisodeTrace episode, const RewardParams& params,
                                   const WorldConfig& cfg);

}  // namespace xing
