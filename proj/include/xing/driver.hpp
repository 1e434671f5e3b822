#pragma once

#include <string>
#include <vector>

#include "xing/mdp.hpp"
#include "xing/rng.hpp"
#include "xing/sim.hpp"

namespace xing {

// Behavioural parameters of a synthetic human driver under one music
// condition. All values are configuration, not measured data.
struct DriverProfile {
    double forward_speed_mean = 0.22;
    double forward_speed_sd = 0.02;
    double stop_at_intersection_prob = 0.4;
    double wait_mean = 1.5;
    double wait_sd = 0.5;
    double yield_distance = 0.15;
    double reverse_prob_on_conflict = 0.1;
    double reaction_delay = 0.2;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
    bool operator==(const DriverProfile&) const = default;
};

struct ConditionedDriver {
    DriverProfile happy;
    DriverProfile sad;

    const DriverProfile& profile(MusicCondition c) const {
        return c == MusicCondition::Happy ? happy : sad;
    }
    // Empty when sad drivers are slower and wait at least as long as happy
    // ones; otherwise one message per violated ordering.
    std::vector<std::string> ordering_warnings() const;
    bool operator==(const ConditionedDriver&) const = default;
};

ConditionedDriver default_profiles();

/// Finite-state synthetic driver. Per trial it samples a cruise speed, drives
/// Forward toward it, decides once on approach whether to stop at its stop
/// line (by chance, or because the agent is close to the intersection), waits,
/// then proceeds. When a collision looks imminent it may reverse. A new command
/// is only issued once reaction_delay has passed since the previous change.
class SyntheticDriver {
public:
    enum class Phase { Cruise, Stopping, Waiting, Proceed, Reversing };

    SyntheticDriver(ConditionedDriver profiles, WorldConfig cfg);

    // Draws every random quantity of the trial up front, so decide() is a
    // deterministic function of the world trajectory.
    void begin_trial(MusicCondition condition, Rng& rng);
    HumanCommand decide(const WorldState& world);

    Phase phase() const { return phase_; }
    double cruise_speed() const { return cruise_; }
    const ConditionedDriver& profiles() const { return profiles_; }

private:
    bool agent_near(const WorldState& world) const;
    bool collision_imminent(const WorldState& world) const;

    ConditionedDriver profiles_;
    WorldConfig cfg_;
    const DriverProfile* active_ = nullptr;

    Phase phase_ = Phase::Cruise;
    double cruise_ = 0.0;
    double wait_duration_ = 0.0;
    double wait_until_ = 0.0;
    bool will_stop_ = false;
    bool will_reverse_ = false;
    bool approach_checked_ = false;
    bool stop_planned_ = false;
    bool conflict_checked_ = false;
    bool has_command_ = false;
    HumanCommand current_;
    double last_change_ = 0.0;
};

}  // namespace xing
