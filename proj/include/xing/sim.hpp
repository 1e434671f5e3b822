#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "xing/rng.hpp"

namespace xing {

// Raised when a caller breaks an operation's precondition (stepping a
// finished world, training on an empty history, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// World geometry and kinematic limits, in normalized length units.
///
/// Both roads span [0, road_length]. The agent drives along x through the
/// horizontal road centred at y = intersection_center; the human drives along
/// y through the vertical road centred at x = intersection_center. A vehicle's
/// progress is the position of its centre along its own road.
struct WorldConfig {
    double road_length = 1.0;
    double intersection_center = 0.5;
    double intersection_half_width = 0.06;
    double vehicle_length = 0.08;
    double vehicle_width = 0.04;
    double dt = 0.05;
    double speed_fast = 0.25;
    double speed_slow = 0.125;
    double speed_reverse = 0.125;
    double accel_limit = 1.0;
    double max_trial_time = 60.0;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;

    // Stop line in front of the intersection box; the third decision point.
    double intersection_entry() const {
        return intersection_center - intersection_half_width - vehicle_length;
    }
    // Halfway between the start (progress 0) and the stop line.
    double midpoint() const { return intersection_entry() / 2.0; }
    std::int64_t max_steps() const;

    bool operator==(const WorldConfig&) const = default;
};

struct VehicleState {
    double progress = 0.0;
    double speed = 0.0;
    bool waiting = false;
    double wait_remaining = 0.0;
    bool reached_end = false;
    std::optional<double> completion_time;

    bool operator==(const VehicleState&) const = default;
};

struct WorldState {
    VehicleState agent;
    VehicleState human;
    std::int64_t steps = 0;
    double elapsed = 0.0;
    bool crashed = false;

    bool both_done() const { return agent.reached_end && human.reached_end; }
    bool timed_out(const WorldConfig& cfg) const { return steps >= cfg.max_steps(); }
    bool terminal(const WorldConfig& cfg) const {
        return crashed || both_done() || timed_out(cfg);
    }

    bool operator==(const WorldState&) const = default;
};

enum class DecisionPoint { Start, Midpoint, IntersectionEntry, PostWait };

std::string_view to_string(DecisionPoint dp);
DecisionPoint decision_point_from_string(std::string_view s);

enum class HumanCommandKind { Forward, Reverse, Brake };

// Latched human input. Forward drives toward cruise_speed, capped at
// speed_fast; a non-positive cruise_speed means "full speed" (keyboard input).
struct HumanCommand {
    HumanCommandKind kind = HumanCommandKind::Brake;
    double cruise_speed = 0.0;

    bool operator==(const HumanCommand&) const = default;
};

std::string_view to_string(HumanCommandKind k);
HumanCommandKind human_command_from_string(std::string_view s);

// Agent actuation for one step. A stop_wait > 0 together with a zero target
// arms the wait timer once the agent has come to rest.
struct AgentCommand {
    double target_speed = 0.0;
    double stop_wait = 0.0;

    bool operator==(const AgentCommand&) const = default;
};

struct TrialOutcome {
    bool crashed = false;
    bool timed_out = false;
    bool aborted = false;
    std::optional<double> agent_completion_time;
    std::optional<double> human_completion_time;
    double end_time = 0.0;
    std::int64_t end_step = 0;

    bool operator==(const TrialOutcome&) const = default;
};

WorldState initial_world();

// Advances the world by one fixed timestep. Throws ContractViolation when the
// world is already terminal.
WorldState step(const WorldState& world, const WorldConfig& cfg, const HumanCommand& human_cmd,
                const AgentCommand& agent_cmd);

// Strict positive-area overlap of the two vehicle rectangles.
bool detect_collision(const VehicleState& agent, const VehicleState& human, const WorldConfig& cfg);

std::optional<DecisionPoint> decision_point(const VehicleState& agent_prev,
                                            const VehicleState& agent_now, double elapsed,
                                            const WorldConfig& cfg);

// Agent wait at a stop, uniform in [3, 5] seconds.
double sample_wait(Rng& rng);

TrialOutcome outcome_of(const WorldState& terminal_world, const WorldConfig& cfg);

}  // namespace xing
