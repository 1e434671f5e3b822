#include "xing/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace xing {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("world config: ") + what);
}

double approach(double current, double target, double max_delta) {
    if (target > current) return std::min(target, current + max_delta);
    return std::max(target, current - max_delta);
}

// Open-interval overlap; touching edges do not count.
bool overlaps(double lo_a, double hi_a, double lo_b, double hi_b) {
    return lo_a < hi_b && lo_b < hi_a;
}

void finish_if_at_end(VehicleState& v, const WorldConfig& cfg, double elapsed) {
    if (!v.reached_end && v.progress >= cfg.road_length) {
        v.progress = cfg.road_length;
        v.speed = 0.0;
        v.reached_end = true;
        v.completion_time = elapsed;
    }
}

void advance_agent(VehicleState& v, const AgentCommand& cmd, const WorldConfig& cfg) {
    if (v.reached_end) return;
    if (v.waiting) {
        v.speed = 0.0;
        v.wait_remaining -= cfg.dt;
        if (v.wait_remaining <= 0.0) v.waiting = false;
        return;
    }
    const double target = std::clamp(cmd.target_speed, 0.0, cfg.speed_fast);
    v.speed = approach(v.speed, target, cfg.accel_limit * cfg.dt);
    if (target == 0.0 && v.speed == 0.0 && cmd.stop_wait > 0.0) {
        v.waiting = true;
        v.wait_remaining = cmd.stop_wait;
        return;
    }
    v.progress = std::clamp(v.progress + v.speed * cfg.dt, 0.0, cfg.road_length);
}

double human_target(const HumanCommand& cmd, const WorldConfig& cfg) {
    switch (cmd.kind) {
        case HumanCommandKind::Forward:
            return cmd.cruise_speed > 0.0 ? std::min(cmd.cruise_speed, cfg.speed_fast)
                                          : cfg.speed_fast;
        case HumanCommandKind::Reverse:
            return -cfg.speed_reverse;
        case HumanCommandKind::Brake:
            return 0.0;
    }
    return 0.0;
}

void advance_human(VehicleState& v, const HumanCommand& cmd, const WorldConfig& cfg) {
    if (v.reached_end) return;
    v.speed = approach(v.speed, human_target(cmd, cfg), cfg.accel_limit * cfg.dt);
    v.progress = std::clamp(v.progress + v.speed * cfg.dt, 0.0, cfg.road_length);
    if (v.progress == 0.0 && v.speed < 0.0) v.speed = 0.0;
}

}  // namespace

void WorldConfig::validate() const {
    require(road_length > 0, "road_length must be > 0");
    require(intersection_center > 0 && intersection_center < road_length,
            "intersection_center must lie inside the road");
    require(intersection_half_width > 0, "intersection_half_width must be > 0");
    require(vehicle_length > 0, "vehicle_length must be > 0");
    require(vehicle_width > 0, "vehicle_width must be > 0");
    require(intersection_half_width >= vehicle_width / 2,
            "intersection_half_width must be >= vehicle_width / 2");
    require(intersection_entry() > 0, "intersection entry must be past the start");
    require(dt > 0, "dt must be > 0");
    require(speed_slow > 0, "speed_slow must be > 0");
    require(speed_fast > speed_slow, "speed_fast must exceed speed_slow");
    require(speed_reverse > 0, "speed_reverse must be > 0");
    require(accel_limit > 0, "accel_limit must be > 0");
    require(max_trial_time > 0, "max_trial_time must be > 0");
}

std::int64_t WorldConfig::max_steps() const {
    return static_cast<std::int64_t>(std::ceil(max_trial_time / dt - 1e-9));
}

std::string_view to_string(DecisionPoint dp) {
    switch (dp) {
        case DecisionPoint::Start: return "start";
        case DecisionPoint::Midpoint: return "midpoint";
        case DecisionPoint::IntersectionEntry: return "intersection_entry";
        case DecisionPoint::PostWait: return "post_wait";
    }
    return "?";
}

DecisionPoint decision_point_from_string(std::string_view s) {
    if (s == "start") return DecisionPoint::Start;
    if (s == "midpoint") return DecisionPoint::Midpoint;
    if (s == "intersection_entry") return DecisionPoint::IntersectionEntry;
    if (s == "post_wait") return DecisionPoint::PostWait;
    throw std::invalid_argument("unknown decision point '" + std::string(s) + "'");
}

std::string_view to_string(HumanCommandKind k) {
    switch (k) {
        case HumanCommandKind::Forward: return "forward";
        case HumanCommandKind::Reverse: return "reverse";
        case HumanCommandKind::Brake: return "brake";
    }
    return "?";
}

HumanCommandKind human_command_from_string(std::string_view s) {
    if (s == "forward") return HumanCommandKind::Forward;
    if (s == "reverse") return HumanCommandKind::Reverse;
    if (s == "brake") return HumanCommandKind::Brake;
    throw std::invalid_argument("unknown human command '" + std::string(s) + "'");
}

WorldState initial_world() { return WorldState{}; }

WorldState step(const WorldState& world, const WorldConfig& cfg, const HumanCommand& human_cmd,
                const AgentCommand& agent_cmd) {
    if (world.terminal(cfg)) throw ContractViolation("step: world is terminal");

    WorldState next = world;
    next.steps = world.steps + 1;
    next.elapsed = static_cast<double>(next.steps) * cfg.dt;

    advance_agent(next.agent, agent_cmd, cfg);
    advance_human(next.human, human_cmd, cfg);
    finish_if_at_end(next.agent, cfg, next.elapsed);
    finish_if_at_end(next.human, cfg, next.elapsed);

    if (!next.crashed && detect_collision(next.agent, next.human, cfg)) next.crashed = true;
    return next;
}

bool detect_collision(const VehicleState& agent, const VehicleState& human,
                      const WorldConfig& cfg) {
    const double half_len = cfg.vehicle_length / 2;
    const double half_wid = cfg.vehicle_width / 2;
    const double c = cfg.intersection_center;
    // Agent: long side along x, centred on the horizontal road.
    const double ax_lo = agent.progress - half_len, ax_hi = agent.progress + half_len;
    const double ay_lo = c - half_wid, ay_hi = c + half_wid;
    // Human: long side along y, centred on the vertical road.
    const double hx_lo = c - half_wid, hx_hi = c + half_wid;
    const double hy_lo = human.progress - half_len, hy_hi = human.progress + half_len;
    return overlaps(ax_lo, ax_hi, hx_lo, hx_hi) && overlaps(ay_lo, ay_hi, hy_lo, hy_hi);
}

std::optional<DecisionPoint> decision_point(const VehicleState& agent_prev,
                                            const VehicleState& agent_now, double elapsed,
                                            const WorldConfig& cfg) {
    if (elapsed == 0.0) return DecisionPoint::Start;
    if (agent_now.reached_end) return std::nullopt;
    if (agent_prev.waiting && !agent_now.waiting) return DecisionPoint::PostWait;
    const auto crossed = [&](double threshold) {
        return agent_prev.progress < threshold && agent_now.progress >= threshold;
    };
    if (crossed(cfg.intersection_entry())) return DecisionPoint::IntersectionEntry;
    if (crossed(cfg.midpoint())) return DecisionPoint::Midpoint;
    return std::nullopt;
}

double sample_wait(Rng& rng) { return uniform(rng, 3.0, 5.0); }

TrialOutcome outcome_of(const WorldState& w, const WorldConfig& cfg) {
    TrialOutcome out;
    out.crashed = w.crashed;
    out.timed_out = !w.crashed && !w.both_done() && w.timed_out(cfg);
    out.end_time = w.elapsed;
    out.end_step = w.steps;
    if (!w.crashed) {
        out.agent_completion_time = w.agent.completion_time;
        out.human_completion_time = w.human.completion_time;
    }
    return out;
}

}  // namespace xing
