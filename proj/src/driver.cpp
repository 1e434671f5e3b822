#include "xing/driver.hpp"

#include <algorithm>
#include <cmath>

namespace xing {

namespace {

constexpr double kTimeEps = 1e-9;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("driver profile: " + what);
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void DriverProfile::validate() const {
    require(forward_speed_mean > 0.0, "forward_speed_mean must be > 0");
    require(forward_speed_sd >= 0.0, "forward_speed_sd must be >= 0");
    require(probability(stop_at_intersection_prob), "stop_at_intersection_prob must be in [0, 1]");
    require(wait_mean >= 0.0, "wait_mean must be >= 0");
    require(wait_sd >= 0.0, "wait_sd must be >= 0");
    require(yield_distance >= 0.0, "yield_distance must be >= 0");
    require(probability(reverse_prob_on_conflict), "reverse_prob_on_conflict must be in [0, 1]");
    require(reaction_delay >= 0.0, "reaction_delay must be >= 0");
}

std::vector<std::string> ConditionedDriver::ordering_warnings() const {
    std::vector<std::string> out;
    if (!(sad.forward_speed_mean < happy.forward_speed_mean)) {
        out.emplace_back("sad.forward_speed_mean is not below happy.forward_speed_mean");
    }
    if (!(sad.wait_mean >= happy.wait_mean)) {
        out.emplace_back("sad.wait_mean is below happy.wait_mean");
    }
    return out;
}

ConditionedDriver default_profiles() {
    ConditionedDriver d;
    d.happy = DriverProfile{0.22, 0.02, 0.4, 1.5, 0.5, 0.15, 0.1, 0.2};
    d.sad = DriverProfile{0.16, 0.02, 0.7, 2.5, 0.7, 0.15, 0.1, 0.2};
    return d;
}

SyntheticDriver::SyntheticDriver(ConditionedDriver profiles, WorldConfig cfg)
    : profiles_(std::move(profiles)), cfg_(cfg) {
    profiles_.happy.validate();
    profiles_.sad.validate();
}

void SyntheticDriver::begin_trial(MusicCondition condition, Rng& rng) {
    active_ = &profiles_.profile(condition);
    const double min_speed = 0.02 * cfg_.speed_fast;
    cruise_ = std::clamp(normal(rng, active_->forward_speed_mean, active_->forward_speed_sd),
                         min_speed, cfg_.speed_fast);
    wait_duration_ = std::max(0.0, normal(rng, active_->wait_mean, active_->wait_sd));
    will_stop_ = bernoulli(rng, active_->stop_at_intersection_prob);
    will_reverse_ = bernoulli(rng, active_->reverse_prob_on_conflict);

    phase_ = Phase::Cruise;
    wait_until_ = 0.0;
    approach_checked_ = false;
    stop_planned_ = false;
    conflict_checked_ = false;
    has_command_ = false;
    current_ = HumanCommand{};
    last_change_ = 0.0;
}

bool SyntheticDriver::agent_near(const WorldState& world) const {
    const VehicleState& a = world.agent;
    if (a.reached_end) return false;
    const double half_len = cfg_.vehicle_length / 2;
    const double box_near = cfg_.intersection_center - cfg_.intersection_half_width;
    const double box_far = cfg_.intersection_center + cfg_.intersection_half_width;
    if (a.progress - half_len >= box_far) return false;  // already cleared
    const double gap = box_near - (a.progress + half_len);
    if (gap <= 0.0) return true;  // inside the box
    return a.speed > 0.0 && gap <= active_->yield_distance;
}

bool SyntheticDriver::collision_imminent(const WorldState& world) const {
    const int horizon = std::max(1, static_cast<int>(std::ceil(active_->reaction_delay / cfg_.dt)));
    VehicleState a = world.agent;
    VehicleState h = world.human;
    for (int k = 1; k <= horizon; ++k) {
        if (!a.reached_end) a.progress = world.agent.progress + world.agent.speed * cfg_.dt * k;
        if (!h.reached_end) h.progress = world.human.progress + world.human.speed * cfg_.dt * k;
        if (detect_collision(a, h, cfg_)) return true;
    }
    return false;
}

HumanCommand SyntheticDriver::decide(const WorldState& world) {
    if (active_ == nullptr) throw ContractViolation("SyntheticDriver::decide before begin_trial");
    const VehicleState& self = world.human;
    const HumanCommand forward{HumanCommandKind::Forward, cruise_};
    const HumanCommand brake{HumanCommandKind::Brake, 0.0};
    const HumanCommand reverse{HumanCommandKind::Reverse, 0.0};

    const double stop_line = cfg_.intersection_entry();
    const double approach_point = cfg_.midpoint();
    const double brake_point = stop_line - cruise_ * cruise_ / (2.0 * cfg_.accel_limit) -
                               cruise_ * active_->reaction_delay;

    HumanCommand desired = has_command_ ? current_ : forward;
    switch (phase_) {
        case Phase::Cruise:
            desired = forward;
            if (!approach_checked_ && self.progress >= approach_point) {
                approach_checked_ = true;
                stop_planned_ = will_stop_ || agent_near(world);
            }
            if (stop_planned_ && self.progress >= brake_point) {
                phase_ = Phase::Stopping;
                desired = brake;
            }
            break;
        case Phase::Stopping:
            desired = brake;
            if (self.speed == 0.0 && current_ == brake) {
                phase_ = Phase::Waiting;
                wait_until_ = world.elapsed + wait_duration_;
            }
            break;
        case Phase::Waiting:
            desired = brake;
            if (world.elapsed + kTimeEps >= wait_until_ && !agent_near(world)) {
                phase_ = Phase::Proceed;
                desired = forward;
            }
            break;
        case Phase::Proceed:
            desired = forward;
            break;
        case Phase::Reversing:
            desired = reverse;
            if (!collision_imminent(world) && !agent_near(world)) {
                phase_ = Phase::Proceed;
                desired = forward;
            }
            break;
    }

    const bool moving_forward = phase_ == Phase::Cruise || phase_ == Phase::Proceed;
    if (moving_forward && !conflict_checked_ && !self.reached_end && collision_imminent(world)) {
        conflict_checked_ = true;
        if (will_reverse_) {
            phase_ = Phase::Reversing;
            desired = reverse;
        }
    }

    if (!has_command_) {
        has_command_ = true;
        current_ = desired;
        last_change_ = world.elapsed;
    } else if (!(desired == current_) &&
               world.elapsed - last_change_ + kTimeEps >= active_->reaction_delay) {
        current_ = desired;
        last_change_ = world.elapsed;
    }
    return current_;
}

}  // namespace xing
