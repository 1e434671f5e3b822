#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "xing/agent.hpp"
#include "xing/config.hpp"
#include "xing/driver.hpp"
#include "xing/mdp.hpp"
#include "xing/plan.hpp"
#include "xing/rng.hpp"

namespace xing {

inline constexpr int kLogSchemaVersion = 1;

struct DecisionRecord {
    DecisionPoint point = DecisionPoint::Start;
    std::int64_t step = 0;
    StateVector state;  // aware encoding; the unaware view is its 8-feature prefix
    Action action = Action::Fast;
};

struct CommandRecord {
    std::int64_t step = 0;
    HumanCommand command;
};

struct TrialRecord {
    int trial_index = 0;
    int block_index = 0;
    MusicCondition condition = MusicCondition::Happy;
    AgentMode mode = AgentMode::Explore;
    TrialOutcome outcome;
    double reward = 0.0;
    std::vector<DecisionRecord> decisions;
    std::vector<CommandRecord> human_commands;
};

struct TrialContext {
    int trial_index = 0;
    const PlanBlock* block = nullptr;
    AgentMode mode = AgentMode::Explore;
    bool practice = false;
};

// Source of human commands: a synthetic driver, a logged script or a live
// participant. command() returning nullopt aborts the trial.
class HumanSource {
public:
    virtual ~HumanSource() = default;
    virtual void begin_trial(const TrialContext& ctx) = 0;
    virtual std::optional<HumanCommand> command(const WorldState& world) = 0;
};

class SyntheticHuman final : public HumanSource {
public:
    SyntheticHuman(const ConditionedDriver& profiles, const WorldConfig& cfg, std::uint64_t seed);
    void begin_trial(const TrialContext& ctx) override;
    std::optional<HumanCommand> command(const WorldState& world) override;

private:
    SyntheticDriver driver_;
    Rng rng_;
};

// Hooks for live presentation (pacing, streaming). All default to no-ops;
// synthetic runs use the base class.
class SessionObserver {
public:
    virtual ~SessionObserver() = default;
    virtual void on_block_start(const PlanBlock& /*block*/, double /*pause_s*/) {}
    virtual void on_trial_start(const TrialContext& /*ctx*/) {}
    virtual void on_step(const WorldState& /*world*/) {}
    virtual void on_trial_end(const TrialContext& /*ctx*/, const TrialOutcome& /*outcome*/,
                              double /*pause_s*/) {}
};

// Receives log events, one JSON object each.
class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void write(const nlohmann::json& event) = 0;
};

class JsonlSink final : public EventSink {
public:
    explicit JsonlSink(std::ostream& os) : os_(os) {}
    void write(const nlohmann::json& event) override;

private:
    std::ostream& os_;
};

/// One participant's run: plan, paired models, replay history and the trial
/// records produced so far.
class Session {
public:
    Session(SessionConfig cfg, std::uint64_t seed, bool aware_first);

    const SessionConfig& config() const { return cfg_; }
    const ExperimentPlan& plan() const { return plan_; }
    std::uint64_t seed() const { return seed_; }
    int trial_index() const { return trial_index_; }
    bool finished() const { return trial_index_ >= plan_.total_trials(); }
    const ModelPair& models() const { return pair_; }
    const ReplayHistory& history() const { return history_; }
    const std::vector<TrialRecord>& records() const { return records_; }

    void log_session_start(EventSink& sink) const;
    void log_session_end(EventSink& sink) const;

    // Runs the next trial. Returns nullopt when the human source aborted it;
    // an aborted trial leaves the replay history, the records and the trial
    // index untouched. Throws ContractViolation once the plan is exhausted.
    std::optional<TrialRecord> run_trial(HumanSource& human, SessionObserver* observer = nullptr,
                                         EventSink* sink = nullptr);

    int aborted_trials() const { return aborted_; }

private:
    SessionConfig cfg_;
    std::uint64_t seed_;
    ExperimentPlan plan_;
    ModelPair pair_;
    ReplayHistory history_;
    std::vector<TrialRecord> records_;
    Rng agent_rng_;
    Rng world_rng_;
    int trial_index_ = 0;
    int last_block_started_ = -1;
    int aborted_ = 0;
};

// Runs every remaining trial (aborted trials are retried) and writes the
// session_start / session_end events around them.
void run_session(Session& session, HumanSource& human, SessionObserver* observer = nullptr,
                 EventSink* sink = nullptr);

// Agent actuation for an action; a BRAKE carries the wait to take once stopped.
AgentCommand agent_command_for(Action a, const WorldConfig& cfg, double stop_wait);

}  // namespace xing
