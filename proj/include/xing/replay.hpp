#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xing/log.hpp"
#include "xing/session.hpp"

namespace xing {

// Feeds the human commands recorded in a log back into a session. Attempts
// are consumed in log order; an attempt that was aborted aborts again at its
// logged end step.
class ScriptedHuman final : public HumanSource {
public:
    explicit ScriptedHuman(const std::vector<LoggedTrial>& attempts);
    void begin_trial(const TrialContext& ctx) override;
    std::optional<HumanCommand> command(const WorldState& world) override;
    std::size_t remaining() const { return attempts_.size() - next_; }

private:
    const std::vector<LoggedTrial>& attempts_;
    std::size_t next_ = 0;
    const LoggedTrial* current_ = nullptr;
    std::size_t cursor_ = 0;
};

struct Divergence {
    int attempt = 0;      // position among logged trial attempts
    int trial_index = 0;
    std::string what;
};

struct ReplayResult {
    int attempts_checked = 0;
    std::optional<Divergence> divergence;  // the first one; replay stops there
};

// Re-executes the session from the logged config, seed and counterbalance,
// with human input from the log, and compares every decision and trial
// outcome against the log.
ReplayResult replay(const SessionLog& log);

}  // namespace xing
