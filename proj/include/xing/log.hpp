#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xing/agent.hpp"
#include "xing/config.hpp"
#include "xing/mdp.hpp"
#include "xing/sim.hpp"

namespace xing {

// Malformed or unsupported session log. line is 1-based, 0 when not tied to
// one line.
class LogError : public std::runtime_error {
public:
    LogError(const std::string& msg, int line);
    int line() const { return line_; }

private:
    int line_;
};

struct LoggedDecision {
    std::int64_t step = 0;
    DecisionPoint point = DecisionPoint::Start;
    Action action = Action::Fast;
    std::vector<double> state;
};

struct LoggedCommand {
    std::int64_t step = 0;
    HumanCommand command;
};

struct LoggedTrial {
    int trial_index = 0;
    int block_index = 0;
    MusicCondition condition = MusicCondition::Happy;
    AgentMode mode = AgentMode::Explore;
    bool crashed = false;
    bool timed_out = false;
    bool aborted = false;
    std::optional<double> agent_time;
    std::optional<double> human_time;
    double end_time = 0.0;
    std::int64_t end_step = 0;
    std::optional<double> reward;
    std::vector<LoggedDecision> decisions;
    std::vector<LoggedCommand> human_commands;

    // Counted in completion-time aggregates: finished by both, no crash.
    bool completed() const { return !crashed && !timed_out && !aborted; }
};

struct SessionLog {
    std::string source;
    int schema_version = 0;
    std::uint64_t seed = 0;
    bool aware_first = false;
    int total_trials = 0;
    SessionConfig config;
    nlohmann::json config_json;
    std::vector<LoggedTrial> trials;  // in log order; aborted attempts included
    bool finished = false;            // session_end seen
};

// Parses one JSONL session log. Throws LogError.
SessionLog parse_log(std::istream& in, const std::string& source = "<log>");
SessionLog read_log(const std::filesystem::path& path);

// Every *.jsonl file under dir, sorted by file name. Malformed files are
// skipped and described in warnings; throws LogError if none is usable.
std::vector<SessionLog> read_log_dir(const std::filesystem::path& dir,
                                     std::vector<std::string>& warnings);

}  // namespace xing
