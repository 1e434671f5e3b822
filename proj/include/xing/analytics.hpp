#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xing/log.hpp"
#include "xing/stats.hpp"

namespace xing {

// Unset members match everything.
struct TrialFilter {
    std::optional<AgentMode> mode;
    std::optional<MusicCondition> condition;

    bool matches(const LoggedTrial& t) const;
};

enum class Vehicle { Agent, Human };

// Completion times of completed trials (no crash, timeout or abort), pooled
// unpaired across sessions.
std::vector<double> completion_times(const std::vector<SessionLog>& logs, const TrialFilter& f,
                                     Vehicle v);
std::optional<Aggregate> completion_aggregate(const std::vector<SessionLog>& logs,
                                              const TrialFilter& f, Vehicle v);

// Average speed of completed trials: road length over completion time.
std::vector<double> average_speeds(const std::vector<SessionLog>& logs, const TrialFilter& f,
                                   Vehicle v);

// Crashes over counted (non-aborted) trials, one rate per session with at
// least one matching trial, then mean and standard error across sessions.
std::optional<Aggregate> crash_rate(const std::vector<SessionLog>& logs, const TrialFilter& f);

// Crashes and counted trials pooled over all sessions.
struct CrashCount {
    int crashes = 0;
    int trials = 0;
    double rate() const { return trials > 0 ? static_cast<double>(crashes) / trials : 0.0; }
};
CrashCount pooled_crashes(const std::vector<SessionLog>& logs, const TrialFilter& f);

// Per-decision frequencies of FAST, SLOW, BRAKE (index order) among the
// decisions of counted trials; nullopt when nothing matches.
std::optional<std::array<double, 3>> action_frequency(const std::vector<SessionLog>& logs,
                                                      const TrialFilter& f,
                                                      std::optional<DecisionPoint> point);

// Aware-minus-unaware mean agent completion time of one session under one
// condition; nullopt when either side has no completed trial.
std::optional<double> session_gap(const SessionLog& log, MusicCondition c);

// Full report: phase completion times, condition split, speed difference,
// action frequencies (overall and at intersection entry), crash rates, and
// the aware vs unaware tests. Deterministic in the logs.
nlohmann::json build_report(const std::vector<SessionLog>& logs);

// Plain-text rendering of build_report's tables.
std::string render_tables(const nlohmann::json& report);

}  // namespace xing
