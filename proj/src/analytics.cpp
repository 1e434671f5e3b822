#include "xing/analytics.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace xing {

using nlohmann::json;

namespace {

constexpr std::array<AgentMode, 3> kModes{AgentMode::Explore, AgentMode::ExploitUnaware,
                                          AgentMode::ExploitAware};
constexpr std::array<MusicCondition, 2> kConditions{MusicCondition::Happy, MusicCondition::Sad};

std::optional<double> time_of(const LoggedTrial& t, Vehicle v) {
    return v == Vehicle::Agent ? t.agent_time : t.human_time;
}

json aggregate_json(const std::optional<Aggregate>& ag) {
    if (!ag) return nullptr;
    return {{"n", ag->n}, {"mean", ag->mean}, {"se", ag->std_error}};
}

std::optional<Aggregate> maybe_aggregate(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    return aggregate_of(std::move(v));
}

json test_json(const TestResult& r) {
    json j{{"test", to_string(r.kind)}, {"statistic", r.statistic}, {"p", r.p_value}};
    if (r.kind == TestKind::MannWhitneyU) j["exact"] = r.exact;
    return j;
}

// Welch and Mann-Whitney on two samples; tests that cannot run are null.
json compare(const std::vector<double>& a, const std::vector<double>& b) {
    json j{{"n_a", a.size()}, {"n_b", b.size()}, {"welch_t", nullptr}, {"mann_whitney_u", nullptr}};
    if (a.size() >= 2 && b.size() >= 2) j["welch_t"] = test_json(welch_t(a, b));
    if (!a.empty() && !b.empty()) j["mann_whitney_u"] = test_json(mann_whitney_u(a, b));
    return j;
}

CrashCount crashes_in(const SessionLog& log, const TrialFilter& f) {
    CrashCount c;
    for (const auto& t : log.trials) {
        if (t.aborted || !f.matches(t)) continue;
        ++c.trials;
        if (t.crashed) ++c.crashes;
    }
    return c;
}

struct ActionCounts {
    std::array<int, 3> counts{};
    int total() const { return counts[0] + counts[1] + counts[2]; }
};

ActionCounts count_actions(const std::vector<SessionLog>& logs, const TrialFilter& f,
                           std::optional<DecisionPoint> point) {
    ActionCounts c;
    for (const auto& log : logs) {
        for (const auto& t : log.trials) {
            if (t.aborted || !f.matches(t)) continue;
            for (const auto& d : t.decisions) {
                if (point && d.point != *point) continue;
                ++c.counts[index_of(d.action)];
            }
        }
    }
    return c;
}

json frequency_row(const std::vector<SessionLog>& logs, AgentMode m, MusicCondition c,
                   std::optional<DecisionPoint> point) {
    const TrialFilter f{m, c};
    const ActionCounts counts = count_actions(logs, f, point);
    json row{{"mode", to_string(m)}, {"condition", to_string(c)}, {"n", counts.total()}};
    const auto freq = action_frequency(logs, f, point);
    for (Action a : kAllActions) {
        std::string key(to_string(a));
        for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        row[key] = freq ? json((*freq)[index_of(a)]) : json(nullptr);
    }
    return row;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string cell(const json& v, const char* spec = "%.3f") {
    return v.is_null() ? "-" : fmt(spec, v.get<double>());
}

std::string agg_cell(const json& ag) {
    if (ag.is_null()) return "-";
    return fmt("%.3f", ag["mean"].get<double>()) + " +/- " + fmt("%.3f", ag["se"].get<double>()) +
           " (n=" + std::to_string(ag["n"].get<int>()) + ")";
}

std::string test_cell(const json& cmp) {
    std::string out;
    for (const char* k : {"welch_t", "mann_whitney_u"}) {
        if (!out.empty()) out += ", ";
        const json& t = cmp[k];
        if (t.is_null()) {
            out += std::string(k) + " -";
        } else {
            out += std::string(k == std::string("welch_t") ? "t=" : "U=") +
                   fmt("%.3f", t["statistic"].get<double>()) + " p=" + fmt("%.3g", t["p"].get<double>());
        }
    }
    return out;
}

void pad_row(std::ostringstream& os, const std::vector<std::string>& cols,
             const std::vector<int>& widths) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
        std::string c = cols[i];
        if (i + 1 < cols.size() && static_cast<int>(c.size()) < widths[i]) {
            c.append(static_cast<std::size_t>(widths[i]) - c.size(), ' ');
        }
        os << c << (i + 1 < cols.size() ? "  " : "");
    }
    os << '\n';
}

}  // namespace

bool TrialFilter::matches(const LoggedTrial& t) const {
    return (!mode || t.mode == *mode) && (!condition || t.condition == *condition);
}

std::vector<double> completion_times(const std::vector<SessionLog>& logs, const TrialFilter& f,
                                     Vehicle v) {
    std::vector<double> out;
    for (const auto& log : logs) {
        for (const auto& t : log.trials) {
            if (!t.completed() || !f.matches(t)) continue;
            if (auto time = time_of(t, v)) out.push_back(*time);
        }
    }
    return out;
}

std::optional<Aggregate> completion_aggregate(const std::vector<SessionLog>& logs,
                                              const TrialFilter& f, Vehicle v) {
    return maybe_aggregate(completion_times(logs, f, v));
}

std::vector<double> average_speeds(const std::vector<SessionLog>& logs, const TrialFilter& f,
                                   Vehicle v) {
    std::vector<double> out;
    for (const auto& log : logs) {
        const double length = log.config.world.road_length;
        for (const auto& t : log.trials) {
            if (!t.completed() || !f.matches(t)) continue;
            const auto time = time_of(t, v);
            if (time && *time > 0.0) out.push_back(length / *time);
        }
    }
    return out;
}

std::optional<Aggregate> crash_rate(const std::vector<SessionLog>& logs, const TrialFilter& f) {
    std::vector<double> rates;
    for (const auto& log : logs) {
        const CrashCount c = crashes_in(log, f);
        if (c.trials > 0) rates.push_back(c.rate());
    }
    return maybe_aggregate(std::move(rates));
}

CrashCount pooled_crashes(const std::vector<SessionLog>& logs, const TrialFilter& f) {
    CrashCount c;
    for (const auto& log : logs) {
        const CrashCount one = crashes_in(log, f);
        c.crashes += one.crashes;
        c.trials += one.trials;
    }
    return c;
}

std::optional<std::array<double, 3>> action_frequency(const std::vector<SessionLog>& logs,
                                                      const TrialFilter& f,
                                                      std::optional<DecisionPoint> point) {
    const ActionCounts c = count_actions(logs, f, point);
    if (c.total() == 0) return std::nullopt;
    std::array<double, 3> freq{};
    for (std::size_t i = 0; i < 3; ++i) freq[i] = static_cast<double>(c.counts[i]) / c.total();
    return freq;
}

std::optional<double> session_gap(const SessionLog& log, MusicCondition c) {
    const auto mean_time = [&](AgentMode m) -> std::optional<double> {
        const TrialFilter f{m, c};
        double sum = 0.0;
        int n = 0;
        for (const auto& t : log.trials) {
            if (!t.completed() || !f.matches(t) || !t.agent_time) continue;
            sum += *t.agent_time;
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    };
    const auto aware = mean_time(AgentMode::ExploitAware);
    const auto unaware = mean_time(AgentMode::ExploitUnaware);
    if (!aware || !unaware) return std::nullopt;
    return *aware - *unaware;
}

json build_report(const std::vector<SessionLog>& logs) {
    json report;
    int counted = 0, aborted = 0;
    for (const auto& log : logs) {
        for (const auto& t : log.trials) (t.aborted ? aborted : counted)++;
    }
    report["sessions"] = logs.size();
    report["trials"] = counted;
    report["aborted_trials"] = aborted;

    const auto agent_times = [&](TrialFilter f) { return completion_times(logs, f, Vehicle::Agent); };

    // Phase completion times.
    {
        json rows = json::array();
        for (AgentMode m : kModes) {
            rows.push_back({{"mode", to_string(m)},
                            {"agent", aggregate_json(completion_aggregate(logs, {m, {}}, Vehicle::Agent))},
                            {"human", aggregate_json(completion_aggregate(logs, {m, {}}, Vehicle::Human))}});
        }
        report["completion_by_phase"] = {
            {"rows", rows},
            {"aware_vs_unaware",
             compare(agent_times({AgentMode::ExploitAware, {}}), agent_times({AgentMode::ExploitUnaware, {}}))},
            {"unaware_vs_explore",
             compare(agent_times({AgentMode::ExploitUnaware, {}}), agent_times({AgentMode::Explore, {}}))}};
    }

    // Condition split.
    {
        json rows = json::array();
        json tests = json::object();
        for (MusicCondition c : kConditions) {
            for (AgentMode m : kModes) {
                rows.push_back({{"mode", to_string(m)},
                                {"condition", to_string(c)},
                                {"agent", aggregate_json(completion_aggregate(logs, {m, c}, Vehicle::Agent))},
                                {"human", aggregate_json(completion_aggregate(logs, {m, c}, Vehicle::Human))}});
            }
            tests[std::string(to_string(c))] =
                compare(agent_times({AgentMode::ExploitAware, c}), agent_times({AgentMode::ExploitUnaware, c}));
        }
        json gaps = json::array();
        int both = 0, sad_larger = 0;
        for (const auto& log : logs) {
            const auto happy = session_gap(log, MusicCondition::Happy);
            const auto sad = session_gap(log, MusicCondition::Sad);
            gaps.push_back({{"seed", log.seed},
                            {"happy", happy ? json(*happy) : json(nullptr)},
                            {"sad", sad ? json(*sad) : json(nullptr)}});
            if (happy && sad) {
                ++both;
                if (*sad < *happy) ++sad_larger;
            }
        }
        report["completion_by_condition"] = {{"rows", rows},
                                             {"aware_vs_unaware", tests},
                                             {"session_gaps", gaps},
                                             {"sessions_compared", both},
                                             {"sessions_sad_gap_larger", sad_larger}};
    }

    // Speed difference between the learned models, per condition.
    {
        json rows = json::array();
        for (MusicCondition c : kConditions) {
            const auto aware = average_speeds(logs, {AgentMode::ExploitAware, c}, Vehicle::Agent);
            const auto unaware = average_speeds(logs, {AgentMode::ExploitUnaware, c}, Vehicle::Agent);
            const auto ag_a = maybe_aggregate(aware);
            const auto ag_u = maybe_aggregate(unaware);
            rows.push_back({{"condition", to_string(c)},
                            {"unaware", aggregate_json(ag_u)},
                            {"aware", aggregate_json(ag_a)},
                            {"difference", ag_a && ag_u ? json(ag_a->mean - ag_u->mean) : json(nullptr)},
                            {"test", compare(aware, unaware)}});
        }
        report["speed_difference"] = {{"rows", rows}};
    }

    // Action frequencies.
    {
        json overall = json::array();
        json entry = json::array();
        for (MusicCondition c : kConditions) {
            for (AgentMode m : kModes) {
                overall.push_back(frequency_row(logs, m, c, std::nullopt));
                entry.push_back(frequency_row(logs, m, c, DecisionPoint::IntersectionEntry));
            }
        }
        report["action_frequency"] = {{"overall", overall}, {"intersection_entry", entry}};
    }

    // Crash rates.
    {
        json rows = json::array();
        for (AgentMode m : kModes) {
            for (std::optional<MusicCondition> c :
                 {std::optional<MusicCondition>{}, std::optional{MusicCondition::Happy},
                  std::optional{MusicCondition::Sad}}) {
                const TrialFilter f{m, c};
                const CrashCount pooled = pooled_crashes(logs, f);
                rows.push_back({{"mode", to_string(m)},
                                {"condition", c ? json(to_string(*c)) : json("all")},
                                {"rate", aggregate_json(crash_rate(logs, f))},
                                {"crashes", pooled.crashes},
                                {"trials", pooled.trials}});
            }
        }
        report["crash_rate"] = {{"rows", rows}};
    }
    return report;
}

std::string render_tables(const json& report) {
    std::ostringstream os;
    os << "sessions " << report["sessions"].get<int>() << ", counted trials "
       << report["trials"].get<int>() << ", aborted " << report["aborted_trials"].get<int>() << "\n\n";

    os << "Completion time by phase (s, crashes excluded)\n";
    const std::vector<int> w3{16, 34, 34};
    pad_row(os, {"mode", "agent", "human"}, w3);
    for (const auto& r : report["completion_by_phase"]["rows"]) {
        pad_row(os, {r["mode"].get<std::string>(), agg_cell(r["agent"]), agg_cell(r["human"])}, w3);
    }
    os << "aware vs unaware: " << test_cell(report["completion_by_phase"]["aware_vs_unaware"]) << '\n';
    os << "unaware vs explore: " << test_cell(report["completion_by_phase"]["unaware_vs_explore"]) << "\n\n";

    const auto& cond = report["completion_by_condition"];
    os << "Completion time by condition (s, agent)\n";
    const std::vector<int> w4{10, 16, 34, 34};
    pad_row(os, {"condition", "mode", "agent", "human"}, w4);
    for (const auto& r : cond["rows"]) {
        pad_row(os, {r["condition"].get<std::string>(), r["mode"].get<std::string>(), agg_cell(r["agent"]),
                     agg_cell(r["human"])},
                w4);
    }
    for (const char* c : {"happy", "sad"}) {
        os << c << " aware vs unaware: " << test_cell(cond["aware_vs_unaware"][c]) << '\n';
    }
    os << "sessions where the sad gap exceeds the happy gap: " << cond["sessions_sad_gap_larger"].get<int>()
       << " of " << cond["sessions_compared"].get<int>() << "\n\n";

    os << "Average agent speed (road lengths per s)\n";
    const std::vector<int> w5{10, 34, 34, 10};
    pad_row(os, {"condition", "unaware", "aware", "aware-unaware"}, w5);
    for (const auto& r : report["speed_difference"]["rows"]) {
        pad_row(os, {r["condition"].get<std::string>(), agg_cell(r["unaware"]), agg_cell(r["aware"]),
                     cell(r["difference"], "%+.4f")},
                w5);
    }
    os << '\n';

    const std::vector<int> wf{10, 16, 8, 8, 8, 6};
    for (const char* key : {"overall", "intersection_entry"}) {
        os << "Action frequency (" << (std::string(key) == "overall" ? "all decision points" : "intersection entry")
           << ")\n";
        pad_row(os, {"condition", "mode", "FAST", "SLOW", "BRAKE", "n"}, wf);
        for (const auto& r : report["action_frequency"][key]) {
            pad_row(os, {r["condition"].get<std::string>(), r["mode"].get<std::string>(), cell(r["fast"]),
                         cell(r["slow"]), cell(r["brake"]), std::to_string(r["n"].get<int>())},
                    wf);
        }
        os << '\n';
    }

    os << "Crash rate (per-session mean)\n";
    const std::vector<int> wc{16, 10, 34, 10};
    pad_row(os, {"mode", "condition", "rate", "pooled"}, wc);
    for (const auto& r : report["crash_rate"]["rows"]) {
        pad_row(os, {r["mode"].get<std::string>(), r["condition"].get<std::string>(), agg_cell(r["rate"]),
                     std::to_string(r["crashes"].get<int>()) + "/" + std::to_string(r["trials"].get<int>())},
                wc);
    }
    return os.str();
}

}  // namespace xing
