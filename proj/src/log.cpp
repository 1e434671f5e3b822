#include "xing/log.hpp"

#include <algorithm>
#include <fstream>

#include "xing/session.hpp"

namespace xing {

using nlohmann::json;

namespace {

const json& field(const json& ev, const char* key, int line) {
    auto it = ev.find(key);
    if (it == ev.end()) throw LogError(std::string("missing field '") + key + "'", line);
    return *it;
}

template <typename T>
T get(const json& ev, const char* key, int line) {
    try {
        return field(ev, key, line).get<T>();
    } catch (const json::exception&) {
        throw LogError(std::string("field '") + key + "' has the wrong type", line);
    }
}

std::optional<double> optional_number(const json& ev, const char* key, int line) {
    const json& v = field(ev, key, line);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw LogError(std::string("field '") + key + "' is not a number", line);
    return v.get<double>();
}

template <typename F>
auto convert(F&& f, int line) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw LogError(e.what(), line);
    }
}

}  // namespace

LogError::LogError(const std::string& msg, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

SessionLog parse_log(std::istream& in, const std::string& source) {
    SessionLog log;
    log.source = source;
    bool started = false;
    LoggedTrial* open = nullptr;
    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) continue;
        json ev;
        try {
            ev = json::parse(text);
        } catch (const json::parse_error& e) {
            throw LogError(std::string("invalid JSON: ") + e.what(), line);
        }
        if (!ev.is_object()) throw LogError("event is not an object", line);
        const auto kind = get<std::string>(ev, "event", line);
        if (log.finished) throw LogError("event after session_end", line);

        if (kind == "session_start") {
            if (started) throw LogError("duplicate session_start", line);
            started = true;
            log.schema_version = get<int>(ev, "schema_version", line);
            if (log.schema_version != kLogSchemaVersion) {
                throw LogError("unsupported schema_version " + std::to_string(log.schema_version) +
                                   " (expected " + std::to_string(kLogSchemaVersion) + ")",
                               line);
            }
            log.seed = get<std::uint64_t>(ev, "seed", line);
            log.aware_first = get<bool>(ev, "aware_first", line);
            log.total_trials = get<int>(ev, "total_trials", line);
            log.config_json = field(ev, "config", line);
            try {
                log.config = config_from_json(log.config_json);
            } catch (const std::exception& e) {
                throw LogError(std::string("embedded config: ") + e.what(), line);
            }
            continue;
        }
        if (!started) throw LogError("first event is not session_start", line);

        if (kind == "trial_start") {
            if (open) throw LogError("trial_start inside an open trial", line);
            LoggedTrial t;
            t.trial_index = get<int>(ev, "trial", line);
            t.block_index = get<int>(ev, "block", line);
            t.condition = convert([&] { return condition_from_string(get<std::string>(ev, "condition", line)); }, line);
            t.mode = convert([&] { return mode_from_string(get<std::string>(ev, "mode", line)); }, line);
            log.trials.push_back(std::move(t));
            open = &log.trials.back();
        } else if (kind == "decision" || kind == "human_command" || kind == "state_sample" ||
                   kind == "train_stats") {
            if (!open) throw LogError(kind + " outside a trial", line);
            if (get<int>(ev, "trial", line) != open->trial_index) {
                throw LogError(kind + " names a different trial", line);
            }
            if (kind == "decision") {
                LoggedDecision d;
                d.step = get<std::int64_t>(ev, "step", line);
                d.point = convert([&] { return decision_point_from_string(get<std::string>(ev, "point", line)); }, line);
                d.action = convert([&] { return action_from_string(get<std::string>(ev, "action", line)); }, line);
                d.state = get<std::vector<double>>(ev, "state", line);
                open->decisions.push_back(std::move(d));
            } else if (kind == "human_command") {
                LoggedCommand c;
                c.step = get<std::int64_t>(ev, "step", line);
                c.command.kind = convert([&] { return human_command_from_string(get<std::string>(ev, "command", line)); }, line);
                c.command.cruise_speed = get<double>(ev, "speed", line);
                open->human_commands.push_back(c);
            }
        } else if (kind == "trial_end") {
            if (!open) throw LogError("trial_end without trial_start", line);
            if (get<int>(ev, "trial", line) != open->trial_index) {
                throw LogError("trial_end names a different trial", line);
            }
            open->crashed = get<bool>(ev, "crashed", line);
            open->timed_out = get<bool>(ev, "timed_out", line);
            open->aborted = get<bool>(ev, "aborted", line);
            open->agent_time = optional_number(ev, "agent_time", line);
            open->human_time = optional_number(ev, "human_time", line);
            open->end_time = get<double>(ev, "end_time", line);
            open->end_step = get<std::int64_t>(ev, "end_step", line);
            open->reward = optional_number(ev, "reward", line);
            if (open->completed() && (!open->agent_time || !open->human_time)) {
                throw LogError("completed trial lacks completion times", line);
            }
            open = nullptr;
        } else if (kind == "block_start") {
            if (open) throw LogError("block_start inside an open trial", line);
        } else if (kind == "session_end") {
            if (open) throw LogError("session_end inside an open trial", line);
            log.finished = true;
        } else {
            throw LogError("unknown event '" + kind + "'", line);
        }
    }
    if (!started) throw LogError("empty log", 0);
    if (open) throw LogError("log ends inside trial " + std::to_string(open->trial_index), line);
    return log;
}

SessionLog read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LogError("cannot open " + path.string(), 0);
    return parse_log(in, path.string());
}

std::vector<SessionLog> read_log_dir(const std::filesystem::path& dir,
                                     std::vector<std::string>& warnings) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    if (ec) throw LogError("cannot list " + dir.string() + ": " + ec.message(), 0);
    std::sort(files.begin(), files.end());
    std::vector<SessionLog> logs;
    for (const auto& f : files) {
        try {
            logs.push_back(read_log(f));
        } catch (const LogError& e) {
            warnings.push_back(f.string() + ": " + e.what() + " (skipped)");
        }
    }
    if (logs.empty()) throw LogError("no usable session logs in " + dir.string(), 0);
    return logs;
}

}  // namespace xing
