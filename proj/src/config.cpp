#include "xing/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace xing {

using nlohmann::json;

ConfigError::ConfigError(const std::string& msg, std::string source, int line)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + msg
                                  : source + ": " + msg),
      source_(std::move(source)),
      line_(line) {}

namespace {

using LineMap = std::map<std::string, int>;

// YAML -> JSON, remembering the source line of every JSON pointer.
json yaml_to_json(const YAML::Node& node, const std::string& pointer, LineMap& lines) {
    lines[pointer] = node.Mark().line + 1;
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Sequence: {
            json arr = json::array();
            for (std::size_t i = 0; i < node.size(); ++i) {
                arr.push_back(yaml_to_json(node[i], pointer + "/" + std::to_string(i), lines));
            }
            return arr;
        }
        case YAML::NodeType::Map: {
            json obj = json::object();
            for (const auto& kv : node) {
                const std::string key = kv.first.as<std::string>();
                lines[pointer + "/" + key] = kv.first.Mark().line + 1;
                obj[key] = yaml_to_json(kv.second, pointer + "/" + key, lines);
                lines[pointer + "/" + key] = kv.first.Mark().line + 1;
            }
            return obj;
        }
        case YAML::NodeType::Scalar: {
            const std::string& text = node.Scalar();
            if (node.Tag() == "!") return text;  // quoted
            if (text == "true" || text == "True") return true;
            if (text == "false" || text == "False") return false;
            if (text == "null" || text == "~") return nullptr;
            try {
                std::size_t used = 0;
                const long long v = std::stoll(text, &used);
                if (used == text.size()) return v;
            } catch (const std::exception&) {
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used == text.size()) return v;
            } catch (const std::exception&) {
            }
            return text;
        }
    }
    return nullptr;
}

class Reader {
public:
    Reader(const json& root, const LineMap* lines, std::string source)
        : root_(root), lines_(lines), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
        int line = 0;
        if (lines_ != nullptr) {
            // Walk up to the closest ancestor that has a known line.
            std::string p = pointer;
            while (true) {
                auto it = lines_->find(p);
                if (it != lines_->end()) {
                    line = it->second;
                    break;
                }
                const auto slash = p.rfind('/');
                if (slash == std::string::npos || p.empty()) break;
                p.resize(slash);
            }
        }
        throw ConfigError(display(pointer) + ": " + msg, source_, line);
    }

    // Checks that obj at pointer is an object with only the allowed keys.
    const json* object(const std::string& pointer, std::initializer_list<const char*> allowed) const {
        const json* node = at(pointer);
        if (node == nullptr || node->is_null()) return nullptr;
        if (!node->is_object()) fail(pointer, "expected a mapping");
        std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [k, v] : node->items()) {
            if (!keys.count(k)) fail(pointer + "/" + k, "unknown key '" + k + "'");
        }
        return node;
    }

    void number(const std::string& pointer, double& out) const {
        const json* node = at(pointer);
        if (node == nullptr) return;
        if (!node->is_number()) fail(pointer, "expected a number");
        out = node->get<double>();
    }

    void integer(const std::string& pointer, int& out) const {
        const json* node = at(pointer);
        if (node == nullptr) return;
        if (!node->is_number_integer()) fail(pointer, "expected an integer");
        out = node->get<int>();
    }

    void unsigned64(const std::string& pointer, std::uint64_t& out) const {
        const json* node = at(pointer);
        if (node == nullptr) return;
        if (!node->is_number_integer() || node->get<long long>() < 0) {
            fail(pointer, "expected a non-negative integer");
        }
        out = node->get<std::uint64_t>();
    }

    void boolean(const std::string& pointer, bool& out) const {
        const json* node = at(pointer);
        if (node == nullptr) return;
        if (!node->is_boolean()) fail(pointer, "expected true or false");
        out = node->get<bool>();
    }

    void strings(const std::string& pointer, std::vector<std::string>& out) const {
        const json* node = at(pointer);
        if (node == nullptr) return;
        if (!node->is_array()) fail(pointer, "expected a list of strings");
        std::vector<std::string> v;
        for (std::size_t i = 0; i < node->size(); ++i) {
            const auto& e = (*node)[i];
            if (e.is_string()) {
                v.push_back(e.get<std::string>());
            } else if (e.is_number()) {
                v.push_back(e.dump());
            } else {
                fail(pointer + "/" + std::to_string(i), "expected a string");
            }
        }
        out = std::move(v);
    }

    template <typename Fn>
    void check(const std::string& pointer, Fn&& fn) const {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            fail(pointer, e.what());
        }
    }

private:
    const json* at(const std::string& pointer) const {
        const json::json_pointer ptr(pointer);
        if (!root_.contains(ptr)) return nullptr;
        return &root_.at(ptr);
    }

    static std::string display(const std::string& pointer) {
        std::string out = pointer.empty() ? "<root>" : pointer.substr(1);
        for (auto& c : out) {
            if (c == '/') c = '.';
        }
        return out;
    }

    const json& root_;
    const LineMap* lines_;
    std::string source_;
};

void read_profile(const Reader& r, const std::string& p, DriverProfile& d) {
    if (!r.object(p, {"forward_speed_mean", "forward_speed_sd", "stop_at_intersection_prob",
                      "wait_mean", "wait_sd", "yield_distance", "reverse_prob_on_conflict",
                      "reaction_delay"})) {
        return;
    }
    r.number(p + "/forward_speed_mean", d.forward_speed_mean);
    r.number(p + "/forward_speed_sd", d.forward_speed_sd);
    r.number(p + "/stop_at_intersection_prob", d.stop_at_intersection_prob);
    r.number(p + "/wait_mean", d.wait_mean);
    r.number(p + "/wait_sd", d.wait_sd);
    r.number(p + "/yield_distance", d.yield_distance);
    r.number(p + "/reverse_prob_on_conflict", d.reverse_prob_on_conflict);
    r.number(p + "/reaction_delay", d.reaction_delay);
    r.check(p, [&] { d.validate(); });
}

SessionConfig read_config(const json& root, const LineMap* lines, const std::string& source) {
    Reader r(root, lines, source);
    SessionConfig cfg;
    if (!root.is_null() && !root.is_object()) r.fail("", "expected a mapping at top level");
    r.object("", {"world", "reward", "learning", "driver", "plan", "live", "state_sample_every"});

    if (r.object("/world", {"road_length", "intersection_center", "intersection_half_width",
                            "vehicle_length", "vehicle_width", "dt", "speed_fast", "speed_slow",
                            "speed_reverse", "accel_limit", "max_trial_time"})) {
        auto& w = cfg.world;
        r.number("/world/road_length", w.road_length);
        r.number("/world/intersection_center", w.intersection_center);
        r.number("/world/intersection_half_width", w.intersection_half_width);
        r.number("/world/vehicle_length", w.vehicle_length);
        r.number("/world/vehicle_width", w.vehicle_width);
        r.number("/world/dt", w.dt);
        r.number("/world/speed_fast", w.speed_fast);
        r.number("/world/speed_slow", w.speed_slow);
        r.number("/world/speed_reverse", w.speed_reverse);
        r.number("/world/accel_limit", w.accel_limit);
        r.number("/world/max_trial_time", w.max_trial_time);
        r.check("/world", [&] { w.validate(); });
    }
    if (r.object("/reward", {"crash_penalty", "gamma"})) {
        r.number("/reward/crash_penalty", cfg.reward.crash_penalty);
        r.number("/reward/gamma", cfg.reward.gamma);
        r.check("/reward", [&] { cfg.reward.validate(); });
    }
    if (r.object("/learning", {"lr", "replay_sample_size", "replay_iterations",
                               "freeze_after_exploration", "td_error_clip"})) {
        r.number("/learning/lr", cfg.learning.lr);
        r.integer("/learning/replay_sample_size", cfg.learning.replay_sample_size);
        r.integer("/learning/replay_iterations", cfg.learning.replay_iterations);
        r.boolean("/learning/freeze_after_exploration", cfg.learning.freeze_after_exploration);
        r.number("/learning/td_error_clip", cfg.learning.td_error_clip);
        r.check("/learning", [&] { cfg.learning.validate(); });
    }
    if (r.object("/driver", {"happy", "sad"})) {
        read_profile(r, "/driver/happy", cfg.driver.happy);
        read_profile(r, "/driver/sad", cfg.driver.sad);
    }
    if (r.object("/plan", {"seed", "aware_first", "happy_tracks", "sad_tracks", "block_count",
                           "trials_per_block", "inter_trial_pause", "pre_block_pause"})) {
        auto& p = cfg.plan;
        r.unsigned64("/plan/seed", p.seed);
        r.boolean("/plan/aware_first", p.aware_first);
        r.strings("/plan/happy_tracks", p.happy_tracks);
        r.strings("/plan/sad_tracks", p.sad_tracks);
        r.integer("/plan/block_count", p.block_count);
        r.integer("/plan/trials_per_block", p.trials_per_block);
        r.number("/plan/inter_trial_pause", p.inter_trial_pause);
        r.number("/plan/pre_block_pause", p.pre_block_pause);
        if (p.happy_tracks.empty()) r.fail("/plan/happy_tracks", "track pool is empty");
        if (p.sad_tracks.empty()) r.fail("/plan/sad_tracks", "track pool is empty");
        if (p.block_count < 2 || p.block_count % 2 != 0) {
            r.fail("/plan/block_count", "must be a positive even number");
        }
        if (p.trials_per_block < 1) r.fail("/plan/trials_per_block", "must be >= 1");
        if (p.inter_trial_pause < 0) r.fail("/plan/inter_trial_pause", "must be >= 0");
        if (p.pre_block_pause < 0) r.fail("/plan/pre_block_pause", "must be >= 0");
    }
    if (r.object("/live", {"warmup_seconds", "time_scale", "resume_timeout_seconds"})) {
        r.number("/live/warmup_seconds", cfg.live.warmup_seconds);
        r.number("/live/time_scale", cfg.live.time_scale);
        r.number("/live/resume_timeout_seconds", cfg.live.resume_timeout_seconds);
        if (cfg.live.warmup_seconds < 0) r.fail("/live/warmup_seconds", "must be >= 0");
        if (cfg.live.time_scale < 0) r.fail("/live/time_scale", "must be >= 0");
        if (cfg.live.resume_timeout_seconds < 0) r.fail("/live/resume_timeout_seconds", "must be >= 0");
    }
    r.integer("/state_sample_every", cfg.state_sample_every);
    if (cfg.state_sample_every < 1) r.fail("/state_sample_every", "must be >= 1");
    return cfg;
}

}  // namespace

void SessionConfig::validate() const {
    try {
        world.validate();
        reward.validate();
        learning.validate();
        driver.happy.validate();
        driver.sad.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), "<config>", 0);
    }
    if (plan.happy_tracks.empty() || plan.sad_tracks.empty()) {
        throw ConfigError("plan: track pools must be non-empty", "<config>", 0);
    }
    if (plan.block_count < 2 || plan.block_count % 2 != 0 || plan.trials_per_block < 1) {
        throw ConfigError("plan: bad block layout", "<config>", 0);
    }
}

json to_json(const DriverProfile& p) {
    return json{{"forward_speed_mean", p.forward_speed_mean},
                {"forward_speed_sd", p.forward_speed_sd},
                {"stop_at_intersection_prob", p.stop_at_intersection_prob},
                {"wait_mean", p.wait_mean},
                {"wait_sd", p.wait_sd},
                {"yield_distance", p.yield_distance},
                {"reverse_prob_on_conflict", p.reverse_prob_on_conflict},
                {"reaction_delay", p.reaction_delay}};
}

json to_json(const SessionConfig& cfg) {
    const auto& w = cfg.world;
    return json{
        {"world",
         {{"road_length", w.road_length},
          {"intersection_center", w.intersection_center},
          {"intersection_half_width", w.intersection_half_width},
          {"vehicle_length", w.vehicle_length},
          {"vehicle_width", w.vehicle_width},
          {"dt", w.dt},
          {"speed_fast", w.speed_fast},
          {"speed_slow", w.speed_slow},
          {"speed_reverse", w.speed_reverse},
          {"accel_limit", w.accel_limit},
          {"max_trial_time", w.max_trial_time}}},
        {"reward", {{"crash_penalty", cfg.reward.crash_penalty}, {"gamma", cfg.reward.gamma}}},
        {"learning",
         {{"lr", cfg.learning.lr},
          {"replay_sample_size", cfg.learning.replay_sample_size},
          {"replay_iterations", cfg.learning.replay_iterations},
          {"freeze_after_exploration", cfg.learning.freeze_after_exploration},
          {"td_error_clip", cfg.learning.td_error_clip}}},
        {"driver", {{"happy", to_json(cfg.driver.happy)}, {"sad", to_json(cfg.driver.sad)}}},
        {"plan",
         {{"seed", cfg.plan.seed},
          {"aware_first", cfg.plan.aware_first},
          {"happy_tracks", cfg.plan.happy_tracks},
          {"sad_tracks", cfg.plan.sad_tracks},
          {"block_count", cfg.plan.block_count},
          {"trials_per_block", cfg.plan.trials_per_block},
          {"inter_trial_pause", cfg.plan.inter_trial_pause},
          {"pre_block_pause", cfg.plan.pre_block_pause}}},
        {"live",
         {{"warmup_seconds", cfg.live.warmup_seconds},
          {"time_scale", cfg.live.time_scale},
          {"resume_timeout_seconds", cfg.live.resume_timeout_seconds}}},
        {"state_sample_every", cfg.state_sample_every}};
}

SessionConfig config_from_json(const json& j) { return read_config(j, nullptr, "<config>"); }

SessionConfig parse_config(const std::string& text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.msg, source_name, e.mark.line >= 0 ? e.mark.line + 1 : 0);
    }
    LineMap lines;
    const json j = yaml_to_json(root, "", lines);
    return read_config(j, &lines, source_name);
}

SessionConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open file", path.string(), 0);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.string());
}

void save_config(const SessionConfig& cfg, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write config " + path.string());
    os << to_json(cfg).dump(2) << '\n';
}

}  // namespace xing
