#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xing/agent.hpp"
#include "xing/driver.hpp"
#include "xing/mdp.hpp"
#include "xing/sim.hpp"

namespace xing {

// Invalid configuration. line is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, std::string source, int line);
    const std::string& source() const { return source_; }
    int line() const { return line_; }

private:
    std::string source_;
    int line_;
};

struct PlanSettings {
    std::uint64_t seed = 0;
    bool aware_first = false;
    std::vector<std::string> happy_tracks{"happy_01", "happy_02", "happy_03", "happy_04"};
    std::vector<std::string> sad_tracks{"sad_01", "sad_02", "sad_03", "sad_04"};
    int block_count = 16;
    int trials_per_block = 12;
    double inter_trial_pause = 3.0;  // seconds
    double pre_block_pause = 3.0;    // seconds

    bool operator==(const PlanSettings&) const = default;
};

// Only used by the live server.
struct LiveSettings {
    double warmup_seconds = 180.0;
    double time_scale = 1.0;  // > 1 runs faster than real time; 0 disables pacing
    double resume_timeout_seconds = 60.0;

    bool operator==(const LiveSettings&) const = default;
};

struct SessionConfig {
    WorldConfig world;
    RewardParams reward;
    LearningParams learning;
    ConditionedDriver driver = default_profiles();
    PlanSettings plan;
    LiveSettings live;
    int state_sample_every = 10;  // steps between state_sample log events (2 Hz at dt = 0.05)

    // Throws ConfigError (without line information) on inconsistent values.
    void validate() const;
    bool operator==(const SessionConfig&) const = default;
};

nlohmann::json to_json(const SessionConfig& cfg);
nlohmann::json to_json(const DriverProfile& p);

// Every key is optional and defaults as above; unknown keys are rejected.
SessionConfig config_from_json(const nlohmann::json& j);

// Reads a YAML (or JSON) config file. Errors carry the offending line.
SessionConfig load_config(const std::filesystem::path& path);
SessionConfig parse_config(const std::string& text, const std::string& source_name = "<config>");

// Writes the config as JSON, which load_config reads back unchanged.
void save_config(const SessionConfig& cfg, const std::filesystem::path& path);

}  // namespace xing
