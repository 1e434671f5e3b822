#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xing/config.hpp"

namespace xing {

struct BatchSpec {
    int n_sessions = 20;
    std::uint64_t base_seed = 0;
    SessionConfig config;
    std::filesystem::path out_dir;
    int threads = 0;  // 0: hardware concurrency
};

struct BatchEntry {
    int index = 0;
    std::uint64_t seed = 0;
    bool aware_first = false;
    std::string log_file;  // relative to the output directory
    std::string unaware_checkpoint;
    std::string aware_checkpoint;
};

// Session i gets seed base_seed + i and aware_first = (i is odd), so the two
// orders differ in count by at most one.
std::vector<BatchEntry> batch_entries(int n_sessions, std::uint64_t base_seed);

// Runs the sessions with synthetic drivers, each on its own thread slot with
// no shared state. Writes one JSONL log and two checkpoints per session,
// manifest.json (deterministic) and timing.json (wall-clock, not
// deterministic). Returns the manifest entries.
std::vector<BatchEntry> run_batch(const BatchSpec& spec);

}  // namespace xing
