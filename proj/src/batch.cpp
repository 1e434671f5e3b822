#include "xing/batch.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "xing/session.hpp"

namespace xing {

using nlohmann::json;

namespace {

std::string numbered(const char* prefix, int index, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%03d%s", prefix, index, suffix);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

double run_one(const BatchSpec& spec, const BatchEntry& e) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::filesystem::path log_path = spec.out_dir / e.log_file;
    std::ofstream out(log_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + log_path.string());
    JsonlSink sink(out);
    Session session(spec.config, e.seed, e.aware_first);
    SyntheticHuman human(spec.config.driver, spec.config.world, e.seed);
    run_session(session, human, nullptr, &sink);
    out.close();
    if (!out) throw std::runtime_error("write failed: " + log_path.string());
    save_checkpoint(session.models().unaware, spec.out_dir / e.unaware_checkpoint);
    save_checkpoint(session.models().aware, spec.out_dir / e.aware_checkpoint);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<BatchEntry> batch_entries(int n_sessions, std::uint64_t base_seed) {
    if (n_sessions < 1) throw std::invalid_argument("batch: need at least one session");
    std::vector<BatchEntry> entries;
    for (int i = 0; i < n_sessions; ++i) {
        BatchEntry e;
        e.index = i;
        e.seed = base_seed + static_cast<std::uint64_t>(i);
        e.aware_first = i % 2 == 1;
        e.log_file = numbered("session_", i, ".jsonl");
        e.unaware_checkpoint = numbered("checkpoints/session_", i, "_unaware.qnet");
        e.aware_checkpoint = numbered("checkpoints/session_", i, "_aware.qnet");
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<BatchEntry> run_batch(const BatchSpec& spec) {
    spec.config.validate();
    const auto entries = batch_entries(spec.n_sessions, spec.base_seed);
    std::filesystem::create_directories(spec.out_dir / "checkpoints");

    int threads = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, spec.n_sessions);

    std::vector<double> seconds(entries.size(), 0.0);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    const auto worker = [&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            try {
                seconds[i] = run_one(spec, entries[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json sessions = json::array();
    for (const auto& e : entries) {
        sessions.push_back({{"index", e.index},
                            {"seed", e.seed},
                            {"aware_first", e.aware_first},
                            {"log", e.log_file},
                            {"checkpoints", {{"unaware", e.unaware_checkpoint}, {"aware", e.aware_checkpoint}}}});
    }
    const json manifest{{"schema_version", kLogSchemaVersion},
                        {"n_sessions", spec.n_sessions},
                        {"base_seed", spec.base_seed},
                        {"seed_rule", "seed = base_seed + index; aware_first = index is odd"},
                        {"config", to_json(spec.config)},
                        {"sessions", sessions}};
    write_text(spec.out_dir / "manifest.json", manifest.dump(2) + "\n");

    json timing{{"threads", threads}, {"total_seconds", total}, {"session_seconds", seconds}};
    write_text(spec.out_dir / "timing.json", timing.dump(2) + "\n");
    return entries;
}

}  // namespace xing
