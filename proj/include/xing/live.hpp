#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "xing/config.hpp"
#include "xing/session.hpp"
#include "xing/wire.hpp"

namespace xing {

struct TrackEntry {
    std::string track_id;
    MusicCondition pool = MusicCondition::Happy;
    std::string file;  // relative to the track directory
};

// Reads <dir>/manifest.json: [{"track_id": ..., "pool": "happy"|"sad", "file": ...}].
// Throws std::runtime_error on a malformed manifest or a missing audio file.
std::vector<TrackEntry> load_track_manifest(const std::filesystem::path& dir);

// Every track named in the plan settings must appear in the manifest under
// the matching pool. Throws std::runtime_error naming the first problem.
void check_tracks(const std::vector<TrackEntry>& tracks, const PlanSettings& plan);

/// One participant's live run. The session advances on its own thread once
/// the client is ready; a connection handler feeds it control input and
/// drains its Outbox. Losing the connection aborts the running trial; the
/// session then waits resume_timeout_seconds for the client to come back
/// before it closes and finalizes its log.
class LiveSession : public std::enable_shared_from_this<LiveSession> {
public:
    LiveSession(SessionConfig cfg, std::uint64_t seed, bool aware_first, std::string id,
                std::filesystem::path log_path, std::map<std::string, std::string> track_urls);
    ~LiveSession();

    const std::string& id() const { return id_; }
    const std::filesystem::path& log_path() const { return log_path_; }

    // Binds a connection and sends session_info on it.
    void attach(std::shared_ptr<Outbox> out);
    // Unbinds the connection if it is still the current one.
    void detach(const Outbox* out);
    void control(HumanCommandKind command);
    // First call starts the session thread; later calls are ignored.
    void ready();

    bool done() const { return done_; }
    // Asks the session thread to wrap up (server shutdown) and waits for it.
    void stop();

private:
    class Human;
    class Presenter;

    void run();
    void send(const WireMessage& msg);
    bool connected() const;
    // Sleeps until the deadline; returns early (false) on stop or, when
    // abort_on_disconnect is set, on losing the connection.
    bool sleep_until(std::chrono::steady_clock::time_point deadline, bool abort_on_disconnect);
    bool wait_for_connection();
    void run_warmup();
    nlohmann::json session_info() const;

    SessionConfig cfg_;
    std::string id_;
    std::filesystem::path log_path_;
    std::map<std::string, std::string> track_urls_;
    Session session_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::shared_ptr<Outbox> out_;
    HumanCommandKind command_ = HumanCommandKind::Brake;
    std::uint64_t detach_count_ = 0;  // a trial aborts if this moves, even after a quick reconnect
    bool started_ = false;
    bool stop_ = false;
    std::atomic<bool> done_{false};
    std::atomic<bool> in_warmup_{false};
    std::atomic<int> next_trial_{0};
    std::thread thread_;
};

}  // namespace xing
