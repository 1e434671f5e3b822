#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "xing/sim.hpp"

namespace xing {

inline constexpr int kWireSchemaVersion = 1;

// Frame on the /session WebSocket:
//   {"kind": ..., "schema_version": 1, "seq": n, "payload": {...}}
// Server kinds: session_info, block_start, trial_start, state, trial_end,
// pause, session_end, error. Client kinds: hello, control, ready.
struct WireMessage {
    std::string kind;
    nlohmann::json payload = nlohmann::json::object();
};

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string encode(const WireMessage& msg, std::uint64_t seq);

enum class ClientKind { Hello, Control, Ready };

struct ClientMessage {
    ClientKind kind = ClientKind::Hello;
    std::uint64_t seq = 0;
    std::optional<std::string> resume_session;  // hello only
    HumanCommandKind command = HumanCommandKind::Brake;  // control only
};

// Throws WireError on malformed JSON, an unknown kind or a schema_version
// other than kWireSchemaVersion.
ClientMessage decode_client(const std::string& text);

// Client-side helper, also used by tests: builds a client frame.
std::string encode_client(const std::string& kind, std::uint64_t seq,
                          const nlohmann::json& payload = nlohmann::json::object());

// Outgoing frames of one connection. Sequence numbers are assigned at push
// time and increase strictly. When the queue is at capacity the oldest state
// frame is dropped; other kinds are never dropped.
class Outbox {
public:
    explicit Outbox(std::size_t capacity = 256) : capacity_(capacity) {}

    // Called (outside the lock) after every successful push.
    void set_notify(std::function<void()> notify);

    void push(const WireMessage& msg);
    std::optional<std::string> try_pop();
    // Waits up to timeout for a frame; used by tests and blocking writers.
    std::optional<std::string> pop_wait(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;
    std::size_t dropped() const;
    std::size_t size() const;

private:
    struct Frame {
        bool is_state = false;
        std::string text;
    };
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Frame> frames_;
    std::size_t capacity_;
    std::uint64_t next_seq_ = 1;
    std::size_t dropped_ = 0;
    bool closed_ = false;
    std::function<void()> notify_;
};

}  // namespace xing
