#include "xing/wire.hpp"

#include <algorithm>

namespace xing {

using nlohmann::json;

std::string encode(const WireMessage& msg, std::uint64_t seq) {
    return json{{"kind", msg.kind}, {"schema_version", kWireSchemaVersion}, {"seq", seq}, {"payload", msg.payload}}
        .dump();
}

std::string encode_client(const std::string& kind, std::uint64_t seq, const json& payload) {
    return json{{"kind", kind}, {"schema_version", kWireSchemaVersion}, {"seq", seq}, {"payload", payload}}.dump();
}

ClientMessage decode_client(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error&) {
        throw WireError("message is not valid JSON");
    }
    if (!j.is_object()) throw WireError("message is not a JSON object");
    const auto version = j.find("schema_version");
    if (version == j.end() || !version->is_number_integer()) throw WireError("message lacks schema_version");
    if (version->get<int>() != kWireSchemaVersion) {
        throw WireError("unsupported schema_version " + std::to_string(version->get<int>()) + " (server speaks " +
                        std::to_string(kWireSchemaVersion) + ")");
    }
    const auto seq = j.find("seq");
    if (seq == j.end() || !seq->is_number_unsigned()) throw WireError("message lacks a sequence number");
    const auto kind = j.find("kind");
    if (kind == j.end() || !kind->is_string()) throw WireError("message lacks kind");
    const json payload = j.value("payload", json::object());
    if (!payload.is_object()) throw WireError("payload is not an object");

    ClientMessage msg;
    msg.seq = seq->get<std::uint64_t>();
    const auto k = kind->get<std::string>();
    if (k == "hello") {
        msg.kind = ClientKind::Hello;
        if (auto r = payload.find("resume"); r != payload.end() && !r->is_null()) {
            if (!r->is_string()) throw WireError("hello.resume must be a session id string");
            msg.resume_session = r->get<std::string>();
        }
    } else if (k == "control") {
        msg.kind = ClientKind::Control;
        const auto c = payload.find("command");
        if (c == payload.end() || !c->is_string()) throw WireError("control lacks command");
        try {
            msg.command = human_command_from_string(c->get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw WireError(e.what());
        }
    } else if (k == "ready") {
        msg.kind = ClientKind::Ready;
    } else {
        throw WireError("unknown message kind '" + k + "'");
    }
    return msg;
}

void Outbox::set_notify(std::function<void()> notify) {
    std::lock_guard lock(mu_);
    notify_ = std::move(notify);
}

void Outbox::push(const WireMessage& msg) {
    std::function<void()> notify;
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        if (frames_.size() >= capacity_) {
            auto it = std::find_if(frames_.begin(), frames_.end(), [](const Frame& f) { return f.is_state; });
            if (it != frames_.end()) {
                frames_.erase(it);
                ++dropped_;
            }
        }
        frames_.push_back(Frame{msg.kind == "state", encode(msg, next_seq_++)});
        notify = notify_;
    }
    cv_.notify_all();
    if (notify) notify();
}

std::optional<std::string> Outbox::try_pop() {
    std::lock_guard lock(mu_);
    if (frames_.empty()) return std::nullopt;
    std::string text = std::move(frames_.front().text);
    frames_.pop_front();
    return text;
}

std::optional<std::string> Outbox::pop_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !frames_.empty() || closed_; });
    if (frames_.empty()) return std::nullopt;
    std::string text = std::move(frames_.front().text);
    frames_.pop_front();
    return text;
}

void Outbox::close() {
    std::function<void()> notify;
    {
        std::lock_guard lock(mu_);
        closed_ = true;
        notify = notify_;
    }
    cv_.notify_all();
    if (notify) notify();
}

bool Outbox::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

std::size_t Outbox::dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
}

std::size_t Outbox::size() const {
    std::lock_guard lock(mu_);
    return frames_.size();
}

}  // namespace xing
