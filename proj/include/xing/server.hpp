#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "xing/config.hpp"

namespace xing {

struct ServerOptions {
    SessionConfig config;
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::filesystem::path tracks_dir = "assets/tracks";
    std::filesystem::path static_dir = "web-ui/dist";
    std::filesystem::path log_dir = "logs/live";
};

// HTTP + WebSocket front end. GET /session upgrades to the WebSocket wire
// protocol; GET /tracks/manifest.json and /tracks/<file> serve the track
// manifest and audio; everything else is a static file under static_dir.
// Participant n (0-based, in connection order) runs with seed plan.seed + n
// and the model order flipped on every other participant.
class Server {
public:
    // Loads and checks the track manifest; throws std::runtime_error.
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts serving on a background thread.
    void start();
    // Stops live sessions (finalizing their logs) and the network thread.
    void stop();
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();

    unsigned short port() const;
    std::vector<std::filesystem::path> session_logs() const;

    struct Impl;  // defined in server.cpp

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace xing
