#include "xing/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "xing/live.hpp"

namespace xing {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

std::string mime_type(const std::filesystem::path& p) {
    static const std::map<std::string, std::string> types{
        {".html", "text/html"},       {".js", "application/javascript"}, {".mjs", "application/javascript"},
        {".css", "text/css"},         {".json", "application/json"},     {".wav", "audio/wav"},
        {".mp3", "audio/mpeg"},       {".ogg", "audio/ogg"},             {".png", "image/png"},
        {".svg", "image/svg+xml"},    {".ico", "image/x-icon"},          {".txt", "text/plain"},
        {".map", "application/json"},
    };
    const auto it = types.find(p.extension().string());
    return it == types.end() ? "application/octet-stream" : it->second;
}

// Request path to a file under root; nullopt for traversal attempts.
std::optional<std::filesystem::path> safe_join(const std::filesystem::path& root, std::string_view rel) {
    if (auto q = rel.find('?'); q != std::string_view::npos) rel = rel.substr(0, q);
    std::filesystem::path out = root;
    std::size_t pos = 0;
    while (pos <= rel.size()) {
        const auto next = rel.find('/', pos);
        const auto part = rel.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        if (part == ".." || part.find('\\') != std::string_view::npos) return std::nullopt;
        if (!part.empty() && part != ".") out /= std::string(part);
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace

struct Server::Impl {
    ServerOptions opt;
    std::map<std::string, std::string> track_urls;
    asio::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread io_thread;

    std::mutex mu;
    std::condition_variable stopped_cv;
    bool stopped = false;
    bool running = false;
    int next_participant = 0;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions;
    std::vector<std::filesystem::path> logs;

    std::shared_ptr<LiveSession> create_session() {
        std::lock_guard lock(mu);
        std::filesystem::create_directories(opt.log_dir);
        for (;;) {
            const int n = next_participant++;
            const std::uint64_t seed = opt.config.plan.seed + static_cast<std::uint64_t>(n);
            char name[96];
            std::snprintf(name, sizeof name, "live_session_%03d_seed_%llu", n,
                          static_cast<unsigned long long>(seed));
            const auto path = opt.log_dir / (std::string(name) + ".jsonl");
            if (std::filesystem::exists(path)) continue;
            const bool aware_first = (n % 2 == 1) != opt.config.plan.aware_first;
            auto s = std::make_shared<LiveSession>(opt.config, seed, aware_first, name, path, track_urls);
            sessions[name] = s;
            logs.push_back(path);
            return s;
        }
    }

    std::shared_ptr<LiveSession> find_session(const std::string& id) {
        std::lock_guard lock(mu);
        const auto it = sessions.find(id);
        if (it == sessions.end() || it->second->done()) return nullptr;
        return it->second;
    }

    void accept();
};

namespace {

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket socket, Server::Impl& server)
        : ws_(std::move(socket)), server_(server), out_(std::make_shared<Outbox>()) {}

    void start(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        auto self = shared_from_this();
        std::weak_ptr<WsConnection> weak = self;
        auto ex = ws_.get_executor();
        out_->set_notify([weak, ex] {
            asio::post(ex, [weak] {
                if (auto c = weak.lock()) c->pump();
            });
        });
        ws_.async_accept(req, [self](beast::error_code ec) {
            if (ec) return self->finish();
            self->read();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->finish();
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->handle(text);
            if (!self->closing_) self->read();
        });
    }

    // No read is pending after this, so the posted pump keeps the connection
    // alive until the error frame and the close are written.
    void fail(const std::string& message) {
        out_->push({"error", {{"message", message}}});
        closing_ = true;
        out_->close();
        asio::post(ws_.get_executor(), [self = shared_from_this()] { self->pump(); });
    }

    void handle(const std::string& text) {
        ClientMessage msg;
        try {
            msg = decode_client(text);
        } catch (const WireError& e) {
            return fail(e.what());
        }
        if (have_seq_ && msg.seq <= last_seq_) return fail("client sequence numbers must increase");
        have_seq_ = true;
        last_seq_ = msg.seq;
        switch (msg.kind) {
            case ClientKind::Hello:
                if (live_) return fail("duplicate hello");
                if (msg.resume_session) {
                    live_ = server_.find_session(*msg.resume_session);
                    if (!live_) return fail("unknown or finished session '" + *msg.resume_session + "'");
                } else {
                    live_ = server_.create_session();
                }
                live_->attach(out_);
                break;
            case ClientKind::Control:
                if (!live_) return fail("control before hello");
                live_->control(msg.command);
                break;
            case ClientKind::Ready:
                if (!live_) return fail("ready before hello");
                live_->ready();
                break;
        }
    }

    void pump() {
        if (writing_) return;
        if (auto frame = out_->try_pop()) {
            writing_ = true;
            pending_ = std::move(*frame);
            ws_.text(true);
            ws_.async_write(asio::buffer(pending_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
                self->writing_ = false;
                if (ec) return self->finish();
                self->pump();
            });
            return;
        }
        if (out_->closed() && !close_sent_ && ws_.is_open()) {
            close_sent_ = true;
            closing_ = true;
            ws_.async_close(websocket::close_code::normal,
                            [self = shared_from_this()](beast::error_code) { self->finish(); });
        }
    }

    void finish() {
        if (finished_) return;
        finished_ = true;
        if (live_) live_->detach(out_.get());
        out_->set_notify(nullptr);
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    Server::Impl& server_;
    std::shared_ptr<Outbox> out_;
    std::shared_ptr<LiveSession> live_;
    std::string pending_;
    bool writing_ = false;
    bool closing_ = false;
    bool close_sent_ = false;
    bool finished_ = false;
    bool have_seq_ = false;
    std::uint64_t last_seq_ = 0;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->route();
        });
    }

    void route() {
        if (websocket::is_upgrade(req_)) {
            if (req_.target() != "/session") return reply(http::status::not_found, "no WebSocket endpoint here\n");
            stream_.expires_never();
            std::make_shared<WsConnection>(stream_.release_socket(), server_)->start(std::move(req_));
            return;
        }
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            return reply(http::status::method_not_allowed, "GET only\n");
        }
        const std::string_view target(req_.target().data(), req_.target().size());
        std::optional<std::filesystem::path> file;
        if (target.rfind("/tracks/", 0) == 0) {
            file = safe_join(server_.opt.tracks_dir, target.substr(8));
        } else {
            file = safe_join(server_.opt.static_dir, target.substr(1));
            if (file && std::filesystem::is_directory(*file)) *file /= "index.html";
        }
        if (!file) return reply(http::status::bad_request, "bad path\n");
        std::ifstream in(*file, std::ios::binary);
        if (!in || !std::filesystem::is_regular_file(*file)) return reply(http::status::not_found, "not found\n");
        std::ostringstream body;
        body << in.rdbuf();
        reply(http::status::ok, body.str(), mime_type(*file));
    }

    void reply(http::status status, std::string body, const std::string& type = "text/plain") {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::server, "xing");
        res->set(http::field::content_type, type);
        res->keep_alive(req_.keep_alive());
        if (req_.method() != http::verb::head) res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec || !res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Server::Impl& server_;
};

}  // namespace

void Server::Impl::accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<HttpConnection>(std::move(socket), *this)->start();
        accept();
    });
}

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->opt = std::move(options);
    impl_->opt.config.validate();
    const auto tracks = load_track_manifest(impl_->opt.tracks_dir);
    check_tracks(tracks, impl_->opt.config.plan);
    for (const auto& t : tracks) impl_->track_urls[t.track_id] = "/tracks/" + t.file;
}

Server::~Server() { stop(); }

void Server::start() {
    auto& d = *impl_;
    const auto addr = asio::ip::make_address(d.opt.address);
    const tcp::endpoint ep(addr, d.opt.port);
    d.acceptor.open(ep.protocol());
    d.acceptor.set_option(asio::socket_base::reuse_address(true));
    d.acceptor.bind(ep);
    d.acceptor.listen(asio::socket_base::max_listen_connections);
    d.accept();
    {
        std::lock_guard lock(d.mu);
        d.running = true;
    }
    d.io_thread = std::thread([&d] { d.ioc.run(); });
}

void Server::stop() {
    auto& d = *impl_;
    std::vector<std::shared_ptr<LiveSession>> live;
    {
        std::lock_guard lock(d.mu);
        if (d.stopped) return;
        d.stopped = true;
        for (auto& [id, s] : d.sessions) live.push_back(s);
    }
    for (auto& s : live) s->stop();
    if (d.io_thread.joinable()) {
        // Give the final frames a moment to flush before tearing down.
        asio::post(d.ioc, [&d] {
            beast::error_code ignored;
            d.acceptor.close(ignored);
        });
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        d.ioc.stop();
        d.io_thread.join();
    }
    d.stopped_cv.notify_all();
}

void Server::wait() {
    auto& d = *impl_;
    std::unique_lock lock(d.mu);
    d.stopped_cv.wait(lock, [&] { return d.stopped; });
}

unsigned short Server::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : ep.port();
}

std::vector<std::filesystem::path> Server::session_logs() const {
    std::lock_guard lock(impl_->mu);
    return impl_->logs;
}

}  // namespace xing
