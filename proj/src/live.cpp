#include "xing/live.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace xing {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kStateInterval = 0.05;  // seconds between state frames (20 Hz)

Clock::duration seconds(double s) {
    return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
}

json state_payload(const WorldState& w) {
    return {{"agent_pos", w.agent.progress},
            {"human_pos", w.human.progress},
            {"agent_speed", w.agent.speed},
            {"human_speed", w.human.speed},
            {"elapsed", w.elapsed},
            {"crashed", w.crashed}};
}

json outcome_payload(const TrialOutcome& o) {
    const auto opt = [](const std::optional<double>& t) { return t ? json(*t) : json(nullptr); };
    return {{"outcome", {{"crashed", o.crashed}, {"timed_out", o.timed_out}, {"aborted", o.aborted}}},
            {"agent_time", opt(o.agent_completion_time)},
            {"human_time", opt(o.human_completion_time)},
            {"end_time", o.end_time}};
}

class FlushingSink final : public EventSink {
public:
    explicit FlushingSink(std::ofstream& out) : out_(out) {}
    void write(const json& event) override { out_ << event.dump() << '\n' << std::flush; }

private:
    std::ofstream& out_;
};

}  // namespace

std::vector<TrackEntry> load_track_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open track manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw std::runtime_error(path.string() + ": expected an array of tracks");
    std::vector<TrackEntry> tracks;
    std::set<std::string> ids;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("track_id") || !e.contains("pool") || !e.contains("file") ||
            !e["track_id"].is_string() || !e["pool"].is_string() || !e["file"].is_string()) {
            throw std::runtime_error(path.string() + ": each entry needs string track_id, pool and file");
        }
        TrackEntry t;
        t.track_id = e["track_id"].get<std::string>();
        try {
            t.pool = condition_from_string(e["pool"].get<std::string>());
        } catch (const std::invalid_argument&) {
            throw std::runtime_error(path.string() + ": track " + t.track_id + " has pool other than happy/sad");
        }
        t.file = e["file"].get<std::string>();
        if (t.file.find("..") != std::string::npos || t.file.empty() || t.file.front() == '/') {
            throw std::runtime_error(path.string() + ": track " + t.track_id + " has an unsafe file name");
        }
        if (!std::filesystem::is_regular_file(dir / t.file)) {
            throw std::runtime_error(path.string() + ": missing audio file " + t.file);
        }
        if (!ids.insert(t.track_id).second) {
            throw std::runtime_error(path.string() + ": duplicate track_id " + t.track_id);
        }
        tracks.push_back(std::move(t));
    }
    return tracks;
}

void check_tracks(const std::vector<TrackEntry>& tracks, const PlanSettings& plan) {
    const auto require = [&](const std::vector<std::string>& ids, MusicCondition pool) {
        for (const auto& id : ids) {
            const auto it = std::find_if(tracks.begin(), tracks.end(),
                                         [&](const TrackEntry& t) { return t.track_id == id; });
            if (it == tracks.end()) throw std::runtime_error("track " + id + " is not in the track manifest");
            if (it->pool != pool) {
                throw std::runtime_error("track " + id + " is listed in the " + std::string(to_string(it->pool)) +
                                         " pool of the manifest");
            }
        }
    };
    require(plan.happy_tracks, MusicCondition::Happy);
    require(plan.sad_tracks, MusicCondition::Sad);
}

// Human input from the connected participant. Losing the connection (or a
// server stop) aborts the trial.
class LiveSession::Human final : public HumanSource {
public:
    explicit Human(LiveSession& s) : s_(s) {}
    void begin_trial(const TrialContext&) override { mark(); }
    std::optional<HumanCommand> command(const WorldState&) override {
        std::lock_guard lock(s_.mu_);
        if (!s_.out_ || s_.stop_ || s_.detach_count_ != detach_mark_) return std::nullopt;
        return HumanCommand{s_.command_, 0.0};
    }
    void mark() {
        std::lock_guard lock(s_.mu_);
        detach_mark_ = s_.detach_count_;
    }

private:
    LiveSession& s_;
    std::uint64_t detach_mark_ = 0;
};

// Paces the session against the wall clock and streams it to the client.
class LiveSession::Presenter final : public SessionObserver {
public:
    explicit Presenter(LiveSession& s) : s_(s) {}

    void on_block_start(const PlanBlock& block, double pause_s) override {
        json payload{{"block", block.block_index},
                     {"condition", to_string(block.condition)},
                     {"track_id", block.track_id},
                     {"pause_ms", std::lround(pause_s * 1000.0)}};
        if (auto it = s_.track_urls_.find(block.track_id); it != s_.track_urls_.end()) payload["url"] = it->second;
        s_.send({"block_start", payload});
        pause(pause_s);
    }

    void on_trial_start(const TrialContext& ctx) override {
        s_.send({"trial_start",
                 {{"trial", ctx.trial_index},
                  {"block", ctx.block->block_index},
                  {"condition", to_string(ctx.block->condition)},
                  {"practice", false}}});
        begin();
    }

    void on_step(const WorldState& world) override { step(world); }

    void on_trial_end(const TrialContext& ctx, const TrialOutcome& outcome, double pause_s) override {
        if (outcome.aborted) return;
        json payload = outcome_payload(outcome);
        payload["trial"] = ctx.trial_index;
        payload["practice"] = false;
        s_.send({"trial_end", payload});
        s_.send({"pause", {{"duration_ms", std::lround(pause_s * 1000.0)}}});
        pause(pause_s);
    }

    void begin() {
        trial_start_ = Clock::now();
        last_state_ = trial_start_ - seconds(1.0);
        last_state_sim_ = -1.0;
    }

    void step(const WorldState& world) {
        const double scale = s_.cfg_.live.time_scale;
        if (scale > 0.0) s_.sleep_until(trial_start_ + seconds(world.elapsed / scale), true);
        const bool final = world.terminal(s_.cfg_.world);
        bool emit = final;
        if (scale > 0.0) {
            emit = emit || Clock::now() - last_state_ >= seconds(kStateInterval);
        } else {
            emit = emit || world.elapsed - last_state_sim_ >= kStateInterval - 1e-9;
        }
        if (emit) {
            last_state_ = Clock::now();
            last_state_sim_ = world.elapsed;
            s_.send({"state", state_payload(world)});
        }
    }

    void pause(double pause_s) {
        const double scale = s_.cfg_.live.time_scale;
        if (scale > 0.0) s_.sleep_until(Clock::now() + seconds(pause_s / scale), false);
    }

private:
    LiveSession& s_;
    Clock::time_point trial_start_{};
    Clock::time_point last_state_{};
    double last_state_sim_ = -1.0;
};

LiveSession::LiveSession(SessionConfig cfg, std::uint64_t seed, bool aware_first, std::string id,
                         std::filesystem::path log_path, std::map<std::string, std::string> track_urls)
    : cfg_(cfg),
      id_(std::move(id)),
      log_path_(std::move(log_path)),
      track_urls_(std::move(track_urls)),
      session_(std::move(cfg), seed, aware_first) {}

LiveSession::~LiveSession() { stop(); }

json LiveSession::session_info() const {
    const auto& plan = session_.plan();
    const auto& w = cfg_.world;
    return {{"session_id", id_},
            {"seed", session_.seed()},
            {"aware_first", plan.counterbalance_aware_first},
            {"block_count", plan.blocks.size()},
            {"trials_per_block", plan.trials_per_block},
            {"total_trials", plan.total_trials()},
            {"next_trial", next_trial_.load()},
            {"warmup_s", cfg_.live.warmup_seconds},
            {"practice", in_warmup_.load()},
            {"dt", w.dt},
            {"state_hz", 1.0 / kStateInterval},
            {"world",
             {{"road_length", w.road_length},
              {"intersection_center", w.intersection_center},
              {"intersection_half_width", w.intersection_half_width},
              {"vehicle_length", w.vehicle_length},
              {"vehicle_width", w.vehicle_width}}}};
}

// session_info goes out before the session thread can see the connection,
// so it is always the first frame.
void LiveSession::attach(std::shared_ptr<Outbox> out) {
    out->push({"session_info", session_info()});
    {
        std::lock_guard lock(mu_);
        out_ = std::move(out);
        command_ = HumanCommandKind::Brake;
    }
    cv_.notify_all();
}

void LiveSession::detach(const Outbox* out) {
    {
        std::lock_guard lock(mu_);
        if (out_.get() != out) return;
        out_.reset();
        ++detach_count_;
    }
    cv_.notify_all();
}

void LiveSession::control(HumanCommandKind command) {
    std::lock_guard lock(mu_);
    command_ = command;
}

void LiveSession::ready() {
    std::lock_guard lock(mu_);
    if (started_ || stop_) return;
    started_ = true;
    thread_ = std::thread([this] { run(); });
}

void LiveSession::stop() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

void LiveSession::send(const WireMessage& msg) {
    std::shared_ptr<Outbox> out;
    {
        std::lock_guard lock(mu_);
        out = out_;
    }
    if (out) out->push(msg);
}

bool LiveSession::connected() const {
    std::lock_guard lock(mu_);
    return out_ != nullptr;
}

bool LiveSession::sleep_until(Clock::time_point deadline, bool abort_on_disconnect) {
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, deadline, [&] { return stop_ || (abort_on_disconnect && !out_); });
    return !(stop_ || (abort_on_disconnect && !out_));
}

bool LiveSession::wait_for_connection() {
    std::unique_lock lock(mu_);
    const auto deadline = Clock::now() + seconds(cfg_.live.resume_timeout_seconds);
    cv_.wait_until(lock, deadline, [&] { return stop_ || out_ != nullptr; });
    return !stop_ && out_ != nullptr;
}

// Practice trials before the logged session: random agent actions from the
// warm-up stream, nothing logged or learned.
void LiveSession::run_warmup() {
    const double budget = cfg_.live.warmup_seconds;
    if (budget <= 0.0) return;
    in_warmup_ = true;
    const WorldConfig& wc = cfg_.world;
    Rng rng = make_rng(session_.seed(), RngStream::Warmup);
    Human human(*this);
    Presenter presenter(*this);
    const MusicCondition condition = session_.plan().blocks.front().condition;
    double used = 0.0;
    int practice_trial = 0;
    while (used < budget) {
        if (!wait_for_connection()) break;
        human.mark();
        send({"trial_start", {{"trial", practice_trial}, {"condition", to_string(condition)}, {"practice", true}}});
        presenter.begin();
        WorldState world = initial_world();
        const auto act = [&] {
            const Action a = action_at(uniform_index(rng, kActionCount));
            const double wait = a == Action::Brake ? sample_wait(rng) : 0.0;
            return agent_command_for(a, wc, wait);
        };
        AgentCommand agent_cmd = act();
        bool aborted = false;
        while (!world.terminal(wc)) {
            const auto cmd = human.command(world);
            if (!cmd) {
                aborted = true;
                break;
            }
            const WorldState prev = world;
            world = step(prev, wc, *cmd, agent_cmd);
            if (!world.terminal(wc) && decision_point(prev.agent, world.agent, world.elapsed, wc)) {
                agent_cmd = act();
            }
            presenter.step(world);
        }
        used += world.elapsed;
        if (aborted) continue;
        TrialOutcome outcome = outcome_of(world, wc);
        json payload = outcome_payload(outcome);
        payload["trial"] = practice_trial++;
        payload["practice"] = true;
        send({"trial_end", payload});
        send({"pause", {{"duration_ms", std::lround(session_.plan().inter_trial_pause * 1000.0)}}});
        presenter.pause(session_.plan().inter_trial_pause);
        used += session_.plan().inter_trial_pause;
    }
    in_warmup_ = false;
}

void LiveSession::run() {
    std::filesystem::create_directories(log_path_.parent_path().empty() ? "." : log_path_.parent_path());
    std::ofstream log(log_path_, std::ios::binary);
    FlushingSink sink(log);
    Human human(*this);
    Presenter presenter(*this);

    run_warmup();
    session_.log_session_start(sink);
    while (!session_.finished()) {
        if (!wait_for_connection()) break;
        session_.run_trial(human, &presenter, &sink);
        next_trial_ = session_.trial_index();
    }
    session_.log_session_end(sink);
    send({"session_end",
          {{"trials", session_.trial_index()},
           {"aborted_trials", session_.aborted_trials()},
           {"completed", session_.finished()}}});
    std::shared_ptr<Outbox> out;
    {
        std::lock_guard lock(mu_);
        out = out_;
    }
    if (out) out->close();
    done_ = true;
}

}  // namespace xing
