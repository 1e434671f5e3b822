// Command-line entry point: simulate, analyze, verify, serve, replay.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "xing/analytics.hpp"
#include "xing/batch.hpp"
#include "xing/config.hpp"
#include "xing/log.hpp"
#include "xing/replay.hpp"
#include "xing/server.hpp"
#include "xing/verify.hpp"

namespace {

xing::SessionConfig config_or_default(const std::string& path) {
    return path.empty() ? xing::SessionConfig{} : xing::load_config(path);
}

std::filesystem::path env_path(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

int simulate(const std::string& config_path, int sessions, std::uint64_t seed, const std::string& out) {
    xing::BatchSpec spec;
    spec.config = config_or_default(config_path);
    spec.n_sessions = sessions;
    spec.base_seed = seed;
    spec.out_dir = out;
    const auto entries = xing::run_batch(spec);
    for (const auto& e : entries) {
        std::cout << e.log_file << "  seed " << e.seed << "  aware_first " << (e.aware_first ? "yes" : "no") << '\n';
    }
    std::cout << "wrote " << entries.size() << " session logs and manifest.json to " << out << '\n';
    return 0;
}

int analyze(const std::string& logs_dir, const std::string& report_path) {
    std::vector<std::string> warnings;
    const auto logs = xing::read_log_dir(logs_dir, warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    const auto report = xing::build_report(logs);
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + report_path);
    out << report.dump(2) << '\n';
    std::cout << xing::render_tables(report);
    return 0;
}

int verify() {
    const auto results = xing::run_oracle_suite(xing::VerifyOptions{});
    bool ok = true;
    for (const auto& r : results) {
        std::printf("[%s] %-26s %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
                    r.seconds);
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

int replay(const std::string& path) {
    const auto log = xing::read_log(path);
    const auto result = xing::replay(log);
    if (result.divergence) {
        const auto& d = *result.divergence;
        std::cout << "DIVERGED at attempt " << d.attempt << " (trial " << d.trial_index << "): " << d.what << '\n';
        return 1;
    }
    std::cout << "replayed " << result.attempts_checked << " trial attempts, 0 divergences\n";
    return 0;
}

int serve(const std::string& config_path, unsigned short port, const std::string& tracks) {
    xing::ServerOptions opt;
    opt.config = config_or_default(config_path);
    opt.port = port;
    opt.tracks_dir = tracks;
    opt.log_dir = env_path("XING_LOG_DIR", "logs/live");
    opt.static_dir = env_path("XING_UI_DIR", "web-ui/dist");

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    xing::Server server(opt);
    server.start();
    std::cout << "serving on http://" << opt.address << ':' << server.port() << "  (WebSocket /session, logs in "
              << opt.log_dir.string() << ")" << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "stopping" << std::endl;
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Music-conditioned intersection crossing: simulation, analysis and live sessions"};
    app.require_subcommand(1);

    std::string config_path, out_dir, logs_dir, report_path, tracks = "assets/tracks", log_path;
    int sessions = 20;
    std::uint64_t seed = 0;
    unsigned short port = 8080;

    auto* sim = app.add_subcommand("simulate", "run synthetic sessions");
    sim->add_option("--config", config_path, "YAML or JSON config")->check(CLI::ExistingFile);
    sim->add_option("--sessions", sessions, "number of sessions")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "base seed; session i uses seed + i");
    sim->add_option("--out", out_dir, "output directory")->required();

    auto* ana = app.add_subcommand("analyze", "tables and statistics from session logs");
    ana->add_option("--logs", logs_dir, "directory of .jsonl session logs")->required()->check(CLI::ExistingDirectory);
    ana->add_option("--report", report_path, "JSON report path")->required();

    auto* ver = app.add_subcommand("verify", "run the built-in oracle suite");

    auto* srv = app.add_subcommand("serve", "live session server");
    srv->add_option("--config", config_path, "YAML or JSON config")->check(CLI::ExistingFile);
    srv->add_option("--port", port, "TCP port");
    srv->add_option("--tracks", tracks, "track directory holding manifest.json")->check(CLI::ExistingDirectory);

    auto* rep = app.add_subcommand("replay", "re-execute a session log and compare");
    rep->add_option("--log", log_path, "session log")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return simulate(config_path, sessions, seed, out_dir);
        if (*ana) return analyze(logs_dir, report_path);
        if (*ver) return verify();
        if (*srv) return serve(config_path, port, tracks);
        if (*rep) return replay(log_path);
    } catch (const xing::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
