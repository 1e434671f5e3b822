#include "xing/replay.hpp"

#include <sstream>

namespace xing {

namespace {

std::string show(const std::optional<double>& v) {
    if (!v) return "null";
    std::ostringstream os;
    os.precision(17);
    os << *v;
    return os.str();
}

std::optional<std::string> compare_trial(const LoggedTrial& want, const LoggedTrial& got) {
    if (want.trial_index != got.trial_index) return "trial index " + std::to_string(got.trial_index);
    if (want.block_index != got.block_index) return "block index";
    if (want.condition != got.condition) return "condition";
    if (want.mode != got.mode) return "agent mode";
    const std::size_t nd = std::min(want.decisions.size(), got.decisions.size());
    for (std::size_t i = 0; i < nd; ++i) {
        const auto& a = want.decisions[i];
        const auto& b = got.decisions[i];
        const std::string where = "decision " + std::to_string(i) + " ";
        if (a.step != b.step) return where + "step (logged " + std::to_string(a.step) + ", replayed " + std::to_string(b.step) + ")";
        if (a.point != b.point) return where + "point";
        if (a.action != b.action) {
            return where + "action (logged " + std::string(to_string(a.action)) + ", replayed " +
                   std::string(to_string(b.action)) + ")";
        }
        if (a.state != b.state) return where + "state";
    }
    if (want.decisions.size() != got.decisions.size()) return "decision count";
    if (want.aborted != got.aborted) return "aborted flag";
    if (want.crashed != got.crashed) return "crashed flag";
    if (want.timed_out != got.timed_out) return "timed_out flag";
    if (want.end_step != got.end_step) return "end step";
    if (want.end_time != got.end_time) return "end time";
    if (want.agent_time != got.agent_time) {
        return "agent time (logged " + show(want.agent_time) + ", replayed " + show(got.agent_time) + ")";
    }
    if (want.human_time != got.human_time) {
        return "human time (logged " + show(want.human_time) + ", replayed " + show(got.human_time) + ")";
    }
    if (want.reward != got.reward) {
        return "reward (logged " + show(want.reward) + ", replayed " + show(got.reward) + ")";
    }
    return std::nullopt;
}

}  // namespace

ScriptedHuman::ScriptedHuman(const std::vector<LoggedTrial>& attempts) : attempts_(attempts) {}

void ScriptedHuman::begin_trial(const TrialContext&) {
    if (next_ >= attempts_.size()) throw ContractViolation("ScriptedHuman: no logged attempts left");
    current_ = &attempts_[next_++];
    cursor_ = 0;
}

std::optional<HumanCommand> ScriptedHuman::command(const WorldState& world) {
    if (current_ == nullptr) throw ContractViolation("ScriptedHuman::command before begin_trial");
    if (current_->aborted && world.steps >= current_->end_step) return std::nullopt;
    const auto& cmds = current_->human_commands;
    while (cursor_ + 1 < cmds.size() && cmds[cursor_ + 1].step <= world.steps) ++cursor_;
    if (cmds.empty() || cmds[cursor_].step > world.steps) {
        // Nothing recorded yet for this step: the log cannot drive the trial.
        return std::nullopt;
    }
    return cmds[cursor_].command;
}

ReplayResult replay(const SessionLog& log) {
    ReplayResult result;
    std::stringstream buffer;
    JsonlSink sink(buffer);
    Session session(log.config, log.seed, log.aware_first);
    ScriptedHuman human(log.trials);
    session.log_session_start(sink);
    while (!session.finished() && human.remaining() > 0) session.run_trial(human, nullptr, &sink);
    if (session.finished()) session.log_session_end(sink);

    const SessionLog again = parse_log(buffer, "<replay>");
    const std::size_t n = std::min(log.trials.size(), again.trials.size());
    for (std::size_t i = 0; i < n; ++i) {
        ++result.attempts_checked;
        if (auto what = compare_trial(log.trials[i], again.trials[i])) {
            result.divergence = Divergence{static_cast<int>(i), log.trials[i].trial_index, *what};
            return result;
        }
    }
    if (log.trials.size() != again.trials.size()) {
        const int trial = n < log.trials.size() ? log.trials[n].trial_index : again.trials[n].trial_index;
        result.divergence = Divergence{static_cast<int>(n), trial,
                                       "logged " + std::to_string(log.trials.size()) +
                                           " trial attempts, replay produced " +
                                           std::to_string(again.trials.size())};
    }
    return result;
}

}  // namespace xing
