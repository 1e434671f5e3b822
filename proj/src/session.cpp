#include "xing/session.hpp"

namespace xing {

using nlohmann::json;

namespace {

json optional_time(const std::optional<double>& t) {
    return t ? json(*t) : json(nullptr);
}

json state_json(const StateVector& s) {
    json arr = json::array();
    for (double v : s.features()) arr.push_back(v);
    return arr;
}

}  // namespace

void JsonlSink::write(const json& event) { os_ << event.dump() << '\n'; }

SyntheticHuman::SyntheticHuman(const ConditionedDriver& profiles, const WorldConfig& cfg,
                               std::uint64_t seed)
    : driver_(profiles, cfg), rng_(make_rng(seed, RngStream::Driver)) {}

void SyntheticHuman::begin_trial(const TrialContext& ctx) {
    driver_.begin_trial(ctx.block->condition, rng_);
}

std::optional<HumanCommand> SyntheticHuman::command(const WorldState& world) {
    return driver_.decide(world);
}

AgentCommand agent_command_for(Action a, const WorldConfig& cfg, double stop_wait) {
    switch (a) {
        case Action::Fast: return AgentCommand{cfg.speed_fast, 0.0};
        case Action::Slow: return AgentCommand{cfg.speed_slow, 0.0};
        case Action::Brake: return AgentCommand{0.0, stop_wait};
    }
    return {};
}

Session::Session(SessionConfig cfg, std::uint64_t seed, bool aware_first)
    : cfg_(std::move(cfg)),
      seed_(seed),
      agent_rng_(make_rng(seed, RngStream::Agent)),
      world_rng_(make_rng(seed, RngStream::World)) {
    cfg_.validate();
    cfg_.plan.seed = seed;
    cfg_.plan.aware_first = aware_first;
    plan_ = build_plan(seed, aware_first, cfg_.plan.happy_tracks, cfg_.plan.sad_tracks,
                       cfg_.plan.block_count, cfg_.plan.trials_per_block);
    plan_.inter_trial_pause = cfg_.plan.inter_trial_pause;
    plan_.pre_block_pause = cfg_.plan.pre_block_pause;
    Rng init_rng = make_rng(seed, RngStream::NetInit);
    pair_ = ModelPair::create(init_rng);
}

void Session::log_session_start(EventSink& sink) const {
    json blocks = json::array();
    for (const auto& b : plan_.blocks) {
        blocks.push_back(
            {{"block", b.block_index}, {"condition", to_string(b.condition)}, {"track_id", b.track_id}});
    }
    sink.write({{"event", "session_start"},
                {"schema_version", kLogSchemaVersion},
                {"seed", seed_},
                {"aware_first", plan_.counterbalance_aware_first},
                {"total_trials", plan_.total_trials()},
                {"config", to_json(cfg_)},
                {"plan", {{"trials_per_block", plan_.trials_per_block}, {"blocks", blocks}}}});
}

void Session::log_session_end(EventSink& sink) const {
    sink.write({{"event", "session_end"},
                {"schema_version", kLogSchemaVersion},
                {"trials", trial_index_},
                {"aborted_trials", aborted_}});
}

std::optional<TrialRecord> Session::run_trial(HumanSource& human, SessionObserver* observer,
                                              EventSink* sink) {
    if (finished()) throw ContractViolation("run_trial: session plan is exhausted");
    const WorldConfig& wc = cfg_.world;
    const PlanBlock& block = plan_.block_for_trial(trial_index_);
    const MusicCondition condition = block.condition;

    if (block.block_index != last_block_started_) {
        last_block_started_ = block.block_index;
        if (sink) {
            sink->write({{"event", "block_start"},
                         {"block", block.block_index},
                         {"condition", to_string(condition)},
                         {"track_id", block.track_id},
                         {"pause_s", plan_.pre_block_pause}});
        }
        if (observer) observer->on_block_start(block, plan_.pre_block_pause);
    }

    TrialContext ctx;
    ctx.trial_index = trial_index_;
    ctx.block = &block;
    ctx.mode = mode_for_trial(trial_index_, plan_.counterbalance_aware_first, plan_.total_trials());

    TrialRecord rec;
    rec.trial_index = trial_index_;
    rec.block_index = block.block_index;
    rec.condition = condition;
    rec.mode = ctx.mode;

    if (sink) {
        sink->write({{"event", "trial_start"},
                     {"trial", trial_index_},
                     {"block", block.block_index},
                     {"condition", to_string(condition)},
                     {"mode", to_string(ctx.mode)}});
    }
    if (observer) observer->on_trial_start(ctx);
    human.begin_trial(ctx);

    WorldState world = initial_world();
    EpisodeTrace episode;
    episode.block_index = block.block_index;
    episode.trial_index = trial_index_;
    episode.condition = condition;

    StateVector pending_state;
    Action pending_action = Action::Fast;
    AgentCommand agent_cmd;

    const auto decide = [&](DecisionPoint dp) {
        pending_state = encode_state(world, condition, true, wc);
        pending_action = select_action(ctx.mode, pair_, world, condition, wc, agent_rng_);
        const double wait = pending_action == Action::Brake ? sample_wait(world_rng_) : 0.0;
        agent_cmd = agent_command_for(pending_action, wc, wait);
        rec.decisions.push_back(DecisionRecord{dp, world.steps, pending_state, pending_action});
        if (sink) {
            sink->write({{"event", "decision"},
                         {"trial", trial_index_},
                         {"step", world.steps},
                         {"point", to_string(dp)},
                         {"action", to_string(pending_action)},
                         {"state", state_json(pending_state)}});
        }
    };

    if (auto dp = decision_point(world.agent, world.agent, world.elapsed, wc)) decide(*dp);

    std::optional<HumanCommand> last_cmd;
    bool aborted = false;
    while (!world.terminal(wc)) {
        const auto cmd = human.command(world);
        if (!cmd) {
            aborted = true;
            break;
        }
        if (!last_cmd || !(*cmd == *last_cmd)) {
            last_cmd = cmd;
            rec.human_commands.push_back(CommandRecord{world.steps, *cmd});
            if (sink) {
                sink->write({{"event", "human_command"},
                             {"trial", trial_index_},
                             {"step", world.steps},
                             {"command", to_string(cmd->kind)},
                             {"speed", cmd->cruise_speed}});
            }
        }

        const WorldState prev = world;
        world = step(prev, wc, *cmd, agent_cmd);

        if (!world.terminal(wc)) {
            if (auto dp = decision_point(prev.agent, world.agent, world.elapsed, wc)) {
                episode.transitions.push_back(Transition{
                    pending_state, pending_action, 0.0, encode_state(world, condition, true, wc), false});
                decide(*dp);
            }
        }
        if (sink && world.steps % cfg_.state_sample_every == 0) {
            sink->write({{"event", "state_sample"},
                         {"trial", trial_index_},
                         {"step", world.steps},
                         {"elapsed", world.elapsed},
                         {"agent_x", world.agent.progress},
                         {"human_y", world.human.progress},
                         {"agent_speed", world.agent.speed},
                         {"human_speed", world.human.speed}});
        }
        if (observer) observer->on_step(world);
    }

    rec.outcome = outcome_of(world, wc);
    rec.outcome.aborted = aborted;
    if (aborted) {
        ++aborted_;
        if (sink) {
            sink->write({{"event", "trial_end"},
                         {"trial", trial_index_},
                         {"block", block.block_index},
                         {"condition", to_string(condition)},
                         {"mode", to_string(ctx.mode)},
                         {"crashed", false},
                         {"timed_out", false},
                         {"aborted", true},
                         {"agent_time", nullptr},
                         {"human_time", nullptr},
                         {"end_time", world.elapsed},
                         {"end_step", world.steps},
                         {"reward", nullptr},
                         {"pause_s", plan_.inter_trial_pause}});
        }
        TrialOutcome aborted_outcome;
        aborted_outcome.aborted = true;
        aborted_outcome.end_time = world.elapsed;
        aborted_outcome.end_step = world.steps;
        if (observer) observer->on_trial_end(ctx, aborted_outcome, plan_.inter_trial_pause);
        return std::nullopt;
    }

    episode.transitions.push_back(
        Transition{pending_state, pending_action, 0.0, encode_state(world, condition, true, wc), true});
    episode.outcome = rec.outcome;
    rec.reward = episode_reward(rec.outcome, cfg_.reward, wc);
    episode = backpropagate_returns(std::move(episode), rec.reward, cfg_.reward);
    history_.append(std::move(episode));

    const bool train = !cfg_.learning.freeze_after_exploration || ctx.mode == AgentMode::Explore;
    TrainStats stats;
    if (train) stats = train_after_trial(pair_, history_, cfg_.reward, cfg_.learning, agent_rng_);

    if (sink) {
        sink->write({{"event", "train_stats"},
                     {"trial", trial_index_},
                     {"trained", train},
                     {"history", history_.size()},
                     {"updates", stats.updates},
                     {"loss_unaware", stats.mean_loss_unaware},
                     {"loss_aware", stats.mean_loss_aware}});
        sink->write({{"event", "trial_end"},
                     {"trial", trial_index_},
                     {"block", block.block_index},
                     {"condition", to_string(condition)},
                     {"mode", to_string(ctx.mode)},
                     {"crashed", rec.outcome.crashed},
                     {"timed_out", rec.outcome.timed_out},
                     {"aborted", false},
                     {"agent_time", optional_time(rec.outcome.agent_completion_time)},
                     {"human_time", optional_time(rec.outcome.human_completion_time)},
                     {"end_time", rec.outcome.end_time},
                     {"end_step", rec.outcome.end_step},
                     {"reward", rec.reward},
                     {"pause_s", plan_.inter_trial_pause}});
    }
    if (observer) observer->on_trial_end(ctx, rec.outcome, plan_.inter_trial_pause);

    records_.push_back(rec);
    ++trial_index_;
    return rec;
}

void run_session(Session& session, HumanSource& human, SessionObserver* observer,
                 EventSink* sink) {
    if (sink) session.log_session_start(*sink);
    while (!session.finished()) session.run_trial(human, observer, sink);
    if (sink) session.log_session_end(*sink);
}

}  // namespace xing
