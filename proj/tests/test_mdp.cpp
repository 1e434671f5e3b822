#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xing/mdp.hpp"

using namespace xing;

namespace {

EpisodeTrace episode_of_length(std::size_t n) {
    EpisodeTrace ep;
    for (std::size_t i = 0; i < n; ++i) {
        Transition tr;
        tr.s.data[0] = static_cast<double>(i);
        tr.a = action_at(i % 3);
        tr.s_next.data[0] = static_cast<double>(i + 1);
        tr.terminal = (i + 1 == n);
        ep.transitions.push_back(tr);
    }
    return ep;
}

WorldState random_world(Rng& rng, const WorldConfig& cfg) {
    WorldState w;
    w.agent.progress = uniform(rng, 0.0, cfg.road_length);
    w.human.progress = uniform(rng, 0.0, cfg.road_length);
    w.agent.speed = uniform(rng, 0.0, cfg.speed_fast);
    w.human.speed = uniform(rng, -cfg.speed_reverse, cfg.speed_fast);
    w.steps = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(cfg.max_steps()) + 1));
    w.elapsed = static_cast<double>(w.steps) * cfg.dt;
    w.agent.reached_end = bernoulli(rng, 0.2);
    w.human.reached_end = bernoulli(rng, 0.2);
    w.crashed = bernoulli(rng, 0.1);
    return w;
}

}  // namespace

TEST(Actions, IndexBijection) {
    EXPECT_EQ(index_of(Action::Fast), 0u);
    EXPECT_EQ(index_of(Action::Slow), 1u);
    EXPECT_EQ(index_of(Action::Brake), 2u);
    for (std::size_t i = 0; i < kActionCount; ++i) {
        EXPECT_EQ(index_of(action_at(i)), i);
        EXPECT_EQ(action_from_string(to_string(action_at(i))), action_at(i));
    }
}

TEST(EncodeState, FreshTrialUnaware) {
    const WorldConfig cfg;
    const StateVector v = encode_state(initial_world(), MusicCondition::Happy, false, cfg);
    ASSERT_EQ(v.size, 8u);
    EXPECT_EQ(v[5], 0.0);
    EXPECT_EQ(v[6], 0.0);
    EXPECT_EQ(v[7], 0.0);
    EXPECT_EQ(v[0], -1.0);
    EXPECT_EQ(v[4], -1.0);
}

TEST(EncodeState, AwareAppendsMusicFlag) {
    const WorldConfig cfg;
    Rng rng = make_rng(1, RngStream::World);
    const WorldState w = random_world(rng, cfg);
    const StateVector u = encode_state(w, MusicCondition::Happy, false, cfg);
    const StateVector happy = encode_state(w, MusicCondition::Happy, true, cfg);
    const StateVector sad = encode_state(w, MusicCondition::Sad, true, cfg);
    ASSERT_EQ(happy.size, 9u);
    EXPECT_EQ(happy[8], 1.0);
    EXPECT_EQ(sad[8], 0.0);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(happy[i], u[i]);
}

TEST(EncodeState, CrashedFlagAtIndexSeven) {
    const WorldConfig cfg;
    WorldState w;
    w.crashed = true;
    EXPECT_EQ(encode_state(w, MusicCondition::Sad, false, cfg)[7], 1.0);
}

TEST(EncodeState, PropertiesOverRandomWorlds) {
    const WorldConfig cfg;
    Rng rng = make_rng(2, RngStream::World);
    for (int i = 0; i < 2000; ++i) {
        const WorldState w = random_world(rng, cfg);
        const auto c = bernoulli(rng, 0.5) ? MusicCondition::Happy : MusicCondition::Sad;
        const StateVector u = encode_state(w, c, false, cfg);
        const StateVector a = encode_state(w, c, true, cfg);
        ASSERT_EQ(u, encode_state(w, c, false, cfg));
        ASSERT_EQ(a.unaware_view(), u);
        for (std::size_t k = 0; k < 5; ++k) {
            ASSERT_GE(u[k], -1.0);
            ASSERT_LE(u[k], 1.0);
        }
        for (std::size_t k = 5; k < 8; ++k) ASSERT_TRUE(u[k] == 0.0 || u[k] == 1.0);
        ASSERT_EQ(a[8], music_flag(c));
    }
}

TEST(TerminalReward, Examples) {
    const RewardParams p;
    EXPECT_EQ(terminal_reward(10.0, false, p), -10.0);
    EXPECT_EQ(terminal_reward(5.0, true, p), -105.0);
    EXPECT_EQ(terminal_reward(0.0, false, p), 0.0);
}

TEST(TerminalReward, MonotoneInTimeAndCrash) {
    const RewardParams p;
    for (double t = 0.0; t < 60.0; t += 0.37) {
        EXPECT_GT(terminal_reward(t, false, p), terminal_reward(t + 0.01, false, p));
        EXPECT_GT(terminal_reward(t, false, p), terminal_reward(t, true, p));
    }
}

TEST(EpisodeReward, TimeoutChargedMaxTrialTime) {
    const RewardParams p;
    const WorldConfig cfg;
    TrialOutcome out;
    out.timed_out = true;
    out.end_time = cfg.max_trial_time;
    EXPECT_EQ(episode_reward(out, p, cfg), -cfg.max_trial_time);
    out = TrialOutcome{};
    out.crashed = true;
    out.end_time = 7.5;
    EXPECT_EQ(episode_reward(out, p, cfg), -107.5);
}

TEST(BackpropagateReturns, SingleTransition) {
    const auto ep = backpropagate_returns(episode_of_length(1), -10.0, RewardParams{});
    ASSERT_EQ(ep.transitions.size(), 1u);
    EXPECT_EQ(ep.transitions[0].r, -10.0);
}

TEST(BackpropagateReturns, ThreeTransitions) {
    const auto ep = backpropagate_returns(episode_of_length(3), -10.0, RewardParams{});
    const auto expected = oracle::discounted_rewards(3, -10.0, 0.9);
    ASSERT_EQ(ep.transitions.size(), 3u);
    EXPECT_NEAR(ep.transitions[0].r, -8.1, 1e-12);
    EXPECT_NEAR(ep.transitions[1].r, -9.0, 1e-12);
    EXPECT_EQ(ep.transitions[2].r, -10.0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(ep.transitions[i].r, expected[i], 1e-12);
}

TEST(BackpropagateReturns, RejectsMalformedEpisodes) {
    const RewardParams p;
    EXPECT_THROW(backpropagate_returns(EpisodeTrace{}, -1.0, p), std::invalid_argument);
    auto no_terminal = episode_of_length(2);
    no_terminal.transitions.back().terminal = false;
    EXPECT_THROW(backpropagate_returns(no_terminal, -1.0, p), std::invalid_argument);
    auto early = episode_of_length(3);
    early.transitions[0].terminal = true;
    EXPECT_THROW(backpropagate_returns(early, -1.0, p), std::invalid_argument);
}

TEST(BackpropagateReturns, RandomEpisodesMatchClosedFormAndTelescope) {
    const RewardParams p;
    Rng rng = make_rng(4, RngStream::Agent);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = 1 + uniform_index(rng, 6);
        const double r_t = uniform(rng, -160.0, 0.0);
        const auto before = episode_of_length(n);
        const auto ep = backpropagate_returns(before, r_t, p);
        ASSERT_EQ(ep.transitions.size(), n);
        const std::size_t T = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& tr = ep.transitions[i];
            ASSERT_NEAR(tr.r, std::pow(p.gamma, static_cast<double>(T - i)) * r_t, 1e-12);
            if (i < T) {
                ASSERT_EQ(tr.r, p.gamma * ep.transitions[i + 1].r);
                ASSERT_LE(std::fabs(tr.r), std::fabs(ep.transitions[i + 1].r));
            }
            ASSERT_EQ(tr.s, before.transitions[i].s);
            ASSERT_EQ(tr.a, before.transitions[i].a);
            ASSERT_EQ(tr.s_next, before.transitions[i].s_next);
            ASSERT_EQ(tr.terminal, before.transitions[i].terminal);
        }
    }
}

TEST(RewardParams, Validation) {
    RewardParams p;
    EXPECT_NO_THROW(p.validate());
    p.gamma = 1.0;
    EXPECT_ANY_THROW(p.validate());
    p = RewardParams{};
    p.crash_penalty = 0.0;
    EXPECT_ANY_THROW(p.validate());
}
