#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "xing/agent.hpp"

using namespace xing;

namespace {

// Chain of length transitions ending in a terminal one, returns filled in.
EpisodeTrace chain_episode(std::size_t length, double r_terminal) {
    EpisodeTrace ep;
    for (std::size_t i = 0; i < length; ++i) {
        Transition tr;
        tr.s.size = kAwareDim;
        tr.s.data = {-1.0 + 0.1 * i, 0.2, 0.5, 0.5, -0.5, 0.0, 0.0, 0.0, 1.0};
        tr.s_next = tr.s;
        tr.s_next.data[0] += 0.1;
        tr.a = action_at(i % 3);
        tr.terminal = (i + 1 == length);
        ep.transitions.push_back(tr);
    }
    return backpropagate_returns(std::move(ep), r_terminal, RewardParams{});
}

StateVector toy_state(double x, double y) {
    StateVector s;
    s.size = kAwareDim;
    s.data = {x, y, 0.5, 0.5, -1.0 + 0.1 * (x + 1.0), 0.0, 0.0, 0.0, 1.0};
    return s;
}

}  // namespace

TEST(ModeForTrial, ProtocolSchedule) {
    EXPECT_EQ(mode_for_trial(0, false), AgentMode::Explore);
    EXPECT_EQ(mode_for_trial(95, true), AgentMode::Explore);
    EXPECT_EQ(mode_for_trial(96, false), AgentMode::ExploitUnaware);
    EXPECT_EQ(mode_for_trial(143, false), AgentMode::ExploitUnaware);
    EXPECT_EQ(mode_for_trial(144, false), AgentMode::ExploitAware);
    EXPECT_EQ(mode_for_trial(191, false), AgentMode::ExploitAware);
    EXPECT_EQ(mode_for_trial(96, true), AgentMode::ExploitAware);
    EXPECT_EQ(mode_for_trial(191, true), AgentMode::ExploitUnaware);
}

TEST(ModeForTrial, RejectsOutOfRange) {
    EXPECT_THROW(mode_for_trial(-1, false), ContractViolation);
    EXPECT_THROW(mode_for_trial(192, false), ContractViolation);
}

TEST(ModeForTrial, ShortSessionsSplitTheSameWay) {
    EXPECT_EQ(mode_for_trial(11, false, 24), AgentMode::Explore);
    EXPECT_EQ(mode_for_trial(12, false, 24), AgentMode::ExploitUnaware);
    EXPECT_EQ(mode_for_trial(18, false, 24), AgentMode::ExploitAware);
}

TEST(ModeNames, RoundTrip) {
    for (auto m : {AgentMode::Explore, AgentMode::ExploitUnaware, AgentMode::ExploitAware}) {
        EXPECT_EQ(mode_from_string(to_string(m)), m);
    }
}

TEST(ModelPair, InputWidths) {
    Rng rng = make_rng(1, RngStream::NetInit);
    const ModelPair pair = ModelPair::create(rng);
    EXPECT_EQ(pair.unaware.input_dim(), 8u);
    EXPECT_EQ(pair.aware.input_dim(), 9u);
}

TEST(SelectAction, ExploreIsUniform) {
    Rng init = make_rng(1, RngStream::NetInit);
    const ModelPair pair = ModelPair::create(init);
    Rng rng = make_rng(2, RngStream::Agent);
    std::array<int, 3> counts{};
    constexpr int kDraws = 30000;
    for (int i = 0; i < kDraws; ++i) {
        ++counts[index_of(select_action(AgentMode::Explore, pair, initial_world(), MusicCondition::Happy,
                                        WorldConfig{}, rng))];
    }
    for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / kDraws, 1.0 / 3.0, 0.02);
}

TEST(SelectAction, TiesGoToLowestIndex) {
    EXPECT_EQ(greedy_action({5.0, 5.0, 1.0}), Action::Fast);
    EXPECT_EQ(greedy_action({1.0, 5.0, 5.0}), Action::Slow);
    EXPECT_EQ(greedy_action({0.0, 0.0, 0.0}), Action::Fast);
    EXPECT_EQ(greedy_action({-3.0, -2.0, -1.0}), Action::Brake);
}

TEST(SelectAction, UnawarePolicyIgnoresMusic) {
    const WorldConfig cfg;
    Rng init = make_rng(3, RngStream::NetInit);
    Rng rng = make_rng(3, RngStream::World);
    int aware_differs = 0;
    for (int k = 0; k < 50; ++k) {
        ModelPair pair = ModelPair::create(init);
        // Make the music input matter to the aware net.
        for (std::size_t o = 0; o < pair.aware.layers[0].out; ++o) {
            pair.aware.layers[0].w[o * kAwareDim + 8] = uniform(rng, -3.0, 3.0);
        }
        WorldState w;
        w.agent.progress = uniform(rng, 0.0, 1.0);
        w.human.progress = uniform(rng, 0.0, 1.0);
        w.agent.speed = uniform(rng, 0.0, cfg.speed_fast);
        for (int j = 0; j < 20; ++j) {
            Rng r1 = make_rng(j, RngStream::Agent), r2 = make_rng(j, RngStream::Agent);
            ASSERT_EQ(select_action(AgentMode::ExploitUnaware, pair, w, MusicCondition::Happy, cfg, r1),
                      select_action(AgentMode::ExploitUnaware, pair, w, MusicCondition::Sad, cfg, r2));
        }
        Rng r = make_rng(0, RngStream::Agent);
        aware_differs += select_action(AgentMode::ExploitAware, pair, w, MusicCondition::Happy, cfg, r) !=
                         select_action(AgentMode::ExploitAware, pair, w, MusicCondition::Sad, cfg, r);
    }
    EXPECT_GT(aware_differs, 0);
}

TEST(QTarget, Examples) {
    Transition tr;
    tr.terminal = true;
    tr.r = -10.0;
    NetworkSpec spec;
    spec.input_dim = 8;
    EXPECT_EQ(q_target(tr, zero_network(spec), 0.9), -10.0);

    // Output biases give Q(s') = [2, 3, -1] for every s'.
    NetworkParams net = zero_network(spec);
    net.layers.back().b = {2.0, 3.0, -1.0};
    tr.terminal = false;
    tr.r = -1.0;
    EXPECT_DOUBLE_EQ(q_target(tr, net, 0.9), 1.7);

    tr.r = -4.25;
    EXPECT_EQ(q_target(tr, zero_network(spec), 0.9), -4.25);
}

TEST(QTarget, TerminalNeverQueriesNetwork) {
    // A network with an impossible input width throws if it is ever evaluated.
    NetworkSpec spec;
    spec.input_dim = 17;
    const NetworkParams probe = zero_network(spec);
    Transition tr;
    tr.terminal = true;
    tr.r = -3.0;
    EXPECT_EQ(q_target(tr, probe, 0.9), -3.0);
    tr.terminal = false;
    EXPECT_ANY_THROW(q_target(tr, probe, 0.9));
}

TEST(TrainAfterTrial, RejectsEmptyHistory) {
    Rng rng = make_rng(1, RngStream::NetInit);
    ModelPair pair = ModelPair::create(rng);
    EXPECT_THROW(train_after_trial(pair, ReplayHistory{}, RewardParams{}, LearningParams{}, rng),
                 ContractViolation);
}

TEST(TrainAfterTrial, RejectsSwappedWidths) {
    Rng rng = make_rng(1, RngStream::NetInit);
    ModelPair pair = ModelPair::create(rng);
    std::swap(pair.unaware, pair.aware);
    ReplayHistory h;
    h.append(chain_episode(2, -5.0));
    EXPECT_THROW(train_after_trial(pair, h, RewardParams{}, LearningParams{}, rng), ContractViolation);
}

TEST(TrainAfterTrial, BothNetworksChange) {
    Rng init = make_rng(2, RngStream::NetInit);
    ModelPair pair = ModelPair::create(init);
    const ModelPair before = pair;
    ReplayHistory h;
    h.append(chain_episode(3, -12.0));
    Rng rng = make_rng(2, RngStream::Agent);
    const TrainStats stats = train_after_trial(pair, h, RewardParams{}, LearningParams{}, rng);
    EXPECT_EQ(stats.updates, 100u * 20u * 3u);
    EXPECT_NE(pair.unaware, before.unaware);
    EXPECT_NE(pair.aware, before.aware);
    EXPECT_TRUE(pair.unaware.all_finite());
    EXPECT_TRUE(pair.aware.all_finite());
}

// With one distinct episode every draw is that episode, whatever the stream
// and however many copies the history holds.
TEST(TrainAfterTrial, SingleEpisodeHistoryAlwaysDrawsIt) {
    const EpisodeTrace ep = chain_episode(2, -7.0);
    ReplayHistory one, five;
    one.append(ep);
    for (int i = 0; i < 5; ++i) five.append(ep);
    Rng init = make_rng(3, RngStream::NetInit);
    const ModelPair start = ModelPair::create(init);
    ModelPair a = start, b = start;
    Rng ra = make_rng(10, RngStream::Agent), rb = make_rng(99, RngStream::Agent);
    train_after_trial(a, one, RewardParams{}, LearningParams{}, ra);
    train_after_trial(b, five, RewardParams{}, LearningParams{}, rb);
    EXPECT_EQ(a, b);
}

// Episodes of distinct lengths 1..10; with one draw per call the update count
// identifies the episode drawn.
TEST(TrainAfterTrial, ReplaySamplingIsUniform) {
    ReplayHistory h;
    for (std::size_t len = 1; len <= 10; ++len) h.append(chain_episode(len, -5.0));
    LearningParams learning;
    learning.replay_iterations = 1;
    learning.replay_sample_size = 1;
    Rng init = make_rng(4, RngStream::NetInit);
    ModelPair pair = ModelPair::create(init);
    Rng rng = make_rng(4, RngStream::Agent);
    std::array<int, 10> counts{};
    constexpr int kDraws = 10000;
    for (int i = 0; i < kDraws; ++i) {
        const auto stats = train_after_trial(pair, h, RewardParams{}, learning, rng);
        ASSERT_GE(stats.updates, 1u);
        ASSERT_LE(stats.updates, 10u);
        ++counts[stats.updates - 1];
    }
    double chi2 = 0.0;
    const double expected = kDraws / 10.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(9), chi2));
    EXPECT_GT(p, 0.01) << "chi2 = " << chi2;
}

TEST(TrainAfterTrial, DeterministicForSameStreams) {
    ReplayHistory h;
    for (std::size_t len = 1; len <= 4; ++len) h.append(chain_episode(len, -3.0 * len));
    const auto run = [&] {
        Rng init = make_rng(5, RngStream::NetInit);
        ModelPair pair = ModelPair::create(init);
        Rng rng = make_rng(5, RngStream::Agent);
        for (int i = 0; i < 3; ++i) train_after_trial(pair, h, RewardParams{}, LearningParams{}, rng);
        return pair;
    };
    EXPECT_EQ(run(), run());
}

TEST(TrainAfterTrial, TdClipBoundsTheStep) {
    // One terminal transition with a huge return: the clipped update moves Q
    // by at most lr-scaled 2 * clip * |dq/dtheta|^2, far less than unclipped.
    EpisodeTrace ep = chain_episode(1, -1000.0);
    ReplayHistory h;
    h.append(ep);
    LearningParams clipped;
    clipped.replay_iterations = 1;
    clipped.replay_sample_size = 1;
    LearningParams unclipped = clipped;
    unclipped.td_error_clip = 0.0;
    Rng init = make_rng(6, RngStream::NetInit);
    const ModelPair start = ModelPair::create(init);
    ModelPair a = start, b = start;
    Rng ra = make_rng(6, RngStream::Agent), rb = make_rng(6, RngStream::Agent);
    train_after_trial(a, h, RewardParams{}, clipped, ra);
    train_after_trial(b, h, RewardParams{}, unclipped, rb);
    const auto x = ep.transitions[0].s.unaware_view();
    const std::size_t act = index_of(ep.transitions[0].a);
    const double q0 = forward(start.unaware, x)[act];
    EXPECT_LT(std::fabs(forward(a.unaware, x)[act] - q0), std::fabs(forward(b.unaware, x)[act] - q0));
}

TEST(TrainAfterTrial, ToyMdpConvergesToOptimalQ) {
    const RewardParams reward;
    const std::array<std::array<double, 3>, 3> R{{{-4.0, -4.2, -4.4}, {-3.0, -3.1, -3.4}, {-5.0, -4.8, -4.9}}};
    const StateVector s0 = toy_state(-1.0, -1.0);
    std::array<StateVector, 3> s1;
    for (std::size_t a = 0; a < 3; ++a) s1[a] = toy_state(-0.5 + 0.4 * a, -0.2 * a);
    const StateVector end = toy_state(1.0, 1.0);

    ReplayHistory h;
    for (std::size_t a0 = 0; a0 < 3; ++a0) {
        for (std::size_t a1 = 0; a1 < 3; ++a1) {
            EpisodeTrace ep;
            ep.transitions.push_back({s0, action_at(a0), 0.0, s1[a0], false});
            ep.transitions.push_back({s1[a0], action_at(a1), 0.0, end, true});
            h.append(backpropagate_returns(std::move(ep), R[a0][a1], reward));
        }
    }
    std::array<double, 3> q0{};
    std::array<std::array<double, 3>, 3> q1{};
    oracle::toy_optimal_q(R, reward.gamma, q0, q1);

    Rng init = make_rng(77, RngStream::NetInit);
    ModelPair pair = ModelPair::create(init);
    Rng rng = make_rng(77, RngStream::Agent);
    for (int i = 0; i < 500; ++i) train_after_trial(pair, h, reward, LearningParams{}, rng);

    double worst = 0.0;
    for (const NetworkParams* net : {&pair.unaware, &pair.aware}) {
        const auto in = [&](const StateVector& s) { return std::span<const double>(s.data.data(), net->input_dim()); };
        const QValues f = forward(*net, in(s0));
        for (std::size_t a = 0; a < 3; ++a) worst = std::max(worst, std::fabs(f[a] - q0[a]));
        for (std::size_t a0 = 0; a0 < 3; ++a0) {
            const QValues g = forward(*net, in(s1[a0]));
            for (std::size_t a = 0; a < 3; ++a) worst = std::max(worst, std::fabs(g[a] - q1[a0][a]));
        }
    }
    EXPECT_LT(worst, 0.05);
}
