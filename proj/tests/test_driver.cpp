#include <gtest/gtest.h>

#include "xing/config.hpp"
#include "xing/driver.hpp"
#include "xing/stats.hpp"

using namespace xing;

namespace {

struct DriveLog {
    std::vector<HumanCommand> commands;  // one per step
    std::vector<double> times;
    WorldState final_world;
};

// Drives the human until it reaches the end (or the trial ends) while the
// agent follows a fixed command.
DriveLog drive(SyntheticDriver& driver, MusicCondition c, Rng& rng, const WorldConfig& cfg,
               AgentCommand agent_cmd = AgentCommand{}, bool stop_at_human_end = true) {
    driver.begin_trial(c, rng);
    DriveLog log;
    WorldState w = initial_world();
    while (!w.terminal(cfg) && !(stop_at_human_end && w.human.reached_end)) {
        const HumanCommand cmd = driver.decide(w);
        log.commands.push_back(cmd);
        log.times.push_back(w.elapsed);
        w = step(w, cfg, cmd, agent_cmd);
    }
    log.final_world = w;
    return log;
}

std::vector<HumanCommandKind> runs(const std::vector<HumanCommand>& cmds) {
    std::vector<HumanCommandKind> out;
    for (const auto& c : cmds) {
        if (out.empty() || out.back() != c.kind) out.push_back(c.kind);
    }
    return out;
}

}  // namespace

TEST(DriverProfiles, DefaultsAndOrdering) {
    const ConditionedDriver d = default_profiles();
    EXPECT_EQ(d.happy.forward_speed_mean, 0.22);
    EXPECT_EQ(d.happy.forward_speed_sd, 0.02);
    EXPECT_EQ(d.happy.stop_at_intersection_prob, 0.4);
    EXPECT_EQ(d.happy.wait_mean, 1.5);
    EXPECT_EQ(d.happy.wait_sd, 0.5);
    EXPECT_EQ(d.sad.forward_speed_mean, 0.16);
    EXPECT_EQ(d.sad.forward_speed_sd, 0.02);
    EXPECT_EQ(d.sad.stop_at_intersection_prob, 0.7);
    EXPECT_EQ(d.sad.wait_mean, 2.5);
    EXPECT_EQ(d.sad.wait_sd, 0.7);
    for (const auto* p : {&d.happy, &d.sad}) {
        EXPECT_EQ(p->yield_distance, 0.15);
        EXPECT_EQ(p->reverse_prob_on_conflict, 0.1);
        EXPECT_EQ(p->reaction_delay, 0.2);
    }
    EXPECT_TRUE(d.ordering_warnings().empty());
}

TEST(DriverProfiles, InvertedOrderingIsFlagged) {
    ConditionedDriver d = default_profiles();
    std::swap(d.happy, d.sad);
    EXPECT_EQ(d.ordering_warnings().size(), 2u);
}

TEST(DriverProfiles, ValidationRejectsBadValues) {
    DriverProfile p;
    p.stop_at_intersection_prob = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = DriverProfile{};
    p.wait_sd = -1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(DriverProfiles, RoundTripThroughConfig) {
    SessionConfig cfg;
    cfg.driver.sad.wait_mean = 3.25;
    cfg.driver.happy.reaction_delay = 0.35;
    const SessionConfig back = parse_config(to_json(cfg).dump());
    EXPECT_EQ(back.driver, cfg.driver);
}

TEST(SyntheticDriver, NoStopProfileDrivesForwardThroughout) {
    const WorldConfig cfg;
    ConditionedDriver d = default_profiles();
    d.happy.stop_at_intersection_prob = 0.0;
    d.happy.reverse_prob_on_conflict = 0.0;
    SyntheticDriver driver(d, cfg);
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng = make_rng(s, RngStream::Driver);
        const DriveLog log = drive(driver, MusicCondition::Happy, rng, cfg);
        ASSERT_TRUE(log.final_world.human.reached_end);
        for (const auto& c : log.commands) ASSERT_EQ(c.kind, HumanCommandKind::Forward);
    }
}

TEST(SyntheticDriver, ForcedStopGivesOneBrakeThenForward) {
    const WorldConfig cfg;
    ConditionedDriver d = default_profiles();
    d.sad.stop_at_intersection_prob = 1.0;
    SyntheticDriver driver(d, cfg);
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng = make_rng(s, RngStream::Driver);
        const DriveLog log = drive(driver, MusicCondition::Sad, rng, cfg);
        if (log.final_world.crashed) continue;
        const std::vector<HumanCommandKind> expected{HumanCommandKind::Forward, HumanCommandKind::Brake,
                                                     HumanCommandKind::Forward};
        ASSERT_EQ(runs(log.commands), expected) << "seed " << s;
    }
}

TEST(SyntheticDriver, CruiseSpeedClampedToFastSpeed) {
    const WorldConfig cfg;
    ConditionedDriver d = default_profiles();
    d.happy.forward_speed_mean = 10.0;
    SyntheticDriver driver(d, cfg);
    Rng rng = make_rng(1, RngStream::Driver);
    for (int i = 0; i < 100; ++i) {
        driver.begin_trial(MusicCondition::Happy, rng);
        ASSERT_GT(driver.cruise_speed(), 0.0);
        ASSERT_LE(driver.cruise_speed(), cfg.speed_fast);
    }
}

TEST(SyntheticDriver, SameSeedSameCommandStream) {
    const WorldConfig cfg;
    SyntheticDriver a(default_profiles(), cfg), b(default_profiles(), cfg);
    for (std::uint64_t s = 0; s < 30; ++s) {
        Rng ra = make_rng(s, RngStream::Driver), rb = make_rng(s, RngStream::Driver);
        const auto la = drive(a, MusicCondition::Sad, ra, cfg, AgentCommand{cfg.speed_slow, 0.0}, false);
        const auto lb = drive(b, MusicCondition::Sad, rb, cfg, AgentCommand{cfg.speed_slow, 0.0}, false);
        ASSERT_EQ(la.commands, lb.commands);
    }
}

TEST(SyntheticDriver, CommandChangesRespectReactionDelay) {
    const WorldConfig cfg;
    SyntheticDriver driver(default_profiles(), cfg);
    int changes = 0;
    for (std::uint64_t s = 0; s < 300; ++s) {
        Rng rng = make_rng(s, RngStream::Driver);
        const auto c = s % 2 ? MusicCondition::Happy : MusicCondition::Sad;
        const double agent_speed = (s % 3 == 0) ? cfg.speed_fast : (s % 3 == 1 ? cfg.speed_slow : 0.0);
        const auto log = drive(driver, c, rng, cfg, AgentCommand{agent_speed, 0.0}, false);
        const double delay = default_profiles().profile(c).reaction_delay;
        double last = -1.0;
        for (std::size_t k = 1; k < log.commands.size(); ++k) {
            if (log.commands[k] == log.commands[k - 1]) continue;
            ++changes;
            if (last >= 0.0) {
                ASSERT_GE(log.times[k] - last + 1e-9, delay) << "seed " << s;
            }
            last = log.times[k];
        }
    }
    EXPECT_GT(changes, 100);
}

// The agent sits at its start line, so it never interferes.
TEST(SyntheticDriver, SadDriversAreSlower) {
    const WorldConfig cfg;
    SyntheticDriver driver(default_profiles(), cfg);
    std::vector<double> happy, sad;
    for (std::uint64_t s = 0; s < 500; ++s) {
        for (auto c : {MusicCondition::Happy, MusicCondition::Sad}) {
            Rng rng = make_rng(s * 2 + (c == MusicCondition::Sad), RngStream::Driver);
            const auto log = drive(driver, c, rng, cfg);
            ASSERT_TRUE(log.final_world.human.completion_time.has_value());
            (c == MusicCondition::Happy ? happy : sad).push_back(*log.final_world.human.completion_time);
        }
    }
    const Aggregate h = aggregate_of(happy), s = aggregate_of(sad);
    EXPECT_GT(s.mean, h.mean);
    const TestResult mw = mann_whitney_u(sad, happy);
    EXPECT_LT(mw.p_value, 0.01);
}
