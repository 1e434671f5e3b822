#include <gtest/gtest.h>

#include <thread>

#include "xing/wire.hpp"

using namespace xing;
using nlohmann::json;

TEST(Encode, FrameLayout) {
    const json j = json::parse(encode({"trial_start", {{"trial", 4}}}, 17));
    EXPECT_EQ(j["kind"], "trial_start");
    EXPECT_EQ(j["schema_version"], kWireSchemaVersion);
    EXPECT_EQ(j["seq"], 17);
    EXPECT_EQ(j["payload"]["trial"], 4);
}

TEST(DecodeClient, RoundTripsEachKind) {
    ClientMessage m = decode_client(encode_client("hello", 1));
    EXPECT_EQ(m.kind, ClientKind::Hello);
    EXPECT_EQ(m.seq, 1u);
    EXPECT_FALSE(m.resume_session.has_value());

    m = decode_client(encode_client("hello", 2, {{"resume", "live_session_000_seed_0"}}));
    EXPECT_EQ(m.resume_session, "live_session_000_seed_0");

    for (const auto& [text, kind] : {std::pair{"forward", HumanCommandKind::Forward},
                                     std::pair{"reverse", HumanCommandKind::Reverse},
                                     std::pair{"brake", HumanCommandKind::Brake}}) {
        m = decode_client(encode_client("control", 3, {{"command", text}}));
        EXPECT_EQ(m.kind, ClientKind::Control);
        EXPECT_EQ(m.command, kind);
    }
    m = decode_client(encode_client("ready", 9));
    EXPECT_EQ(m.kind, ClientKind::Ready);
    EXPECT_EQ(m.seq, 9u);
}

TEST(DecodeClient, RejectsMalformedFrames) {
    const std::vector<std::string> bad{
        "not json",
        "[1,2]",
        R"({"kind":"hello","seq":1,"payload":{}})",
        R"({"kind":"hello","schema_version":2,"seq":1,"payload":{}})",
        R"({"kind":"hello","schema_version":1,"payload":{}})",
        R"({"kind":"hello","schema_version":1,"seq":-1,"payload":{}})",
        R"({"schema_version":1,"seq":1,"payload":{}})",
        R"({"kind":"dance","schema_version":1,"seq":1,"payload":{}})",
        R"({"kind":"control","schema_version":1,"seq":1,"payload":{}})",
        R"({"kind":"control","schema_version":1,"seq":1,"payload":{"command":"fly"}})",
        R"({"kind":"hello","schema_version":1,"seq":1,"payload":{"resume":5}})",
        R"({"kind":"ready","schema_version":1,"seq":1,"payload":[]})",
    };
    for (const auto& text : bad) EXPECT_THROW(decode_client(text), WireError) << text;
}

TEST(Outbox, SequenceNumbersIncreaseStrictly) {
    Outbox box(1000);
    for (int i = 0; i < 50; ++i) box.push({i % 3 ? "state" : "pause", {}});
    std::uint64_t last = 0;
    while (auto f = box.try_pop()) {
        const auto seq = json::parse(*f)["seq"].get<std::uint64_t>();
        EXPECT_GT(seq, last);
        last = seq;
    }
    EXPECT_EQ(last, 50u);
}

TEST(Outbox, DropsOldestStateFrameFirst) {
    Outbox box(4);
    box.push({"trial_start", {}});
    box.push({"state", {{"i", 1}}});
    box.push({"state", {{"i", 2}}});
    box.push({"trial_end", {}});
    box.push({"state", {{"i", 3}}});
    EXPECT_EQ(box.dropped(), 1u);
    EXPECT_EQ(box.size(), 4u);
    std::vector<std::string> kinds;
    std::vector<int> states;
    while (auto f = box.try_pop()) {
        const json j = json::parse(*f);
        kinds.push_back(j["kind"]);
        if (j["kind"] == "state") states.push_back(j["payload"]["i"]);
    }
    EXPECT_EQ(kinds, (std::vector<std::string>{"trial_start", "state", "trial_end", "state"}));
    EXPECT_EQ(states, (std::vector<int>{2, 3}));
}

TEST(Outbox, NeverDropsControlFrames) {
    Outbox box(2);
    for (int i = 0; i < 5; ++i) box.push({"trial_end", {{"i", i}}});
    EXPECT_EQ(box.size(), 5u);
    EXPECT_EQ(box.dropped(), 0u);
}

TEST(Outbox, CloseAndWait) {
    Outbox box;
    int notified = 0;
    box.set_notify([&] { ++notified; });
    EXPECT_FALSE(box.pop_wait(std::chrono::milliseconds(10)).has_value());
    std::thread t([&] { box.push({"pause", {}}); });
    EXPECT_TRUE(box.pop_wait(std::chrono::milliseconds(2000)).has_value());
    t.join();
    box.close();
    EXPECT_TRUE(box.closed());
    box.push({"pause", {}});
    EXPECT_EQ(box.size(), 0u);
    EXPECT_EQ(notified, 2);
}
