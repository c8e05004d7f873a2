#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "coinworld/replay.hpp"

using namespace coinworld;

namespace {

// Episode whose transitions carry their (episode tag, position) in the text
// fields so samples can be traced back.
EpisodeTrace make_episode(int tag, int length, double game_reward_last) {
    EpisodeTrace ep;
    for (int i = 0; i < length; ++i) {
        Transition t;
        t.input_text = "ep" + std::to_string(tag) + "_t" + std::to_string(i);
        t.next_input_text = "ep" + std::to_string(tag) + "_t" + std::to_string(i + 1);
        t.action = command_from_index(i % kNumCommands);
        t.game_reward = (i + 1 == length) ? game_reward_last : 0.0;
        t.total_reward = t.game_reward;
        t.done = (i + 1 == length) && game_reward_last > 0.0;
        ep.transitions.push_back(std::move(t));
    }
    return ep;
}

}  // namespace

TEST_CASE("positive episodes are keyed on game reward, not bonuses") {
    EpisodeTrace win = make_episode(0, 3, 1.0);
    CHECK(win.has_positive_reward());

    EpisodeTrace loss = make_episode(1, 3, 0.0);
    // bonus-only rewards must not count as positive
    for (auto& t : loss.transitions) t.total_reward = t.game_reward + 1.0;
    CHECK_FALSE(loss.has_positive_reward());
}

TEST_CASE("replay rejects empty episodes and reports sizes") {
    ReplayMemory mem(100);
    CHECK_THROWS_AS(mem.push(EpisodeTrace{}), std::invalid_argument);
    mem.push(make_episode(0, 4, 0.0));
    mem.push(make_episode(1, 2, 1.0));
    CHECK(mem.total_transitions() == 6);
    CHECK(mem.episode_count() == 2);
    CHECK(mem.positive_episode_count() == 1);
}

TEST_CASE("eviction drops whole episodes from the front") {
    ReplayMemory mem(10);
    mem.push(make_episode(0, 4, 1.0));
    mem.push(make_episode(1, 4, 0.0));
    mem.push(make_episode(2, 4, 0.0));  // 12 > 10: episode 0 must go
    CHECK(mem.episode_count() == 2);
    CHECK(mem.total_transitions() == 8);
    CHECK(mem.positive_episode_count() == 0);  // the positive one was evicted

    // sampling only ever returns surviving episodes
    Rng rng(1);
    for (const auto& s : mem.sample_sequences(32, 2, 0.25, rng)) {
        CHECK(s.at(0).input_text.substr(0, 3) != "ep0");
    }
}

TEST_CASE("an oversized episode is kept alone rather than dropped") {
    ReplayMemory mem(3);
    mem.push(make_episode(0, 8, 0.0));  // longer than capacity
    CHECK(mem.episode_count() == 1);
    mem.push(make_episode(1, 2, 0.0));
    CHECK(mem.episode_count() == 1);  // the big one was evicted to make room
    CHECK(mem.total_transitions() == 2);
}

TEST_CASE("sampling from an empty buffer returns nothing") {
    ReplayMemory mem(10);
    Rng rng(2);
    CHECK(mem.sample_sequences(8, 4, 0.25, rng).empty());
}

TEST_CASE("prioritized quota draws from positive episodes when available") {
    ReplayMemory mem(1000);
    mem.push(make_episode(0, 6, 0.0));
    mem.push(make_episode(1, 6, 1.0));
    mem.push(make_episode(2, 6, 0.0));

    Rng rng(3);
    auto batch = mem.sample_sequences(8, 3, 0.25, rng);
    REQUIRE(batch.size() == 8);
    int positive = 0;
    for (const auto& s : batch) {
        if (s.positive_draw) {
            ++positive;
            CHECK(s.at(0).input_text.substr(0, 3) == "ep1");
        }
    }
    CHECK(positive == 2);  // ceil(0.25 * 8)

    // without any positive episode the quota lapses
    ReplayMemory flat(1000);
    flat.push(make_episode(0, 6, 0.0));
    auto batch2 = flat.sample_sequences(8, 3, 0.25, rng);
    for (const auto& s : batch2) CHECK_FALSE(s.positive_draw);

    // rho = 1 makes every draw positive
    auto batch3 = mem.sample_sequences(5, 3, 1.0, rng);
    for (const auto& s : batch3) CHECK(s.positive_draw);
}

TEST_CASE("sequence windows stay inside their episode") {
    ReplayMemory mem(1000);
    mem.push(make_episode(0, 10, 1.0));
    Rng rng(7);
    const int seq_len = 4;
    for (int i = 0; i < 200; ++i) {
        auto batch = mem.sample_sequences(4, seq_len, 0.0, rng);
        for (const auto& s : batch) {
            CHECK(s.pad == 0);  // episode longer than the window: no padding
            CHECK(s.start >= 0);
            CHECK(s.start + seq_len <= 10);
            // consecutive positions really are consecutive transitions
            for (int t = 1; t < seq_len; ++t) {
                CHECK(s.at(t - 1).next_input_text == s.at(t).input_text);
            }
        }
    }
}

TEST_CASE("short episodes are left-padded with their first transition") {
    ReplayMemory mem(1000);
    mem.push(make_episode(0, 2, 1.0));
    Rng rng(11);
    auto batch = mem.sample_sequences(3, 5, 0.0, rng);
    for (const auto& s : batch) {
        CHECK(s.pad == 3);
        CHECK(s.start == 0);
        CHECK(s.at(0).input_text == "ep0_t0");
        CHECK(s.at(1).input_text == "ep0_t0");
        CHECK(s.at(2).input_text == "ep0_t0");
        CHECK(s.at(3).input_text == "ep0_t0");  // first real position
        CHECK(s.at(4).input_text == "ep0_t1");
    }
}

TEST_CASE("every window start is reachable") {
    ReplayMemory mem(1000);
    mem.push(make_episode(0, 6, 0.0));
    Rng rng(13);
    std::set<int> starts;
    for (int i = 0; i < 400; ++i) {
        for (const auto& s : mem.sample_sequences(2, 3, 0.0, rng)) starts.insert(s.start);
    }
    CHECK(starts == std::set<int>{0, 1, 2, 3});  // 6 - 3 + 1 windows
}

TEST_CASE("sampling is deterministic for a fixed rng seed") {
    ReplayMemory mem(1000);
    for (int e = 0; e < 5; ++e) mem.push(make_episode(e, 4 + e, e % 2 ? 1.0 : 0.0));

    Rng r1(42), r2(42);
    auto b1 = mem.sample_sequences(16, 4, 0.25, r1);
    auto b2 = mem.sample_sequences(16, 4, 0.25, r2);
    REQUIRE(b1.size() == b2.size());
    for (size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1[i].trace == b2[i].trace);
        CHECK(b1[i].start == b2[i].start);
        CHECK(b1[i].pad == b2[i].pad);
        CHECK(b1[i].positive_draw == b2[i].positive_draw);
    }
}
