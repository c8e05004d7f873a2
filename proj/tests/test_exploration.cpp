#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "coinworld/env.hpp"
#include "coinworld/exploration.hpp"
#include "coinworld/rng.hpp"
#include "coinworld/worldgen.hpp"

using namespace coinworld;

TEST_CASE("cumulative bonus follows the inverse-cube-root law exactly") {
    // counts with exact integer cube roots pin the law with no slack
    CHECK(std::abs(cumulative_bonus_value(1.0, 1) - 1.0) < 1e-12);
    CHECK(std::abs(cumulative_bonus_value(1.0, 8) - 0.5) < 1e-12);
    CHECK(std::abs(cumulative_bonus_value(1.0, 27) - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(cumulative_bonus_value(1.0, 1000) - 0.1) < 1e-12);
    CHECK(std::abs(cumulative_bonus_value(2.5, 8) - 1.25) < 1e-12);
    for (long n : {2L, 3L, 7L, 100L, 999983L}) {
        CHECK(std::abs(cumulative_bonus_value(1.7, n) - 1.7 / std::cbrt(double(n))) < 1e-12);
    }
    CHECK_THROWS_AS(cumulative_bonus_value(1.0, 0), std::invalid_argument);
}

TEST_CASE("cumulative counting increments before paying out") {
    CountTable table;
    table.register_game(0);
    BonusConfig cfg{BonusKind::Cumulative, 1.0};

    // first sighting pays beta * 1^(-1/3) = beta
    CHECK(table.observe_and_bonus(0, "roomA", cfg) == doctest::Approx(1.0));
    CHECK(table.cumulative_count(0, "roomA") == 1);
    // eighth sighting pays beta * 8^(-1/3) = beta/2
    for (int i = 0; i < 6; ++i) table.observe_and_bonus(0, "roomA", cfg);
    CHECK(table.observe_and_bonus(0, "roomA", cfg) == doctest::Approx(0.5));
    CHECK(table.cumulative_count(0, "roomA") == 8);

    // counts survive episode resets
    table.reset_episode(0, cfg);
    CHECK(table.cumulative_count(0, "roomA") == 8);
}

TEST_CASE("episodic bonus pays once per episode per observation") {
    CountTable table;
    table.register_game(3);
    BonusConfig cfg{BonusKind::Episodic, 2.0};

    table.reset_episode(3, cfg);
    CHECK(table.observe_and_bonus(3, "x", cfg) == doctest::Approx(2.0));
    CHECK(table.observe_and_bonus(3, "x", cfg) == 0.0);
    CHECK(table.observe_and_bonus(3, "y", cfg) == doctest::Approx(2.0));
    CHECK(table.seen_this_episode(3, "x"));

    table.reset_episode(3, cfg);
    CHECK_FALSE(table.seen_this_episode(3, "x"));
    CHECK(table.observe_and_bonus(3, "x", cfg) == doctest::Approx(2.0));
}

TEST_CASE("disabled bonus neither pays nor records") {
    CountTable table;
    table.register_game(0);
    BonusConfig off{BonusKind::None, 1.0};
    CHECK(table.observe_and_bonus(0, "roomA", off) == 0.0);
    CHECK(table.cumulative_count(0, "roomA") == 0);
    CHECK(table.distinct_observations(0) == 0);
    uint64_t before = table.checksum();
    table.observe_and_bonus(0, "roomB", off);
    CHECK(table.checksum() == before);

    BonusConfig on{BonusKind::Episodic, 1.0};
    BonusConfig evaled = disable_for_eval(on);
    CHECK(evaled.kind == BonusKind::None);
}

TEST_CASE("games are isolated under interleaving") {
    CountTable table;
    table.register_game(0);
    table.register_game(1);
    BonusConfig cfg{BonusKind::Cumulative, 1.0};

    // interleave the same observation text across two games
    for (int i = 0; i < 7; ++i) {
        table.observe_and_bonus(0, "shared", cfg);
        if (i < 2) table.observe_and_bonus(1, "shared", cfg);
    }
    CHECK(table.cumulative_count(0, "shared") == 7);
    CHECK(table.cumulative_count(1, "shared") == 2);
    // the eighth count in game 0 pays 0.5 regardless of game 1 traffic
    CHECK(table.observe_and_bonus(0, "shared", cfg) == doctest::Approx(0.5));

    // episodic state is also per game
    BonusConfig epi{BonusKind::Episodic, 1.0};
    table.reset_episode(0, epi);
    table.reset_episode(1, epi);
    CHECK(table.observe_and_bonus(0, "e", epi) == doctest::Approx(1.0));
    CHECK(table.observe_and_bonus(1, "e", epi) == doctest::Approx(1.0));
    table.reset_episode(0, epi);
    CHECK(table.observe_and_bonus(0, "e", epi) == doctest::Approx(1.0));
    CHECK(table.observe_and_bonus(1, "e", epi) == 0.0);  // game 1 had no reset
}

TEST_CASE("episodic sum per episode equals beta times distinct observations") {
    // random walks over generated worlds; the oracle tracks distinct texts
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        GameSpec spec{static_cast<uint64_t>(trial + 1),
                      static_cast<Mode>(trial % 3), 3 + trial % 5};
        WorldGraph w = generate_world(spec);
        Env env(w);
        CountTable table;
        table.register_game(0);
        const double beta = 0.5 + 0.1 * (trial % 4);
        BonusConfig cfg{BonusKind::Episodic, beta};

        table.reset_episode(0, cfg);
        std::string obs = env.reset();
        double paid = table.observe_and_bonus(0, obs, cfg);
        std::set<std::string> distinct{obs};
        for (int step = 0; step < 40 && !env.done(); ++step) {
            Command cmd = command_from_index(rng.uniform_int(kNumCommands));
            auto res = env.step(cmd, 40);
            paid += table.observe_and_bonus(0, res.observation, cfg);
            distinct.insert(res.observation);
        }
        CHECK(paid == doctest::Approx(beta * double(distinct.size())).epsilon(1e-12));
        CHECK(table.distinct_observations(0) == distinct.size());
    }
}

TEST_CASE("count tables dump sorted csv and checksum independent of insert order") {
    CountTable a, b;
    a.register_game(1);
    a.register_game(0);
    b.register_game(0);
    b.register_game(1);
    BonusConfig cfg{BonusKind::Cumulative, 1.0};
    a.observe_and_bonus(1, "zz", cfg);
    a.observe_and_bonus(0, "aa", cfg);
    b.observe_and_bonus(0, "aa", cfg);
    b.observe_and_bonus(1, "zz", cfg);
    CHECK(a.checksum() == b.checksum());

    std::ostringstream out;
    a.dump_csv(out);
    CHECK(out.str() == "game_id,count,observation\n0,1,aa\n1,1,zz\n");

    // quoting: embedded commas are escaped
    CountTable q;
    q.register_game(0);
    q.observe_and_bonus(0, "a, b", cfg);
    std::ostringstream qo;
    q.dump_csv(qo);
    CHECK(qo.str() == "game_id,count,observation\n0,1,\"a, b\"\n");
}
