#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "coinworld/harness.hpp"
#include "coinworld/textcodec.hpp"
#include "coinworld/trainer.hpp"

using namespace coinworld;

namespace {

std::vector<WorldGraph> worlds_for(Mode mode, int level, int count, uint64_t seed0 = 1,
                                   NamePool pool = NamePool::All) {
    std::vector<WorldGraph> out;
    std::set<std::string> seen;
    uint64_t seed = seed0;
    while (static_cast<int>(out.size()) < count) {
        WorldGraph w = generate_world({seed++, mode, level}, pool);
        if (seen.insert(world_signature(w)).second) out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

TEST_CASE("the oracle policy wins every game at optimal cost") {
    auto worlds = worlds_for(Mode::Hard, 6, 4);
    OraclePolicy oracle;
    EvalReport report = run_eval(oracle, worlds, 100);
    CHECK(report.overall.games == 4);
    CHECK(report.overall.success == doctest::Approx(1.0));
    CHECK(report.overall.avg_reward == doctest::Approx(1.0));
    CHECK(report.overall.avg_steps == doctest::Approx(6.0));
    for (const auto& ep : report.episodes) {
        CHECK(ep.won);
        CHECK(ep.steps == 6);
    }
}

TEST_CASE("the wall follower solves full acyclic maps within the step budget") {
    for (Mode mode : {Mode::Easy, Mode::Medium, Mode::Hard}) {
        auto worlds = worlds_for(mode, 10, 3, 21);
        WallFollowerPolicy follower;
        EvalReport report = run_eval(follower, worlds, 200);
        CHECK(report.overall.success == doctest::Approx(1.0));
    }
}

TEST_CASE("eval reports aggregate by level and round-trip through JSON") {
    auto w5 = worlds_for(Mode::Easy, 5, 2);
    auto w8 = worlds_for(Mode::Easy, 8, 2, 50);
    std::vector<WorldGraph> all = w5;
    all.insert(all.end(), w8.begin(), w8.end());

    OraclePolicy oracle;
    EvalReport report = run_eval(oracle, all, 100);
    REQUIRE(report.by_level.size() == 2);
    CHECK(report.by_level.at(5).avg_steps == doctest::Approx(5.0));
    CHECK(report.by_level.at(8).avg_steps == doctest::Approx(8.0));
    CHECK(report.overall.games == 4);

    const std::string path = "eval_report_tmp.json";
    report.save(path);
    EvalReport back = EvalReport::load(path);
    std::remove(path.c_str());
    CHECK(back.policy == report.policy);
    CHECK(back.overall.avg_steps == report.overall.avg_steps);
    REQUIRE(back.episodes.size() == report.episodes.size());
    CHECK(back.episodes[0].commands == report.episodes[0].commands);
    CHECK(back.to_json().dump() == report.to_json().dump());
}

TEST_CASE("zero-shot evaluation is pure and ignores counters") {
    auto worlds = worlds_for(Mode::Easy, 4, 3);
    Vocabulary vocab = build_vocabulary(worlds);
    AgentConfig cfg;
    cfg.kind = AgentKind::DRQN;
    cfg.embedding_dim = 5;
    cfg.encoder_hidden = 6;
    cfg.scorer_hidden = 5;
    Agent agent(cfg, vocab);

    CountTable counters;
    counters.register_game(0);
    counters.observe_and_bonus(0, "something", {BonusKind::Cumulative, 1.0});
    uint64_t counts_before = counters.checksum();
    uint64_t params_before = agent.param_checksum();

    EvalReport report = zero_shot_eval(agent, worlds, 50, &counters);
    CHECK(report.overall.games == 3);
    CHECK(agent.param_checksum() == params_before);
    CHECK(counters.checksum() == counts_before);
}

TEST_CASE("zero-shot reports do not depend on the worker thread count") {
    auto worlds = worlds_for(Mode::Medium, 3, 7);
    Vocabulary vocab = build_vocabulary(worlds);
    AgentConfig cfg;
    cfg.kind = AgentKind::DRQN;
    cfg.embedding_dim = 5;
    cfg.encoder_hidden = 6;
    cfg.scorer_hidden = 5;
    Agent agent(cfg, vocab);

    std::string serial = zero_shot_eval(agent, worlds, 60).to_json().dump();
    for (int threads : {2, 3, 16}) {
        CHECK(zero_shot_eval(agent, worlds, 60, nullptr, threads).to_json().dump() == serial);
    }
}

TEST_CASE("validation selection prefers reward, then steps, then order") {
    std::vector<EvalSummary> c(3);
    c[0] = {0.8, 10.0, 0.8};
    c[1] = {0.9, 30.0, 0.9};
    c[2] = {0.9, 12.0, 0.9};
    CHECK(validation_select_index(c) == 2);  // same reward as 1, fewer steps

    c[2].avg_steps = 30.0;
    CHECK(validation_select_index(c) == 1);  // full tie resolves to the earlier

    CHECK_THROWS_AS(validation_select_index({}), std::invalid_argument);
}

TEST_CASE("bigram analysis classifies turns against both rotation senses") {
    // hand-built rollout: N, E, S is two clockwise turns; the final pair
    // (S then take coin) is not a movement pair
    std::vector<Command> cw{make_go(Direction::North), make_go(Direction::East),
                            make_go(Direction::South), take_coin()};
    BigramReport rep = bigram_analysis({cw});
    CHECK(rep.rollouts == 1);
    CHECK(rep.total_pairs == 3);
    CHECK(rep.movement_pairs == 2);
    CHECK(rep.analyzed_pairs == 2);
    CHECK(rep.cw_turns == 2);
    CHECK(rep.acw_turns == 0);
    CHECK(rep.consistency == doctest::Approx(1.0));
    CHECK(rep.cw_consistency == doctest::Approx(1.0));
    CHECK(rep.pair_counts[command_index(make_go(Direction::North))]
                         [command_index(make_go(Direction::East))] == 1);

    // straights lower the consistency without counting for either sense
    std::vector<Command> straight{make_go(Direction::North), make_go(Direction::North),
                                  make_go(Direction::West)};
    BigramReport rep2 = bigram_analysis({straight});
    CHECK(rep2.analyzed_pairs == 2);
    CHECK(rep2.straight_pairs == 1);
    CHECK(rep2.acw_turns == 1);
    CHECK(rep2.consistency == doctest::Approx(0.5));
}

TEST_CASE("reversal moves are excluded from the consistency score") {
    // N, S is a reversal; neither (N,S) nor (S,W) is analyzed because S undoes
    // the previous move in both pairs
    std::vector<Command> seq{make_go(Direction::North), make_go(Direction::South),
                             make_go(Direction::West), make_go(Direction::South)};
    BigramReport rep = bigram_analysis({seq});
    CHECK(rep.movement_pairs == 3);
    // (N,S): second member reverses. (S,W): first member was a reversal-free
    // move? S itself undid N, so any pair containing that S is excluded.
    // (W,S): W did not undo S (S went south, W went west), S does not undo W.
    CHECK(rep.analyzed_pairs == 1);
    CHECK(rep.acw_turns + rep.cw_turns + rep.straight_pairs == 1);

    // an empty or single-command rollout has nothing to analyze
    BigramReport empty = bigram_analysis({{}, {take_coin()}});
    CHECK(empty.total_pairs == 0);
    CHECK(empty.consistency == 0.0);
}

TEST_CASE("the wall follower is perfectly anticlockwise-consistent on hard maps") {
    auto worlds = worlds_for(Mode::Hard, 10, 10, 100);
    WallFollowerPolicy follower;
    EvalReport report = run_eval(follower, worlds, 200);
    CHECK(report.overall.success == doctest::Approx(1.0));

    std::vector<std::vector<Command>> rollouts;
    for (const auto& ep : report.episodes) rollouts.push_back(ep.commands);
    BigramReport rep = bigram_analysis(rollouts);
    CHECK(rep.analyzed_pairs > 0);
    CHECK(rep.consistency == doctest::Approx(1.0));
    CHECK(rep.acw_turns == rep.analyzed_pairs);  // all anticlockwise, no straights

    // a uniform random policy is far less consistent
    RandomPolicy random(7);
    EvalReport rnd = run_eval(random, worlds, 200);
    std::vector<std::vector<Command>> rnd_rollouts;
    for (const auto& ep : rnd.episodes) rnd_rollouts.push_back(ep.commands);
    BigramReport rnd_rep = bigram_analysis(rnd_rollouts);
    CHECK(rnd_rep.consistency < 0.5);
}

TEST_CASE("experiment bundles are deterministic, disjoint and reloadable") {
    ExperimentSpec spec;
    spec.seed = 11;
    spec.mode = Mode::Easy;
    spec.train_level = 4;
    spec.train_games = 3;
    spec.validation_games = 2;
    spec.test_levels = {4, 6};
    spec.test_games_per_level = 2;

    ExperimentBundle bundle = build_experiment(spec);
    CHECK(bundle.train.size() == 3);
    CHECK(bundle.validation.size() == 2);
    REQUIRE(bundle.test.count(4) == 1);
    REQUIRE(bundle.test.count(6) == 1);
    CHECK(bundle.test.at(4).size() == 2);

    // within-set signatures unique; train/test disjoint by construction
    std::set<std::string> sigs;
    for (const auto& w : bundle.train) sigs.insert(world_signature(w));
    for (const auto& w : bundle.validation) sigs.insert(world_signature(w));
    CHECK(sigs.size() == 5);
    for (const auto& [level, ws] : bundle.test) {
        std::vector<WorldGraph> train_like = bundle.train;
        train_like.insert(train_like.end(), bundle.validation.begin(), bundle.validation.end());
        CHECK(check_disjoint(train_like, ws));
    }

    // identical spec -> identical manifest
    ExperimentBundle again = build_experiment(spec);
    CHECK(bundle.manifest().dump() == again.manifest().dump());

    // the vocabulary is built from the training-side worlds only: training and
    // validation observations encode without unknowns, while unseen test-room
    // names fall back to <unk> (their structural words stay known)
    std::vector<const WorldGraph*> covered;
    for (const auto& w : bundle.train) covered.push_back(&w);
    for (const auto& w : bundle.validation) covered.push_back(&w);
    for (const WorldGraph* w : covered) {
        Env env(*w);
        auto ids = encode_frozen(tokenize(env.reset()), bundle.vocabulary);
        for (int id : ids.ids) CHECK(id != Vocabulary::kUnkId);
    }
    for (const auto& [level, ws] : bundle.test) {
        for (const auto& w : ws) {
            Env env(w);
            auto ids = encode_frozen(tokenize(env.reset()), bundle.vocabulary);
            int unknown = 0;
            int known = 0;
            for (int id : ids.ids) (id == Vocabulary::kUnkId ? unknown : known)++;
            CHECK(unknown > 0);  // the room name comes from a disjoint pool
            CHECK(known > 0);    // sentence structure is shared with training
        }
    }

    const std::string dir = "experiment_tmp";
    write_experiment(bundle, dir);
    ExperimentBundle loaded = load_experiment(dir);
    CHECK(loaded.manifest().dump() == bundle.manifest().dump());
    CHECK(loaded.vocabulary.checksum() == bundle.vocabulary.checksum());
    std::filesystem::remove_all(dir);
}

TEST_CASE("experiment spec json round-trip") {
    ExperimentSpec spec;
    spec.seed = 77;
    spec.mode = Mode::Hard;
    spec.train_level = 10;
    spec.train_games = 5;
    spec.test_levels = {10, 15};
    ExperimentSpec back = ExperimentSpec::from_json(spec.to_json());
    CHECK(back.seed == spec.seed);
    CHECK(back.mode == spec.mode);
    CHECK(back.train_level == spec.train_level);
    CHECK(back.test_levels == spec.test_levels);
    CHECK(back.test_games_per_level == spec.test_games_per_level);
}
