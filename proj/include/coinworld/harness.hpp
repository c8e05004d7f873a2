#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinworld/agent.hpp"
#include "coinworld/env.hpp"
#include "coinworld/exploration.hpp"
#include "coinworld/worldgen.hpp"

namespace coinworld {

// Episode-stepping interface shared by the learned agent and the scripted
// reference policies. Scripted policies may introspect the Env (they are
// oracles, not learners); the agent policy only reads the observation text.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode(const Env& env) { (void)env; }
    virtual Command act(const Env& env, const std::string& observation) = 0;
    virtual std::string name() const = 0;
};

// Greedy wrapper around a trained agent; maintains history/previous-command
// composition state across one episode.
class AgentPolicy final : public Policy {
public:
    explicit AgentPolicy(const Agent& agent);
    void begin_episode(const Env& env) override;
    Command act(const Env& env, const std::string& observation) override;
    std::string name() const override;

private:
    const Agent* agent_;
    PolicyState ps_;
    std::vector<std::string> history_;
    std::optional<Command> prev_;
};

// Replays the unique optimal solution.
class OraclePolicy final : public Policy {
public:
    void begin_episode(const Env& env) override;
    Command act(const Env& env, const std::string& observation) override;
    std::string name() const override { return "oracle"; }

private:
    std::vector<Command> plan_;
    size_t next_ = 0;
};

// Left-hand wall follower: takes a visible coin, otherwise prefers the
// anticlockwise turn, then straight, then clockwise, reversing only at dead
// ends. Traverses acyclic maps completely, and on medium/hard maps (every
// chain room has 3+ doors) its non-reversal turns are all anticlockwise.
class WallFollowerPolicy final : public Policy {
public:
    void begin_episode(const Env& env) override;
    Command act(const Env& env, const std::string& observation) override;
    std::string name() const override { return "wall_follower"; }

private:
    std::optional<Direction> heading_;
};

// Uniform over the full command grid (verb and object drawn independently).
class RandomPolicy final : public Policy {
public:
    explicit RandomPolicy(uint64_t seed) : rng_(seed) {}
    Command act(const Env& env, const std::string& observation) override;
    std::string name() const override { return "random"; }

private:
    Rng rng_;
};

struct LevelStats {
    int games = 0;
    double success = 0.0;
    double avg_reward = 0.0;
    double avg_steps = 0.0;
};

struct EpisodeRecord {
    uint64_t world_seed = 0;
    std::string mode;
    int level = 0;
    bool won = false;
    double reward = 0.0;
    int steps = 0;
    std::vector<Command> commands;
};

struct EvalReport {
    std::string policy;
    int max_steps = 0;
    LevelStats overall;
    std::map<int, LevelStats> by_level;
    std::vector<EpisodeRecord> episodes;

    nlohmann::ordered_json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static EvalReport load(const std::string& path);
};

// Greedy rollouts of `policy` over the worlds, step budget `max_steps`.
EvalReport run_eval(Policy& policy, const std::vector<WorldGraph>& worlds, int max_steps,
                    int episodes_per_world = 1);

// Agent evaluation with purity guards: parameters (and counters, when given)
// are checksummed before and after; any drift throws. Exploration bonuses
// play no part in greedy rollouts. `threads` > 1 fans the independent games
// out across workers; reports are identical for any thread count.
EvalReport zero_shot_eval(const Agent& agent, const std::vector<WorldGraph>& worlds,
                          int max_steps, const CountTable* counters = nullptr,
                          int threads = 1);

struct EvalSummary {
    double avg_reward = 0.0;
    double avg_steps = 0.0;
    double success = 0.0;
};

EvalSummary summarize(const EvalReport& report);

// Highest average reward wins; ties broken by fewer average steps, then by
// the earlier entry. Throws on empty input.
int validation_select_index(const std::vector<EvalSummary>& candidates);

struct ValidationChoice {
    int index = -1;
    std::string file;
    EvalSummary summary;
};

// Evaluates each checkpoint on the validation worlds and picks the best.
ValidationChoice validation_selection(const std::vector<std::string>& checkpoint_files,
                                      const Vocabulary& vocab,
                                      const std::vector<WorldGraph>& validation_worlds,
                                      int max_steps);

// Command-bigram policy analysis. All adjacent command pairs are tabulated;
// the consistency score looks at movement pairs whose members are not
// dead-end reversals (a move undoing the previous move) and measures the
// largest fraction turning in one fixed rotational direction.
struct BigramReport {
    long rollouts = 0;
    long total_pairs = 0;
    long movement_pairs = 0;
    long analyzed_pairs = 0;
    long straight_pairs = 0;
    long cw_turns = 0;
    long acw_turns = 0;
    double cw_consistency = 0.0;
    double acw_consistency = 0.0;
    double consistency = 0.0;
    std::array<std::array<long, kNumCommands>, kNumCommands> pair_counts{};

    nlohmann::ordered_json to_json() const;
};

BigramReport bigram_analysis(const std::vector<std::vector<Command>>& rollouts);

// ---- experiment assembly ----

struct ExperimentSpec {
    uint64_t seed = 0;
    Mode mode = Mode::Easy;
    int train_level = 5;
    int train_games = 1;
    int validation_games = 0;       // drawn from the train name pool
    std::vector<int> test_levels;   // test name pool, disjoint from training
    int test_games_per_level = 10;

    nlohmann::ordered_json to_json() const;
    static ExperimentSpec from_json(const nlohmann::json& j);
};

struct ExperimentBundle {
    ExperimentSpec spec;
    std::vector<WorldGraph> train;
    std::vector<WorldGraph> validation;
    std::map<int, std::vector<WorldGraph>> test;
    // Fixed word table built from the training-side worlds (train +
    // validation) and then frozen; novel words in unseen test games map to
    // <unk> at evaluation time.
    Vocabulary vocabulary;

    nlohmann::ordered_json manifest() const;
};

// Deterministic in the spec; guarantees within-set uniqueness and train/test
// disjointness (distinct name pools, verified with check_disjoint).
ExperimentBundle build_experiment(const ExperimentSpec& spec);

// Writes manifest.json, vocab.json and worlds/*.json under `dir`.
void write_experiment(const ExperimentBundle& bundle, const std::string& dir);
ExperimentBundle load_experiment(const std::string& dir);

}  // namespace coinworld
