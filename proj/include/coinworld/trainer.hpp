#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinworld/agent.hpp"
#include "coinworld/env.hpp"
#include "coinworld/exploration.hpp"
#include "coinworld/replay.hpp"
#include "coinworld/worldgen.hpp"

namespace coinworld {

struct TrainerConfig {
    // optimization
    int batch_size = 32;
    int update_period = 4;  // one mini-batch update per this many env steps
    double rho = 0.25;      // prioritized fraction of each batch
    int seq_len = 8;        // DRQN only; DQN updates are single-step
    int burn_in = 4;        // masked warm-up prefix of each sequence
    size_t replay_capacity = 500000;
    nn::AdamConfig adam;
    bool use_target_network = false;
    int target_sync_updates = 1000;

    // exploration schedule (by epoch, linear then flat)
    double eps_start = 1.0;
    double eps_end = 0.2;
    int eps_anneal_epochs = 1000;

    // episode schedule
    int epochs = 1000;
    int episodes_per_epoch = 10;
    int max_train_step = 50;
    int max_test_step = 200;
    double win_reward = 1.0;

    // greedy evaluation on the training worlds after each epoch
    bool eval_each_epoch = true;
    // stop after this many consecutive all-worlds-perfect eval epochs (0 = never)
    int early_stop_window = 0;
    // "perfect" additionally requires optimal step counts
    bool early_stop_optimal_steps = false;

    int checkpoint_every_epochs = 0;             // 0 = no periodic checkpoints
    std::string checkpoint_dir;

    bool record_wall_time = true;  // false makes logs bit-reproducible
    uint64_t seed = 1;

    std::vector<std::string> validate() const;
};

// Linear anneal from eps_start to eps_end across the first eps_anneal_epochs
// epochs (0-based index), constant afterwards.
double epsilon_at(int epoch, const TrainerConfig& cfg);

struct EpochRecord {
    int epoch = 0;  // 1-based in logs
    double epsilon = 0.0;
    double train_reward = 0.0;    // game reward only; bonuses are never reported
    double train_steps = 0.0;
    double train_success = 0.0;
    double train_intrinsic = 0.0; // mean per-episode bonus sum (diagnostic)
    double eval_reward = 0.0;
    double eval_steps = 0.0;
    double eval_success = 0.0;
    long updates = 0;             // cumulative gradient updates
    long wall_ms = 0;

    nlohmann::ordered_json to_json() const;
    static EpochRecord from_json(const nlohmann::json& j);
};

using MetricsLog = std::vector<EpochRecord>;

void save_metrics_jsonl(const MetricsLog& log, const std::string& path);
MetricsLog load_metrics_jsonl(const std::string& path);

struct EpisodeStats {
    double game_return = 0.0;
    double intrinsic_return = 0.0;
    int steps = 0;
    bool won = false;
};

struct EvalStats {
    double reward = 0.0;
    double steps = 0.0;
    double success = 0.0;
};

// Runs epsilon-greedy episodes over a set of training worlds, fills the
// replay memory, applies TD updates every `update_period` env steps, and
// (optionally) greedily evaluates after each epoch. DQN and DRQN share one
// sequence update path; DQN is the seq_len=1, burn_in=0 case with the
// feed-forward scorer.
class Trainer {
public:
    Trainer(Agent& agent, std::vector<WorldGraph> worlds, TrainerConfig cfg,
            BonusConfig bonus = {});

    using EpochCallback = std::function<void(const EpochRecord&)>;
    MetricsLog run(const EpochCallback& on_epoch = nullptr);

    // ---- pieces exposed for tests ----
    EpisodeStats run_training_episode(int world_index, double epsilon);
    EvalStats evaluate_greedy();

    // Builds the TD graph over the batch and returns the loss. With
    // `backward` the gradients are accumulated into the agent's parameters
    // (caller is responsible for zeroing them beforehand).
    double compute_loss(const std::vector<SampledSequence>& batch, bool backward);
    // zero grads + compute_loss(backward) + Adam step.
    double apply_update(const std::vector<SampledSequence>& batch);

    ReplayMemory& memory() { return memory_; }
    CountTable& counts() { return counts_; }
    const std::vector<WorldGraph>& worlds() const { return worlds_; }
    const TrainerConfig& config() const { return cfg_; }
    const BonusConfig& bonus_config() const { return bonus_; }
    long updates_done() const { return updates_done_; }
    long env_steps() const { return env_steps_; }
    nn::Adam& optimizer() { return adam_; }
    int effective_seq_len() const;
    int effective_burn_in() const;

private:
    Agent& agent_;
    std::vector<WorldGraph> worlds_;
    TrainerConfig cfg_;
    BonusConfig bonus_;
    ReplayMemory memory_;
    CountTable counts_;
    nn::Adam adam_;
    Rng rng_;
    long env_steps_ = 0;
    long updates_done_ = 0;
    std::optional<Agent> target_;  // value-only copy when use_target_network
    double optimal_eval_steps_ = 0.0;

    void maybe_update();
    void sync_target();
};

// Convenience wrapper: construct agent-owned trainer and run to completion.
MetricsLog train_run(Agent& agent, std::vector<WorldGraph> worlds, const TrainerConfig& cfg,
                     const BonusConfig& bonus, const Trainer::EpochCallback& on_epoch = nullptr);

}  // namespace coinworld
