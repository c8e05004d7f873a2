#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "coinworld/command.hpp"
#include "coinworld/neural.hpp"
#include "coinworld/textcodec.hpp"

namespace coinworld {

enum class AgentKind : int { DQN = 0, DRQN = 1 };

const std::string& agent_kind_name(AgentKind k);
AgentKind agent_kind_from_name(const std::string& name);

struct AgentConfig {
    AgentKind kind = AgentKind::DRQN;
    int history_len = 0;      // 0 or 4 previous observations prepended to the input
    int embedding_dim = 20;
    int encoder_hidden = 100;
    int scorer_hidden = 64;
    double gamma = 0.9;       // discount used by the trainer (0.5 when bonuses are on)
    uint64_t init_seed = 0;

    std::vector<std::string> validate() const;
};

// Per-head Q values for one state.
struct QOutputs {
    Eigen::Vector2d q_verbs;                 // go, take
    Eigen::Matrix<double, 5, 1> q_objects;   // north, south, east, west, coin
};

// Q(s, verb+object) = (Q(s,verb) + Q(s,object)) / 2, a [verbs x objects] grid.
Eigen::Matrix<double, 2, 5> q_composed(const QOutputs& q);

// Greedy per-head argmax (ties resolve to the lowest index).
Command greedy_command(const QOutputs& q);

// Epsilon-greedy: one epsilon draw decides explore-vs-exploit for the whole
// command, then each head picks uniformly and independently when exploring.
// Rng draw order is fixed: epsilon coin, then verb, then object.
Command select_action(const QOutputs& q, double epsilon, Rng& rng);

// Recurrent scorer carry between steps of one episode (DRQN only; DQN ignores it).
struct PolicyState {
    nn::Matrix h;  // [1 x scorer_hidden]
    nn::Matrix c;
};

// The network: embedding -> LSTM encoder -> masked mean pool -> action scorer
// (feed-forward for DQN, LSTM cell for DRQN) -> two linear heads. Owns its
// parameters; graph-building pieces are exposed for the trainer.
class Agent {
public:
    Agent(AgentConfig cfg, const Vocabulary& vocab);

    const AgentConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return *vocab_; }

    PolicyState initial_policy_state() const;

    // Inference for one composed input. Advances `ps` for DRQN.
    QOutputs score(const TokenSequence& input, PolicyState& ps) const;

    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }
    uint64_t param_checksum() const { return params_.checksum(); }
    void copy_values_from(const Agent& other);

    // ---- pieces used by the trainer to build update graphs ----
    nn::Parameter& embedding() { return *embedding_; }
    const nn::LstmParams& encoder() const { return encoder_; }
    const nn::LstmParams& scorer_cell() const { return scorer_cell_; }  // DRQN only

    // DQN scorer on the tape: relu(fc(reps)).
    nn::VarPtr dqn_hidden(nn::Tape& tape, const nn::VarPtr& reps) const;
    // Heads on the tape.
    std::pair<nn::VarPtr, nn::VarPtr> heads(nn::Tape& tape, const nn::VarPtr& hidden) const;

    // Value-only twins for target computation and inference.
    nn::Matrix dqn_hidden_values(const nn::Matrix& reps) const;
    std::pair<nn::Matrix, nn::Matrix> scorer_cell_values(const nn::Matrix& reps,
                                                         const nn::Matrix& h,
                                                         const nn::Matrix& c) const;
    std::pair<nn::Matrix, nn::Matrix> heads_values(const nn::Matrix& hidden) const;

private:
    AgentConfig cfg_;
    const Vocabulary* vocab_;
    nn::ParameterSet params_;
    nn::Parameter* embedding_ = nullptr;
    nn::LstmParams encoder_;
    nn::LstmParams scorer_cell_;          // DRQN
    nn::Parameter* fc_w_ = nullptr;       // DQN
    nn::Parameter* fc_b_ = nullptr;
    nn::Parameter* head_verb_w_ = nullptr;
    nn::Parameter* head_verb_b_ = nullptr;
    nn::Parameter* head_object_w_ = nullptr;
    nn::Parameter* head_object_b_ = nullptr;
};

}  // namespace coinworld
