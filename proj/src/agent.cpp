#include "coinworld/agent.hpp"

#include <stdexcept>

namespace coinworld {

const std::string& agent_kind_name(AgentKind k) {
    static const std::array<std::string, 2> names = {"dqn", "drqn"};
    return names[static_cast<size_t>(k)];
}

AgentKind agent_kind_from_name(const std::string& name) {
    if (name == "dqn") return AgentKind::DQN;
    if (name == "drqn") return AgentKind::DRQN;
    throw std::invalid_argument("unknown agent kind: " + name);
}

std::vector<std::string> AgentConfig::validate() const {
    std::vector<std::string> errors;
    if (history_len != 0 && history_len != 4) errors.push_back("history_len must be 0 or 4");
    if (embedding_dim < 1) errors.push_back("embedding_dim must be >= 1");
    if (encoder_hidden < 1) errors.push_back("encoder_hidden must be >= 1");
    if (scorer_hidden < 1) errors.push_back("scorer_hidden must be >= 1");
    if (gamma <= 0.0 || gamma > 1.0) errors.push_back("gamma must be in (0, 1]");
    return errors;
}

Eigen::Matrix<double, 2, 5> q_composed(const QOutputs& q) {
    Eigen::Matrix<double, 2, 5> grid;
    for (int v = 0; v < kNumVerbs; ++v) {
        for (int o = 0; o < kNumObjects; ++o) {
            grid(v, o) = 0.5 * (q.q_verbs[v] + q.q_objects[o]);
        }
    }
    return grid;
}

namespace {

template <typename Vec>
int argmax_low(const Vec& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

Command greedy_command(const QOutputs& q) {
    return Command{static_cast<Verb>(argmax_low(q.q_verbs)),
                   static_cast<CmdObject>(argmax_low(q.q_objects))};
}

Command select_action(const QOutputs& q, double epsilon, Rng& rng) {
    if (rng.uniform01() < epsilon) {
        Verb v = static_cast<Verb>(rng.uniform_int(kNumVerbs));
        CmdObject o = static_cast<CmdObject>(rng.uniform_int(kNumObjects));
        return Command{v, o};
    }
    return greedy_command(q);
}

Agent::Agent(AgentConfig cfg, const Vocabulary& vocab) : cfg_(cfg), vocab_(&vocab) {
    auto errors = cfg.validate();
    if (!errors.empty()) throw std::invalid_argument("bad agent config: " + errors.front());

    const int V = vocab.size();
    const int E = cfg.embedding_dim;
    const int He = cfg.encoder_hidden;
    const int Hs = cfg.scorer_hidden;

    embedding_ = &params_.add("embedding", V, E);
    encoder_.wx = &params_.add("encoder.wx", E, 4 * He);
    encoder_.wh = &params_.add("encoder.wh", He, 4 * He);
    encoder_.b = &params_.add("encoder.b", 1, 4 * He);
    encoder_.hidden = He;

    if (cfg.kind == AgentKind::DQN) {
        fc_w_ = &params_.add("scorer.fc.w", He, Hs);
        fc_b_ = &params_.add("scorer.fc.b", 1, Hs);
    } else {
        scorer_cell_.wx = &params_.add("scorer.cell.wx", He, 4 * Hs);
        scorer_cell_.wh = &params_.add("scorer.cell.wh", Hs, 4 * Hs);
        scorer_cell_.b = &params_.add("scorer.cell.b", 1, 4 * Hs);
        scorer_cell_.hidden = Hs;
    }
    head_verb_w_ = &params_.add("head.verb.w", Hs, kNumVerbs);
    head_verb_b_ = &params_.add("head.verb.b", 1, kNumVerbs);
    head_object_w_ = &params_.add("head.object.w", Hs, kNumObjects);
    head_object_b_ = &params_.add("head.object.b", 1, kNumObjects);

    // Deterministic init: one rng, draws in registration order.
    Rng rng(mix_seed(cfg.init_seed, 0xC01Au));
    nn::init_embedding(rng, *embedding_);
    nn::init_lstm(rng, encoder_);
    if (cfg.kind == AgentKind::DQN) {
        nn::init_linear(rng, *fc_w_, *fc_b_);
    } else {
        nn::init_lstm(rng, scorer_cell_);
    }
    nn::init_linear(rng, *head_verb_w_, *head_verb_b_);
    nn::init_linear(rng, *head_object_w_, *head_object_b_);
}

PolicyState Agent::initial_policy_state() const {
    PolicyState ps;
    ps.h = nn::Matrix::Zero(1, cfg_.scorer_hidden);
    ps.c = nn::Matrix::Zero(1, cfg_.scorer_hidden);
    return ps;
}

QOutputs Agent::score(const TokenSequence& input, PolicyState& ps) const {
    nn::Matrix reps = nn::encode_values(*embedding_, encoder_, {&input.ids});
    nn::Matrix hidden;
    if (cfg_.kind == AgentKind::DQN) {
        hidden = dqn_hidden_values(reps);
    } else {
        auto [h, c] = scorer_cell_values(reps, ps.h, ps.c);
        ps.h = h;
        ps.c = c;
        hidden = std::move(h);
    }
    auto [qv, qo] = heads_values(hidden);
    QOutputs out;
    out.q_verbs = qv.row(0).transpose();
    out.q_objects = qo.row(0).transpose();
    return out;
}

void Agent::copy_values_from(const Agent& other) {
    params_.load_values(other.params_.flatten_values());
}

nn::VarPtr Agent::dqn_hidden(nn::Tape& tape, const nn::VarPtr& reps) const {
    if (cfg_.kind != AgentKind::DQN) throw std::logic_error("dqn_hidden on a DRQN agent");
    return nn::relu(tape, nn::linear(tape, *fc_w_, *fc_b_, reps));
}

std::pair<nn::VarPtr, nn::VarPtr> Agent::heads(nn::Tape& tape, const nn::VarPtr& hidden) const {
    return {nn::linear(tape, *head_verb_w_, *head_verb_b_, hidden),
            nn::linear(tape, *head_object_w_, *head_object_b_, hidden)};
}

nn::Matrix Agent::dqn_hidden_values(const nn::Matrix& reps) const {
    if (cfg_.kind != AgentKind::DQN) throw std::logic_error("dqn_hidden_values on a DRQN agent");
    return nn::linear_values(*fc_w_, *fc_b_, reps).cwiseMax(0.0);
}

std::pair<nn::Matrix, nn::Matrix> Agent::scorer_cell_values(const nn::Matrix& reps,
                                                            const nn::Matrix& h,
                                                            const nn::Matrix& c) const {
    if (cfg_.kind != AgentKind::DRQN)
        throw std::logic_error("scorer_cell_values on a DQN agent");
    return nn::lstm_step_values(scorer_cell_, reps, h, c);
}

std::pair<nn::Matrix, nn::Matrix> Agent::heads_values(const nn::Matrix& hidden) const {
    return {nn::linear_values(*head_verb_w_, *head_verb_b_, hidden),
            nn::linear_values(*head_object_w_, *head_object_b_, hidden)};
}

}  // namespace coinworld
