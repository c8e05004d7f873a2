#include "coinworld/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "coinworld/checkpoint.hpp"

namespace coinworld {

std::vector<std::string> TrainerConfig::validate() const {
    std::vector<std::string> errors;
    if (batch_size < 1) errors.push_back("batch_size must be >= 1");
    if (update_period < 1) errors.push_back("update_period must be >= 1");
    if (rho < 0.0 || rho > 1.0) errors.push_back("rho must be in [0, 1]");
    if (seq_len < 1) errors.push_back("seq_len must be >= 1");
    if (burn_in < 0 || burn_in >= seq_len) errors.push_back("burn_in must be in [0, seq_len)");
    if (replay_capacity < 1) errors.push_back("replay_capacity must be >= 1");
    if (eps_start < 0.0 || eps_start > 1.0) errors.push_back("eps_start must be in [0, 1]");
    if (eps_end < 0.0 || eps_end > eps_start) errors.push_back("eps_end must be in [0, eps_start]");
    if (eps_anneal_epochs < 1) errors.push_back("eps_anneal_epochs must be >= 1");
    if (epochs < 1) errors.push_back("epochs must be >= 1");
    if (episodes_per_epoch < 1) errors.push_back("episodes_per_epoch must be >= 1");
    if (max_train_step < 1) errors.push_back("max_train_step must be >= 1");
    if (max_test_step < 1) errors.push_back("max_test_step must be >= 1");
    if (target_sync_updates < 1) errors.push_back("target_sync_updates must be >= 1");
    if (early_stop_window < 0) errors.push_back("early_stop_window must be >= 0");
    if (checkpoint_every_epochs < 0) errors.push_back("checkpoint_every_epochs must be >= 0");
    if (checkpoint_every_epochs > 0 && checkpoint_dir.empty())
        errors.push_back("checkpoint_every_epochs requires checkpoint_dir");
    return errors;
}

double epsilon_at(int epoch, const TrainerConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
    if (epoch >= cfg.eps_anneal_epochs) return cfg.eps_end;
    double frac = static_cast<double>(epoch) / static_cast<double>(cfg.eps_anneal_epochs);
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

nlohmann::ordered_json EpochRecord::to_json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["epsilon"] = epsilon;
    j["avg_reward"] = train_reward;
    j["avg_steps"] = train_steps;
    j["success_rate"] = train_success;
    j["intrinsic"] = train_intrinsic;
    j["eval_reward"] = eval_reward;
    j["eval_steps"] = eval_steps;
    j["eval_success"] = eval_success;
    j["updates"] = updates;
    j["wall_ms"] = wall_ms;
    return j;
}

EpochRecord EpochRecord::from_json(const nlohmann::json& j) {
    EpochRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.epsilon = j.at("epsilon").get<double>();
    r.train_reward = j.at("avg_reward").get<double>();
    r.train_steps = j.at("avg_steps").get<double>();
    r.train_success = j.at("success_rate").get<double>();
    r.train_intrinsic = j.value("intrinsic", 0.0);
    r.eval_reward = j.value("eval_reward", 0.0);
    r.eval_steps = j.value("eval_steps", 0.0);
    r.eval_success = j.value("eval_success", 0.0);
    r.updates = j.value("updates", 0L);
    r.wall_ms = j.value("wall_ms", 0L);
    return r;
}

void save_metrics_jsonl(const MetricsLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const EpochRecord& r : log) out << r.to_json().dump() << "\n";
}

MetricsLog load_metrics_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics file: " + path);
    MetricsLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        log.push_back(EpochRecord::from_json(nlohmann::json::parse(line)));
    }
    return log;
}

Trainer::Trainer(Agent& agent, std::vector<WorldGraph> worlds, TrainerConfig cfg,
                 BonusConfig bonus)
    : agent_(agent),
      worlds_(std::move(worlds)),
      cfg_(cfg),
      bonus_(bonus),
      memory_(cfg.replay_capacity),
      adam_(agent.params(), cfg.adam),
      rng_(mix_seed(cfg.seed, 0x7a11u)) {
    auto errors = cfg_.validate();
    if (!errors.empty()) throw std::invalid_argument("bad trainer config: " + errors.front());
    if (worlds_.empty()) throw std::invalid_argument("trainer needs at least one world");

    double optimal_sum = 0.0;
    for (size_t i = 0; i < worlds_.size(); ++i) {
        counts_.register_game(static_cast<int>(i));
        optimal_sum += static_cast<double>(shortest_solution(worlds_[i]).size());
    }
    optimal_eval_steps_ = optimal_sum / static_cast<double>(worlds_.size());

    if (cfg_.use_target_network) {
        target_.emplace(agent_.config(), agent_.vocab());
        target_->copy_values_from(agent_);
    }
}

int Trainer::effective_seq_len() const {
    return agent_.config().kind == AgentKind::DQN ? 1 : cfg_.seq_len;
}

int Trainer::effective_burn_in() const {
    return agent_.config().kind == AgentKind::DQN ? 0 : cfg_.burn_in;
}

void Trainer::sync_target() {
    if (target_) target_->copy_values_from(agent_);
}

void Trainer::maybe_update() {
    if (memory_.total_transitions() == 0) return;
    auto batch = memory_.sample_sequences(cfg_.batch_size, effective_seq_len(), cfg_.rho, rng_);
    if (!batch.empty()) apply_update(batch);
}

double Trainer::apply_update(const std::vector<SampledSequence>& batch) {
    agent_.params().zero_grads();
    double loss = compute_loss(batch, /*backward=*/true);
    adam_.step(agent_.params());
    ++updates_done_;
    if (target_ && updates_done_ % cfg_.target_sync_updates == 0) sync_target();
    return loss;
}

double Trainer::compute_loss(const std::vector<SampledSequence>& batch, bool backward) {
    if (batch.empty()) throw std::invalid_argument("compute_loss on empty batch");
    const int B = static_cast<int>(batch.size());
    const int L = effective_seq_len();
    const int burn = effective_burn_in();
    const bool recurrent = agent_.config().kind == AgentKind::DRQN;
    const double gamma = agent_.config().gamma;

    // Deduplicate input texts across the whole batch: each distinct text is
    // encoded once; per-position rows are gathered from the shared block.
    std::vector<const std::vector<int>*> uniq;
    std::unordered_map<std::string_view, int> row_of;
    auto row_for = [&](const std::string& text, const TokenSequence& ids) {
        auto [it, inserted] = row_of.try_emplace(std::string_view(text),
                                                 static_cast<int>(uniq.size()));
        if (inserted) uniq.push_back(&ids.ids);
        return it->second;
    };

    std::vector<std::vector<int>> rows(static_cast<size_t>(L), std::vector<int>(B));
    std::vector<int> final_next_rows(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < L; ++t) {
            const Transition& tr = batch[static_cast<size_t>(b)].at(t);
            rows[static_cast<size_t>(t)][static_cast<size_t>(b)] =
                row_for(tr.input_text, tr.input_ids);
        }
        const Transition& last = batch[static_cast<size_t>(b)].at(L - 1);
        final_next_rows[static_cast<size_t>(b)] =
            row_for(last.next_input_text, last.next_input_ids);
    }

    nn::Tape tape;
    nn::VarPtr reps = nn::encode_batch(tape, agent_.embedding(), agent_.encoder(), uniq);

    // On-tape scorer roll over the L positions.
    std::vector<nn::VarPtr> qv_t(static_cast<size_t>(L)), qo_t(static_cast<size_t>(L));
    nn::VarPtr h, c;
    if (recurrent) {
        h = nn::make_var(nn::Matrix::Zero(B, agent_.config().scorer_hidden));
        c = nn::make_var(nn::Matrix::Zero(B, agent_.config().scorer_hidden));
    }
    for (int t = 0; t < L; ++t) {
        nn::VarPtr rep_t = nn::gather_rows(tape, reps, rows[static_cast<size_t>(t)]);
        nn::VarPtr hidden;
        if (recurrent) {
            auto [nh, nc] = nn::lstm_cell(tape, agent_.scorer_cell(), rep_t, h, c);
            h = nh;
            c = nc;
            hidden = h;
        } else {
            hidden = agent_.dqn_hidden(tape, rep_t);
        }
        auto [qv, qo] = agent_.heads(tape, hidden);
        qv_t[static_cast<size_t>(t)] = qv;
        qo_t[static_cast<size_t>(t)] = qo;
    }

    // Bootstrap values Q(s_{t+1}) for every position, detached from the graph.
    // Online mode reads positions 1..L-1 from the same forward pass (inputs
    // are contiguous within an episode) plus one value-only extension step for
    // the last position. Target mode replays everything through the frozen
    // copy instead.
    // next_q[t] holds per-row composed maxima for position t's next input.
    std::vector<Eigen::VectorXd> next_q(static_cast<size_t>(L));
    auto composed_row_max = [](const nn::Matrix& qv, const nn::Matrix& qo) {
        Eigen::VectorXd out(qv.rows());
        for (long r = 0; r < qv.rows(); ++r) {
            out[r] = 0.5 * (qv.row(r).maxCoeff() + qo.row(r).maxCoeff());
        }
        return out;
    };

    if (!cfg_.use_target_network) {
        for (int t = 0; t + 1 < L; ++t) {
            next_q[static_cast<size_t>(t)] = composed_row_max(qv_t[static_cast<size_t>(t) + 1]->v,
                                                              qo_t[static_cast<size_t>(t) + 1]->v);
        }
        nn::Matrix next_rep(B, agent_.config().encoder_hidden);
        for (int b = 0; b < B; ++b) {
            next_rep.row(b) = reps->v.row(final_next_rows[static_cast<size_t>(b)]);
        }
        nn::Matrix hidden_x;
        if (recurrent) {
            hidden_x = agent_.scorer_cell_values(next_rep, h->v, c->v).first;
        } else {
            hidden_x = agent_.dqn_hidden_values(next_rep);
        }
        auto [qvx, qox] = agent_.heads_values(hidden_x);
        next_q[static_cast<size_t>(L) - 1] = composed_row_max(qvx, qox);
    } else {
        Agent& net = *target_;
        nn::Matrix treps = nn::encode_values(net.embedding(), net.encoder(), uniq);
        auto gather_values = [&](const std::vector<int>& idx) {
            nn::Matrix out(B, treps.cols());
            for (int b = 0; b < B; ++b) out.row(b) = treps.row(idx[static_cast<size_t>(b)]);
            return out;
        };
        nn::Matrix th = nn::Matrix::Zero(B, net.config().scorer_hidden);
        nn::Matrix tc = th;
        for (int t = 0; t < L; ++t) {
            nn::Matrix rep_v = gather_values(rows[static_cast<size_t>(t)]);
            nn::Matrix hidden_v;
            if (recurrent) {
                std::tie(th, tc) = net.scorer_cell_values(rep_v, th, tc);
                hidden_v = th;
            } else {
                hidden_v = net.dqn_hidden_values(rep_v);
            }
            if (t >= 1) {
                auto [qv, qo] = net.heads_values(hidden_v);
                next_q[static_cast<size_t>(t) - 1] = composed_row_max(qv, qo);
            }
        }
        nn::Matrix rep_v = gather_values(final_next_rows);
        nn::Matrix hidden_v;
        if (recurrent) {
            hidden_v = net.scorer_cell_values(rep_v, th, tc).first;
        } else {
            hidden_v = net.dqn_hidden_values(rep_v);
        }
        auto [qv, qo] = net.heads_values(hidden_v);
        next_q[static_cast<size_t>(L) - 1] = composed_row_max(qv, qo);
    }

    // Loss over unmasked positions: past the burn-in prefix and past padding.
    double norm = 0.0;
    std::vector<std::vector<double>> weights(static_cast<size_t>(L),
                                             std::vector<double>(static_cast<size_t>(B), 0.0));
    for (int t = 0; t < L; ++t) {
        for (int b = 0; b < B; ++b) {
            if (t >= burn && t >= batch[static_cast<size_t>(b)].pad) {
                weights[static_cast<size_t>(t)][static_cast<size_t>(b)] = 1.0;
                norm += 1.0;
            }
        }
    }
    if (norm <= 0.0) throw std::logic_error("update batch is fully masked");

    double loss = 0.0;
    for (int t = 0; t < L; ++t) {
        std::vector<int> av(static_cast<size_t>(B)), ao(static_cast<size_t>(B));
        std::vector<double> y(static_cast<size_t>(B));
        for (int b = 0; b < B; ++b) {
            const Transition& tr = batch[static_cast<size_t>(b)].at(t);
            av[static_cast<size_t>(b)] = static_cast<int>(tr.action.verb);
            ao[static_cast<size_t>(b)] = static_cast<int>(tr.action.object);
            y[static_cast<size_t>(b)] =
                tr.done ? tr.total_reward
                        : tr.total_reward + gamma * next_q[static_cast<size_t>(t)][b];
        }
        loss += nn::masked_td_loss(tape, qv_t[static_cast<size_t>(t)], qo_t[static_cast<size_t>(t)],
                                   av, ao, y, weights[static_cast<size_t>(t)], norm);
    }

    if (backward) tape.backward();
    return loss;
}

EpisodeStats Trainer::run_training_episode(int world_index, double epsilon) {
    if (world_index < 0 || world_index >= static_cast<int>(worlds_.size()))
        throw std::out_of_range("world index out of range");
    const WorldGraph& world = worlds_[static_cast<size_t>(world_index)];
    const Vocabulary& vocab = agent_.vocab();
    const int history_len = agent_.config().history_len;

    Env env(world, cfg_.win_reward);
    std::string obs = env.reset();
    counts_.reset_episode(world_index, bonus_);
    // The initial observation is counted (it consumes the episodic first
    // visit of the start room) but precedes any transition, so its bonus has
    // nowhere to land and is dropped.
    counts_.observe_and_bonus(world_index, obs, bonus_);

    std::vector<std::string> history;
    std::optional<Command> prev;
    PolicyState ps = agent_.initial_policy_state();
    EpisodeTrace trace;
    EpisodeStats stats;

    while (true) {
        std::string input_text = compose_input(obs, prev, history, history_len);
        TokenSequence input_ids = encode_frozen(tokenize(input_text), vocab);

        // rng order is fixed: explore coin first, then (if exploring) the two
        // head draws. The DRQN still advances its policy state on explore
        // steps; the DQN skips the forward pass entirely.
        Command cmd;
        if (rng_.uniform01() < epsilon) {
            cmd = Command{static_cast<Verb>(rng_.uniform_int(kNumVerbs)),
                          static_cast<CmdObject>(rng_.uniform_int(kNumObjects))};
            if (agent_.config().kind == AgentKind::DRQN) agent_.score(input_ids, ps);
        } else {
            cmd = greedy_command(agent_.score(input_ids, ps));
        }

        StepResult sr = env.step(cmd, cfg_.max_train_step);
        // Refused commands leave the room state unchanged, so the refusal
        // message is not a newly discovered state and earns no bonus.
        double bonus = sr.refused
                           ? 0.0
                           : counts_.observe_and_bonus(world_index, sr.observation, bonus_);

        history.push_back(obs);
        std::string next_text = compose_input(sr.observation, cmd, history, history_len);

        Transition tr;
        tr.input_text = std::move(input_text);
        tr.next_input_text = next_text;
        tr.input_ids = std::move(input_ids);
        tr.next_input_ids = encode_frozen(tokenize(next_text), vocab);
        tr.action = cmd;
        tr.total_reward = sr.reward + bonus;
        tr.game_reward = sr.reward;
        tr.done = sr.done;
        tr.game_id = world_index;
        trace.transitions.push_back(std::move(tr));

        stats.game_return += sr.reward;
        stats.intrinsic_return += bonus;

        obs = sr.observation;
        prev = cmd;

        ++env_steps_;
        if (env_steps_ % cfg_.update_period == 0) maybe_update();

        if (sr.done) break;
    }
    stats.steps = env.steps();
    stats.won = env.won();
    memory_.push(std::move(trace));
    return stats;
}

EvalStats Trainer::evaluate_greedy() {
    EvalStats total;
    const Vocabulary& vocab = agent_.vocab();
    const int history_len = agent_.config().history_len;
    for (const WorldGraph& world : worlds_) {
        Env env(world, cfg_.win_reward);
        std::string obs = env.reset();
        std::vector<std::string> history;
        std::optional<Command> prev;
        PolicyState ps = agent_.initial_policy_state();
        double episode_reward = 0.0;
        while (true) {
            TokenSequence ids =
                encode_frozen(tokenize(compose_input(obs, prev, history, history_len)), vocab);
            Command cmd = greedy_command(agent_.score(ids, ps));
            StepResult sr = env.step(cmd, cfg_.max_test_step);
            episode_reward += sr.reward;
            history.push_back(obs);
            obs = sr.observation;
            prev = cmd;
            if (sr.done) break;
        }
        total.reward += episode_reward;
        total.steps += static_cast<double>(env.steps());
        total.success += env.won() ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(worlds_.size());
    total.reward /= n;
    total.steps /= n;
    total.success /= n;
    return total;
}

MetricsLog Trainer::run(const EpochCallback& on_epoch) {
    MetricsLog log;
    int perfect_streak = 0;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        const double eps = epsilon_at(epoch, cfg_);

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.epsilon = eps;
        for (int e = 0; e < cfg_.episodes_per_epoch; ++e) {
            int wi = rng_.uniform_int(static_cast<int>(worlds_.size()));
            EpisodeStats st = run_training_episode(wi, eps);
            rec.train_reward += st.game_return;
            rec.train_steps += static_cast<double>(st.steps);
            rec.train_success += st.won ? 1.0 : 0.0;
            rec.train_intrinsic += st.intrinsic_return;
        }
        const double n = static_cast<double>(cfg_.episodes_per_epoch);
        rec.train_reward /= n;
        rec.train_steps /= n;
        rec.train_success /= n;
        rec.train_intrinsic /= n;

        if (cfg_.eval_each_epoch) {
            EvalStats ev = evaluate_greedy();
            rec.eval_reward = ev.reward;
            rec.eval_steps = ev.steps;
            rec.eval_success = ev.success;
        }
        rec.updates = updates_done_;
        if (cfg_.record_wall_time) {
            rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        }
        log.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (cfg_.checkpoint_every_epochs > 0 &&
            (epoch + 1) % cfg_.checkpoint_every_epochs == 0) {
            std::ostringstream name;
            name << cfg_.checkpoint_dir << "/checkpoint_epoch_" << std::setw(6)
                 << std::setfill('0') << (epoch + 1) << ".json";
            save_checkpoint(name.str(), agent_, &adam_, epoch + 1);
        }

        if (cfg_.early_stop_window > 0 && cfg_.eval_each_epoch) {
            bool perfect = rec.eval_success >= 1.0 &&
                           (!cfg_.early_stop_optimal_steps ||
                            rec.eval_steps <= optimal_eval_steps_ + 1e-9);
            perfect_streak = perfect ? perfect_streak + 1 : 0;
            if (perfect_streak >= cfg_.early_stop_window) break;
        }
    }
    return log;
}

MetricsLog train_run(Agent& agent, std::vector<WorldGraph> worlds, const TrainerConfig& cfg,
                     const BonusConfig& bonus, const Trainer::EpochCallback& on_epoch) {
    Trainer trainer(agent, std::move(worlds), cfg, bonus);
    return trainer.run(on_epoch);
}

}  // namespace coinworld
