#include "coinworld/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "coinworld/checkpoint.hpp"
#include "coinworld/textcodec.hpp"

namespace coinworld {

// ------------------------------------------------------------------ policies

AgentPolicy::AgentPolicy(const Agent& agent) : agent_(&agent) {}

void AgentPolicy::begin_episode(const Env& env) {
    (void)env;
    ps_ = agent_->initial_policy_state();
    history_.clear();
    prev_.reset();
}

Command AgentPolicy::act(const Env& env, const std::string& observation) {
    (void)env;
    TokenSequence ids = encode_frozen(
        tokenize(compose_input(observation, prev_, history_, agent_->config().history_len)),
        agent_->vocab());
    Command cmd = greedy_command(agent_->score(ids, ps_));
    history_.push_back(observation);
    prev_ = cmd;
    return cmd;
}

std::string AgentPolicy::name() const {
    return "agent:" + agent_kind_name(agent_->config().kind);
}

void OraclePolicy::begin_episode(const Env& env) {
    plan_ = shortest_solution(env.world());
    next_ = 0;
}

Command OraclePolicy::act(const Env& env, const std::string& observation) {
    (void)env;
    (void)observation;
    if (next_ >= plan_.size()) return take_coin();  // plan exhausted; should not happen
    return plan_[next_++];
}

void WallFollowerPolicy::begin_episode(const Env& env) {
    (void)env;
    heading_.reset();
}

Command WallFollowerPolicy::act(const Env& env, const std::string& observation) {
    (void)observation;
    const Room& room = env.current_room();
    if (room.id == env.world().coin_room_id && !env.coin_taken()) return take_coin();

    auto has_door = [&room](Direction d) { return room.exits[static_cast<size_t>(d)] >= 0; };
    if (!heading_) {
        for (Direction d : {Direction::North, Direction::West, Direction::South, Direction::East}) {
            if (has_door(d)) {
                heading_ = d;
                return make_go(d);
            }
        }
        return take_coin();  // isolated room; unreachable on valid worlds
    }
    const Direction h = *heading_;
    for (Direction d : {rotate_acw(h), h, rotate_cw(h), opposite(h)}) {
        if (has_door(d)) {
            heading_ = d;
            return make_go(d);
        }
    }
    return take_coin();  // unreachable: the entry door always exists
}

Command RandomPolicy::act(const Env& env, const std::string& observation) {
    (void)env;
    (void)observation;
    Verb v = static_cast<Verb>(rng_.uniform_int(kNumVerbs));
    CmdObject o = static_cast<CmdObject>(rng_.uniform_int(kNumObjects));
    return Command{v, o};
}

// ---------------------------------------------------------------- eval loops

namespace {

void accumulate(LevelStats& s, const EpisodeRecord& ep) {
    ++s.games;
    s.success += ep.won ? 1.0 : 0.0;
    s.avg_reward += ep.reward;
    s.avg_steps += static_cast<double>(ep.steps);
}

void finalize(LevelStats& s) {
    if (s.games == 0) return;
    const double n = static_cast<double>(s.games);
    s.success /= n;
    s.avg_reward /= n;
    s.avg_steps /= n;
}

nlohmann::ordered_json level_stats_json(const LevelStats& s) {
    nlohmann::ordered_json j;
    j["games"] = s.games;
    j["success_rate"] = s.success;
    j["avg_reward"] = s.avg_reward;
    j["avg_steps"] = s.avg_steps;
    return j;
}

LevelStats level_stats_from_json(const nlohmann::json& j) {
    LevelStats s;
    s.games = j.at("games").get<int>();
    s.success = j.at("success_rate").get<double>();
    s.avg_reward = j.at("avg_reward").get<double>();
    s.avg_steps = j.at("avg_steps").get<double>();
    return s;
}

}  // namespace

namespace {

EpisodeRecord roll_episode(Policy& policy, const WorldGraph& world, int max_steps) {
    Env env(world);
    std::string obs = env.reset();
    policy.begin_episode(env);
    EpisodeRecord ep;
    ep.world_seed = world.spec.seed;
    ep.mode = mode_name(world.spec.mode);
    ep.level = world.spec.level;
    while (true) {
        Command cmd = policy.act(env, obs);
        StepResult sr = env.step(cmd, max_steps);
        ep.commands.push_back(cmd);
        ep.reward += sr.reward;
        obs = sr.observation;
        if (sr.done) break;
    }
    ep.won = env.won();
    ep.steps = env.steps();
    return ep;
}

void fold_episodes(EvalReport& report, std::vector<EpisodeRecord> episodes) {
    for (EpisodeRecord& ep : episodes) {
        accumulate(report.overall, ep);
        accumulate(report.by_level[ep.level], ep);
        report.episodes.push_back(std::move(ep));
    }
    finalize(report.overall);
    for (auto& [level, stats] : report.by_level) finalize(stats);
}

}  // namespace

EvalReport run_eval(Policy& policy, const std::vector<WorldGraph>& worlds, int max_steps,
                    int episodes_per_world) {
    if (worlds.empty()) throw std::invalid_argument("run_eval needs at least one world");
    if (max_steps < 1 || episodes_per_world < 1)
        throw std::invalid_argument("run_eval: bad step/episode budget");

    EvalReport report;
    report.policy = policy.name();
    report.max_steps = max_steps;
    std::vector<EpisodeRecord> episodes;
    for (const WorldGraph& world : worlds) {
        for (int e = 0; e < episodes_per_world; ++e) {
            episodes.push_back(roll_episode(policy, world, max_steps));
        }
    }
    fold_episodes(report, std::move(episodes));
    return report;
}

EvalReport zero_shot_eval(const Agent& agent, const std::vector<WorldGraph>& worlds,
                          int max_steps, const CountTable* counters, int threads) {
    const uint64_t params_before = agent.param_checksum();
    const uint64_t counts_before = counters ? counters->checksum() : 0;

    EvalReport report;
    const int fan =
        std::clamp(threads, 1, worlds.empty() ? 1 : static_cast<int>(worlds.size()));
    if (fan <= 1) {
        AgentPolicy policy(agent);
        report = run_eval(policy, worlds, max_steps);
    } else {
        if (max_steps < 1) throw std::invalid_argument("run_eval: bad step/episode budget");
        // Games are independent; each worker rolls a strided share of the
        // worlds with its own policy state, and results are merged by world
        // index so the report never depends on the thread count.
        std::vector<EpisodeRecord> episodes(worlds.size());
        std::vector<std::exception_ptr> errors(static_cast<size_t>(fan));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(fan));
        for (int t = 0; t < fan; ++t) {
            pool.emplace_back([&, t] {
                try {
                    AgentPolicy policy(agent);
                    for (size_t i = static_cast<size_t>(t); i < worlds.size();
                         i += static_cast<size_t>(fan)) {
                        episodes[i] = roll_episode(policy, worlds[i], max_steps);
                    }
                } catch (...) {
                    errors[static_cast<size_t>(t)] = std::current_exception();
                }
            });
        }
        for (std::thread& th : pool) th.join();
        for (const std::exception_ptr& err : errors) {
            if (err) std::rethrow_exception(err);
        }
        report.policy = AgentPolicy(agent).name();
        report.max_steps = max_steps;
        fold_episodes(report, std::move(episodes));
    }

    if (agent.param_checksum() != params_before)
        throw std::logic_error("agent parameters changed during evaluation");
    if (counters && counters->checksum() != counts_before)
        throw std::logic_error("exploration counters changed during evaluation");
    return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["policy"] = policy;
    j["max_steps"] = max_steps;
    j["overall"] = level_stats_json(overall);
    nlohmann::ordered_json levels;
    for (const auto& [level, stats] : by_level) {
        levels[std::to_string(level)] = level_stats_json(stats);
    }
    j["by_level"] = std::move(levels);
    nlohmann::ordered_json eps = nlohmann::ordered_json::array();
    for (const EpisodeRecord& ep : episodes) {
        nlohmann::ordered_json e;
        e["world_seed"] = ep.world_seed;
        e["mode"] = ep.mode;
        e["level"] = ep.level;
        e["won"] = ep.won;
        e["reward"] = ep.reward;
        e["steps"] = ep.steps;
        std::vector<std::string> cmds;
        cmds.reserve(ep.commands.size());
        for (const Command& c : ep.commands) cmds.push_back(command_words(c));
        e["commands"] = cmds;
        eps.push_back(std::move(e));
    }
    j["episodes"] = std::move(eps);
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport report;
    report.policy = j.at("policy").get<std::string>();
    report.max_steps = j.at("max_steps").get<int>();
    report.overall = level_stats_from_json(j.at("overall"));
    for (const auto& [key, stats] : j.at("by_level").items()) {
        report.by_level[std::stoi(key)] = level_stats_from_json(stats);
    }
    for (const auto& e : j.at("episodes")) {
        EpisodeRecord ep;
        ep.world_seed = e.at("world_seed").get<uint64_t>();
        ep.mode = e.at("mode").get<std::string>();
        ep.level = e.at("level").get<int>();
        ep.won = e.at("won").get<bool>();
        ep.reward = e.at("reward").get<double>();
        ep.steps = e.at("steps").get<int>();
        for (const auto& c : e.at("commands")) {
            auto cmd = parse_command(c.get<std::string>());
            if (!cmd) throw std::invalid_argument("bad command in eval report: " +
                                                  c.get<std::string>());
            ep.commands.push_back(*cmd);
        }
        report.episodes.push_back(std::move(ep));
    }
    return report;
}

void EvalReport::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << to_json().dump(2) << "\n";
}

EvalReport EvalReport::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open eval report: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

EvalSummary summarize(const EvalReport& report) {
    return EvalSummary{report.overall.avg_reward, report.overall.avg_steps,
                       report.overall.success};
}

int validation_select_index(const std::vector<EvalSummary>& candidates) {
    if (candidates.empty())
        throw std::invalid_argument("validation selection over no candidates");
    int best = 0;
    for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
        const EvalSummary& a = candidates[static_cast<size_t>(i)];
        const EvalSummary& b = candidates[static_cast<size_t>(best)];
        if (a.avg_reward > b.avg_reward ||
            (a.avg_reward == b.avg_reward && a.avg_steps < b.avg_steps)) {
            best = i;
        }
    }
    return best;
}

ValidationChoice validation_selection(const std::vector<std::string>& checkpoint_files,
                                      const Vocabulary& vocab,
                                      const std::vector<WorldGraph>& validation_worlds,
                                      int max_steps) {
    if (checkpoint_files.empty())
        throw std::invalid_argument("validation selection needs checkpoint files");
    std::vector<EvalSummary> summaries;
    summaries.reserve(checkpoint_files.size());
    for (const std::string& file : checkpoint_files) {
        Agent agent = agent_from_checkpoint(load_checkpoint(file), vocab);
        summaries.push_back(summarize(zero_shot_eval(agent, validation_worlds, max_steps)));
    }
    ValidationChoice choice;
    choice.index = validation_select_index(summaries);
    choice.file = checkpoint_files[static_cast<size_t>(choice.index)];
    choice.summary = summaries[static_cast<size_t>(choice.index)];
    return choice;
}

// -------------------------------------------------------------------- bigram

BigramReport bigram_analysis(const std::vector<std::vector<Command>>& rollouts) {
    BigramReport rep;
    for (const auto& seq : rollouts) {
        ++rep.rollouts;
        const size_t n = seq.size();
        std::vector<char> reversal(n, 0);
        for (size_t k = 1; k < n; ++k) {
            reversal[k] = is_movement(seq[k]) && is_movement(seq[k - 1]) &&
                          movement_direction(seq[k]) == opposite(movement_direction(seq[k - 1]));
        }
        for (size_t k = 1; k < n; ++k) {
            ++rep.total_pairs;
            ++rep.pair_counts[static_cast<size_t>(command_index(seq[k - 1]))]
                             [static_cast<size_t>(command_index(seq[k]))];
            if (!is_movement(seq[k - 1]) || !is_movement(seq[k])) continue;
            ++rep.movement_pairs;
            if (reversal[k - 1] || reversal[k]) continue;
            ++rep.analyzed_pairs;
            Direction d1 = movement_direction(seq[k - 1]);
            Direction d2 = movement_direction(seq[k]);
            if (d2 == d1) {
                ++rep.straight_pairs;
            } else if (d2 == rotate_cw(d1)) {
                ++rep.cw_turns;
            } else if (d2 == rotate_acw(d1)) {
                ++rep.acw_turns;
            }
            // d2 == opposite(d1) cannot reach here: that pair is a reversal
        }
    }
    if (rep.analyzed_pairs > 0) {
        rep.cw_consistency =
            static_cast<double>(rep.cw_turns) / static_cast<double>(rep.analyzed_pairs);
        rep.acw_consistency =
            static_cast<double>(rep.acw_turns) / static_cast<double>(rep.analyzed_pairs);
        rep.consistency = std::max(rep.cw_consistency, rep.acw_consistency);
    }
    return rep;
}

nlohmann::ordered_json BigramReport::to_json() const {
    nlohmann::ordered_json j;
    j["rollouts"] = rollouts;
    j["total_pairs"] = total_pairs;
    j["movement_pairs"] = movement_pairs;
    j["analyzed_pairs"] = analyzed_pairs;
    j["straight_pairs"] = straight_pairs;
    j["cw_turns"] = cw_turns;
    j["acw_turns"] = acw_turns;
    j["cw_consistency"] = cw_consistency;
    j["acw_consistency"] = acw_consistency;
    j["consistency"] = consistency;
    nlohmann::ordered_json counts;
    for (int a = 0; a < kNumCommands; ++a) {
        nlohmann::ordered_json row;
        for (int b = 0; b < kNumCommands; ++b) {
            long n = pair_counts[static_cast<size_t>(a)][static_cast<size_t>(b)];
            if (n > 0) row[command_words(command_from_index(b))] = n;
        }
        if (!row.empty()) counts[command_words(command_from_index(a))] = std::move(row);
    }
    j["pair_counts"] = std::move(counts);
    return j;
}

// --------------------------------------------------------------- experiments

nlohmann::ordered_json ExperimentSpec::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["mode"] = mode_name(mode);
    j["train_level"] = train_level;
    j["train_games"] = train_games;
    j["validation_games"] = validation_games;
    j["test_levels"] = test_levels;
    j["test_games_per_level"] = test_games_per_level;
    return j;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    s.seed = j.at("seed").get<uint64_t>();
    s.mode = mode_from_name(j.at("mode").get<std::string>());
    s.train_level = j.at("train_level").get<int>();
    s.train_games = j.at("train_games").get<int>();
    s.validation_games = j.at("validation_games").get<int>();
    s.test_levels = j.at("test_levels").get<std::vector<int>>();
    s.test_games_per_level = j.at("test_games_per_level").get<int>();
    return s;
}

namespace {

// Generates `count` worlds with distinct optimal-path signatures within the
// set, bumping the derived seed on collision.
std::vector<WorldGraph> generate_set(uint64_t base_seed, uint64_t salt, Mode mode, int level,
                                     int count, NamePool pool, std::set<std::string>& signatures) {
    std::vector<WorldGraph> out;
    out.reserve(static_cast<size_t>(count));
    uint64_t bump = 0;
    for (int i = 0; i < count; ++i) {
        for (;;) {
            GameSpec spec;
            spec.seed = mix_seed(base_seed, salt + static_cast<uint64_t>(i) + (bump << 32));
            spec.mode = mode;
            spec.level = level;
            WorldGraph w = generate_world(spec, pool);
            if (signatures.insert(world_signature(w)).second) {
                out.push_back(std::move(w));
                break;
            }
            ++bump;
            if (bump > 1000) throw GenerationError("could not find enough distinct worlds");
        }
    }
    return out;
}

}  // namespace

ExperimentBundle build_experiment(const ExperimentSpec& spec) {
    if (spec.train_games < 1) throw std::invalid_argument("train_games must be >= 1");
    if (spec.validation_games < 0) throw std::invalid_argument("validation_games must be >= 0");
    if (spec.test_games_per_level < 0)
        throw std::invalid_argument("test_games_per_level must be >= 0");

    ExperimentBundle bundle;
    bundle.spec = spec;

    std::set<std::string> train_signatures;
    bundle.train = generate_set(spec.seed, 1000, spec.mode, spec.train_level, spec.train_games,
                                NamePool::Train, train_signatures);
    bundle.validation = generate_set(spec.seed, 200000, spec.mode, spec.train_level,
                                     spec.validation_games, NamePool::Train, train_signatures);
    std::set<std::string> test_signatures;
    uint64_t level_salt = 400000;
    for (int level : spec.test_levels) {
        bundle.test[level] = generate_set(spec.seed, level_salt, spec.mode, level,
                                          spec.test_games_per_level, NamePool::Test,
                                          test_signatures);
        level_salt += 10000;
    }

    std::vector<WorldGraph> train_like = bundle.train;
    train_like.insert(train_like.end(), bundle.validation.begin(), bundle.validation.end());
    for (const auto& [level, worlds] : bundle.test) {
        if (!train_like.empty() && !worlds.empty() && !check_disjoint(train_like, worlds)) {
            throw GenerationError("train/test world sets are not disjoint");
        }
    }
    // The vocabulary covers only the training-side worlds and is then frozen;
    // novel words in unseen test games map to <unk> at evaluation time.
    std::vector<const WorldGraph*> train_side;
    for (const WorldGraph& w : bundle.train) train_side.push_back(&w);
    for (const WorldGraph& w : bundle.validation) train_side.push_back(&w);
    bundle.vocabulary = build_vocabulary(train_side);
    return bundle;
}

namespace {

std::string set_file_name(const std::string& prefix, int index) {
    std::ostringstream name;
    name << "worlds/" << prefix << "_" << std::setw(3) << std::setfill('0') << index << ".json";
    return name.str();
}

nlohmann::ordered_json world_entry(const WorldGraph& w, const std::string& file) {
    nlohmann::ordered_json j;
    j["file"] = file;
    j["seed"] = w.spec.seed;
    j["mode"] = mode_name(w.spec.mode);
    j["level"] = w.spec.level;
    j["rooms"] = w.room_count();
    j["fingerprint"] = world_fingerprint(w);
    return j;
}

}  // namespace

nlohmann::ordered_json ExperimentBundle::manifest() const {
    nlohmann::ordered_json j;
    j["spec"] = spec.to_json();
    j["vocab_checksum"] = vocabulary.checksum();
    j["vocab_size"] = vocabulary.size();
    nlohmann::ordered_json sets;
    nlohmann::ordered_json train_set = nlohmann::ordered_json::array();
    for (size_t i = 0; i < train.size(); ++i) {
        train_set.push_back(world_entry(train[i], set_file_name("train", static_cast<int>(i))));
    }
    sets["train"] = std::move(train_set);
    nlohmann::ordered_json val_set = nlohmann::ordered_json::array();
    for (size_t i = 0; i < validation.size(); ++i) {
        val_set.push_back(
            world_entry(validation[i], set_file_name("validation", static_cast<int>(i))));
    }
    sets["validation"] = std::move(val_set);
    nlohmann::ordered_json test_sets;
    for (const auto& [level, worlds] : test) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (size_t i = 0; i < worlds.size(); ++i) {
            arr.push_back(world_entry(
                worlds[i], set_file_name("test_l" + std::to_string(level), static_cast<int>(i))));
        }
        test_sets[std::to_string(level)] = std::move(arr);
    }
    sets["test"] = std::move(test_sets);
    j["sets"] = std::move(sets);
    return j;
}

void write_experiment(const ExperimentBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "worlds");

    auto write_set = [&dir](const std::vector<WorldGraph>& worlds, const std::string& prefix) {
        for (size_t i = 0; i < worlds.size(); ++i) {
            save_world(worlds[i], dir + "/" + set_file_name(prefix, static_cast<int>(i)));
        }
    };
    write_set(bundle.train, "train");
    write_set(bundle.validation, "validation");
    for (const auto& [level, worlds] : bundle.test) {
        write_set(worlds, "test_l" + std::to_string(level));
    }
    bundle.vocabulary.save(dir + "/vocab.json");
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + dir + "/manifest.json");
    out << bundle.manifest().dump(2) << "\n";
}

ExperimentBundle load_experiment(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("cannot open manifest: " + dir + "/manifest.json");
    nlohmann::json manifest;
    in >> manifest;

    ExperimentBundle bundle;
    bundle.spec = ExperimentSpec::from_json(manifest.at("spec"));
    auto load_set = [&dir](const nlohmann::json& entries) {
        std::vector<WorldGraph> worlds;
        for (const auto& entry : entries) {
            WorldGraph w = load_world(dir + "/" + entry.at("file").get<std::string>());
            if (world_fingerprint(w) != entry.at("fingerprint").get<uint64_t>())
                throw std::runtime_error("world file does not match its manifest fingerprint");
            worlds.push_back(std::move(w));
        }
        return worlds;
    };
    bundle.train = load_set(manifest.at("sets").at("train"));
    bundle.validation = load_set(manifest.at("sets").at("validation"));
    for (const auto& [key, entries] : manifest.at("sets").at("test").items()) {
        bundle.test[std::stoi(key)] = load_set(entries);
    }
    bundle.vocabulary = Vocabulary::load(dir + "/vocab.json");
    if (bundle.vocabulary.checksum() != manifest.at("vocab_checksum").get<uint64_t>())
        throw std::runtime_error("vocabulary does not match its manifest checksum");
    return bundle;
}

}  // namespace coinworld
