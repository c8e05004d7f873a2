// _coinworld: python bindings for the coin-collector workbench.
//
// The module mirrors the command-line surface: world generation, interactive
// play, training, greedy evaluation and command-bigram analysis. Enum-like
// settings (mode, bonus kind, model kind) cross the boundary as strings and
// are validated by the core converters; structured results cross as plain
// dicts/lists decoded from the core's JSON forms.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coinworld/checkpoint.hpp"
#include "coinworld/harness.hpp"
#include "coinworld/trainer.hpp"

namespace py = pybind11;
using namespace coinworld;

namespace {

py::object to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

Command parse_or_throw(const std::string& text) {
    std::optional<Command> cmd = parse_command(text);
    if (!cmd) {
        throw py::value_error("unrecognized command: '" + text +
                              "' (expected 'go north|south|east|west' or 'take coin')");
    }
    return *cmd;
}

GameSpec make_game_spec(uint64_t seed, const std::string& mode, int level) {
    return GameSpec{seed, mode_from_name(mode), level};
}

std::unique_ptr<Policy> scripted_policy(const std::string& name, uint64_t seed) {
    if (name == "oracle") return std::make_unique<OraclePolicy>();
    if (name == "wall_follower") return std::make_unique<WallFollowerPolicy>();
    if (name == "random") return std::make_unique<RandomPolicy>(seed);
    throw py::value_error("unknown policy '" + name +
                          "' (expected oracle, wall_follower or random)");
}

}  // namespace

PYBIND11_MODULE(_coinworld, m) {
    m.doc() = "Coin-collector text-game workbench: generation, training, evaluation.";

    // ---- worlds ----

    py::class_<GameSpec>(m, "GameSpec")
        .def(py::init(&make_game_spec), py::arg("seed"), py::arg("mode"), py::arg("level"))
        .def_readonly("seed", &GameSpec::seed)
        .def_property_readonly("mode", [](const GameSpec& s) { return mode_name(s.mode); })
        .def_readonly("level", &GameSpec::level)
        .def("__repr__", [](const GameSpec& s) {
            std::ostringstream out;
            out << "GameSpec(seed=" << s.seed << ", mode='" << mode_name(s.mode)
                << "', level=" << s.level << ")";
            return out.str();
        });

    py::class_<WorldGraph>(m, "WorldGraph")
        .def_readonly("spec", &WorldGraph::spec)
        .def_readonly("start", &WorldGraph::start_id)
        .def_readonly("coin_room", &WorldGraph::coin_room_id)
        .def_readonly("chain", &WorldGraph::chain)
        .def_readonly("distractors", &WorldGraph::distractor_ids)
        .def_property_readonly("room_count", &WorldGraph::room_count)
        .def("room_name",
             [](const WorldGraph& w, int id) {
                 if (id < 0 || id >= w.room_count()) throw py::index_error("room id out of range");
                 return w.rooms[static_cast<size_t>(id)].name;
             })
        .def("fingerprint", &world_fingerprint)
        .def("signature", &world_signature)
        .def("to_dict", [](const WorldGraph& w) { return to_py(world_to_json(w)); })
        .def("save", &save_world, py::arg("path"))
        .def("__repr__", [](const WorldGraph& w) {
            std::ostringstream out;
            out << "WorldGraph(" << mode_name(w.spec.mode) << " L" << w.spec.level << ", "
                << w.room_count() << " rooms)";
            return out.str();
        });

    m.def(
        "generate_world",
        [](uint64_t seed, const std::string& mode, int level, const std::string& pool) {
            NamePool p = NamePool::All;
            if (pool == "train") p = NamePool::Train;
            else if (pool == "test") p = NamePool::Test;
            else if (pool != "all") throw py::value_error("pool must be all, train or test");
            return generate_world(make_game_spec(seed, mode, level), p);
        },
        py::arg("seed"), py::arg("mode"), py::arg("level"), py::arg("pool") = "all",
        "Deterministically generate one world from (seed, mode, level).");
    m.def("load_world", &load_world, py::arg("path"));
    m.def("validate_world", &validate_world, py::arg("world"),
          "Structural audit; returns a list of violations (empty = valid).");
    m.def(
        "shortest_solution",
        [](const WorldGraph& w) {
            std::vector<std::string> words;
            for (const Command& c : shortest_solution(w)) words.push_back(command_words(c));
            return words;
        },
        py::arg("world"), "The unique optimal command sequence, as strings.");

    // ---- play ----

    py::class_<Env>(m, "Env")
        .def(py::init<const WorldGraph&, double>(), py::arg("world"), py::arg("win_reward") = 1.0,
             py::keep_alive<1, 2>())
        .def("reset", &Env::reset, "Start a fresh episode; returns the initial observation.")
        .def(
            "step",
            [](Env& env, const std::string& command, int max_steps) {
                StepResult r = env.step(parse_or_throw(command), max_steps);
                return py::make_tuple(r.observation, r.reward, r.done, r.won);
            },
            py::arg("command"), py::arg("max_steps") = 200,
            "Apply one command; returns (observation, reward, done, won).")
        .def_property_readonly("steps", &Env::steps)
        .def_property_readonly("done", &Env::done)
        .def_property_readonly("won", &Env::won)
        .def_property_readonly("current_room_id", &Env::current_room_id);

    // ---- experiments ----

    py::class_<ExperimentSpec>(m, "ExperimentSpec")
        .def(py::init([](uint64_t seed, const std::string& mode, int train_level, int train_games,
                         int validation_games, const std::vector<int>& test_levels,
                         int test_games_per_level) {
                 ExperimentSpec s;
                 s.seed = seed;
                 s.mode = mode_from_name(mode);
                 s.train_level = train_level;
                 s.train_games = train_games;
                 s.validation_games = validation_games;
                 s.test_levels = test_levels;
                 s.test_games_per_level = test_games_per_level;
                 return s;
             }),
             py::arg("seed"), py::arg("mode") = "easy", py::arg("train_level") = 5,
             py::arg("train_games") = 1, py::arg("validation_games") = 0,
             py::arg("test_levels") = std::vector<int>{}, py::arg("test_games_per_level") = 10)
        .def("to_dict", [](const ExperimentSpec& s) { return to_py(s.to_json()); });

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_property_readonly("size", &Vocabulary::size)
        .def("checksum", &Vocabulary::checksum)
        .def("__len__", &Vocabulary::size);

    py::class_<ExperimentBundle>(m, "ExperimentBundle")
        .def_readonly("spec", &ExperimentBundle::spec)
        .def_readonly("train", &ExperimentBundle::train)
        .def_readonly("validation", &ExperimentBundle::validation)
        .def_readonly("test", &ExperimentBundle::test)
        .def_readonly("vocabulary", &ExperimentBundle::vocabulary)
        .def("manifest", [](const ExperimentBundle& b) { return to_py(b.manifest()); });

    m.def("build_experiment", &build_experiment, py::arg("spec"),
          "Generate the train/validation/test world sets and their vocabulary.");
    m.def("write_experiment", &write_experiment, py::arg("bundle"), py::arg("directory"));
    m.def("load_experiment", &load_experiment, py::arg("directory"));

    // ---- agents and training ----

    py::class_<AgentConfig>(m, "AgentConfig")
        .def(py::init([](const std::string& model, int history_len, int embedding_dim,
                         int encoder_hidden, int scorer_hidden, double gamma, uint64_t init_seed) {
                 AgentConfig c;
                 c.kind = agent_kind_from_name(model);
                 c.history_len = history_len;
                 c.embedding_dim = embedding_dim;
                 c.encoder_hidden = encoder_hidden;
                 c.scorer_hidden = scorer_hidden;
                 c.gamma = gamma;
                 c.init_seed = init_seed;
                 std::vector<std::string> errors = c.validate();
                 if (!errors.empty()) throw py::value_error(errors.front());
                 return c;
             }),
             py::arg("model") = "drqn", py::arg("history_len") = 0, py::arg("embedding_dim") = 20,
             py::arg("encoder_hidden") = 100, py::arg("scorer_hidden") = 64,
             py::arg("gamma") = 0.9, py::arg("init_seed") = 0)
        .def_property_readonly("model",
                               [](const AgentConfig& c) { return agent_kind_name(c.kind); })
        .def_readonly("history_len", &AgentConfig::history_len)
        .def_readonly("embedding_dim", &AgentConfig::embedding_dim)
        .def_readonly("encoder_hidden", &AgentConfig::encoder_hidden)
        .def_readonly("scorer_hidden", &AgentConfig::scorer_hidden)
        .def_readonly("gamma", &AgentConfig::gamma);

    py::class_<Agent>(m, "Agent")
        .def(py::init<AgentConfig, const Vocabulary&>(), py::arg("config"), py::arg("vocabulary"),
             py::keep_alive<1, 3>())
        .def_property_readonly("config", &Agent::config)
        .def("param_checksum", &Agent::param_checksum)
        .def(
            "act",
            [](const Agent& agent, const std::string& input_text) {
                PolicyState ps = agent.initial_policy_state();
                QOutputs q = agent.score(encode_frozen(tokenize(input_text), agent.vocab()), ps);
                return command_words(greedy_command(q));
            },
            py::arg("input_text"),
            "Greedy command for one composed input (stateless; for inspection).");

    py::class_<BonusConfig>(m, "BonusConfig")
        .def(py::init([](const std::string& kind, double beta) {
                 return BonusConfig{bonus_kind_from_name(kind), beta};
             }),
             py::arg("kind") = "none", py::arg("beta") = 1.0)
        .def_property_readonly("kind",
                               [](const BonusConfig& c) { return bonus_kind_name(c.kind); })
        .def_readonly("beta", &BonusConfig::beta);

    py::class_<TrainerConfig>(m, "TrainerConfig")
        .def(py::init<>())
        .def_readwrite("batch_size", &TrainerConfig::batch_size)
        .def_readwrite("update_period", &TrainerConfig::update_period)
        .def_readwrite("rho", &TrainerConfig::rho)
        .def_readwrite("seq_len", &TrainerConfig::seq_len)
        .def_readwrite("burn_in", &TrainerConfig::burn_in)
        .def_readwrite("replay_capacity", &TrainerConfig::replay_capacity)
        .def_readwrite("use_target_network", &TrainerConfig::use_target_network)
        .def_readwrite("target_sync_updates", &TrainerConfig::target_sync_updates)
        .def_readwrite("eps_start", &TrainerConfig::eps_start)
        .def_readwrite("eps_end", &TrainerConfig::eps_end)
        .def_readwrite("eps_anneal_epochs", &TrainerConfig::eps_anneal_epochs)
        .def_readwrite("epochs", &TrainerConfig::epochs)
        .def_readwrite("episodes_per_epoch", &TrainerConfig::episodes_per_epoch)
        .def_readwrite("max_train_step", &TrainerConfig::max_train_step)
        .def_readwrite("max_test_step", &TrainerConfig::max_test_step)
        .def_readwrite("eval_each_epoch", &TrainerConfig::eval_each_epoch)
        .def_readwrite("early_stop_window", &TrainerConfig::early_stop_window)
        .def_readwrite("early_stop_optimal_steps", &TrainerConfig::early_stop_optimal_steps)
        .def_readwrite("checkpoint_every_epochs", &TrainerConfig::checkpoint_every_epochs)
        .def_readwrite("checkpoint_dir", &TrainerConfig::checkpoint_dir)
        .def_readwrite("record_wall_time", &TrainerConfig::record_wall_time)
        .def_readwrite("seed", &TrainerConfig::seed)
        .def_property_readonly("lr", [](const TrainerConfig& c) { return c.adam.lr; })
        .def("set_lr", [](TrainerConfig& c, double lr) { c.adam.lr = lr; });

    py::class_<Trainer>(m, "Trainer")
        .def(py::init([](Agent& agent, std::vector<WorldGraph> worlds, TrainerConfig cfg,
                         BonusConfig bonus) {
                 std::vector<std::string> errors = cfg.validate();
                 if (!errors.empty()) throw py::value_error(errors.front());
                 return std::make_unique<Trainer>(agent, std::move(worlds), cfg, bonus);
             }),
             py::arg("agent"), py::arg("worlds"), py::arg("config") = TrainerConfig{},
             py::arg("bonus") = BonusConfig{}, py::keep_alive<1, 2>())
        .def(
            "run",
            [](Trainer& t, const std::function<void(py::dict)>& on_epoch) {
                MetricsLog log;
                if (on_epoch) {
                    log = t.run([&on_epoch](const EpochRecord& r) {
                        on_epoch(py::cast<py::dict>(to_py(r.to_json())));
                    });
                } else {
                    py::gil_scoped_release release;
                    log = t.run();
                }
                py::list out;
                for (const EpochRecord& r : log) out.append(to_py(r.to_json()));
                return out;
            },
            py::arg("on_epoch") = py::none(),
            "Train; returns one metrics dict per epoch.")
        .def_property_readonly("updates_done", &Trainer::updates_done)
        .def_property_readonly("env_steps", &Trainer::env_steps);

    // ---- checkpoints ----

    m.def(
        "save_checkpoint",
        [](const std::string& path, const Agent& agent, int epoch) {
            save_checkpoint(path, agent, nullptr, epoch);
        },
        py::arg("path"), py::arg("agent"), py::arg("epoch") = 0);
    m.def(
        "load_agent",
        [](const std::string& path, const Vocabulary& vocab) {
            return agent_from_checkpoint(load_checkpoint(path), vocab);
        },
        py::arg("path"), py::arg("vocabulary"), py::keep_alive<0, 2>(),
        "Rebuild an agent from a checkpoint file (vocabulary checksums must match).");

    // ---- evaluation and analysis ----

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("policy", &EvalReport::policy)
        .def_property_readonly("success", [](const EvalReport& r) { return r.overall.success; })
        .def_property_readonly("avg_reward",
                               [](const EvalReport& r) { return r.overall.avg_reward; })
        .def_property_readonly("avg_steps", [](const EvalReport& r) { return r.overall.avg_steps; })
        .def_property_readonly("rollouts",
                               [](const EvalReport& r) {
                                   py::list out;
                                   for (const EpisodeRecord& e : r.episodes) {
                                       py::list cmds;
                                       for (const Command& c : e.commands)
                                           cmds.append(command_words(c));
                                       out.append(cmds);
                                   }
                                   return out;
                               })
        .def("to_dict", [](const EvalReport& r) { return to_py(r.to_json()); })
        .def("save", &EvalReport::save, py::arg("path"));
    m.def("load_eval_report", &EvalReport::load, py::arg("path"));

    m.def(
        "zero_shot_eval",
        [](const Agent& agent, const std::vector<WorldGraph>& worlds, int max_steps, int threads) {
            py::gil_scoped_release release;
            return zero_shot_eval(agent, worlds, max_steps, nullptr, threads);
        },
        py::arg("agent"), py::arg("worlds"), py::arg("max_steps") = 200, py::arg("threads") = 1,
        "Greedy agent rollouts with purity guards (no updates, no counters).");
    m.def(
        "run_eval",
        [](const std::string& policy, const std::vector<WorldGraph>& worlds, int max_steps,
           int episodes_per_world, uint64_t seed) {
            std::unique_ptr<Policy> p = scripted_policy(policy, seed);
            return run_eval(*p, worlds, max_steps, episodes_per_world);
        },
        py::arg("policy"), py::arg("worlds"), py::arg("max_steps") = 200,
        py::arg("episodes_per_world") = 1, py::arg("seed") = 1,
        "Roll a scripted reference policy (oracle, wall_follower or random).");

    m.def(
        "bigram_analysis",
        [](const std::vector<std::vector<std::string>>& rollouts) {
            std::vector<std::vector<Command>> parsed;
            parsed.reserve(rollouts.size());
            for (const auto& r : rollouts) {
                std::vector<Command> cmds;
                cmds.reserve(r.size());
                for (const std::string& text : r) cmds.push_back(parse_or_throw(text));
                parsed.push_back(std::move(cmds));
            }
            return to_py(bigram_analysis(parsed).to_json());
        },
        py::arg("rollouts"),
        "Adjacent-command pair tabulation and rotational-consistency score.");
}
