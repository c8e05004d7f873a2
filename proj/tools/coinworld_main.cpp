// coinworld: command-line workbench over the game/agent library. Subcommands
// generate worlds, play them interactively, train agents, evaluate
// checkpoints or scripted policies, and analyze recorded rollouts.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coinworld/agent.hpp"
#include "coinworld/checkpoint.hpp"
#include "coinworld/command.hpp"
#include "coinworld/env.hpp"
#include "coinworld/exploration.hpp"
#include "coinworld/harness.hpp"
#include "coinworld/rng.hpp"
#include "coinworld/textcodec.hpp"
#include "coinworld/trainer.hpp"
#include "coinworld/worldgen.hpp"

namespace fs = std::filesystem;
using namespace coinworld;

namespace {

struct GlobalOpts {
    uint64_t seed = 1;
    std::string out = "run";
};

// COINWORLD_THREADS caps how many workers evaluation may fan out across.
int eval_threads() {
    const char* raw = std::getenv("COINWORLD_THREADS");
    if (!raw) return 1;
    int n = std::atoi(raw);
    if (n < 1) return 1;
    return std::min(n, 64);
}

// The resolved configuration (defaults + config file + flags, flags winning)
// is written into every run directory so the run can be replayed exactly:
// `coinworld <subcommand> --config <run>/config.toml`.

std::string toml_value(const std::string& raw) {
    if (raw == "true" || raw == "false") return raw;
    if (!raw.empty() && raw.find_first_not_of("0123456789.eE+-") == std::string::npos) {
        return raw;
    }
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"' || c == '\\') quoted += '\\';
        quoted += c;
    }
    return quoted + "\"";
}

void emit_options(std::ostream& f, const CLI::App& cmd) {
    for (const CLI::Option* opt : cmd.get_options()) {
        std::string name = opt->get_single_name();
        if (name == "help" || name == "config") continue;
        const std::vector<std::string>& results = opt->results();
        if (opt->get_expected_min() == 0 && results.empty()) {
            f << name << "=" << (opt->count() > 0 ? "true" : "false") << "\n";
        } else if (results.size() > 1) {
            f << name << "=[";
            for (size_t i = 0; i < results.size(); ++i) {
                f << (i ? ", " : "") << toml_value(results[i]);
            }
            f << "]\n";
        } else if (!results.empty()) {
            f << name << "=" << toml_value(results.front()) << "\n";
        } else if (!opt->get_default_str().empty()) {
            f << name << "=" << toml_value(opt->get_default_str()) << "\n";
        }
    }
}

void write_resolved_config(const CLI::App& app, const fs::path& out) {
    fs::create_directories(out);
    std::ofstream f(out / "config.toml");
    emit_options(f, app);
    for (const CLI::App* sub : app.get_subcommands()) {
        f << "\n[" << sub->get_name() << "]\n";
        emit_options(f, *sub);
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOpts {
    std::string mode = "easy";
    int level = 5;
    int count = 1;
    int validation = 0;
    std::vector<int> test_levels;
    int test_games = 10;
};

ExperimentSpec experiment_spec(uint64_t seed, const std::string& mode, int level, int games,
                               int validation, const std::vector<int>& test_levels,
                               int test_games) {
    ExperimentSpec es;
    es.seed = seed;
    es.mode = mode_from_name(mode);
    es.train_level = level;
    es.train_games = games;
    es.validation_games = validation;
    es.test_levels = test_levels;
    es.test_games_per_level = test_levels.empty() ? 0 : test_games;
    return es;
}

int cmd_generate(const CLI::App& app, const GlobalOpts& g, const GenerateOpts& o) {
    ExperimentSpec es = experiment_spec(g.seed, o.mode, o.level, o.count, o.validation,
                                        o.test_levels, o.test_games);
    ExperimentBundle bundle = build_experiment(es);
    fs::path out(g.out);
    write_experiment(bundle, out.string());
    write_resolved_config(app, out);

    size_t test_count = 0;
    for (const auto& [level, worlds] : bundle.test) test_count += worlds.size();
    std::cout << "wrote " << (bundle.train.size() + bundle.validation.size() + test_count)
              << " worlds under " << out.string() << " (train " << bundle.train.size()
              << ", validation " << bundle.validation.size() << ", test " << test_count
              << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// play
// ---------------------------------------------------------------------------

struct PlayOpts {
    std::string world_file;
    int max_steps = 200;
};

int cmd_play(const CLI::App& app, const GlobalOpts& g, const PlayOpts& o) {
    WorldGraph world = load_world(o.world_file);
    fs::path out(g.out);
    fs::create_directories(out);
    std::ofstream transcript(out / "transcript.txt");

    auto emit = [&](const std::string& text) {
        std::cout << text << "\n";
        transcript << text << "\n";
    };

    Env env(world);
    emit(env.reset());
    double total_reward = 0.0;
    std::string line;
    while (!env.done()) {
        std::cout << "> " << std::flush;
        if (!std::getline(std::cin, line)) break;
        transcript << "> " << line << "\n";
        if (line == "quit") break;
        std::optional<Command> cmd = parse_command(line);
        if (!cmd) {
            // unparseable text never reaches the game; the refusal costs nothing
            emit(kRefusalText);
            continue;
        }
        StepResult r = env.step(*cmd, o.max_steps);
        total_reward += r.reward;
        emit(r.observation);
        std::ostringstream status;
        status << "reward: " << r.reward << " done: " << (r.done ? "true" : "false");
        emit(status.str());
    }
    std::ostringstream summary;
    summary << "total reward: " << total_reward << " steps: " << env.steps();
    emit(summary.str());
    write_resolved_config(app, out);
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string model = "drqn";
    std::string bonus = "none";
    int history = 0;
    double beta = 1.0;
    double gamma = -1.0;  // negative = follow the bonus convention
    std::string experiment;  // reuse a generated experiment instead of world flags
    std::string mode = "easy";
    int level = 5;
    int games = 1;
    int validation = 0;
    std::vector<int> test_levels;
    int test_games = 10;

    int embedding = 20;
    int encoder = 100;
    int scorer = 64;

    int epochs = 1000;
    int episodes_per_epoch = 10;
    int batch = 32;
    int update_period = 4;
    double rho = 0.25;
    int seq_len = 8;
    int burn_in = 4;
    size_t replay = 500000;
    double lr = 0.001;
    double eps_start = 1.0;
    double eps_end = 0.2;
    int eps_anneal = 1000;
    int max_train_step = 50;
    int max_test_step = 200;
    int checkpoint_every = 100;
    int early_stop_window = 0;
    bool early_stop_optimal = false;
    bool no_eval = false;
    bool target_network = false;
    int target_sync = 1000;
};

std::string model_tag(const TrainOpts& o) {
    std::string tag = o.model;
    if (o.bonus == "cumulative") tag += "+";
    if (o.bonus == "episodic") tag += "++";
    if (o.history == 4) tag += "H";
    return tag;
}

int cmd_train(const CLI::App& app, const GlobalOpts& g, const TrainOpts& o) {
    AgentConfig acfg;
    acfg.kind = agent_kind_from_name(o.model);
    acfg.history_len = o.history;
    acfg.embedding_dim = o.embedding;
    acfg.encoder_hidden = o.encoder;
    acfg.scorer_hidden = o.scorer;
    BonusConfig bonus{bonus_kind_from_name(o.bonus), o.beta};
    acfg.gamma = o.gamma >= 0.0 ? o.gamma : (bonus.kind == BonusKind::None ? 0.9 : 0.5);
    acfg.init_seed = mix_seed(g.seed, 7);

    TrainerConfig tc;
    tc.batch_size = o.batch;
    tc.update_period = o.update_period;
    tc.rho = o.rho;
    tc.seq_len = o.seq_len;
    tc.burn_in = o.burn_in;
    tc.replay_capacity = o.replay;
    tc.adam.lr = o.lr;
    tc.use_target_network = o.target_network;
    tc.target_sync_updates = o.target_sync;
    tc.eps_start = o.eps_start;
    tc.eps_end = o.eps_end;
    tc.eps_anneal_epochs = o.eps_anneal;
    tc.epochs = o.epochs;
    tc.episodes_per_epoch = o.episodes_per_epoch;
    tc.max_train_step = o.max_train_step;
    tc.max_test_step = o.max_test_step;
    tc.eval_each_epoch = !o.no_eval;
    tc.early_stop_window = o.early_stop_window;
    tc.early_stop_optimal_steps = o.early_stop_optimal;
    tc.checkpoint_every_epochs = o.checkpoint_every;
    tc.seed = mix_seed(g.seed, 11);

    fs::path out(g.out);
    tc.checkpoint_dir = (out / "checkpoints").string();

    // every configuration problem is reported in one pass, not one at a time
    std::vector<std::string> errors = acfg.validate();
    for (const std::string& e : tc.validate()) errors.push_back(e);
    if (bonus.beta < 0.0) errors.push_back("beta must be >= 0");
    if (o.beta != 1.0 && bonus.kind == BonusKind::None)
        errors.push_back("--beta has no effect with --bonus none");
    if (!errors.empty()) {
        std::cerr << "invalid configuration:\n";
        for (const std::string& e : errors) std::cerr << "  - " << e << "\n";
        return 1;
    }

    ExperimentBundle bundle =
        o.experiment.empty()
            ? build_experiment(experiment_spec(g.seed, o.mode, o.level, o.games, o.validation,
                                               o.test_levels, o.test_games))
            : load_experiment(o.experiment);

    // the run directory carries its own copy of the worlds and vocabulary,
    // so it can be evaluated or replayed without the source experiment
    fs::create_directories(out / "checkpoints");
    write_experiment(bundle, out.string());
    write_resolved_config(app, out);

    Agent agent(acfg, bundle.vocabulary);
    Trainer trainer(agent, bundle.train, tc, bonus);

    std::ofstream metrics(out / "metrics.jsonl");
    if (!metrics) throw std::runtime_error("cannot open metrics.jsonl for writing");
    int last_epoch = 0;
    Trainer::EpochCallback on_epoch = [&](const EpochRecord& rec) {
        metrics << rec.to_json().dump() << "\n";
        metrics.flush();
        last_epoch = rec.epoch;
        if (rec.epoch % 10 == 0 || rec.epoch == 1) {
            std::cerr << "epoch " << rec.epoch << "  eps " << std::fixed
                      << std::setprecision(2) << rec.epsilon << "  train reward "
                      << rec.train_reward << "  eval success " << rec.eval_success
                      << "  eval steps " << std::setprecision(1) << rec.eval_steps
                      << std::defaultfloat << "\n";
        }
    };
    MetricsLog log = trainer.run(on_epoch);
    save_checkpoint((out / "checkpoints" / "checkpoint_final.json").string(), agent,
                    &trainer.optimizer(), last_epoch);

    std::cout << "trained " << model_tag(o) << " on " << bundle.train.size() << " "
              << mode_name(bundle.train.front().spec.mode) << " L"
              << bundle.train.front().spec.level << " game(s) for " << log.size()
              << " epochs; final eval success "
              << (log.empty() ? 0.0 : log.back().eval_success) << "\n"
              << "run directory: " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
    std::string experiment;
    std::string checkpoint;
    std::string policy = "agent";
    std::string split = "test";
    std::string bonus;  // accepted and ignored: evaluation never applies bonuses
    int max_steps = 200;
    int episodes_per_world = 1;
};

void write_summary_csv(const fs::path& path,
                       const std::vector<std::pair<std::string, EvalReport>>& reports) {
    std::ofstream csv(path);
    csv << "policy,split,level,games,success_rate,avg_reward,avg_steps\n";
    for (const auto& [split, report] : reports) {
        for (const auto& [level, stats] : report.by_level) {
            csv << report.policy << "," << split << "," << level << "," << stats.games << ","
                << stats.success << "," << stats.avg_reward << "," << stats.avg_steps
                << "\n";
        }
    }
}

int cmd_eval(const CLI::App& app, const GlobalOpts& g, const EvalOpts& o, bool bonus_given) {
    if (bonus_given) {
        std::cerr << "warning: exploration bonuses are always disabled during evaluation; "
                     "--bonus ignored\n";
    }
    ExperimentBundle bundle = load_experiment(o.experiment);

    std::map<std::string, std::vector<WorldGraph>> splits;
    if (o.split == "train") {
        splits["train"] = bundle.train;
    } else if (o.split == "validation") {
        splits["validation"] = bundle.validation;
    } else {
        for (const auto& [level, worlds] : bundle.test) {
            splits["test_L" + std::to_string(level)] = worlds;
        }
    }
    if (splits.empty() || splits.begin()->second.empty()) {
        throw std::invalid_argument("experiment has no worlds in split '" + o.split + "'");
    }

    fs::path out(g.out);
    fs::create_directories(out);

    std::optional<Agent> agent;
    if (o.policy == "agent") {
        if (o.checkpoint.empty()) {
            throw std::invalid_argument("--checkpoint is required with --policy agent");
        }
        std::string file = o.checkpoint;
        if (fs::is_directory(file)) {
            // a checkpoint directory means: pick the best on validation games
            std::vector<std::string> candidates;
            for (const auto& entry : fs::directory_iterator(file)) {
                if (entry.path().extension() == ".json") {
                    candidates.push_back(entry.path().string());
                }
            }
            std::sort(candidates.begin(), candidates.end());
            if (candidates.empty()) {
                throw std::invalid_argument("no checkpoint files under " + file);
            }
            if (bundle.validation.empty()) {
                throw std::invalid_argument(
                    "checkpoint selection needs validation games in the experiment");
            }
            ValidationChoice choice = validation_selection(candidates, bundle.vocabulary,
                                                           bundle.validation, o.max_steps);
            std::cerr << "selected " << choice.file << " (validation reward "
                      << choice.summary.avg_reward << ", steps " << choice.summary.avg_steps
                      << ")\n";
            file = choice.file;
        }
        agent.emplace(agent_from_checkpoint(load_checkpoint(file), bundle.vocabulary));
    }

    const int threads = eval_threads();
    std::vector<std::pair<std::string, EvalReport>> reports;
    for (const auto& [name, worlds] : splits) {
        EvalReport report;
        if (agent) {
            report = zero_shot_eval(*agent, worlds, o.max_steps, nullptr, threads);
        } else if (o.policy == "oracle") {
            OraclePolicy p;
            report = run_eval(p, worlds, o.max_steps, o.episodes_per_world);
        } else if (o.policy == "wall_follower") {
            WallFollowerPolicy p;
            report = run_eval(p, worlds, o.max_steps, o.episodes_per_world);
        } else {
            RandomPolicy p(mix_seed(g.seed, 13));
            report = run_eval(p, worlds, o.max_steps, o.episodes_per_world);
        }
        report.save((out / ("eval_report_" + name + ".json")).string());
        std::cout << name << ": success " << report.overall.success << ", avg reward "
                  << report.overall.avg_reward << ", avg steps " << report.overall.avg_steps
                  << " over " << report.overall.games << " episode(s)\n";
        reports.emplace_back(name, std::move(report));
    }
    write_summary_csv(out / "summary.csv", reports);
    write_resolved_config(app, out);
    std::cout << "reports written under " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOpts {
    std::vector<std::string> reports;
};

int cmd_analyze(const CLI::App& app, const GlobalOpts& g, const AnalyzeOpts& o) {
    std::vector<std::vector<Command>> rollouts;
    std::vector<std::pair<std::string, EvalReport>> loaded;
    for (const std::string& file : o.reports) {
        EvalReport report = EvalReport::load(file);
        for (const EpisodeRecord& ep : report.episodes) rollouts.push_back(ep.commands);
        loaded.emplace_back(fs::path(file).stem().string(), std::move(report));
    }
    if (rollouts.empty()) throw std::invalid_argument("reports contain no episodes");

    BigramReport bigrams = bigram_analysis(rollouts);
    fs::path out(g.out);
    fs::create_directories(out);
    std::ofstream(out / "bigram_report.json") << bigrams.to_json().dump(2) << "\n";
    write_summary_csv(out / "summary.csv", loaded);
    write_resolved_config(app, out);

    std::cout << "rollouts: " << bigrams.rollouts << ", command pairs: " << bigrams.total_pairs
              << "\n"
              << "rotational consistency: " << bigrams.consistency << " (cw "
              << bigrams.cw_consistency << ", acw " << bigrams.acw_consistency << ") over "
              << bigrams.analyzed_pairs << " analyzed movement pairs\n"
              << "reports written under " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coinworld: a text-game exploration workbench"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML-style config file (command-line flags win)");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "global seed; all run randomness derives from it")
        ->capture_default_str();
    app.add_option("--out", g.out, "output directory for this run")->capture_default_str();

    auto mode_check = CLI::IsMember({"easy", "medium", "hard"});

    GenerateOpts gen;
    CLI::App* cgen = app.add_subcommand("generate", "generate an experiment: world files + manifest");
    cgen->fallthrough();
    cgen->add_option("--mode", gen.mode, "difficulty")->check(mode_check)
        ->capture_default_str();
    cgen->add_option("--level", gen.level, "chain length of the training games")
        ->check(CLI::Range(1, 30))->capture_default_str();
    cgen->add_option("--count", gen.count, "number of distinct training games")
        ->check(CLI::Range(1, 10000))->capture_default_str();
    cgen->add_option("--validation", gen.validation, "held-out games from the training pool")
        ->check(CLI::Range(0, 10000))->capture_default_str();
    cgen->add_option("--test-levels", gen.test_levels,
                     "levels of unseen test games (disjoint name pool)")
        ->delimiter(',')->check(CLI::Range(1, 30));
    cgen->add_option("--test-games", gen.test_games, "test games per level")
        ->check(CLI::Range(1, 10000))->capture_default_str();

    PlayOpts play;
    CLI::App* cplay = app.add_subcommand("play", "interactive episode on a world file");
    cplay->fallthrough();
    cplay->add_option("world", play.world_file, "world JSON file")->required()
        ->check(CLI::ExistingFile);
    cplay->add_option("--max-steps", play.max_steps, "episode step budget")
        ->check(CLI::Range(1, 100000))->capture_default_str();

    TrainOpts tr;
    CLI::App* ctrain = app.add_subcommand("train", "train an agent; writes metrics + checkpoints");
    ctrain->fallthrough();
    ctrain->add_option("--model", tr.model, "scorer architecture")
        ->check(CLI::IsMember({"dqn", "drqn"}))->capture_default_str();
    ctrain->add_option("--bonus", tr.bonus, "exploration bonus")
        ->check(CLI::IsMember({"none", "cumulative", "episodic"}))->capture_default_str();
    ctrain->add_option("--history", tr.history, "previous observations in the input")
        ->check(CLI::IsMember({0, 4}))->capture_default_str();
    ctrain->add_option("--beta", tr.beta, "bonus scale")->capture_default_str();
    ctrain->add_option("--gamma", tr.gamma,
                       "discount; default 0.9, or 0.5 when a bonus is active");
    ctrain->add_option("--experiment", tr.experiment,
                       "train on a generated experiment directory; world flags are ignored")
        ->check(CLI::ExistingDirectory);
    ctrain->add_option("--mode", tr.mode, "difficulty")->check(mode_check)
        ->capture_default_str();
    ctrain->add_option("--level", tr.level, "chain length")->check(CLI::Range(1, 30))
        ->capture_default_str();
    ctrain->add_option("--games", tr.games, "training games")->check(CLI::Range(1, 10000))
        ->capture_default_str();
    ctrain->add_option("--validation", tr.validation, "validation games")
        ->check(CLI::Range(0, 10000))->capture_default_str();
    ctrain->add_option("--test-levels", tr.test_levels, "levels of unseen test games")
        ->delimiter(',')->check(CLI::Range(1, 30));
    ctrain->add_option("--test-games", tr.test_games, "test games per level")
        ->check(CLI::Range(1, 10000))->capture_default_str();
    ctrain->add_option("--embedding", tr.embedding, "embedding width")->capture_default_str();
    ctrain->add_option("--encoder", tr.encoder, "encoder LSTM width")->capture_default_str();
    ctrain->add_option("--scorer", tr.scorer, "scorer width")->capture_default_str();
    ctrain->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
    ctrain->add_option("--episodes-per-epoch", tr.episodes_per_epoch, "episodes per epoch")
        ->capture_default_str();
    ctrain->add_option("--batch", tr.batch, "update batch size")->capture_default_str();
    ctrain->add_option("--update-period", tr.update_period, "env steps per update")
        ->capture_default_str();
    ctrain->add_option("--rho", tr.rho, "prioritized fraction of each batch")
        ->capture_default_str();
    ctrain->add_option("--seq-len", tr.seq_len, "recurrent update sequence length")
        ->capture_default_str();
    ctrain->add_option("--burn-in", tr.burn_in, "masked warm-up prefix")
        ->capture_default_str();
    ctrain->add_option("--replay", tr.replay, "replay capacity in transitions")
        ->capture_default_str();
    ctrain->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    ctrain->add_option("--eps-start", tr.eps_start, "initial epsilon")->capture_default_str();
    ctrain->add_option("--eps-end", tr.eps_end, "final epsilon")->capture_default_str();
    ctrain->add_option("--eps-anneal", tr.eps_anneal, "epochs to anneal epsilon over")
        ->capture_default_str();
    ctrain->add_option("--max-train-step", tr.max_train_step, "training episode budget")
        ->capture_default_str();
    ctrain->add_option("--max-test-step", tr.max_test_step, "evaluation episode budget")
        ->capture_default_str();
    ctrain->add_option("--checkpoint-every", tr.checkpoint_every,
                       "epochs between checkpoints (0 = final only)")->capture_default_str();
    ctrain->add_option("--early-stop-window", tr.early_stop_window,
                       "stop after this many consecutive perfect eval epochs (0 = never)")
        ->capture_default_str();
    ctrain->add_flag("--early-stop-optimal", tr.early_stop_optimal,
                     "perfect additionally means optimal step counts");
    ctrain->add_flag("--no-eval", tr.no_eval, "skip the greedy evaluation after each epoch");
    ctrain->add_flag("--target-network", tr.target_network,
                     "bootstrap from a periodically synced frozen copy");
    ctrain->add_option("--target-sync", tr.target_sync, "updates between target syncs")
        ->capture_default_str();

    EvalOpts ev;
    CLI::App* ceval = app.add_subcommand("eval", "evaluate a checkpoint or scripted policy");
    ceval->fallthrough();
    ceval->add_option("--experiment", ev.experiment,
                      "experiment directory (from train or generate)")
        ->required()->check(CLI::ExistingDirectory);
    ceval->add_option("--checkpoint", ev.checkpoint,
                      "checkpoint file, or a directory to pick the best on validation games");
    ceval->add_option("--policy", ev.policy, "policy to run")
        ->check(CLI::IsMember({"agent", "oracle", "wall_follower", "random"}))
        ->capture_default_str();
    ceval->add_option("--split", ev.split, "world set to evaluate")
        ->check(CLI::IsMember({"test", "train", "validation"}))->capture_default_str();
    CLI::Option* bonus_opt =
        ceval->add_option("--bonus", ev.bonus, "ignored: evaluation never applies bonuses")
            ->check(CLI::IsMember({"none", "cumulative", "episodic"}));
    ceval->add_option("--max-steps", ev.max_steps, "episode step budget")
        ->check(CLI::Range(1, 100000))->capture_default_str();
    ceval->add_option("--episodes-per-world", ev.episodes_per_world,
                      "episodes per world for scripted policies")
        ->check(CLI::Range(1, 1000))->capture_default_str();

    AnalyzeOpts an;
    CLI::App* canalyze = app.add_subcommand("analyze", "bigram analysis of saved rollouts");
    canalyze->fallthrough();
    canalyze->add_option("reports", an.reports, "EvalReport JSON files")->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // collapse the library's many parse-error codes onto the documented
        // contract: anything other than a clean --help exit is a usage error
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*cgen) return cmd_generate(app, g, gen);
        if (*cplay) return cmd_play(app, g, play);
        if (*ctrain) return cmd_train(app, g, tr);
        if (*ceval) return cmd_eval(app, g, ev, bonus_opt->count() > 0);
        if (*canalyze) return cmd_analyze(app, g, an);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
