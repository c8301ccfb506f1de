// Command-line front end: deterministic train / evaluate / transfer /
// adversarial-training / report pipelines driven by one JSON config file.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "advrl/checkpoint.hpp"
#include "advrl/config.hpp"
#include "advrl/eval.hpp"
#include "advrl/report.hpp"

namespace fs = std::filesystem;
using namespace advrl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;  // overrides master_seed when >= 0
  int jobs = 0;            // overrides config when > 0
  std::string output;      // overrides output_dir when nonempty
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (JSON)")->required();
  cmd->add_option("--seed", args.seed, "override master_seed");
  cmd->add_option("--jobs", args.jobs, "worker pool size for evaluation commands");
  cmd->add_option("--output", args.output, "override output_dir");
}

// File -> env-var overrides -> flags, then resolve directories and persist
// the fully resolved config next to the outputs.
ExperimentConfig load_and_resolve(const CommonArgs& args) {
  std::ifstream is(args.config_path);
  if (!is) throw std::runtime_error("cannot open config file: " + args.config_path);
  nlohmann::json j;
  is >> j;
  apply_env_overrides(j, collect_env_overrides());
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (args.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(args.seed);
  if (args.jobs > 0) cfg.jobs = args.jobs;
  if (!args.output.empty()) cfg.output_dir = args.output;
  cfg.validate();

  fs::create_directories(fs::path(cfg.output_dir) / "checkpoints");
  fs::create_directories(fs::path(cfg.output_dir) / "traces");
  fs::create_directories(fs::path(cfg.output_dir) / "reports");
  write_resolved_config(fs::path(cfg.output_dir) / "resolved-config.json", cfg);
  return cfg;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& sub, const std::string& name) {
  return fs::path(cfg.output_dir) / sub / name;
}

LayerStack load_net(const std::string& path, const char* who) {
  if (path.empty()) throw std::runtime_error(std::string(who) + " checkpoint path not set in config");
  if (!fs::exists(path)) throw std::runtime_error(std::string(who) + " checkpoint missing: " + path);
  return load_checkpoint(path).net;
}

EvalOptions eval_options(const ExperimentConfig& cfg) {
  EvalOptions opts;
  opts.seeds = cfg.eval_seed_list();
  opts.episodes = cfg.eval.episodes;
  opts.alpha = cfg.alpha;
  opts.jobs = cfg.jobs;
  return opts;
}

TimingStrategy make_strategy(const ExperimentConfig& cfg) {
  if (cfg.strategy.kind == "uniform") {
    double p = cfg.strategy.p;
    if (cfg.strategy.matched) {
      if (cfg.strategy.matched_reports.empty())
        throw std::runtime_error("matched uniform strategy needs strategy.matched_reports");
      p = matched_uniform_p(read_reports_jsonl(cfg.strategy.matched_reports));
      std::cout << "matched uniform rate p=" << p << " (from " << cfg.strategy.matched_reports
                << ")\n";
    }
    return Uniform{p};
  }
  if (cfg.strategy.kind == "strategic") return StrategicallyTimed{cfg.strategy.threshold};
  auto attacker = std::make_shared<LayerStack>(load_net(cfg.paths.attacker_checkpoint, "attacker"));
  return LearnedAttacker{std::move(attacker)};
}

int cmd_train_victim(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_resolve(args);
  auto env = cfg.make_environment();
  const std::uint64_t seed = derive_seed(cfg.master_seed, "victim-train");

  std::cout << "training victim on " << cfg.env_name << " for " << cfg.victim_dqn.max_steps
            << " steps (seed " << seed << ")\n";
  const TrainResult result = train_victim(*env, cfg.victim_dqn, cfg.victim_net, seed);

  Checkpoint ckpt{result.net, result.optimizer, seed,
                  {{"role", "victim"}, {"env", cfg.env_name}}};
  const fs::path ckpt_path = out_path(cfg, "checkpoints", "victim.ckpt");
  save_checkpoint(ckpt_path, ckpt);
  write_curve_csv(out_path(cfg, "traces", "victim_curve.csv"), result.curve);
  std::cout << "wrote " << ckpt_path.string() << " (" << result.curve.size() << " episodes)\n";
  return 0;
}

int cmd_train_attacker(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_resolve(args);
  auto env = cfg.make_environment();
  const LayerStack victim = load_net(cfg.paths.victim_checkpoint, "victim");
  const std::uint64_t seed = derive_seed(cfg.master_seed, "attacker-train");
  const AttackerConfig acfg = cfg.make_attacker_config();

  std::cout << "training attacker (" << to_string(cfg.attack.method) << ") on " << cfg.env_name
            << " for " << acfg.dqn.max_steps << " steps (seed " << seed << ")\n";
  const AttackerTrainResult result = train_attacker(*env, victim, acfg, seed);

  Checkpoint ckpt{result.net, result.optimizer, seed,
                  {{"role", "attacker"},
                   {"env", cfg.env_name},
                   {"attack_method", to_string(cfg.attack.method)}}};
  const fs::path ckpt_path = out_path(cfg, "checkpoints", "attacker.ckpt");
  save_checkpoint(ckpt_path, ckpt);
  write_attacker_curve_csv(out_path(cfg, "traces", "attacker_curve.csv"), result.curve);

  std::vector<EpisodeReport> reports;
  reports.reserve(result.curve.size());
  for (const auto& point : result.curve)
    reports.push_back(
        training_episode_report(point, env->spec(), cfg.attack.method, cfg.alpha, seed));
  write_reports_jsonl(out_path(cfg, "traces", "attacker_train_reports.jsonl"), reports);
  std::cout << "wrote " << ckpt_path.string() << " (" << result.curve.size() << " episodes)\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, bool sweep, bool trace) {
  const ExperimentConfig cfg = load_and_resolve(args);
  auto env = cfg.make_environment();
  const LayerStack victim = load_net(cfg.paths.victim_checkpoint, "victim");
  EvalOptions opts = eval_options(cfg);
  if (trace) opts.trace_path = out_path(cfg, "traces", "steps.jsonl");

  std::vector<EpisodeReport> reports;
  if (sweep && cfg.strategy.kind == "uniform") {
    const auto entries = sweep_uniform(*env, victim, cfg.attack, cfg.strategy.uniform_grid, opts);
    for (const auto& e : entries)
      reports.insert(reports.end(), e.reports.begin(), e.reports.end());
    const auto& best = best_of(entries);
    std::cout << "best uniform p=" << best.param << " median r_x=" << best.r_x.median << "\n";
  } else if (sweep && cfg.strategy.kind == "strategic") {
    const auto entries =
        sweep_strategic(*env, victim, cfg.attack, cfg.strategy.threshold_grid, opts);
    for (const auto& e : entries)
      reports.insert(reports.end(), e.reports.begin(), e.reports.end());
    const auto& best = best_of(entries);
    std::cout << "best threshold=" << best.param << " median r_x=" << best.r_x.median << "\n";
  } else {
    const TimingStrategy strategy = make_strategy(cfg);
    reports = evaluate(*env, victim, strategy, cfg.attack, opts);
    const Aggregate a = aggregate_r_x(reports);
    std::cout << strategy_label(strategy) << " on " << cfg.env_name << ": r_x mean=" << a.mean
              << " median=" << a.median << " over " << a.count << " episodes\n";
  }

  write_reports_jsonl(out_path(cfg, "traces", "eval_reports.jsonl"), reports);
  write_attack_eval_table(out_path(cfg, "reports", "attack_eval.csv"), reports);
  write_scatter_csv(out_path(cfg, "reports", "scatter.csv"), reports);
  return 0;
}

int cmd_transfer(const CommonArgs& args, const std::string& kind) {
  const ExperimentConfig cfg = load_and_resolve(args);
  const EvalOptions opts = eval_options(cfg);

  if (kind == "env") {
    std::vector<std::unique_ptr<Env>> envs;
    std::vector<LayerStack> victims;
    std::vector<EnvContext> contexts;
    envs.reserve(cfg.transfer.envs.size());
    victims.reserve(cfg.transfer.envs.size());  // contexts hold raw pointers into these
    for (const auto& name : cfg.transfer.envs) {
      const auto v = cfg.paths.victim_checkpoints.find(name);
      const auto a = cfg.paths.attacker_checkpoints.find(name);
      if (v == cfg.paths.victim_checkpoints.end() || a == cfg.paths.attacker_checkpoints.end())
        throw std::runtime_error("transfer env: missing checkpoints for " + name);
      envs.push_back(make_env(name, cfg.env_max_steps));
      victims.push_back(load_net(v->second, "victim"));
      contexts.push_back({name, envs.back().get(), &victims.back(),
                          std::make_shared<LayerStack>(load_net(a->second, "attacker"))});
    }
    const auto cells = transfer_env(contexts, cfg.attack, opts);
    write_transfer_table(out_path(cfg, "reports", "transfer_env.csv"), cells);
    std::cout << "transfer grid: " << cells.size() << " cells, mean off-diagonal |delta| = "
              << mean_offdiagonal_shift(cells) << "\n";
    return 0;
  }
  if (kind == "attack") {
    auto env = cfg.make_environment();
    const LayerStack victim = load_net(cfg.paths.victim_checkpoint, "victim");
    std::map<AttackMethod, std::shared_ptr<const LayerStack>> policies;
    std::vector<AttackMethod> methods;
    for (const auto& name : cfg.transfer.methods) {
      const AttackMethod m = attack_method_from_string(name);
      methods.push_back(m);
      const auto it = cfg.paths.method_attacker_checkpoints.find(name);
      if (it == cfg.paths.method_attacker_checkpoints.end())
        throw std::runtime_error("transfer attack: missing attacker checkpoint for " + name);
      policies[m] = std::make_shared<LayerStack>(load_net(it->second, "attacker"));
    }
    const auto cells = transfer_attack(*env, victim, policies, methods, cfg.attack, opts);
    write_transfer_table(out_path(cfg, "reports", "transfer_attack.csv"), cells);
    std::cout << "transfer grid: " << cells.size() << " cells, mean off-diagonal |delta| = "
              << mean_offdiagonal_shift(cells) << "\n";
    return 0;
  }
  throw std::runtime_error("transfer: --kind must be env or attack");
}

int cmd_advtrain(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_resolve(args);
  auto env = cfg.make_environment();
  const LayerStack victim = load_net(cfg.paths.victim_checkpoint, "victim");
  const Checkpoint attacker_ckpt = load_checkpoint(cfg.paths.attacker_checkpoint);
  const auto method_it = attacker_ckpt.meta.find("attack_method");
  if (method_it != attacker_ckpt.meta.end() && method_it->second != "pgd")
    throw std::runtime_error("advtrain expects a PGD-trained attacker, got " + method_it->second);

  DqnConfig finetune = cfg.victim_dqn;
  finetune.max_steps =
      static_cast<long>(cfg.advtrain.finetune_fraction * static_cast<double>(cfg.victim_dqn.max_steps));
  finetune.learn_start_steps = std::min(finetune.learn_start_steps, finetune.max_steps / 4);
  finetune.epsilon.start = cfg.advtrain.epsilon_start;

  AttackSpec spec = cfg.attack;
  spec.method = AttackMethod::Pgd;
  const std::uint64_t seed = derive_seed(cfg.master_seed, "advtrain");
  std::cout << "fine-tuning victim for " << finetune.max_steps << " steps under frozen attacker\n";
  AdvTrainResult result = adversarial_train(*env, victim, attacker_ckpt.net, finetune, spec, seed);

  Checkpoint ckpt{result.robust_victim, std::nullopt, seed,
                  {{"role", "robust_victim"}, {"env", cfg.env_name}}};
  save_checkpoint(out_path(cfg, "checkpoints", "robust_victim.ckpt"), ckpt);
  write_curve_csv(out_path(cfg, "traces", "advtrain_curve.csv"), result.curve);

  std::vector<AttackMethod> methods;
  for (const auto& name : cfg.transfer.methods) methods.push_back(attack_method_from_string(name));
  const AdvTrainReport rep =
      advtrain_report(*env, victim, result.robust_victim,
                      std::make_shared<LayerStack>(attacker_ckpt.net), cfg.attack, methods,
                      eval_options(cfg));
  write_advtrain_table(out_path(cfg, "reports", "advtrain.csv"), rep);
  std::cout << "clean original=" << rep.clean_original << " robust=" << rep.clean_robust << "\n";
  return 0;
}

int cmd_distance(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_resolve(args);
  auto env = cfg.make_environment();
  const LayerStack victim = load_net(cfg.paths.victim_checkpoint, "victim");

  std::vector<AttackSpec> specs;
  for (const auto& name : cfg.transfer.methods) {
    AttackSpec s = cfg.attack;
    s.method = attack_method_from_string(name);
    specs.push_back(s);
  }
  const DistanceReport rep = distance_report(*env, victim, specs, eval_options(cfg));
  write_distance_table(out_path(cfg, "reports", "distance.csv"), rep);
  for (const auto& row : rep.rows)
    std::cout << row.method << ": mean_l2=" << row.mean_l2 << " ops=" << row.op_count << "\n";
  std::cout << "frames sampled=" << rep.frames_sampled
            << " all-succeed=" << rep.frames_all_succeed << "\n";
  return 0;
}

int cmd_report(const CommonArgs& args, const std::vector<std::string>& report_files) {
  const ExperimentConfig cfg = load_and_resolve(args);
  std::vector<std::string> files = report_files;
  if (files.empty()) {
    const fs::path traces = fs::path(cfg.output_dir) / "traces";
    for (const auto& e : fs::directory_iterator(traces))
      if (e.path().extension() == ".jsonl") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw std::runtime_error("report: no JSONL report files found");

  std::vector<EpisodeReport> reports;
  for (const auto& f : files) {
    const auto part = read_reports_jsonl(f);
    reports.insert(reports.end(), part.begin(), part.end());
  }
  write_metrics_table(out_path(cfg, "reports", "metrics_table.csv"),
                      out_path(cfg, "reports", "metrics_table.json"), metrics_rows(reports));
  write_attack_eval_table(out_path(cfg, "reports", "attack_eval.csv"), reports);
  write_scatter_csv(out_path(cfg, "reports", "scatter.csv"), reports);
  std::cout << "aggregated " << reports.size() << " episode records from " << files.size()
            << " files\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial-RL laboratory: DQN victims, learned attack timing, baselines"};
  app.require_subcommand(1);

  CommonArgs train_victim_args, train_attacker_args, eval_args, transfer_args, advtrain_args,
      distance_args, report_args;
  bool eval_sweep = false, eval_trace = false;
  std::string transfer_kind = "env";
  std::vector<std::string> report_files;

  add_common(app.add_subcommand("train-victim", "train the oracle victim agent"),
             train_victim_args);
  add_common(app.add_subcommand("train-attacker", "train the timing attacker against a victim"),
             train_attacker_args);
  auto* eval_cmd = app.add_subcommand("evaluate", "greedy man-in-the-middle evaluation");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_flag("--sweep", eval_sweep, "sweep the strategy parameter grid");
  eval_cmd->add_flag("--trace", eval_trace, "dump per-step JSONL trace");
  auto* transfer_cmd = app.add_subcommand("transfer", "transfer grids across envs or methods");
  add_common(transfer_cmd, transfer_args);
  transfer_cmd->add_option("--kind", transfer_kind, "env | attack");
  add_common(app.add_subcommand("advtrain", "adversarial fine-tuning of the victim"),
             advtrain_args);
  add_common(app.add_subcommand("distance", "perturbation distance / op-count report"),
             distance_args);
  auto* report_cmd = app.add_subcommand("report", "aggregate JSONL results into table CSVs");
  add_common(report_cmd, report_args);
  report_cmd->add_option("--reports", report_files, "JSONL files (default: output traces dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("train-victim")) return cmd_train_victim(train_victim_args);
    if (app.got_subcommand("train-attacker")) return cmd_train_attacker(train_attacker_args);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(eval_args, eval_sweep, eval_trace);
    if (app.got_subcommand("transfer")) return cmd_transfer(transfer_args, transfer_kind);
    if (app.got_subcommand("advtrain")) return cmd_advtrain(advtrain_args);
    if (app.got_subcommand("distance")) return cmd_distance(distance_args);
    if (app.got_subcommand("report")) return cmd_report(report_args, report_files);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
