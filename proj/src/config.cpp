#include "advrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "advrl/checkpoint.hpp"

extern char** environ;

namespace advrl {

nlohmann::json dqn_to_json(const DqnConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity},
          {"gamma", c.gamma},
          {"update_every", c.update_every},
          {"target_sync_every", c.target_sync_every},
          {"learn_start_steps", c.learn_start_steps},
          {"max_steps", c.max_steps},
          {"optimizer", c.optimizer},
          {"epsilon",
           {{"start", c.epsilon.start}, {"end", c.epsilon.end}, {"fraction", c.epsilon.fraction}}}};
}

DqnConfig dqn_from_json(const nlohmann::json& j) {
  DqnConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.gamma = j.value("gamma", c.gamma);
  c.update_every = j.value("update_every", c.update_every);
  c.target_sync_every = j.value("target_sync_every", c.target_sync_every);
  c.learn_start_steps = j.value("learn_start_steps", c.learn_start_steps);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.optimizer = j.value("optimizer", c.optimizer);
  if (j.contains("epsilon")) {
    const auto& e = j.at("epsilon");
    c.epsilon.start = e.value("start", c.epsilon.start);
    c.epsilon.end = e.value("end", c.epsilon.end);
    c.epsilon.fraction = e.value("fraction", c.epsilon.fraction);
  }
  return c;
}

nlohmann::json attack_to_json(const AttackSpec& s) {
  return {{"method", to_string(s.method)},
          {"epsilon", s.epsilon},
          {"pgd_steps", s.pgd_steps},
          {"pgd_step_size", s.pgd_step_size},
          {"cw_constant", s.cw_constant},
          {"cw_confidence", s.cw_confidence},
          {"cw_iters", s.cw_iters},
          {"cw_lr", s.cw_lr}};
}

AttackSpec attack_from_json(const nlohmann::json& j) {
  AttackSpec s;
  if (j.contains("method")) s.method = attack_method_from_string(j.at("method").get<std::string>());
  s.epsilon = j.value("epsilon", s.epsilon);
  s.pgd_steps = j.value("pgd_steps", s.pgd_steps);
  s.pgd_step_size = j.value("pgd_step_size", s.pgd_step_size);
  s.cw_constant = j.value("cw_constant", s.cw_constant);
  s.cw_confidence = j.value("cw_confidence", s.cw_confidence);
  s.cw_iters = j.value("cw_iters", s.cw_iters);
  s.cw_lr = j.value("cw_lr", s.cw_lr);
  return s;
}

nlohmann::json net_to_json(const NetConfig& c) {
  nlohmann::json j{{"kind", c.kind}, {"frame_stack", c.frame_stack}};
  j["layers"] = nlohmann::json::array();
  for (const auto& l : c.layers) j["layers"].push_back(layer_to_json(l));
  return j;
}

NetConfig net_from_json(const nlohmann::json& j) {
  NetConfig c;
  c.kind = j.value("kind", c.kind);
  c.frame_stack = j.value("frame_stack", c.frame_stack);
  if (j.contains("layers"))
    for (const auto& lj : j.at("layers")) c.layers.push_back(layer_from_json(lj));
  return c;
}

namespace {

nlohmann::json strategy_to_json(const StrategyConfig& s) {
  return {{"kind", s.kind},
          {"p", s.p},
          {"threshold", s.threshold},
          {"matched", s.matched},
          {"matched_reports", s.matched_reports},
          {"uniform_grid", s.uniform_grid},
          {"threshold_grid", s.threshold_grid}};
}

StrategyConfig strategy_from_json(const nlohmann::json& j) {
  StrategyConfig s;
  s.kind = j.value("kind", s.kind);
  s.p = j.value("p", s.p);
  s.threshold = j.value("threshold", s.threshold);
  s.matched = j.value("matched", s.matched);
  s.matched_reports = j.value("matched_reports", s.matched_reports);
  if (j.contains("uniform_grid")) s.uniform_grid = j.at("uniform_grid").get<std::vector<double>>();
  if (j.contains("threshold_grid"))
    s.threshold_grid = j.at("threshold_grid").get<std::vector<double>>();
  return s;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  // The attacker adapts an already-playable game; it gets a shorter horizon
  // and an earlier learning start than the from-scratch victim.
  attacker_dqn.max_steps = 60000;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir;
  j["jobs"] = jobs;
  j["env"] = {{"name", env_name}, {"max_steps", env_max_steps}};
  j["victim"] = {{"net", net_to_json(victim_net)}, {"dqn", dqn_to_json(victim_dqn)}};
  j["attacker"] = {{"alpha", alpha},
                   {"net", net_to_json(attacker_net)},
                   {"dqn", dqn_to_json(attacker_dqn)},
                   {"attack", attack_to_json(attack)}};
  j["strategy"] = strategy_to_json(strategy);
  j["paths"] = {{"victim_checkpoint", paths.victim_checkpoint},
                {"attacker_checkpoint", paths.attacker_checkpoint},
                {"victim_checkpoints", paths.victim_checkpoints},
                {"attacker_checkpoints", paths.attacker_checkpoints},
                {"method_attacker_checkpoints", paths.method_attacker_checkpoints}};
  j["eval"] = {{"seeds", eval.seeds}, {"episodes", eval.episodes}};
  j["advtrain"] = {{"finetune_fraction", advtrain.finetune_fraction},
                   {"epsilon_start", advtrain.epsilon_start}};
  j["transfer"] = {{"envs", transfer.envs}, {"methods", transfer.methods}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.master_seed = j.value("master_seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("env")) {
    c.env_name = j.at("env").value("name", c.env_name);
    c.env_max_steps = j.at("env").value("max_steps", c.env_max_steps);
  }
  if (j.contains("victim")) {
    if (j.at("victim").contains("net")) c.victim_net = net_from_json(j.at("victim").at("net"));
    if (j.at("victim").contains("dqn")) c.victim_dqn = dqn_from_json(j.at("victim").at("dqn"));
  }
  if (j.contains("attacker")) {
    const auto& a = j.at("attacker");
    c.alpha = a.value("alpha", c.alpha);
    if (a.contains("net")) c.attacker_net = net_from_json(a.at("net"));
    if (a.contains("dqn")) c.attacker_dqn = dqn_from_json(a.at("dqn"));
    if (a.contains("attack")) c.attack = attack_from_json(a.at("attack"));
  }
  if (j.contains("strategy")) c.strategy = strategy_from_json(j.at("strategy"));
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.paths.victim_checkpoint = p.value("victim_checkpoint", "");
    c.paths.attacker_checkpoint = p.value("attacker_checkpoint", "");
    if (p.contains("victim_checkpoints"))
      c.paths.victim_checkpoints = p.at("victim_checkpoints").get<std::map<std::string, std::string>>();
    if (p.contains("attacker_checkpoints"))
      c.paths.attacker_checkpoints =
          p.at("attacker_checkpoints").get<std::map<std::string, std::string>>();
    if (p.contains("method_attacker_checkpoints"))
      c.paths.method_attacker_checkpoints =
          p.at("method_attacker_checkpoints").get<std::map<std::string, std::string>>();
  }
  if (j.contains("eval")) {
    c.eval.seeds = j.at("eval").value("seeds", c.eval.seeds);
    c.eval.episodes = j.at("eval").value("episodes", c.eval.episodes);
  }
  if (j.contains("advtrain")) {
    c.advtrain.finetune_fraction =
        j.at("advtrain").value("finetune_fraction", c.advtrain.finetune_fraction);
    c.advtrain.epsilon_start = j.at("advtrain").value("epsilon_start", c.advtrain.epsilon_start);
  }
  if (j.contains("transfer")) {
    const auto& t = j.at("transfer");
    if (t.contains("envs")) c.transfer.envs = t.at("envs").get<std::vector<std::string>>();
    if (t.contains("methods")) c.transfer.methods = t.at("methods").get<std::vector<std::string>>();
  }
  return c;
}

std::unique_ptr<Env> ExperimentConfig::make_environment() const {
  return make_env(env_name, env_max_steps);
}

AttackerConfig ExperimentConfig::make_attacker_config() const {
  AttackerConfig a;
  a.alpha = alpha;
  a.dqn = attacker_dqn;
  a.attack = attack;
  a.net = attacker_net;
  return a;
}

std::vector<std::uint64_t> ExperimentConfig::eval_seed_list() const {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(eval.seeds));
  for (int i = 0; i < eval.seeds; ++i)
    seeds.push_back(derive_seed(master_seed, "eval-seed-" + std::to_string(i)));
  return seeds;
}

void ExperimentConfig::validate() const {
  victim_dqn.validate();
  attacker_dqn.validate();
  attack.validate();
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("config: alpha outside [0,1]");
  if (eval.seeds <= 0 || eval.episodes <= 0)
    throw std::invalid_argument("config: eval seeds/episodes must be positive");
  if (jobs <= 0) throw std::invalid_argument("config: jobs must be positive");
  if (advtrain.finetune_fraction < 0.0)
    throw std::invalid_argument("config: finetune_fraction must be nonnegative");
  make_env(env_name, env_max_steps);  // rejects unknown env names
  if (strategy.kind != "uniform" && strategy.kind != "strategic" && strategy.kind != "learned")
    throw std::invalid_argument("config: unknown strategy kind " + strategy.kind);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path.string());
  nlohmann::json j;
  is >> j;
  return ExperimentConfig::from_json(j);
}

void apply_env_overrides(nlohmann::json& config_json,
                         const std::map<std::string, std::string>& env_vars) {
  for (const auto& [key, value] : env_vars) {
    std::vector<std::string> segments;
    std::string cur;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (i + 1 < key.size() && key[i] == '_' && key[i + 1] == '_') {
        segments.push_back(cur);
        cur.clear();
        ++i;
      } else {
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(key[i]))));
      }
    }
    segments.push_back(cur);

    nlohmann::json* node = &config_json;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) node = &((*node)[segments[i]]);
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, /*allow_exceptions=*/false);
    (*node)[segments.back()] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
  }
}

std::map<std::string, std::string> collect_env_overrides() {
  std::map<std::string, std::string> vars;
  const std::string prefix = "ADVRL_";
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(0, eq);
    if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size())
      vars[name.substr(prefix.size())] = entry.substr(eq + 1);
  }
  return vars;
}

void write_resolved_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write resolved config: " + path.string());
  os << cfg.to_json().dump(2) << '\n';
}

}  // namespace advrl
