#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "advrl/checkpoint.hpp"
#include "advrl/qlearning.hpp"

// CLI-level behavior: exit codes, error messages, resolved-config emission,
// fixture aggregation. The binary path comes from the build system.
#ifndef ADVRL_CLI_PATH
#error "ADVRL_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "advrl_cli_test";

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  fs::create_directories(kTmp);
  const fs::path log = kTmp / "out.log";
  const std::string cmd =
      std::string("\"") + ADVRL_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream is(log);
  CliResult r;
  r.exit_code = WEXITSTATUS(rc);
  r.output.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  return r;
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::trunc);
  os << content;
}

}  // namespace

TEST_CASE("missing config file fails with a message naming the path") {
  const CliResult r = run_cli("train-victim --config /nonexistent/cfg.json");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("/nonexistent/cfg.json") != std::string::npos);
}

TEST_CASE("zero evaluation seeds are rejected as invalid config") {
  const fs::path cfg = kTmp / "zero_seeds.json";
  write_file(cfg, R"({"eval": {"seeds": 0}, "output_dir": ")" + (kTmp / "zs").string() + R"("})");
  const CliResult r = run_cli("evaluate --config " + cfg.string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("seeds") != std::string::npos);
}

TEST_CASE("missing victim checkpoint fails evaluate with a nonzero exit") {
  const fs::path cfg = kTmp / "no_victim.json";
  write_file(cfg, R"({"strategy": {"kind": "uniform"}, "output_dir": ")" +
                      (kTmp / "nv").string() + R"("})");
  const CliResult r = run_cli("evaluate --config " + cfg.string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("checkpoint") != std::string::npos);
}

TEST_CASE("resolved config is written with every default expanded") {
  const fs::path out = kTmp / "resolved_run";
  const fs::path cfg = kTmp / "minimal.json";
  write_file(cfg, R"({"output_dir": ")" + out.string() + R"(", "eval": {"seeds": 1}})");
  // report with no JSONL inputs fails, but only after the config resolves.
  run_cli("report --config " + cfg.string());
  std::ifstream is(out / "resolved-config.json");
  REQUIRE(static_cast<bool>(is));
  nlohmann::json j;
  is >> j;
  CHECK(j.at("victim").at("dqn").at("batch_size").get<int>() == 32);
  CHECK(j.at("attacker").at("attack").at("epsilon").get<double>() == doctest::Approx(0.03));
  CHECK(j.at("eval").at("seeds").get<int>() == 1);
  CHECK(j.at("master_seed").get<std::uint64_t>() == 1);
}

TEST_CASE("report aggregates fixture traces into the metric table") {
  const fs::path out = kTmp / "report_run";
  const fs::path cfg = kTmp / "report.json";
  write_file(cfg, R"({"output_dir": ")" + out.string() + R"("})");
  const fs::path fixture = kTmp / "fixture.jsonl";
  std::ofstream os(fixture, std::ios::trunc);
  const double cases[3][3] = {{-9.38, 1.00, 0.56}, {-8.69, 1.00, 0.15}, {-11.44, 0.98, 0.04}};
  for (const auto& c : cases)
    os << nlohmann::json{{"episode_return", c[0]}, {"r_s", c[1]},          {"r_a", c[2]},
                         {"alpha", 0.5},           {"reward_upper", 21.0}, {"reward_lower", -21.0}}
              .dump()
       << '\n';
  os.close();

  const CliResult r = run_cli("report --config " + cfg.string() + " --reports " + fixture.string());
  CHECK(r.exit_code == 0);
  std::ifstream csv(out / "reports" / "metrics_table.csv");
  REQUIRE(static_cast<bool>(csv));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "case,rewards,r_s,r_a,r_str,r_ltr,r_x");
  std::getline(csv, line);
  CHECK(line == "1,-9.38,1.00,0.56,0.44,0.72,0.58");
  std::getline(csv, line);
  CHECK(line == "2,-8.69,1.00,0.15,0.85,0.71,0.78");
  std::getline(csv, line);
  CHECK(line == "3,-11.44,0.98,0.04,0.94,0.77,0.86");
}

TEST_CASE("seed flag overrides the file's master seed in the resolved config") {
  const fs::path out = kTmp / "seed_run";
  const fs::path cfg = kTmp / "seed.json";
  write_file(cfg, R"({"output_dir": ")" + out.string() + R"(", "master_seed": 5})");
  run_cli("report --config " + cfg.string() + " --reports /nonexistent.jsonl");
  std::ifstream is(out / "resolved-config.json");
  nlohmann::json j;
  is >> j;
  CHECK(j.at("master_seed").get<std::uint64_t>() == 5);

  run_cli("report --config " + cfg.string() + " --seed 9 --reports /nonexistent.jsonl");
  std::ifstream is2(out / "resolved-config.json");
  is2 >> j;
  CHECK(j.at("master_seed").get<std::uint64_t>() == 9);
}

TEST_CASE("matched-budget uniform takes its rate from learned reports") {
  // Train a tiny tabular victim, save it, hand-write "learned" reports with a
  // known mean attack rate, and check the CLI resolves p from them.
  const fs::path out = kTmp / "matched_run";
  fs::create_directories(kTmp);

  advrl::TabularMdp env = advrl::TabularMdp::chain8();
  advrl::DqnConfig dqn;
  dqn.max_steps = 6000;
  dqn.learning_rate = 2e-3;
  dqn.buffer_capacity = 2000;
  dqn.learn_start_steps = 200;
  advrl::NetConfig net_cfg;
  net_cfg.kind = "linear";
  const advrl::TrainResult tr = advrl::train_victim(env, dqn, net_cfg, 3);
  const fs::path ckpt = kTmp / "tab_victim.ckpt";
  advrl::save_checkpoint(ckpt, {tr.net, std::nullopt, 3, {}});

  const fs::path learned = kTmp / "learned.jsonl";
  {
    std::ofstream os(learned, std::ios::trunc);
    for (double ra : {0.2, 0.4})
      os << nlohmann::json{{"episode_return", 0.5}, {"r_s", 1.0},           {"r_a", ra},
                           {"alpha", 0.5},          {"reward_upper", 1.0},
                           {"reward_lower", -2.5}}
                .dump()
         << '\n';
  }

  const fs::path cfg = kTmp / "matched.json";
  write_file(cfg, nlohmann::json{{"output_dir", out.string()},
                                 {"env", {{"name", "tabular"}}},
                                 {"victim", {{"net", {{"kind", "linear"}}}}},
                                 {"eval", {{"seeds", 2}, {"episodes", 1}}},
                                 {"strategy",
                                  {{"kind", "uniform"},
                                   {"matched", true},
                                   {"matched_reports", learned.string()}}},
                                 {"paths", {{"victim_checkpoint", ckpt.string()}}}}
                      .dump(2));
  const CliResult r = run_cli("evaluate --config " + cfg.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("matched uniform rate p=0.3") != std::string::npos);
  // And the emitted reports carry the resolved rate in their strategy label.
  std::ifstream is(out / "traces" / "eval_reports.jsonl");
  std::string lineb;
  REQUIRE(static_cast<bool>(std::getline(is, lineb)));
  CHECK(nlohmann::json::parse(lineb).at("strategy").get<std::string>() == "uniform(p=0.3)");
}

TEST_CASE("unknown transfer kind is rejected") {
  const fs::path out = kTmp / "tk_run";
  const fs::path cfg = kTmp / "tk.json";
  write_file(cfg, R"({"output_dir": ")" + out.string() + R"("})");
  const CliResult r = run_cli("transfer --kind sideways --config " + cfg.string());
  CHECK(r.exit_code != 0);
}
