#include "advrl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace advrl {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open output file: " + path.string());
  return os;
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::vector<MetricsRow> metrics_rows(const std::vector<EpisodeReport>& reports) {
  std::vector<MetricsRow> rows;
  int case_index = 1;
  for (const auto& r : reports) {
    MetricsRow row;
    row.label = std::to_string(case_index++);
    row.episode_return = r.episode_return;
    row.r_s = r.r_s;
    row.r_a = r.r_a;
    row.r_str = r.r_s - r.r_a;
    row.r_ltr = std::clamp((r.reward_upper - r.episode_return) / (r.reward_upper - r.reward_lower),
                           0.0, 1.0);
    row.r_x = r.alpha * row.r_str + (1.0 - r.alpha) * row.r_ltr;
    rows.push_back(row);
  }
  return rows;
}

void write_metrics_table(const std::filesystem::path& csv_path,
                         const std::filesystem::path& json_path,
                         const std::vector<MetricsRow>& rows) {
  auto csv = open_out(csv_path);
  csv << "case,rewards,r_s,r_a,r_str,r_ltr,r_x\n";
  for (const auto& r : rows)
    csv << r.label << ',' << fmt(r.episode_return, "%.2f") << ',' << fmt(r.r_s, "%.2f") << ','
        << fmt(r.r_a, "%.2f") << ',' << fmt(r.r_str, "%.2f") << ',' << fmt(r.r_ltr, "%.2f") << ','
        << fmt(r.r_x, "%.2f") << '\n';

  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"case", r.label},
                 {"rewards", r.episode_return},
                 {"r_s", r.r_s},
                 {"r_a", r.r_a},
                 {"r_str", r.r_str},
                 {"r_ltr", r.r_ltr},
                 {"r_x", r.r_x}});
  auto js = open_out(json_path);
  js << j.dump(2) << '\n';
}

void write_attack_eval_table(const std::filesystem::path& csv_path,
                             const std::vector<EpisodeReport>& reports) {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& r : reports) keys.insert({r.strategy, r.method});

  auto csv = open_out(csv_path);
  csv << "strategy,method,env,episodes,r_x_mean,r_x_median,r_x_stddev\n";
  for (const auto& [strategy, method] : keys) {
    std::set<std::string> envs;
    for (const auto& r : reports)
      if (r.strategy == strategy && r.method == method) envs.insert(r.env_name);
    for (const auto& env : envs) {
      std::vector<double> v;
      for (const auto& r : reports)
        if (r.strategy == strategy && r.method == method && r.env_name == env) v.push_back(r.r_x);
      const Aggregate a = aggregate(v);
      csv << strategy << ',' << method << ',' << env << ',' << a.count << ',' << fmt(a.mean) << ','
          << fmt(a.median) << ',' << fmt(a.stddev) << '\n';
    }
  }
}

void write_transfer_table(const std::filesystem::path& csv_path,
                          const std::vector<TransferCell>& cells) {
  auto csv = open_out(csv_path);
  csv << "from,to,r_x,delta_vs_native\n";
  std::vector<TransferCell> sorted = cells;
  std::sort(sorted.begin(), sorted.end(), [](const TransferCell& a, const TransferCell& b) {
    return std::tie(a.from_context, a.to_context) < std::tie(b.from_context, b.to_context);
  });
  for (const auto& c : sorted)
    csv << c.from_context << ',' << c.to_context << ',' << fmt(c.r_x) << ','
        << fmt(c.delta_vs_native) << '\n';
}

double mean_offdiagonal_shift(const std::vector<TransferCell>& cells) {
  double acc = 0.0;
  int n = 0;
  for (const auto& c : cells) {
    if (c.from_context == c.to_context) continue;
    acc += std::fabs(c.delta_vs_native);
    ++n;
  }
  return n > 0 ? acc / n : 0.0;
}

void write_advtrain_table(const std::filesystem::path& csv_path, const AdvTrainReport& report) {
  auto csv = open_out(csv_path);
  csv << "row,original,robust\n";
  csv << "clean," << fmt(report.clean_original) << ',' << fmt(report.clean_robust) << '\n';
  for (const auto& [method, value] : report.attacked_original) {
    const auto it = report.attacked_robust.find(method);
    csv << "attack_" << to_string(method) << ',' << fmt(value) << ','
        << (it != report.attacked_robust.end() ? fmt(it->second) : std::string("")) << '\n';
  }
}

void write_scatter_csv(const std::filesystem::path& csv_path,
                       const std::vector<EpisodeReport>& reports) {
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (const auto& r : reports) keys.insert({r.strategy, r.method, r.env_name});

  auto csv = open_out(csv_path);
  csv << "strategy,method,env,r_str,r_ltr,r_x\n";
  for (const auto& [strategy, method, env] : keys) {
    std::vector<double> str_v, ltr_v, x_v;
    for (const auto& r : reports)
      if (r.strategy == strategy && r.method == method && r.env_name == env) {
        str_v.push_back(r.r_str);
        ltr_v.push_back(r.r_ltr);
        x_v.push_back(r.r_x);
      }
    csv << strategy << ',' << method << ',' << env << ',' << fmt(aggregate(str_v).mean) << ','
        << fmt(aggregate(ltr_v).mean) << ',' << fmt(aggregate(x_v).mean) << '\n';
  }
}

void write_distance_table(const std::filesystem::path& csv_path, const DistanceReport& report) {
  auto csv = open_out(csv_path);
  csv << "method,mean_l2,mean_linf,op_count,frames_attacked,frames_succeeded,"
         "mean_l2_all_succeed,frames_all_succeed\n";
  for (const auto& row : report.rows)
    csv << row.method << ',' << fmt(row.mean_l2) << ',' << fmt(row.mean_linf) << ','
        << row.op_count << ',' << row.frames_attacked << ',' << row.frames_succeeded << ','
        << fmt(row.mean_l2_all_succeed) << ',' << report.frames_all_succeed << '\n';
}

}  // namespace advrl
