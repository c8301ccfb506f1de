#pragma once

#include "advrl/eval.hpp"

namespace advrl {

// Metric-comparison table (per-episode rows: reward, r_s, r_a, r_str, r_ltr,
// r_x). Derived columns are recomputed from the raw inputs; the CSV rounds to
// two decimals for display, the JSON keeps full precision.
struct MetricsRow {
  std::string label;
  double episode_return = 0.0;
  double r_s = 0.0;
  double r_a = 0.0;
  double r_str = 0.0;
  double r_ltr = 0.0;
  double r_x = 0.0;
};
std::vector<MetricsRow> metrics_rows(const std::vector<EpisodeReport>& reports);
void write_metrics_table(const std::filesystem::path& csv_path,
                         const std::filesystem::path& json_path,
                         const std::vector<MetricsRow>& rows);

// Strategy x method grid of mean/median r_x (attack-evaluation table).
void write_attack_eval_table(const std::filesystem::path& csv_path,
                             const std::vector<EpisodeReport>& reports);

void write_transfer_table(const std::filesystem::path& csv_path,
                          const std::vector<TransferCell>& cells);

// Mean |delta_vs_native| over off-diagonal cells: the sensitivity of a
// transfer axis. Comparing the method-grid value against the env-grid value
// reproduces the "methods transfer better than environments" reading.
double mean_offdiagonal_shift(const std::vector<TransferCell>& cells);

void write_advtrain_table(const std::filesystem::path& csv_path, const AdvTrainReport& report);

// Scatter data: one aggregate point per (strategy, method, env).
void write_scatter_csv(const std::filesystem::path& csv_path,
                       const std::vector<EpisodeReport>& reports);

void write_distance_table(const std::filesystem::path& csv_path, const DistanceReport& report);

}  // namespace advrl
