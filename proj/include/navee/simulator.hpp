#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "navee/executor.hpp"
#include "navee/model.hpp"
#include "navee/router.hpp"

namespace navee {

struct FrameArrival {
  std::int64_t timestamp_ms = 0;
  std::string sample_id;
  std::vector<std::string> active_tasks;
  bool operator==(const FrameArrival&) const = default;
};

using TraceStep = std::variant<NavEvent, FrameArrival>;

struct DriveTrace {
  std::vector<TraceStep> steps;
  bool operator==(const DriveTrace&) const = default;
};

std::int64_t timestamp_of(const TraceStep& step);

/// Lat(l) = overhead_ms + sum of the first l per-layer costs.
struct LatencyModel {
  double overhead_ms = 0.0;
  std::vector<double> per_layer_ms;

  static LatencyModel uniform(int num_layers, double per_layer_ms, double overhead_ms = 0.0);
  void validate(int num_layers) const;
  bool operator==(const LatencyModel&) const = default;
};

double latency(const LatencyModel& lm, int layer);

/// 100 * (base - now) / base, unrounded. Throws Domain for base <= 0.
double reduction_pct(double base_ms, double new_ms);

/// Half-away-from-zero rounding to `decimals` places.
double round_to(double value, int decimals);

inline constexpr std::string_view kNavEeLabel = "nav-ee";

/// Running sums for one (strategy, task) cell; means are derived.
struct StrategyTaskStats {
  std::string strategy;
  std::string task;
  std::int64_t n = 0;
  std::int64_t correct = 0;
  std::int64_t total_layers = 0;
  std::int64_t over_inference = 0;  // wrong at exit though an earlier layer was right
  double total_latency_ms = 0.0;

  double accuracy() const;
  double mean_latency_ms() const;
  double mean_layers() const;
  bool operator==(const StrategyTaskStats&) const = default;
};

struct RequestRecord {
  std::size_t step_index = 0;
  std::int64_t timestamp_ms = 0;
  std::string sample_id;
  std::string task;
  std::string strategy_label;  // "nav-ee" or the comparison strategy text
  ExitStrategy strategy;       // the strategy actually executed
  int exit_layer = 0;
  int layers_executed = 0;
  Label predicted = 0;
  bool correct = false;
  bool over_inference = false;
  double latency_ms = 0.0;
  bool operator==(const RequestRecord&) const = default;
};

struct SimReport {
  static constexpr int kSchemaVersion = 1;

  int num_layers = 0;
  double full_latency_ms = 0.0;
  std::vector<std::string> strategies;  // "nav-ee" first, then comparisons
  std::vector<StrategyTaskStats> rows;  // strategy order, then task id
  std::int64_t switch_count = 0;
  std::int64_t frame_count = 0;
  double wall_time_ms = 0.0;  // not serialized: replays must be byte-identical
  std::vector<RequestRecord> requests;

  const StrategyTaskStats* find(std::string_view strategy, std::string_view task) const;
  double reduction_pct(const StrategyTaskStats& row) const;
  std::vector<std::string> tasks() const;
};

struct SimOptions {
  bool record_requests = true;
};

/// Replays the trace in timestamp order. Navigation events at the same
/// timestamp as a frame are applied before it. Each frame issues, per active
/// task, one request under the router-resolved strategy and one per
/// comparison strategy, all on the same sample. Full inference is always
/// among the comparisons.
SimReport simulate(const DriveTrace& trace, std::span<const Sample> dataset,
                   const LayeredModel& model, const RouterState& initial,
                   const LatencyModel& latency_model,
                   std::span<const ExitStrategy> comparisons, SimOptions options = {});

struct OverInferenceTask {
  std::string task;
  std::int64_t sample_count = 0;
  std::vector<std::string> sample_ids;          // flagged samples
  std::vector<int> earliest_correct_layer;      // parallel to sample_ids

  std::int64_t count() const { return static_cast<std::int64_t>(sample_ids.size()); }
  double fraction() const;
};

/// Samples that some layer l < L classifies correctly but layer L does not.
std::vector<OverInferenceTask> over_inference_analysis(const LayeredModel& model,
                                                       std::span<const Sample> dataset);

struct ComparisonCell {
  double accuracy = 0.0;
  double mean_latency_ms = 0.0;
  double reduction_pct = 0.0;
  double mean_layers = 0.0;
  bool best_accuracy = false;
  bool best_latency = false;
  bool best = false;  // highest accuracy, then lowest latency
};

struct ComparisonRow {
  std::string strategy;
  std::vector<ComparisonCell> cells;  // one per task
};

struct ComparisonTable {
  std::vector<std::string> tasks;
  std::vector<ComparisonRow> rows;
};

/// Rows are strategies, columns tasks. Ties are flagged jointly.
ComparisonTable compare_strategies(const SimReport& report,
                                   std::span<const std::string> strategies);

std::string format_comparison(const ComparisonTable& table);

}  // namespace navee
