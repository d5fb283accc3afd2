#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "navee/model.hpp"

namespace navee {

struct FullInference {
  bool operator==(const FullInference&) const = default;
};

struct FixedExit {
  int layer = 1;
  bool operator==(const FixedExit&) const = default;
};

/// Exit at the first layer >= min_layer whose max-softmax reaches threshold.
/// One interpretation of a confidence-matching exit rule.
struct ConfidenceThreshold {
  double threshold = 0.9;
  int min_layer = 1;
  bool operator==(const ConfidenceThreshold&) const = default;
};

/// Exit at the first layer >= min_layer where the last `window` per-layer
/// labels agree. The stability interpretation of the same rule.
struct StablePrediction {
  int window = 2;
  int min_layer = 1;
  bool operator==(const StablePrediction&) const = default;
};

/// Task-agnostic baseline: exit after ceil(fraction * L) layers.
struct FixedFraction {
  double fraction = 0.5;
  bool operator==(const FixedFraction&) const = default;
};

using ExitStrategy =
    std::variant<FullInference, FixedExit, ConfidenceThreshold, StablePrediction, FixedFraction>;

/// Parses `full`, `fixed:9`, `conf:0.9[:min_layer]`, `stable:3[:min_layer]`,
/// `frac:0.5`. Throws StrategyConfig on anything else.
ExitStrategy parse_strategy(std::string_view text);
std::vector<ExitStrategy> parse_strategy_list(std::string_view comma_separated);
std::string format_strategy(const ExitStrategy& strategy);

void validate_strategy(const ExitStrategy& strategy, int num_layers);

/// ceil(fraction * L) clamped to [1, L]. A 1e-9 slack absorbs decimal
/// representation error (0.3 * 10 must give 3, not 4).
int fixed_fraction_layer(double fraction, int num_layers);

struct TraceEntry {
  int layer = 0;
  Label label = 0;
  double confidence = 0.0;
  bool operator==(const TraceEntry&) const = default;
};

struct InferenceResult {
  Label predicted = 0;
  int exit_layer = 0;
  int layers_executed = 0;  // from the layer-application counter
  std::vector<TraceEntry> trace;
  ExitStrategy strategy;
  bool operator==(const InferenceResult&) const = default;
};

InferenceResult run(const LayeredModel& model, const Sample& x, const ExitStrategy& strategy,
                    bool trace = false);

struct BatchResult {
  std::vector<InferenceResult> results;  // input order
  double accuracy = 0.0;
  double mean_layers_executed = 0.0;
};

/// Parallel over samples; results keep input order.
BatchResult batch_run(const LayeredModel& model, std::span<const Sample> samples,
                      const ExitStrategy& strategy, bool trace = false);

BatchResult batch_run_serial(const LayeredModel& model, std::span<const Sample> samples,
                             const ExitStrategy& strategy, bool trace = false);

}  // namespace navee
