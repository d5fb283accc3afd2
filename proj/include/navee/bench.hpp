#pragma once

#include <span>
#include <string>
#include <vector>

#include "navee/executor.hpp"
#include "navee/model.hpp"

namespace navee {

struct BenchEntry {
  std::string strategy;
  double median_us = 0.0;
  double ratio_to_full = 0.0;  // median / median of full inference
  double mean_layers = 0.0;
};

struct BenchReport {
  int reps = 0;
  int warmup = 0;
  double full_median_us = 0.0;
  std::vector<BenchEntry> entries;
};

/// Wall-clock per inference. Strategies are interleaved within every
/// repetition so drift hits all of them alike; samples are cycled. Full
/// inference is timed as the reference even when not listed. Synthetic
/// backend only.
BenchReport bench(const LayeredModel& model, std::span<const Sample> samples,
                  std::span<const ExitStrategy> strategies, int reps, int warmup = 10);

std::string format_bench(const BenchReport& report);

}  // namespace navee
