#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "navee/model.hpp"

namespace navee {

/// Layer-wise correct counts over N samples of one task. Accuracies are
/// always derived from the integer counts.
struct AccuracyProfile {
  std::string task_id;
  int num_layers = 0;
  std::int64_t sample_count = 0;
  std::vector<std::int64_t> correct_counts;  // entry l-1 holds c_l

  double accuracy(int layer) const;
  std::vector<double> acc_by_layer() const;
  double full_accuracy() const { return accuracy(num_layers); }

  bool operator==(const AccuracyProfile&) const = default;
};

struct ExitSelection {
  std::string task_id;
  int exit_layer = 0;
  bool satisfied_strictly = false;  // some l < L met the predicate
  double acc_at_exit = 0.0;

  bool operator==(const ExitSelection&) const = default;
};

/// Counts correct predictions at every layer with one incremental forward
/// pass per sample. Parallel over samples (OpenMP); the integer reduction
/// makes the result independent of thread count and scheduling.
AccuracyProfile layerwise_accuracy(const LayeredModel& model, std::span<const Sample> samples,
                                   std::string_view task_id);

/// Single-threaded reference for layerwise_accuracy.
AccuracyProfile layerwise_accuracy_serial(const LayeredModel& model,
                                          std::span<const Sample> samples,
                                          std::string_view task_id);

/// Earliest layer whose accuracy is at least the full-depth accuracy.
/// Compares integer counts, so Acc(l) == Acc(L) is exact. Later dips below
/// Acc(L) do not disqualify an earlier layer.
ExitSelection select_exit_layer(const AccuracyProfile& profile);

using TaskPartitions = std::map<std::string, std::vector<Sample>>;

TaskPartitions partition_by_task(std::span<const Sample> samples);

struct ProfileArtifact {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string model_fingerprint;
  std::string dataset_fingerprint;
  std::vector<AccuracyProfile> profiles;    // sorted by task id
  std::vector<ExitSelection> selections;    // parallel to profiles

  const ExitSelection* selection(std::string_view task) const;
  const AccuracyProfile* profile(std::string_view task) const;

  bool operator==(const ProfileArtifact&) const = default;
};

/// Profiles and selects an exit layer for every partition. Errors name the
/// failing task.
ProfileArtifact profile_tasks(const LayeredModel& model, const TaskPartitions& partitions);

}  // namespace navee
