#include "navee/profiler.hpp"

#include <string>

#include "navee/error.hpp"
#include "navee/parallel.hpp"

namespace navee {

namespace {

void check_inputs(const LayeredModel& model, std::span<const Sample> samples,
                  std::string_view task_id) {
  if (samples.empty())
    throw Error(ErrorKind::EmptyInput, "task '" + std::string(task_id) + "' has no samples");
  for (const auto& s : samples) {
    if (s.task != task_id)
      throw Error(ErrorKind::Validation, "sample '" + s.id + "' is tagged '" + s.task +
                                             "', expected '" + std::string(task_id) + "'");
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= model.num_classes())
      throw Error(ErrorKind::LabelDomain, "sample '" + s.id + "' has a label outside the model's label set");
  }
}

AccuracyProfile empty_profile(const LayeredModel& model, std::span<const Sample> samples,
                              std::string_view task_id) {
  AccuracyProfile p;
  p.task_id = std::string(task_id);
  p.num_layers = model.num_layers();
  p.sample_count = static_cast<std::int64_t>(samples.size());
  p.correct_counts.assign(p.num_layers, 0);
  return p;
}

}  // namespace

double AccuracyProfile::accuracy(int layer) const {
  if (layer < 1 || layer > num_layers)
    throw Error(ErrorKind::LayerIndex, "layer " + std::to_string(layer) + " outside profile");
  return static_cast<double>(correct_counts[layer - 1]) / static_cast<double>(sample_count);
}

std::vector<double> AccuracyProfile::acc_by_layer() const {
  std::vector<double> out;
  out.reserve(num_layers);
  for (int l = 1; l <= num_layers; ++l) out.push_back(accuracy(l));
  return out;
}

AccuracyProfile layerwise_accuracy_serial(const LayeredModel& model,
                                          std::span<const Sample> samples,
                                          std::string_view task_id) {
  check_inputs(model, samples, task_id);
  AccuracyProfile p = empty_profile(model, samples, task_id);
  for (const auto& s : samples) {
    const auto preds = model.predictions_by_layer(s);
    for (int l = 0; l < p.num_layers; ++l)
      if (preds[l] == s.label) ++p.correct_counts[l];
  }
  return p;
}

AccuracyProfile layerwise_accuracy(const LayeredModel& model, std::span<const Sample> samples,
                                   std::string_view task_id) {
  check_inputs(model, samples, task_id);
  AccuracyProfile p = empty_profile(model, samples, task_id);
  const int layers = p.num_layers;
  const auto n = static_cast<std::int64_t>(samples.size());
  std::int64_t* counts = p.correct_counts.data();
  ExceptionSlot failure;

#pragma omp parallel
  {
    std::vector<std::int64_t> local(layers, 0);
#pragma omp for schedule(dynamic, 4) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        const auto preds = model.predictions_by_layer(samples[i]);
        for (int l = 0; l < layers; ++l)
          if (preds[l] == samples[i].label) ++local[l];
      } catch (...) {
        failure.capture();
      }
    }
#pragma omp critical(navee_profile_reduce)
    for (int l = 0; l < layers; ++l) counts[l] += local[l];
  }
  failure.rethrow_if_set();
  return p;
}

ExitSelection select_exit_layer(const AccuracyProfile& profile) {
  const int layers = profile.num_layers;
  const std::int64_t full = profile.correct_counts.at(layers - 1);
  int chosen = layers;
  for (int l = 1; l <= layers; ++l) {
    if (profile.correct_counts[l - 1] >= full) {
      chosen = l;
      break;
    }
  }
  return {profile.task_id, chosen, chosen < layers, profile.accuracy(chosen)};
}

TaskPartitions partition_by_task(std::span<const Sample> samples) {
  TaskPartitions parts;
  for (const auto& s : samples) parts[s.task].push_back(s);
  return parts;
}

const ExitSelection* ProfileArtifact::selection(std::string_view task) const {
  for (const auto& s : selections)
    if (s.task_id == task) return &s;
  return nullptr;
}

const AccuracyProfile* ProfileArtifact::profile(std::string_view task) const {
  for (const auto& p : profiles)
    if (p.task_id == task) return &p;
  return nullptr;
}

ProfileArtifact profile_tasks(const LayeredModel& model, const TaskPartitions& partitions) {
  ProfileArtifact artifact;
  for (const auto& [task, samples] : partitions) {
    try {
      artifact.profiles.push_back(layerwise_accuracy(model, samples, task));
    } catch (const Error& e) {
      throw Error(e.kind(), "profiling task '" + task + "': " + e.what());
    }
    artifact.selections.push_back(select_exit_layer(artifact.profiles.back()));
  }
  return artifact;
}

}  // namespace navee
