#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "navee/executor.hpp"
#include "navee/model.hpp"
#include "navee/profiler.hpp"
#include "navee/router.hpp"
#include "navee/simulator.hpp"

// File formats. Every structured-text artifact is JSON carrying
// {"artifact": <kind>, "schema_version": N}; unknown versions are rejected.
// Record streams (datasets, traces, inference results) are JSON Lines.
namespace navee::io {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr std::string_view kModelMagic = "NAVEEMDL";

/// "sha256:<64 hex digits>" over the exact bytes.
std::string fingerprint_bytes(std::string_view bytes);
std::string fingerprint_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Binary container:
///   8 bytes  magic "NAVEEMDL"
///   u32 LE   schema version
///   u64 LE   header length H, then H bytes of JSON (backend, labels, spec or rows)
///   u64 LE   float count P, then P IEEE-754 binary32 LE values (synthetic weights)
std::string encode_model(const LayeredModel& model);
LayeredModel decode_model(std::string_view bytes);

/// One record per line: {"sample_id","task_id","label", "features"?}.
std::string encode_dataset(std::span<const Sample> samples, const std::vector<std::string>& labels);
std::vector<Sample> decode_dataset(std::string_view text, const std::vector<std::string>& labels);

std::string encode_profile(const ProfileArtifact& artifact);
ProfileArtifact decode_profile(std::string_view text);

std::string encode_scene_task_map(const SceneTaskMap& map);
SceneTaskMap decode_scene_task_map(std::string_view text);

/// Resolved scene/task exit table bound to the model it was profiled on.
struct ExitConfigArtifact {
  static constexpr int kSchemaVersion = 1;
  std::string model_fingerprint;
  ExitConfigTable table;
  bool operator==(const ExitConfigArtifact&) const = default;
};

std::string encode_exit_config(const ExitConfigArtifact& config);
ExitConfigArtifact decode_exit_config(std::string_view text);

/// One step per line: {"timestamp_ms","kind":"nav","scene_id"} or
/// {"timestamp_ms","kind":"frame","sample_id","active_tasks"}.
std::string encode_trace(const DriveTrace& trace);
DriveTrace decode_trace(std::string_view text);

std::string encode_latency_model(const LatencyModel& lm);
LatencyModel decode_latency_model(std::string_view text);

std::string encode_sim_report(const SimReport& report);
SimReport decode_sim_report(std::string_view text);

/// Columns: strategy,task,accuracy,mean_latency_ms,reduction_pct,mean_layers,over_inference_count,n
std::string sim_report_csv(const SimReport& report);
std::string sim_report_text(const SimReport& report);

/// JSON Lines record mirroring InferenceResult.
std::string encode_result(const Sample& sample, const InferenceResult& result,
                          const std::vector<std::string>& labels);

}  // namespace navee::io
