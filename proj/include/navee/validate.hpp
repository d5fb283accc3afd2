#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace navee {

struct Violation {
  std::string location;  // e.g. "tasks.vehicle.exit_layer" or "byte 120"
  std::string message;
};

struct ValidationReport {
  std::string artifact;  // detected kind, "unknown" if undetectable
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string format() const;
};

/// Detects the artifact kind from its content and checks schema version and
/// the invariants of the stored type. When `model_bytes` is given, profile
/// fingerprints and dataset labels/feature widths are cross-checked against it.
ValidationReport validate_artifact_bytes(std::string_view bytes,
                                         std::optional<std::string_view> model_bytes = {});

ValidationReport validate_artifact(const std::filesystem::path& path,
                                   const std::optional<std::filesystem::path>& model_path = {});

}  // namespace navee
