#include "navee/validate.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "navee/error.hpp"
#include "navee/io.hpp"

namespace navee {

using nlohmann::json;

namespace {

void check_profile(const json& j, const std::optional<std::string>& model_fp,
                   std::optional<int> model_layers, ValidationReport& out) {
  auto add = [&](std::string where, std::string what) {
    out.violations.push_back({std::move(where), std::move(what)});
  };
  if (j.value("schema_version", -1) != ProfileArtifact::kSchemaVersion) {
    add("schema_version", "unsupported schema version");
    return;
  }
  if (model_fp && j.value("model_fingerprint", "") != *model_fp)
    add("model_fingerprint", "does not match the supplied model (" + *model_fp + ")");
  if (!j.contains("tasks") || !j.at("tasks").is_object()) {
    add("tasks", "missing or not an object");
    return;
  }
  for (const auto& [task, t] : j.at("tasks").items()) {
    const std::string at = "tasks." + task;
    try {
      const int layers = t.at("L").get<int>();
      const auto n = t.at("N").get<std::int64_t>();
      const auto counts = t.at("correct_counts").get<std::vector<std::int64_t>>();
      const auto acc = t.at("acc_by_layer").get<std::vector<double>>();
      const int exit = t.at("exit_layer").get<int>();
      if (layers < 1) add(at + ".L", "must be >= 1");
      if (model_layers && layers != *model_layers) add(at + ".L", "differs from the supplied model");
      if (n < 1) add(at + ".N", "must be >= 1");
      if (counts.size() != static_cast<std::size_t>(layers)) add(at + ".correct_counts", "length differs from L");
      if (acc.size() != counts.size()) add(at + ".acc_by_layer", "length differs from correct_counts");
      if (exit < 1 || exit > layers) {
        add(at + ".exit_layer", "task '" + task + "': exit layer " + std::to_string(exit) +
                                    " outside [1, " + std::to_string(layers) + "]");
      }
      if (layers < 1 || n < 1 || counts.size() != static_cast<std::size_t>(layers) ||
          acc.size() != counts.size())
        continue;
      for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] < 0 || counts[l] > n)
          add(at + ".correct_counts[" + std::to_string(l) + "]", "outside [0, N]");
        if (std::abs(acc[l] - static_cast<double>(counts[l]) / static_cast<double>(n)) > 1e-12)
          add(at + ".acc_by_layer[" + std::to_string(l) + "]", "differs from correct_counts / N");
      }
      if (std::abs(t.at("full_accuracy").get<double>() - acc.back()) > 1e-12)
        add(at + ".full_accuracy", "differs from the last layer's accuracy");
      int expected = layers;
      for (int l = 1; l <= layers; ++l)
        if (counts[l - 1] >= counts.back()) {
          expected = l;
          break;
        }
      if (exit >= 1 && exit <= layers && exit != expected)
        add(at + ".exit_layer", "task '" + task + "': expected earliest valid layer " +
                                    std::to_string(expected) + ", found " + std::to_string(exit));
      if (t.at("satisfied_strictly").get<bool>() != (expected < layers))
        add(at + ".satisfied_strictly", "inconsistent with the profile");
    } catch (const json::exception& e) {
      add(at, e.what());
    }
  }
}

}  // namespace

std::string ValidationReport::format() const {
  std::ostringstream out;
  out << artifact << ": " << violations.size() << " violation(s)\n";
  for (const auto& v : violations) out << "  " << v.location << ": " << v.message << "\n";
  return out.str();
}

ValidationReport validate_artifact_bytes(std::string_view bytes,
                                         std::optional<std::string_view> model_bytes) {
  ValidationReport out;
  out.artifact = "unknown";
  auto fail = [&](const std::string& where, const std::string& what) {
    out.violations.push_back({where, what});
  };

  std::optional<std::string> model_fp;
  std::optional<LayeredModel> model;
  if (model_bytes) {
    model_fp = io::fingerprint_bytes(*model_bytes);
    try {
      model.emplace(io::decode_model(*model_bytes));
    } catch (const Error& e) {
      fail("model", e.what());
      return out;
    }
  }

  try {
    if (bytes.substr(0, io::kModelMagic.size()) == io::kModelMagic) {
      out.artifact = "model";
      io::decode_model(bytes);
      return out;
    }

    const auto first = bytes.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
      fail("byte 0", "empty file");
      return out;
    }
    // Single JSON document?
    json doc = json::parse(bytes.begin(), bytes.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_object() && doc.contains("artifact")) {
      out.artifact = doc.at("artifact").is_string() ? doc.at("artifact").get<std::string>() : "unknown";
      if (out.artifact == "profile") {
        check_profile(doc, model_fp,
                      model ? std::optional<int>(model->num_layers()) : std::nullopt, out);
      } else if (out.artifact == "exit_config") {
        const auto config = io::decode_exit_config(bytes);
        if (model_fp && config.model_fingerprint != *model_fp)
          fail("model_fingerprint", "does not match the supplied model (" + *model_fp + ")");
        if (model && config.table.num_layers != model->num_layers())
          fail("num_layers", "differs from the supplied model");
      } else if (out.artifact == "scene_task_map") {
        io::decode_scene_task_map(bytes);
      } else if (out.artifact == "latency_model") {
        const auto lm = io::decode_latency_model(bytes);
        lm.validate(static_cast<int>(lm.per_layer_ms.size()));
        if (model) lm.validate(model->num_layers());
      } else if (out.artifact == "sim_report") {
        const auto report = io::decode_sim_report(bytes);
        for (const auto& r : report.rows)
          if (r.correct < 0 || r.correct > r.n)
            fail("rows." + r.strategy + "." + r.task, "accuracy outside [0, 1]");
      } else {
        fail("artifact", "unknown artifact kind '" + out.artifact + "'");
      }
      return out;
    }
    if (doc.is_discarded() && bytes[first] == '{' && bytes.find('\n', first) == std::string_view::npos) {
      // A single truncated document: rethrow with its byte offset.
      [[maybe_unused]] const json strict = json::parse(bytes.begin(), bytes.end());
    }

    // JSON Lines: peek at the first record.
    const auto eol = bytes.find('\n', first);
    const json head = json::parse(bytes.substr(first, eol == std::string_view::npos ? eol : eol - first));
    if (head.contains("kind") || head.contains("scene_id")) {
      out.artifact = "trace";
      const auto trace = io::decode_trace(bytes);
      for (std::size_t i = 1; i < trace.steps.size(); ++i)
        if (timestamp_of(trace.steps[i]) < timestamp_of(trace.steps[i - 1]))
          fail("step " + std::to_string(i), "timestamp goes back in time");
    } else if (head.contains("sample_id")) {
      out.artifact = "dataset";
      if (model) {
        const auto samples = io::decode_dataset(bytes, model->labels());
        for (const auto& s : samples) {
          if (const auto* synth = std::get_if<SyntheticTransformer>(&model->backend())) {
            if (s.features.size() != static_cast<std::size_t>(synth->input_dim()))
              fail("sample " + s.id, "feature width differs from the model input");
          } else {
            std::get<PredictionTable>(model->backend()).row_of(s.id);
          }
        }
      } else {
        std::vector<std::string> any;
        io::decode_dataset(bytes, any);  // throws on the first label; structure only
      }
    } else {
      fail("line 1", "unrecognized record");
    }
  } catch (const json::parse_error& e) {
    fail("byte " + std::to_string(e.byte), std::string("parse error: ") + e.what());
  } catch (const Error& e) {
    if (out.artifact == "dataset" && !model && e.kind() == ErrorKind::LabelDomain) return out;
    fail(std::string(to_string(e.kind())), e.what());
  }
  return out;
}

ValidationReport validate_artifact(const std::filesystem::path& path,
                                   const std::optional<std::filesystem::path>& model_path) {
  const std::string bytes = io::read_file(path);
  if (!model_path) return validate_artifact_bytes(bytes);
  const std::string model = io::read_file(*model_path);
  return validate_artifact_bytes(bytes, std::string_view(model));
}

}  // namespace navee
