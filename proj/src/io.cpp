#include "navee/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"
#include "navee/error.hpp"

namespace navee::io {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, std::size_t base_offset = 0) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "at byte " + std::to_string(base_offset + e.byte) + ": " + e.what());
  }
}

// Runs `body`, turning nlohmann type/range errors into Parse errors.
template <class F>
auto guarded(std::string_view where, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const json::exception& e) {
    // Drops the library's "[json.exception.kind.id] " prefix.
    std::string_view what = e.what();
    if (const auto close = what.find("] "); what.starts_with("[json.") && close != std::string_view::npos)
      what.remove_prefix(close + 2);
    throw Error(ErrorKind::Parse, std::string(where) + ": " + std::string(what));
  }
}

void check_header(const json& j, std::string_view kind, int version) {
  if (!j.is_object() || !j.contains("artifact") || j.at("artifact") != kind)
    throw Error(ErrorKind::Validation, "not a " + std::string(kind) + " artifact");
  const int got = j.value("schema_version", -1);
  if (got != version)
    throw Error(ErrorKind::Validation, "unsupported " + std::string(kind) + " schema version " +
                                           std::to_string(got) + " (supported: " +
                                           std::to_string(version) + ")");
}

// Visits each non-empty line with its starting byte offset.
template <class F>
void for_each_line(std::string_view text, F&& fn) {
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line, pos, line_no);
    pos = end + 1;
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, std::string_view what) {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorKind::Parse, "truncated model file at byte " + std::to_string(bytes_.size()) +
                                        " while reading " + std::string(what) + " (needed " +
                                        std::to_string(n) + " bytes at offset " + std::to_string(pos_) + ")");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t u(int width, std::string_view what) {
    auto b = take(width, what);
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json spec_to_json(const SyntheticSpec& s) {
  return {{"hidden_dim", s.hidden_dim},         {"num_layers", s.num_layers},
          {"num_classes", s.num_classes},       {"seed", s.seed},
          {"planted_depths", s.planted_depths}, {"overthink_rate", s.overthink_rate},
          {"seq_len", s.seq_len},               {"mlp_dim", s.mlp_dim},
          {"input_features", s.input_features}};
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec s;
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.num_layers = j.at("num_layers").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.planted_depths = j.value("planted_depths", std::map<std::string, int>{});
  s.overthink_rate = j.value("overthink_rate", 0.0);
  s.seq_len = j.value("seq_len", 4);
  s.mlp_dim = j.value("mlp_dim", 0);
  s.input_features = j.value("input_features", 16);
  return s;
}

TransformerWeights unflatten(const SyntheticSpec& s, std::span<const float> flat) {
  const std::size_t d = s.hidden_dim;
  const std::size_t tasks = std::max<std::size_t>(1, s.planted_depths.size());
  const std::size_t in = tasks + 2 * s.num_classes + s.num_layers + s.input_features;
  const std::size_t units = s.effective_mlp_dim() + 2 * s.num_classes;
  const std::size_t expected = d * in + s.seq_len * d +
                               s.num_layers * (4 * d * d + units * d + units + d * units) +
                               s.num_classes * d;
  if (flat.size() != expected)
    throw Error(ErrorKind::Validation, "weight payload has " + std::to_string(flat.size()) +
                                           " floats, spec implies " + std::to_string(expected));
  std::size_t at = 0;
  auto next = [&](std::size_t n) {
    std::vector<float> v(flat.begin() + at, flat.begin() + at + n);
    at += n;
    return v;
  };
  TransformerWeights w;
  w.embed = next(d * in);
  w.pos = next(s.seq_len * d);
  w.layers.resize(s.num_layers);
  for (auto& lw : w.layers) {
    lw.wq = next(d * d);
    lw.wk = next(d * d);
    lw.wv = next(d * d);
    lw.wo = next(d * d);
    lw.w1 = next(units * d);
    lw.b1 = next(units);
    lw.w2 = next(d * units);
  }
  w.head = next(s.num_classes * d);
  return w;
}

Label label_of(const std::vector<std::string>& labels, const std::string& name, std::string_view where) {
  auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end())
    throw Error(ErrorKind::LabelDomain, std::string(where) + ": label '" + name + "' is not in the label set");
  return static_cast<Label>(it - labels.begin());
}

json stats_to_json(const SimReport& report, const StrategyTaskStats& r) {
  return {{"strategy", r.strategy},
          {"task", r.task},
          {"n", r.n},
          {"correct", r.correct},
          {"total_layers", r.total_layers},
          {"over_inference_count", r.over_inference},
          {"total_latency_ms", r.total_latency_ms},
          {"accuracy", r.accuracy()},
          {"mean_latency_ms", r.mean_latency_ms()},
          {"mean_layers", r.mean_layers()},
          {"reduction_pct", report.reduction_pct(r)}};
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string fingerprint_bytes(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Io, "sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string fingerprint_file(const std::filesystem::path& path) {
  return fingerprint_bytes(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to '" + path.string() + "'");
}

std::string encode_model(const LayeredModel& model) {
  json header = {{"artifact", "model"}, {"labels", model.labels()}};
  std::vector<float> payload;
  if (const auto* synth = std::get_if<SyntheticTransformer>(&model.backend())) {
    header["backend"] = "synthetic";
    header["spec"] = spec_to_json(synth->spec());
    payload = synth->weights().flatten();
  } else {
    const auto& table = std::get<PredictionTable>(model.backend());
    header["backend"] = "table";
    header["num_layers"] = table.num_layers();
    json rows = json::array();
    for (std::size_t i = 0; i < table.rows().size(); ++i) {
      json preds = json::array();
      for (Label p : table.rows()[i]) preds.push_back(model.labels()[p]);
      rows.push_back({{"sample_id", table.sample_ids()[i]}, {"predictions", preds}});
    }
    header["rows"] = rows;
  }
  const std::string text = header.dump();
  std::string out(kModelMagic);
  put_u32(out, kModelSchemaVersion);
  put_u64(out, text.size());
  out += text;
  put_u64(out, payload.size());
  out.reserve(out.size() + 4 * payload.size());
  for (float f : payload) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

LayeredModel decode_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kModelMagic.size(), "magic") != kModelMagic)
    throw Error(ErrorKind::Parse, "at byte 0: not a model file (bad magic)");
  const auto version = r.u(4, "schema version");
  if (version != kModelSchemaVersion)
    throw Error(ErrorKind::Validation, "unsupported model schema version " + std::to_string(version));
  const auto header_len = r.u(8, "header length");
  const std::size_t header_at = r.offset();
  const json header = parse_json(r.take(header_len, "header"), header_at);
  const auto count = r.u(8, "payload length");
  if (count > (bytes.size() - r.offset()) / 4)
    throw Error(ErrorKind::Parse, "truncated model file at byte " + std::to_string(bytes.size()) +
                                      ": payload declares " + std::to_string(count) + " floats");
  std::vector<float> payload(count);
  for (auto& f : payload) f = std::bit_cast<float>(static_cast<std::uint32_t>(r.u(4, "weights")));
  if (!r.done())
    throw Error(ErrorKind::Parse, "trailing bytes after payload at byte " + std::to_string(r.offset()));

  return guarded("model header", [&] {
    if (!header.is_object() || header.value("artifact", "") != "model")
      throw Error(ErrorKind::Validation, "model header is not a model artifact");
    auto labels = header.at("labels").get<std::vector<std::string>>();
    const auto backend = header.at("backend").get<std::string>();
    if (backend == "synthetic") {
      SyntheticSpec spec = spec_from_json(header.at("spec"));
      if (auto errors = spec.validate(); !errors.empty())
        throw Error(ErrorKind::Validation, "model spec: " + errors.front());
      return LayeredModel(std::move(labels), SyntheticTransformer(spec, unflatten(spec, payload)));
    }
    if (backend == "table") {
      if (!payload.empty()) throw Error(ErrorKind::Validation, "table model carries a weight payload");
      std::vector<std::string> ids;
      std::vector<std::vector<Label>> rows;
      for (const auto& row : header.at("rows")) {
        ids.push_back(row.at("sample_id").get<std::string>());
        std::vector<Label> preds;
        for (const auto& p : row.at("predictions"))
          preds.push_back(label_of(labels, p.get<std::string>(), "row '" + ids.back() + "'"));
        rows.push_back(std::move(preds));
      }
      PredictionTable table(header.at("num_layers").get<int>(), std::move(ids), std::move(rows));
      return LayeredModel(std::move(labels), std::move(table));
    }
    throw Error(ErrorKind::Validation, "unknown backend '" + backend + "'");
  });
}

std::string encode_dataset(std::span<const Sample> samples, const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& s : samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= labels.size())
      throw Error(ErrorKind::LabelDomain, "sample '" + s.id + "' has no label in the label set");
    json j = {{"sample_id", s.id}, {"task_id", s.task}, {"label", labels[s.label]}};
    if (!s.features.empty()) j["features"] = s.features;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Sample> decode_dataset(std::string_view text, const std::vector<std::string>& labels) {
  std::vector<Sample> out;
  for_each_line(text, [&](std::string_view line, std::size_t offset, std::size_t line_no) {
    const json j = parse_json(line, offset);
    const std::string where = "dataset line " + std::to_string(line_no);
    out.push_back(guarded(where, [&] {
      Sample s;
      s.id = j.at("sample_id").get<std::string>();
      s.task = j.at("task_id").get<std::string>();
      s.label = label_of(labels, j.at("label").get<std::string>(), where);
      if (j.contains("features")) s.features = j.at("features").get<std::vector<float>>();
      return s;
    }));
  });
  return out;
}

std::string encode_profile(const ProfileArtifact& a) {
  json tasks = json::object();
  for (std::size_t i = 0; i < a.profiles.size(); ++i) {
    const auto& p = a.profiles[i];
    const auto& s = a.selections.at(i);
    tasks[p.task_id] = {{"L", p.num_layers},
                        {"N", p.sample_count},
                        {"correct_counts", p.correct_counts},
                        {"acc_by_layer", p.acc_by_layer()},
                        {"full_accuracy", p.full_accuracy()},
                        {"exit_layer", s.exit_layer},
                        {"satisfied_strictly", s.satisfied_strictly},
                        {"acc_at_exit", s.acc_at_exit}};
  }
  json j = {{"artifact", "profile"},
            {"schema_version", a.schema_version},
            {"model_fingerprint", a.model_fingerprint},
            {"dataset_fingerprint", a.dataset_fingerprint},
            {"tasks", tasks}};
  return j.dump(2) + "\n";
}

ProfileArtifact decode_profile(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "profile", ProfileArtifact::kSchemaVersion);
  return guarded("profile", [&] {
    ProfileArtifact a;
    a.model_fingerprint = j.value("model_fingerprint", "");
    a.dataset_fingerprint = j.value("dataset_fingerprint", "");
    for (const auto& [task, t] : j.at("tasks").items()) {
      AccuracyProfile p;
      p.task_id = task;
      p.num_layers = t.at("L").get<int>();
      p.sample_count = t.at("N").get<std::int64_t>();
      p.correct_counts = t.at("correct_counts").get<std::vector<std::int64_t>>();
      if (p.num_layers < 1 || p.sample_count < 1 ||
          p.correct_counts.size() != static_cast<std::size_t>(p.num_layers))
        throw Error(ErrorKind::Validation, "task '" + task + "': inconsistent L, N or correct_counts");
      ExitSelection s;
      s.task_id = task;
      s.exit_layer = t.at("exit_layer").get<int>();
      s.satisfied_strictly = t.at("satisfied_strictly").get<bool>();
      s.acc_at_exit = t.at("acc_at_exit").get<double>();
      a.profiles.push_back(std::move(p));
      a.selections.push_back(std::move(s));
    }
    return a;
  });
}

std::string encode_scene_task_map(const SceneTaskMap& map) {
  json j = {{"artifact", "scene_task_map"},
            {"schema_version", SceneTaskMap::kSchemaVersion},
            {"default_strategy", format_strategy(map.default_strategy)},
            {"scenes", map.scenes}};
  return j.dump(2) + "\n";
}

SceneTaskMap decode_scene_task_map(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "scene_task_map", SceneTaskMap::kSchemaVersion);
  return guarded("scene_task_map", [&] {
    SceneTaskMap m;
    m.default_strategy = parse_strategy(j.value("default_strategy", "full"));
    m.scenes = j.value("scenes", std::map<std::string, std::vector<std::string>>{});
    return m;
  });
}

std::string encode_exit_config(const ExitConfigArtifact& config) {
  json j = {{"artifact", "exit_config"},
            {"schema_version", ExitConfigArtifact::kSchemaVersion},
            {"model_fingerprint", config.model_fingerprint},
            {"num_layers", config.table.num_layers},
            {"default_strategy", format_strategy(config.table.default_strategy)},
            {"entries", config.table.entries}};
  return j.dump(2) + "\n";
}

ExitConfigArtifact decode_exit_config(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "exit_config", ExitConfigArtifact::kSchemaVersion);
  auto out = guarded("exit_config", [&] {
    ExitConfigArtifact a;
    a.model_fingerprint = j.value("model_fingerprint", "");
    a.table.num_layers = j.at("num_layers").get<int>();
    a.table.default_strategy = parse_strategy(j.value("default_strategy", "full"));
    a.table.entries = j.value("entries", std::map<std::string, std::map<std::string, int>>{});
    return a;
  });
  out.table.validate();
  return out;
}

std::string encode_trace(const DriveTrace& trace) {
  std::string out;
  for (const auto& step : trace.steps) {
    json j;
    if (const auto* ev = std::get_if<NavEvent>(&step)) {
      j = {{"timestamp_ms", ev->timestamp_ms}, {"kind", "nav"}, {"scene_id", ev->scene}};
    } else {
      const auto& f = std::get<FrameArrival>(step);
      j = {{"timestamp_ms", f.timestamp_ms},
           {"kind", "frame"},
           {"sample_id", f.sample_id},
           {"active_tasks", f.active_tasks}};
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

DriveTrace decode_trace(std::string_view text) {
  DriveTrace trace;
  for_each_line(text, [&](std::string_view line, std::size_t offset, std::size_t line_no) {
    const json j = parse_json(line, offset);
    const std::string where = "trace line " + std::to_string(line_no);
    trace.steps.push_back(guarded(where, [&]() -> TraceStep {
      const auto ts = j.at("timestamp_ms").get<std::int64_t>();
      // Bare {timestamp_ms, scene_id} records (a raw nav stream) need no kind.
      const auto kind = j.contains("kind") ? j.at("kind").get<std::string>()
                        : j.contains("scene_id") ? std::string("nav")
                                                 : std::string("frame");
      if (kind == "nav") return NavEvent{ts, j.at("scene_id").get<std::string>()};
      if (kind == "frame")
        return FrameArrival{ts, j.at("sample_id").get<std::string>(),
                            j.at("active_tasks").get<std::vector<std::string>>()};
      throw Error(ErrorKind::Parse, where + ": unknown step kind '" + kind + "'");
    }));
  });
  return trace;
}

std::string encode_latency_model(const LatencyModel& lm) {
  json j = {{"artifact", "latency_model"},
            {"schema_version", 1},
            {"overhead_ms", lm.overhead_ms},
            {"per_layer_ms", lm.per_layer_ms}};
  return j.dump(2) + "\n";
}

LatencyModel decode_latency_model(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "latency_model", 1);
  return guarded("latency_model", [&] {
    LatencyModel lm;
    lm.overhead_ms = j.at("overhead_ms").get<double>();
    lm.per_layer_ms = j.at("per_layer_ms").get<std::vector<double>>();
    return lm;
  });
}

std::string encode_sim_report(const SimReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(stats_to_json(report, r));
  json requests = json::array();
  for (const auto& q : report.requests)
    requests.push_back({{"step", q.step_index},
                        {"timestamp_ms", q.timestamp_ms},
                        {"sample_id", q.sample_id},
                        {"task", q.task},
                        {"label", q.strategy_label},
                        {"strategy", format_strategy(q.strategy)},
                        {"exit_layer", q.exit_layer},
                        {"layers_executed", q.layers_executed},
                        {"predicted", q.predicted},
                        {"correct", q.correct},
                        {"over_inference", q.over_inference},
                        {"latency_ms", q.latency_ms}});
  json j = {{"artifact", "sim_report"},
            {"schema_version", SimReport::kSchemaVersion},
            {"num_layers", report.num_layers},
            {"full_latency_ms", report.full_latency_ms},
            {"strategies", report.strategies},
            {"switch_count", report.switch_count},
            {"frame_count", report.frame_count},
            {"rows", rows},
            {"requests", requests}};
  return j.dump(2) + "\n";
}

SimReport decode_sim_report(std::string_view text) {
  const json j = parse_json(text);
  check_header(j, "sim_report", SimReport::kSchemaVersion);
  return guarded("sim_report", [&] {
    SimReport r;
    r.num_layers = j.at("num_layers").get<int>();
    r.full_latency_ms = j.at("full_latency_ms").get<double>();
    r.strategies = j.at("strategies").get<std::vector<std::string>>();
    r.switch_count = j.at("switch_count").get<std::int64_t>();
    r.frame_count = j.at("frame_count").get<std::int64_t>();
    for (const auto& row : j.at("rows")) {
      StrategyTaskStats s;
      s.strategy = row.at("strategy").get<std::string>();
      s.task = row.at("task").get<std::string>();
      s.n = row.at("n").get<std::int64_t>();
      s.correct = row.at("correct").get<std::int64_t>();
      s.total_layers = row.at("total_layers").get<std::int64_t>();
      s.over_inference = row.at("over_inference_count").get<std::int64_t>();
      s.total_latency_ms = row.at("total_latency_ms").get<double>();
      r.rows.push_back(std::move(s));
    }
    for (const auto& q : j.value("requests", json::array())) {
      RequestRecord rec;
      rec.step_index = q.at("step").get<std::size_t>();
      rec.timestamp_ms = q.at("timestamp_ms").get<std::int64_t>();
      rec.sample_id = q.at("sample_id").get<std::string>();
      rec.task = q.at("task").get<std::string>();
      rec.strategy_label = q.at("label").get<std::string>();
      rec.strategy = parse_strategy(q.at("strategy").get<std::string>());
      rec.exit_layer = q.at("exit_layer").get<int>();
      rec.layers_executed = q.at("layers_executed").get<int>();
      rec.predicted = q.at("predicted").get<Label>();
      rec.correct = q.at("correct").get<bool>();
      rec.over_inference = q.at("over_inference").get<bool>();
      rec.latency_ms = q.at("latency_ms").get<double>();
      r.requests.push_back(std::move(rec));
    }
    return r;
  });
}

std::string sim_report_csv(const SimReport& report) {
  std::string out =
      "strategy,task,accuracy,mean_latency_ms,reduction_pct,mean_layers,over_inference_count,n\n";
  for (const auto& r : report.rows) {
    out += r.strategy + "," + r.task + "," + fixed(r.accuracy(), 6) + "," +
           fixed(r.mean_latency_ms(), 6) + "," + fixed(round_to(report.reduction_pct(r), 1), 1) + "," +
           fixed(r.mean_layers(), 4) + "," + std::to_string(r.over_inference) + "," +
           std::to_string(r.n) + "\n";
  }
  return out;
}

std::string sim_report_text(const SimReport& report) {
  std::ostringstream out;
  char buf[256];
  out << "layers: " << report.num_layers << "  full latency: " << fixed(report.full_latency_ms, 3)
      << " ms  frames: " << report.frame_count << "  scene switches: " << report.switch_count << "\n";
  std::snprintf(buf, sizeof buf, "%-16s %-20s %9s %12s %9s %8s %6s %6s\n", "strategy", "task",
                "accuracy", "latency_ms", "reduct%", "layers", "over", "n");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-16s %-20s %9.4f %12.4f %9.1f %8.2f %6lld %6lld\n",
                  r.strategy.c_str(), r.task.c_str(), r.accuracy(), r.mean_latency_ms(),
                  round_to(report.reduction_pct(r), 1), r.mean_layers(),
                  static_cast<long long>(r.over_inference), static_cast<long long>(r.n));
    out << buf;
  }
  return out.str();
}

std::string encode_result(const Sample& sample, const InferenceResult& result,
                          const std::vector<std::string>& labels) {
  json j = {{"sample_id", sample.id},
            {"task_id", sample.task},
            {"predicted_label", labels.at(result.predicted)},
            {"exit_layer_used", result.exit_layer},
            {"layers_executed", result.layers_executed},
            {"strategy_used", format_strategy(result.strategy)}};
  if (!result.trace.empty()) {
    json trace = json::array();
    for (const auto& t : result.trace)
      trace.push_back({{"layer", t.layer}, {"label", labels.at(t.label)}, {"confidence", t.confidence}});
    j["per_layer_trace"] = trace;
  }
  return j.dump() + "\n";
}

}  // namespace navee::io
