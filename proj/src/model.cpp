#include <algorithm>
#include <cmath>
#include <string>

#include "navee/error.hpp"
#include "navee/model.hpp"

namespace navee {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InputShape: return "input-shape error";
    case ErrorKind::LayerIndex: return "layer-index error";
    case ErrorKind::EmptyInput: return "empty-input error";
    case ErrorKind::LabelDomain: return "label-domain error";
    case ErrorKind::StrategyConfig: return "strategy-config error";
    case ErrorKind::Ordering: return "ordering error";
    case ErrorKind::ConfigValidation: return "config-validation error";
    case ErrorKind::TraceBinding: return "trace-binding error";
    case ErrorKind::ReportShape: return "report-shape error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::UnsupportedBackend: return "unsupported-backend error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Fingerprint: return "fingerprint mismatch";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

Label argmax(std::span<const float> logits) noexcept {
  Label best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<Label>(i);
  return best;
}

double max_softmax(std::span<const float> logits) noexcept {
  if (logits.empty()) return 0.0;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (float z : logits) total += std::exp(static_cast<double>(z) - top);
  return 1.0 / total;
}

PredictionTable::PredictionTable(int num_layers, std::vector<std::string> sample_ids,
                                 std::vector<std::vector<Label>> rows)
    : num_layers_(num_layers), sample_ids_(std::move(sample_ids)), rows_(std::move(rows)) {
  if (num_layers_ < 1) throw Error(ErrorKind::Validation, "table needs at least one layer");
  if (sample_ids_.size() != rows_.size())
    throw Error(ErrorKind::Validation, "sample id count does not match row count");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != static_cast<std::size_t>(num_layers_))
      throw Error(ErrorKind::Validation, "row '" + sample_ids_[i] + "' has " +
                                             std::to_string(rows_[i].size()) +
                                             " predictions, expected " +
                                             std::to_string(num_layers_));
    if (!index_.emplace(sample_ids_[i], i).second)
      throw Error(ErrorKind::Validation, "duplicate sample id '" + sample_ids_[i] + "'");
  }
}

std::size_t PredictionTable::row_of(std::string_view sample_id) const {
  auto it = index_.find(std::string(sample_id));
  if (it == index_.end())
    throw Error(ErrorKind::InputShape, "sample '" + std::string(sample_id) + "' has no table row");
  return it->second;
}

LayeredModel::LayeredModel(std::vector<std::string> labels, Backend backend)
    : labels_(std::move(labels)), backend_(std::move(backend)) {
  if (labels_.empty()) throw Error(ErrorKind::Validation, "label set is empty");
  for (std::size_t i = 0; i < labels_.size(); ++i)
    for (std::size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j])
        throw Error(ErrorKind::Validation, "duplicate label '" + labels_[i] + "'");
  if (const auto* synth = std::get_if<SyntheticTransformer>(&backend_)) {
    if (static_cast<std::size_t>(synth->spec().num_classes) != labels_.size())
      throw Error(ErrorKind::Validation, "label set size does not match num_classes");
  } else {
    for (const auto& row : std::get<PredictionTable>(backend_).rows())
      for (Label p : row)
        if (p < 0 || static_cast<std::size_t>(p) >= labels_.size())
          throw Error(ErrorKind::LabelDomain, "table prediction outside the label set");
  }
}

int LayeredModel::num_layers() const noexcept {
  return std::visit([](const auto& b) { return b.num_layers(); }, backend_);
}

std::optional<Label> LayeredModel::label_index(std::string_view name) const {
  auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<Label>(it - labels_.begin());
}

void LayeredModel::check_layer(int layer) const {
  if (layer < 1 || layer > num_layers())
    throw Error(ErrorKind::LayerIndex, "layer " + std::to_string(layer) +
                                           " outside [1, " + std::to_string(num_layers()) + "]");
}

HiddenState LayeredModel::embed(const Sample& x) const {
  if (const auto* synth = std::get_if<SyntheticTransformer>(&backend_)) return synth->embed(x.features);
  HiddenState state;
  state.row = std::get<PredictionTable>(backend_).row_of(x.id);
  return state;
}

void LayeredModel::step(HiddenState& state, LayerCounter* counter) const {
  check_layer(state.layer_index + 1);
  if (const auto* synth = std::get_if<SyntheticTransformer>(&backend_))
    synth->apply_layer(state);
  else
    ++state.layer_index;
  if (counter) ++counter->applications;
}

HiddenState LayeredModel::forward_to(const Sample& x, int layer, LayerCounter* counter) const {
  check_layer(layer);
  HiddenState state = embed(x);
  while (state.layer_index < layer) step(state, counter);
  return state;
}

HeadOutput LayeredModel::head(const HiddenState& state) const {
  check_layer(state.layer_index);
  if (const auto* synth = std::get_if<SyntheticTransformer>(&backend_)) {
    const auto z = synth->logits(state);
    return {argmax(z), max_softmax(z)};
  }
  const auto& table = std::get<PredictionTable>(backend_);
  return {table.rows()[state.row][state.layer_index - 1], 1.0};
}

Label LayeredModel::predict_at(const Sample& x, int layer) const {
  return head(forward_to(x, layer)).label;
}

HeadOutput LayeredModel::head_confidence(const Sample& x, int layer) const {
  return head(forward_to(x, layer));
}

std::vector<Label> LayeredModel::predictions_by_layer(const Sample& x, LayerCounter* counter) const {
  std::vector<Label> out;
  out.reserve(num_layers());
  HiddenState state = embed(x);
  for (int l = 1; l <= num_layers(); ++l) {
    step(state, counter);
    out.push_back(predict(state));
  }
  return out;
}

ParamModel ParamModel::fit(int full_layers, double full_size, int anchor_layer, double anchor_size) {
  if (full_layers == anchor_layer)
    throw Error(ErrorKind::Domain, "anchor rows must use different layer counts");
  ParamModel pm;
  pm.per_layer_params = (full_size - anchor_size) / static_cast<double>(full_layers - anchor_layer);
  pm.base_params = full_size - pm.per_layer_params * full_layers;
  if (pm.per_layer_params <= 0.0 || pm.base_params < 0.0)
    throw Error(ErrorKind::Domain, "anchor rows imply a non-physical parameter model");
  return pm;
}

double ParamModel::exact(int layer) const {
  if (layer < 0) throw Error(ErrorKind::LayerIndex, "negative layer count");
  return base_params + layer * per_layer_params;
}

double activated_params(const ParamModel& pm, int layer) {
  return std::round(pm.exact(layer) * 100.0) / 100.0;
}

}  // namespace navee
