#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace navee {

/// Index into a model's ordered label set.
using Label = int;

struct Sample {
  std::string id;
  std::string task;
  std::vector<float> features;  // empty for table-backed models
  Label label = -1;
};

/// Residual stream after `layer_index` layer applications (0 is the embedding
/// output). Synthetic backend: seq_len x hidden_dim activations, token-major.
/// Table backend: no activations; `row` locates the sample's stored trace.
struct HiddenState {
  std::vector<float> activations;
  int layer_index = 0;
  std::size_t row = 0;
};

/// Call-local instrumentation: incremented once per layer application.
struct LayerCounter {
  int applications = 0;
};

struct HeadOutput {
  Label label = 0;
  double confidence = 0.0;
};

/// Lowest index wins ties.
Label argmax(std::span<const float> logits) noexcept;

/// Largest softmax probability, computed in double with max-subtraction.
double max_softmax(std::span<const float> logits) noexcept;

struct SyntheticSpec {
  int hidden_dim = 64;
  int num_layers = 12;
  int num_classes = 4;
  std::uint64_t seed = 0;
  // task id -> layer at which that task's samples become decodable
  std::map<std::string, int> planted_depths;
  double overthink_rate = 0.0;
  int seq_len = 4;
  int mlp_dim = 0;  // 0 selects 2 * hidden_dim
  int input_features = 16;

  int effective_mlp_dim() const { return mlp_dim > 0 ? mlp_dim : 2 * hidden_dim; }

  /// Human-readable list of every field that violates its constraint.
  std::vector<std::string> validate() const;

  bool operator==(const SyntheticSpec&) const = default;
};

struct LayerWeights {
  std::vector<float> wq, wk, wv, wo;  // hidden x hidden
  std::vector<float> w1;              // mlp_units x hidden
  std::vector<float> b1;              // mlp_units
  std::vector<float> w2;              // hidden x mlp_units

  bool operator==(const LayerWeights&) const = default;
};

struct TransformerWeights {
  std::vector<float> embed;  // hidden x input_dim
  std::vector<float> pos;    // seq_len x hidden
  std::vector<LayerWeights> layers;
  std::vector<float> head;  // num_classes x hidden

  /// Every tensor concatenated in serialization order.
  std::vector<float> flatten() const;
  bool operator==(const TransformerWeights&) const = default;
};

/// Residual-stream and input-feature layout of the synthetic transformer.
///
/// Residual dims: [const | class(C) | payload(C) | depth(L) | overthink(L) | free...].
/// Input features: [task one-hot | truth one-hot(C) | decoy one-hot(C) |
/// overthink one-hot(L) | free inputs].
///
/// The class block starts out holding a decoy label. At the task's planted
/// depth an MLP gate (payload AND depth bit) writes the true label over it;
/// for over-thinking samples a second gate at a later layer writes a wrong
/// label on top. Attention and the remaining MLP units operate on the free
/// block only, so they contribute real compute without touching the planted
/// signal.
struct SyntheticLayout {
  int hidden = 0, classes = 0, layers = 0, tasks = 0, free_inputs = 0;

  int const_dim() const { return 0; }
  int class_dim(int c) const { return 1 + c; }
  int payload_dim(int c) const { return 1 + classes + c; }
  int depth_dim(int l) const { return 2 * classes + l; }
  int overthink_dim(int l) const { return 2 * classes + layers + l; }
  int free_begin() const { return 1 + 2 * classes + 2 * layers; }
  int free_count() const { return hidden - free_begin(); }

  int in_task(int t) const { return t; }
  int in_truth(int c) const { return tasks + c; }
  int in_decoy(int c) const { return tasks + classes + c; }
  int in_overthink(int l) const { return tasks + 2 * classes + (l - 1); }
  int in_free_begin() const { return tasks + 2 * classes + layers; }
  int input_dim() const { return in_free_begin() + free_inputs; }
};

class SyntheticTransformer {
 public:
  /// Deterministic weight generation from the spec.
  static SyntheticTransformer generate(const SyntheticSpec& spec);

  SyntheticTransformer(SyntheticSpec spec, TransformerWeights weights);

  const SyntheticSpec& spec() const noexcept { return spec_; }
  const TransformerWeights& weights() const noexcept { return weights_; }
  const SyntheticLayout& layout() const noexcept { return layout_; }
  /// Tasks in the order used for the task one-hot input block.
  const std::vector<std::string>& tasks() const noexcept { return tasks_; }

  int num_layers() const noexcept { return spec_.num_layers; }
  int input_dim() const noexcept { return layout_.input_dim(); }

  HiddenState embed(std::span<const float> features) const;
  /// Applies layer `state.layer_index + 1` in place.
  void apply_layer(HiddenState& state) const;
  std::vector<float> logits(const HiddenState& state) const;

  /// Builds an input vector with the planted structure for one sample.
  /// `overthink_layer` of 0 means the sample does not over-think.
  std::vector<float> make_features(std::string_view task, Label truth, Label decoy,
                                   int overthink_layer,
                                   std::span<const float> free_inputs) const;

 private:
  SyntheticSpec spec_;
  TransformerWeights weights_;
  SyntheticLayout layout_;
  std::vector<std::string> tasks_;
};

class PredictionTable {
 public:
  PredictionTable(int num_layers, std::vector<std::string> sample_ids,
                  std::vector<std::vector<Label>> rows);

  int num_layers() const noexcept { return num_layers_; }
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  const std::vector<std::vector<Label>>& rows() const noexcept { return rows_; }

  std::size_t row_of(std::string_view sample_id) const;

 private:
  int num_layers_;
  std::vector<std::string> sample_ids_;
  std::vector<std::vector<Label>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Layers f_1..f_L over an embedding, with one head shared by every layer.
/// Immutable after construction; all methods are safe to call concurrently.
class LayeredModel {
 public:
  using Backend = std::variant<SyntheticTransformer, PredictionTable>;

  LayeredModel(std::vector<std::string> labels, Backend backend);

  int num_layers() const noexcept;
  std::size_t num_classes() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<Label> label_index(std::string_view name) const;
  const Backend& backend() const noexcept { return backend_; }
  bool is_synthetic() const noexcept {
    return std::holds_alternative<SyntheticTransformer>(backend_);
  }

  HiddenState embed(const Sample& x) const;
  /// h_{l+1} = f_{l+1}(h_l), in place.
  void step(HiddenState& state, LayerCounter* counter = nullptr) const;
  HiddenState forward_to(const Sample& x, int layer, LayerCounter* counter = nullptr) const;

  /// Shared head g applied to a state at layer 1..L.
  HeadOutput head(const HiddenState& state) const;
  Label predict(const HiddenState& state) const { return head(state).label; }

  Label predict_at(const Sample& x, int layer) const;
  HeadOutput head_confidence(const Sample& x, int layer) const;

  /// Labels for layers 1..L from a single incremental pass.
  std::vector<Label> predictions_by_layer(const Sample& x,
                                          LayerCounter* counter = nullptr) const;

  void check_layer(int layer) const;

 private:
  std::vector<std::string> labels_;
  Backend backend_;
};

/// Activated parameters (billions) as base + layers * per_layer.
struct ParamModel {
  double base_params = 0.0;
  double per_layer_params = 0.0;

  /// Line through (full_layers, full_size) and (anchor_layer, anchor_size).
  static ParamModel fit(int full_layers, double full_size, int anchor_layer,
                        double anchor_size);

  double exact(int layer) const;
};

/// base + l * per_layer rounded to two decimals.
double activated_params(const ParamModel& pm, int layer);

}  // namespace navee
