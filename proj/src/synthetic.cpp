#include <algorithm>
#include <cmath>
#include <string>

#include "navee/error.hpp"
#include "navee/model.hpp"
#include "navee/rng.hpp"

namespace navee {

namespace {

// Planted-signal magnitudes. The const channel dominates the residual norm,
// so RMS normalization scales every token by roughly sqrt(D) / kConstScale
// and the gates below write predictable amounts into the class block.
constexpr float kConstPerSqrtDim = 4.0f;
constexpr float kDecoyAmplitude = 1.0f;
constexpr float kTruthWrite = 4.0f;
constexpr float kOverthinkWrite = 10.0f;
constexpr float kGateThreshold = 1.5f;
constexpr float kHeadGain = 4.0f;
constexpr float kHeadNoise = 0.01f;
constexpr float kRmsEps = 1e-6f;

void rms_norm(const float* x, float* y, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(x[i]) * x[i];
  const float inv = 1.0f / std::sqrt(static_cast<float>(sum / n) + kRmsEps);
  for (int i = 0; i < n; ++i) y[i] = x[i] * inv;
}

// y = W x, W row-major rows x cols.
// Eight independent partial sums with a fixed combine order: vectorizable
// without -ffast-math and bit-identical across runs.
void matvec(const float* w, int rows, int cols, const float* x, float* y) {
  constexpr int kLanes = 8;
  const int body = cols - cols % kLanes;
  for (int r = 0; r < rows; ++r) {
    const float* row = w + static_cast<std::size_t>(r) * cols;
    float lane[kLanes] = {};
    for (int c = 0; c < body; c += kLanes)
      for (int k = 0; k < kLanes; ++k) lane[k] += row[c + k] * x[c + k];
    float acc = ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    for (int c = body; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// Fills the [row_begin, row_end) x [col_begin, col_end) block with U(-r, r).
void fill_block(std::vector<float>& m, int cols, int row_begin, int row_end,
                int col_begin, int col_end, float r, SplitMix64& rng) {
  for (int i = row_begin; i < row_end; ++i)
    for (int j = col_begin; j < col_end; ++j)
      m[static_cast<std::size_t>(i) * cols + j] = rng.symmetric(r);
}

std::vector<std::string> task_order(const SyntheticSpec& spec) {
  std::vector<std::string> tasks;
  for (const auto& [task, depth] : spec.planted_depths) tasks.push_back(task);
  if (tasks.empty()) tasks.emplace_back("default");
  return tasks;
}

int planted_depth(const SyntheticSpec& spec, const std::string& task) {
  auto it = spec.planted_depths.find(task);
  return it == spec.planted_depths.end() ? spec.num_layers : it->second;
}

SyntheticLayout make_layout(const SyntheticSpec& spec, int num_tasks) {
  SyntheticLayout layout;
  layout.hidden = spec.hidden_dim;
  layout.classes = spec.num_classes;
  layout.layers = spec.num_layers;
  layout.tasks = num_tasks;
  layout.free_inputs = spec.input_features;
  return layout;
}

}  // namespace

std::vector<std::string> SyntheticSpec::validate() const {
  std::vector<std::string> errors;
  if (num_layers < 1) errors.push_back("num_layers must be >= 1");
  if (num_classes < 2) errors.push_back("num_classes must be >= 2");
  if (seq_len < 1) errors.push_back("seq_len must be >= 1");
  if (input_features < 1) errors.push_back("input_features must be >= 1");
  if (mlp_dim < 0) errors.push_back("mlp_dim must be >= 0");
  if (!(overthink_rate >= 0.0 && overthink_rate <= 1.0))
    errors.push_back("overthink_rate must lie in [0, 1]");
  for (const auto& [task, depth] : planted_depths) {
    if (task.empty()) errors.push_back("planted_depths has an empty task id");
    if (depth < 1 || depth > num_layers)
      errors.push_back("planted_depths[" + task + "] must lie in [1, num_layers]");
  }
  if (num_layers >= 1 && num_classes >= 2) {
    const int planted = 1 + 2 * num_classes + 2 * num_layers;
    if (hidden_dim < planted + 4)
      errors.push_back("hidden_dim must be >= " + std::to_string(planted + 4) +
                       " (1 + 2*num_classes + 2*num_layers planted dims + 4 free)");
  } else if (hidden_dim < 1) {
    errors.push_back("hidden_dim must be >= 1");
  }
  return errors;
}

SyntheticTransformer SyntheticTransformer::generate(const SyntheticSpec& spec) {
  if (auto errors = spec.validate(); !errors.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw Error(ErrorKind::Validation, msg);
  }
  const auto tasks = task_order(spec);
  const SyntheticLayout lay = make_layout(spec, static_cast<int>(tasks.size()));
  const int d = spec.hidden_dim;
  const int in = lay.input_dim();
  const int hidden_units = spec.effective_mlp_dim();
  const int units = hidden_units + 2 * spec.num_classes;
  const int fb = lay.free_begin();
  const int nfree = lay.free_count();
  const float c0 = kConstPerSqrtDim * std::sqrt(static_cast<float>(d));
  const float norm_scale = std::sqrt(static_cast<float>(d)) / c0;

  SplitMix64 rng(spec.seed);
  TransformerWeights w;

  w.embed.assign(static_cast<std::size_t>(d) * in, 0.0f);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const int depth = planted_depth(spec, tasks[t]);
    w.embed[static_cast<std::size_t>(lay.depth_dim(depth)) * in + lay.in_task(static_cast<int>(t))] = 1.0f;
  }
  for (int c = 0; c < spec.num_classes; ++c) {
    w.embed[static_cast<std::size_t>(lay.class_dim(c)) * in + lay.in_decoy(c)] = kDecoyAmplitude;
    w.embed[static_cast<std::size_t>(lay.payload_dim(c)) * in + lay.in_truth(c)] = 1.0f;
  }
  for (int l = 1; l <= spec.num_layers; ++l)
    w.embed[static_cast<std::size_t>(lay.overthink_dim(l)) * in + lay.in_overthink(l)] = 1.0f;
  fill_block(w.embed, in, fb, d, lay.in_free_begin(), in,
             std::sqrt(3.0f / static_cast<float>(spec.input_features)), rng);

  w.pos.assign(static_cast<std::size_t>(spec.seq_len) * d, 0.0f);
  for (int t = 0; t < spec.seq_len; ++t) w.pos[static_cast<std::size_t>(t) * d + lay.const_dim()] = c0;
  fill_block(w.pos, d, 0, spec.seq_len, fb, d, 0.5f, rng);

  const float r_attn = std::sqrt(3.0f / static_cast<float>(nfree));
  const float r_mlp_in = std::sqrt(3.0f / static_cast<float>(nfree));
  const float r_mlp_out = 0.5f * std::sqrt(3.0f / static_cast<float>(hidden_units));
  // Gate output weight so that K * 0.5 * norm_scale == target write.
  const float k_truth = 2.0f * kTruthWrite / norm_scale;
  const float k_over = 2.0f * kOverthinkWrite / norm_scale;

  w.layers.resize(spec.num_layers);
  for (int l = 1; l <= spec.num_layers; ++l) {
    LayerWeights& lw = w.layers[l - 1];
    for (auto* m : {&lw.wq, &lw.wk, &lw.wv, &lw.wo}) m->assign(static_cast<std::size_t>(d) * d, 0.0f);
    fill_block(lw.wq, d, fb, d, fb, d, r_attn, rng);
    fill_block(lw.wk, d, fb, d, fb, d, r_attn, rng);
    fill_block(lw.wv, d, fb, d, fb, d, r_attn, rng);
    fill_block(lw.wo, d, fb, d, fb, d, 0.5f * r_attn, rng);

    lw.w1.assign(static_cast<std::size_t>(units) * d, 0.0f);
    lw.b1.assign(units, 0.0f);
    lw.w2.assign(static_cast<std::size_t>(d) * units, 0.0f);
    fill_block(lw.w1, d, 0, hidden_units, fb, d, r_mlp_in, rng);
    fill_block(lw.w2, units, fb, d, 0, hidden_units, r_mlp_out, rng);

    const float bias_weight = -kGateThreshold / c0;
    for (int c = 0; c < spec.num_classes; ++c) {
      const int truth_gate = hidden_units + c;
      float* row = lw.w1.data() + static_cast<std::size_t>(truth_gate) * d;
      row[lay.payload_dim(c)] = 1.0f;
      row[lay.depth_dim(l)] = 1.0f;
      row[lay.const_dim()] = bias_weight;
      lw.w2[static_cast<std::size_t>(lay.class_dim(c)) * units + truth_gate] = k_truth;

      const int over_gate = hidden_units + spec.num_classes + c;
      row = lw.w1.data() + static_cast<std::size_t>(over_gate) * d;
      row[lay.payload_dim(c)] = 1.0f;
      row[lay.overthink_dim(l)] = 1.0f;
      row[lay.const_dim()] = bias_weight;
      const int wrong = (c + 1) % spec.num_classes;
      lw.w2[static_cast<std::size_t>(lay.class_dim(wrong)) * units + over_gate] = k_over;
    }
  }

  w.head.assign(static_cast<std::size_t>(spec.num_classes) * d, 0.0f);
  fill_block(w.head, d, 0, spec.num_classes, fb, d, kHeadNoise, rng);
  for (int c = 0; c < spec.num_classes; ++c)
    w.head[static_cast<std::size_t>(c) * d + lay.class_dim(c)] = kHeadGain;

  return SyntheticTransformer(spec, std::move(w));
}

SyntheticTransformer::SyntheticTransformer(SyntheticSpec spec, TransformerWeights weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  if (auto errors = spec_.validate(); !errors.empty())
    throw Error(ErrorKind::Validation, "invalid synthetic spec: " + errors.front());
  tasks_ = task_order(spec_);
  layout_ = make_layout(spec_, static_cast<int>(tasks_.size()));

  const std::size_t d = spec_.hidden_dim;
  const std::size_t units = spec_.effective_mlp_dim() + 2 * spec_.num_classes;
  auto expect = [](const std::vector<float>& v, std::size_t n, const char* what) {
    if (v.size() != n)
      throw Error(ErrorKind::Validation, std::string("weight tensor ") + what +
                                             " has " + std::to_string(v.size()) +
                                             " entries, expected " + std::to_string(n));
  };
  expect(weights_.embed, d * layout_.input_dim(), "embed");
  expect(weights_.pos, d * spec_.seq_len, "pos");
  expect(weights_.head, d * spec_.num_classes, "head");
  if (weights_.layers.size() != static_cast<std::size_t>(spec_.num_layers))
    throw Error(ErrorKind::Validation, "layer count does not match spec");
  for (const auto& lw : weights_.layers) {
    expect(lw.wq, d * d, "wq");
    expect(lw.wk, d * d, "wk");
    expect(lw.wv, d * d, "wv");
    expect(lw.wo, d * d, "wo");
    expect(lw.w1, units * d, "w1");
    expect(lw.b1, units, "b1");
    expect(lw.w2, d * units, "w2");
  }
}

HiddenState SyntheticTransformer::embed(std::span<const float> features) const {
  if (features.size() != static_cast<std::size_t>(input_dim()))
    throw Error(ErrorKind::InputShape, "expected " + std::to_string(input_dim()) +
                                           " features, got " + std::to_string(features.size()));
  const int d = spec_.hidden_dim;
  HiddenState state;
  state.activations.resize(static_cast<std::size_t>(spec_.seq_len) * d);
  std::vector<float> projected(d);
  matvec(weights_.embed.data(), d, input_dim(), features.data(), projected.data());
  for (int t = 0; t < spec_.seq_len; ++t) {
    float* tok = state.activations.data() + static_cast<std::size_t>(t) * d;
    const float* pos = weights_.pos.data() + static_cast<std::size_t>(t) * d;
    for (int i = 0; i < d; ++i) tok[i] = projected[i] + pos[i];
  }
  return state;
}

void SyntheticTransformer::apply_layer(HiddenState& state) const {
  const int layer = state.layer_index + 1;
  if (layer < 1 || layer > spec_.num_layers)
    throw Error(ErrorKind::LayerIndex, "no layer " + std::to_string(layer));
  const LayerWeights& lw = weights_.layers[layer - 1];
  const int d = spec_.hidden_dim;
  const int seq = spec_.seq_len;
  const int units = spec_.effective_mlp_dim() + 2 * spec_.num_classes;
  float* h = state.activations.data();

  // Single-head self-attention.
  std::vector<float> normed(static_cast<std::size_t>(seq) * d);
  std::vector<float> q(normed.size()), k(normed.size()), v(normed.size());
  for (int t = 0; t < seq; ++t) {
    const std::size_t off = static_cast<std::size_t>(t) * d;
    rms_norm(h + off, normed.data() + off, d);
    matvec(lw.wq.data(), d, d, normed.data() + off, q.data() + off);
    matvec(lw.wk.data(), d, d, normed.data() + off, k.data() + off);
    matvec(lw.wv.data(), d, d, normed.data() + off, v.data() + off);
  }
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  std::vector<float> scores(seq), mixed(d), out(d);
  for (int t = 0; t < seq; ++t) {
    const float* qt = q.data() + static_cast<std::size_t>(t) * d;
    float best = -INFINITY;
    for (int u = 0; u < seq; ++u) {
      const float* ku = k.data() + static_cast<std::size_t>(u) * d;
      float dot = 0.0f;
      for (int i = 0; i < d; ++i) dot += qt[i] * ku[i];
      scores[u] = dot * scale;
      best = std::max(best, scores[u]);
    }
    float total = 0.0f;
    for (int u = 0; u < seq; ++u) total += (scores[u] = std::exp(scores[u] - best));
    std::fill(mixed.begin(), mixed.end(), 0.0f);
    for (int u = 0; u < seq; ++u) {
      const float a = scores[u] / total;
      const float* vu = v.data() + static_cast<std::size_t>(u) * d;
      for (int i = 0; i < d; ++i) mixed[i] += a * vu[i];
    }
    matvec(lw.wo.data(), d, d, mixed.data(), out.data());
    float* ht = h + static_cast<std::size_t>(t) * d;
    for (int i = 0; i < d; ++i) ht[i] += out[i];
  }

  // Two-layer ReLU MLP.
  std::vector<float> n(d), z(units);
  for (int t = 0; t < seq; ++t) {
    float* ht = h + static_cast<std::size_t>(t) * d;
    rms_norm(ht, n.data(), d);
    matvec(lw.w1.data(), units, d, n.data(), z.data());
    for (int j = 0; j < units; ++j) z[j] = std::max(0.0f, z[j] + lw.b1[j]);
    matvec(lw.w2.data(), d, units, z.data(), out.data());
    for (int i = 0; i < d; ++i) ht[i] += out[i];
  }
  state.layer_index = layer;
}

std::vector<float> SyntheticTransformer::logits(const HiddenState& state) const {
  const int d = spec_.hidden_dim;
  std::vector<float> pooled(d, 0.0f), n(d);
  for (int t = 0; t < spec_.seq_len; ++t) {
    rms_norm(state.activations.data() + static_cast<std::size_t>(t) * d, n.data(), d);
    for (int i = 0; i < d; ++i) pooled[i] += n[i];
  }
  const float inv = 1.0f / static_cast<float>(spec_.seq_len);
  for (auto& p : pooled) p *= inv;
  std::vector<float> out(spec_.num_classes);
  matvec(weights_.head.data(), spec_.num_classes, d, pooled.data(), out.data());
  return out;
}

std::vector<float> SyntheticTransformer::make_features(std::string_view task, Label truth,
                                                       Label decoy, int overthink_layer,
                                                       std::span<const float> free_inputs) const {
  auto it = std::find(tasks_.begin(), tasks_.end(), task);
  if (it == tasks_.end())
    throw Error(ErrorKind::Validation, "task '" + std::string(task) + "' is not planted in this model");
  if (truth < 0 || truth >= spec_.num_classes || decoy < 0 || decoy >= spec_.num_classes)
    throw Error(ErrorKind::LabelDomain, "label out of range");
  if (overthink_layer < 0 || overthink_layer > spec_.num_layers)
    throw Error(ErrorKind::LayerIndex, "overthink layer out of range");
  if (free_inputs.size() != static_cast<std::size_t>(spec_.input_features))
    throw Error(ErrorKind::InputShape, "wrong number of free inputs");

  std::vector<float> x(input_dim(), 0.0f);
  x[layout_.in_task(static_cast<int>(it - tasks_.begin()))] = 1.0f;
  x[layout_.in_truth(truth)] = 1.0f;
  x[layout_.in_decoy(decoy)] = 1.0f;
  if (overthink_layer > 0) x[layout_.in_overthink(overthink_layer)] = 1.0f;
  std::copy(free_inputs.begin(), free_inputs.end(), x.begin() + layout_.in_free_begin());
  return x;
}

std::vector<float> TransformerWeights::flatten() const {
  std::vector<float> out;
  auto put = [&out](const std::vector<float>& v) { out.insert(out.end(), v.begin(), v.end()); };
  put(embed);
  put(pos);
  for (const auto& lw : layers) {
    put(lw.wq);
    put(lw.wk);
    put(lw.wv);
    put(lw.wo);
    put(lw.w1);
    put(lw.b1);
    put(lw.w2);
  }
  put(head);
  return out;
}

}  // namespace navee
