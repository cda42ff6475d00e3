#include "monoocc/model.hpp"

#include <cmath>
#include <random>

#include "monoocc/alignment.hpp"
#include "monoocc/metrics.hpp"

namespace monoocc {

Variant parse_variant(const std::string& name) {
  if (name == "v1" || name == "V1") return Variant::V1;
  if (name == "v2" || name == "V2") return Variant::V2;
  if (name == "v3" || name == "V3") return Variant::V3;
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + name + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::V1: return "v1";
    case Variant::V2: return "v2";
    case Variant::V3: return "v3";
  }
  return "?";
}

namespace {

// Glorot-uniform weights, zero biases.
void add_dense(ParameterStore& store, const std::string& name, std::size_t fan_in,
               std::size_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
  }
  store.add(name + ".weight", std::move(w), 2);
  store.add(name + ".bias", Matrix::Zero(1, static_cast<Eigen::Index>(fan_out)), 1);
}

void add_trunk(ParameterStore& store, const std::string& name, const ModelConfig& c,
               std::mt19937_64& rng) {
  for (std::size_t l = 0; l < c.trunk_layers; ++l) {
    add_dense(store, name + "." + std::to_string(l), l == 0 ? c.input_dim : c.hidden_dim,
              c.hidden_dim, rng);
  }
}

}  // namespace

ToyModel::ToyModel(const ModelConfig& config) : config_(config) {
  if (config_.input_dim == 0 || config_.hidden_dim == 0 || config_.trunk_layers == 0) {
    throw Error(ErrorCode::ShapeMismatch, "model dimensions must be positive");
  }
  std::mt19937_64 rng(config_.seed);
  if (config_.variant == Variant::V1) {
    add_trunk(params_, "disparity_trunk", config_, rng);
    add_trunk(params_, "seg_trunk", config_, rng);
  } else {
    add_trunk(params_, "trunk", config_, rng);
  }
  add_dense(params_, "disparity_head", config_.hidden_dim, 1, rng);
  add_dense(params_, "seg_head", config_.hidden_dim, 1, rng);
}

std::size_t ToyModel::trunk_slot_count() const {
  const std::size_t per_trunk = 2 * config_.trunk_layers;
  return config_.variant == Variant::V1 ? 2 * per_trunk : per_trunk;
}

std::vector<std::size_t> ToyModel::disparity_head_slots() const {
  const std::size_t t = trunk_slot_count();
  return {t, t + 1};
}

std::vector<std::size_t> ToyModel::seg_head_slots() const {
  const std::size_t t = trunk_slot_count();
  return {t + 2, t + 3};
}

Var ToyModel::run_trunk(Graph& graph, Var x, std::size_t first_slot) const {
  Var h = x;
  for (std::size_t l = 0; l < config_.trunk_layers; ++l) {
    const std::size_t w = first_slot + 2 * l;
    h = graph.tanh(graph.add_bias(graph.matmul(h, graph.param(w)), graph.param(w + 1)));
  }
  return h;
}

ModelOutput ToyModel::forward(Graph& graph, const Matrix& input) const {
  if (input.cols() != static_cast<Eigen::Index>(config_.input_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(input.cols()) +
                                              " features, model expects " +
                                              std::to_string(config_.input_dim));
  }
  const Var x = graph.constant(input);
  const Var disp_features = run_trunk(graph, x, 0);
  const Var seg_features = config_.variant == Variant::V1
                               ? run_trunk(graph, x, 2 * config_.trunk_layers)
                               : disp_features;
  const auto d = disparity_head_slots();
  const auto s = seg_head_slots();
  return {graph.add_bias(graph.matmul(disp_features, graph.param(d[0])), graph.param(d[1])),
          graph.add_bias(graph.matmul(seg_features, graph.param(s[0])), graph.param(s[1]))};
}

Var joint_loss(Graph& graph, Var disparity_pred, const Matrix& disparity_gt, Var seg_logits,
               const Matrix& seg_gt, const std::vector<std::uint8_t>& mask, double bce_weight) {
  for (Eigen::Index i = 0; i < seg_gt.size(); ++i) {
    const double y = seg_gt.data()[i];
    if (y != 0.0 && y != 1.0) throw Error(ErrorCode::InvalidArgument, "segmentation targets must be 0 or 1");
  }
  const Var ssi = graph.ssi_loss(disparity_pred, disparity_gt, mask);
  const Var bce = graph.bce_with_logits(seg_logits, seg_gt);
  return graph.add(ssi, graph.scale(bce, bce_weight));
}

double mean_joint_loss(const ToyModel& model, const Dataset& data, double bce_weight) {
  if (data.empty()) return 0.0;
  // A scratch store keeps the model's gradient buffers untouched.
  ParameterStore scratch = model.parameters();
  scratch.set_requires_grad(false);
  double sum = 0.0;
  for (const Frame& f : data) {
    Graph g(scratch);
    const ModelOutput out = model.forward(g, f.input);
    sum += g.scalar(joint_loss(g, out.disparity, f.disparity, out.seg_logits, f.segmentation,
                               f.mask, bce_weight));
  }
  return sum / static_cast<double>(data.size());
}

void train_epoch(ToyModel& model, const Dataset& data, const TrainConfig& config) {
  for (const Frame& f : data) {
    Graph g(model.parameters());
    const ModelOutput out = model.forward(g, f.input);
    const Var loss = joint_loss(g, out.disparity, f.disparity, out.seg_logits, f.segmentation,
                                f.mask, config.bce_weight);
    g.backward(loss);
    sgd_step(model.parameters(), config.learning_rate);
  }
}

EvalSummary evaluate(const ToyModel& model, const Dataset& data, double bce_weight) {
  EvalSummary out;
  if (data.empty()) return out;
  out.joint_loss = mean_joint_loss(model, data, bce_weight);

  ParameterStore scratch = model.parameters();
  scratch.set_requires_grad(false);
  double rmse_sum = 0.0;
  std::size_t correct = 0;
  std::size_t pixels = 0;
  for (const Frame& f : data) {
    Graph g(scratch);
    const ModelOutput o = model.forward(g, f.input);
    const Matrix& disp = g.value(o.disparity);
    const Matrix& logits = g.value(o.seg_logits);
    const auto n = static_cast<std::size_t>(disp.rows());
    DisparityMap pred(1, n);
    DisparityMap gt(1, n);
    Mask mask(1, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      pred[i] = disp(r, 0);
      gt[i] = f.disparity(r, 0);
      mask[i] = f.mask[i];
      correct += (logits(r, 0) > 0.0) == (f.segmentation(r, 0) > 0.5);
    }
    pixels += n;
    rmse_sum += rmse(apply_scale_shift(pred, fit_scale_shift(pred, gt, mask)), gt, mask);
  }
  out.rmse_aligned = rmse_sum / static_cast<double>(data.size());
  out.seg_accuracy = static_cast<double>(correct) / static_cast<double>(pixels);
  return out;
}

namespace {

double mean_ssi(const ToyModel& model, const Dataset& data) {
  ParameterStore scratch = model.parameters();
  scratch.set_requires_grad(false);
  double sum = 0.0;
  for (const Frame& f : data) {
    Graph g(scratch);
    sum += g.scalar(g.ssi_loss(model.forward(g, f.input).disparity, f.disparity, f.mask));
  }
  return data.empty() ? 0.0 : sum / static_cast<double>(data.size());
}

}  // namespace

PretrainResult pretrain_trunk(ToyModel& model, const Dataset& data, std::size_t epochs,
                              double learning_rate) {
  if (model.config().variant != Variant::V3) {
    throw Error(ErrorCode::InvalidArgument, "trunk pretraining applies to the v3 variant only");
  }
  ParameterStore& params = model.parameters();
  PretrainResult result;
  result.initial_loss = mean_ssi(model, data);

  params.set_requires_grad(true);
  for (std::size_t slot : model.seg_head_slots()) params[slot].requires_grad = false;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (const Frame& f : data) {
      Graph g(params);
      const Var loss = g.ssi_loss(model.forward(g, f.input).disparity, f.disparity, f.mask);
      g.backward(loss);
      sgd_step(params, learning_rate);
    }
  }
  params.set_requires_grad(true);
  params.release_grads();

  result.final_loss = mean_ssi(model, data);
  return result;
}

Dataset make_synthetic_dataset(const SyntheticConfig& config) {
  ModelConfig teacher_cfg;
  teacher_cfg.input_dim = config.input_dim;
  teacher_cfg.hidden_dim = config.teacher_hidden;
  teacher_cfg.variant = Variant::V2;
  teacher_cfg.seed = config.seed;
  ToyModel teacher(teacher_cfg);
  // Sharper teacher so the targets are visibly nonlinear.
  for (auto& p : teacher.parameters()) p.value *= 2.0;
  teacher.parameters().set_requires_grad(false);

  std::mt19937_64 rng(config.seed + 1);
  std::uniform_real_distribution<double> feature(-1.0, 1.0);

  Dataset data;
  data.reserve(config.frames);
  for (std::size_t f = 0; f < config.frames; ++f) {
    Frame frame;
    frame.input.resize(static_cast<Eigen::Index>(config.pixels),
                       static_cast<Eigen::Index>(config.input_dim));
    for (Eigen::Index r = 0; r < frame.input.rows(); ++r) {
      for (Eigen::Index c = 0; c < frame.input.cols(); ++c) frame.input(r, c) = feature(rng);
    }
    Graph g(teacher.parameters());
    const ModelOutput out = teacher.forward(g, frame.input);
    frame.disparity = g.value(out.disparity);
    frame.segmentation = (g.value(out.seg_logits).array() > 0.0).cast<double>().matrix();
    frame.mask.assign(config.pixels, 1);
    for (std::size_t i = 15; i < config.pixels; i += 16) frame.mask[i] = 0;
    data.push_back(std::move(frame));
  }
  return data;
}

}  // namespace monoocc
