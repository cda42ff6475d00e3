#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "monoocc/error.hpp"

namespace monoocc {

using Matrix = Eigen::MatrixXd;

/// A trainable tensor slot. Rank-1 parameters (biases) are stored as 1 x n rows.
class Parameter {
 public:
  Parameter(std::string name, Matrix value, std::size_t rank);

  const std::string& name() const { return name_; }
  std::size_t rank() const { return rank_; }
  /// Checkpoint shape: {cols} for rank 1, {rows, cols} for rank 2.
  std::vector<std::size_t> dims() const;

  Matrix value;
  bool requires_grad = true;

  bool has_grad() const { return grad_.has_value(); }
  const Matrix& grad() const;

 private:
  friend class ParameterStore;
  friend class Graph;

  std::string name_;
  std::size_t rank_;
  std::optional<Matrix> grad_;
};

/// Canonically ordered parameter list; the order is construction order.
/// Tracks allocated gradient buffers, the memory proxy used by PatchWise.
class ParameterStore {
 public:
  std::size_t add(std::string name, Matrix value, std::size_t rank = 2);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void set_requires_grad(bool flag);
  std::size_t trainable_count() const;
  std::size_t scalar_count() const;

  /// Parameter slots currently holding a gradient buffer.
  std::size_t grad_buffer_count() const;
  /// Highest grad_buffer_count seen since the last reset_peak().
  std::size_t peak_grad_buffers() const { return peak_; }
  void reset_peak() { peak_ = grad_buffer_count(); }
  void release_grads();

  /// FNV-1a over the raw bits of every value, in canonical order.
  std::uint64_t checksum() const;
  /// Copies values only; flags and gradients are left alone.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  friend class Graph;
  void note_buffers() { peak_ = std::max(peak_, grad_buffer_count()); }

  std::vector<Parameter> params_;
  std::size_t peak_ = 0;
};

enum class OpTag {
  Constant,
  Param,
  MatMul,
  AddBias,
  Tanh,
  Add,
  Scale,
  SsiLoss,
  BceWithLogits,
};

class Graph;

/// Handle to a node of a Graph.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape. Nodes get a gradient buffer only when they depend on a
/// trainable parameter; backward writes parameter gradients into the store.
/// Single-threaded; independent graphs may live on different threads.
class Graph {
 public:
  explicit Graph(ParameterStore& store) : store_(&store) {}

  Var constant(Matrix value);
  Var param(std::size_t slot);

  Var matmul(Var a, Var b);
  /// a (n x m) plus a 1 x m bias row broadcast over rows.
  Var add_bias(Var a, Var bias);
  Var tanh(Var a);
  Var add(Var a, Var b);
  Var scale(Var a, double factor);

  /// Mean masked squared residual after the closed-form scale/shift fit of
  /// pred (n x 1) onto target. The fit is held constant in backward; at the
  /// optimum its partial derivatives vanish, so the gradient is exact.
  Var ssi_loss(Var pred, const Matrix& target, const std::vector<std::uint8_t>& mask);
  /// Mean binary cross entropy of sigmoid(logits) against 0/1 targets, with
  /// the probability clamped to [1e-12, 1 - 1e-12].
  Var bce_with_logits(Var logits, const Matrix& target);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  OpTag op(Var v) const { return nodes_[v.id].op; }
  std::vector<Var> parents(Var v) const;
  /// Gradient of v after backward; throws MissingGradients if v has none.
  const Matrix& grad(Var v) const;
  bool has_grad(Var v) const { return nodes_[v.id].grad.has_value(); }

  /// Populates gradients for every node reachable from trainable parameters,
  /// then overwrites the grads of trainable parameter slots. Frozen slots lose
  /// any stale buffer. Throws NonScalarLoss unless loss is 1 x 1.
  void backward(Var loss);

  /// Node gradient buffers allocated by the last backward.
  std::size_t node_grad_allocations() const { return node_grad_allocations_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    std::optional<Matrix> grad;
    bool requires_grad = false;
    OpTag op = OpTag::Constant;
    std::vector<std::size_t> parents;
    std::optional<std::size_t> slot;
    std::function<void(Graph&, Node&)> backprop;
  };

  Var push(Node node);
  Matrix& accumulate(std::size_t id, const Eigen::Ref<const Matrix>& delta);
  bool any_requires_grad(std::initializer_list<Var> vars) const;

  ParameterStore* store_;
  std::vector<Node> nodes_;
  std::size_t node_grad_allocations_ = 0;
};

/// p <- p - lr * grad(p) for trainable slots. Frozen slots are not touched.
/// Throws MissingGradients if a trainable slot has no gradient.
void sgd_step(ParameterStore& store, double learning_rate);

inline std::size_t grad_buffer_count(const ParameterStore& store) {
  return store.grad_buffer_count();
}

/// "SDPT" checkpoint: magic, u32 version, u32 count, then per parameter
/// u32 index, u32 rank, u32 dims[rank], f64 data row-major. Little-endian.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store);
/// Loads into an existing store; shapes and count must match.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& store);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace monoocc
