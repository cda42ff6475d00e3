#include "monoocc/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "monoocc/alignment.hpp"
#include "monoocc/binary.hpp"
#include "monoocc/fileio.hpp"

namespace monoocc {

// ---------------------------------------------------------------------------
// Parameters

Parameter::Parameter(std::string name, Matrix v, std::size_t rank)
    : value(std::move(v)), name_(std::move(name)), rank_(rank) {
  if (rank_ != 1 && rank_ != 2) throw Error(ErrorCode::ShapeMismatch, "parameter rank must be 1 or 2");
  if (rank_ == 1 && value.rows() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "rank-1 parameter must be stored as a single row");
  }
}

std::vector<std::size_t> Parameter::dims() const {
  if (rank_ == 1) return {static_cast<std::size_t>(value.cols())};
  return {static_cast<std::size_t>(value.rows()), static_cast<std::size_t>(value.cols())};
}

const Matrix& Parameter::grad() const {
  if (!grad_) throw Error(ErrorCode::MissingGradients, "parameter '" + name_ + "' has no gradient");
  return *grad_;
}

std::size_t ParameterStore::add(std::string name, Matrix value, std::size_t rank) {
  params_.emplace_back(std::move(name), std::move(value), rank);
  return params_.size() - 1;
}

void ParameterStore::set_requires_grad(bool flag) {
  for (auto& p : params_) p.requires_grad = flag;
}

std::size_t ParameterStore::trainable_count() const {
  return static_cast<std::size_t>(
      std::count_if(params_.begin(), params_.end(), [](const Parameter& p) { return p.requires_grad; }));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::size_t ParameterStore::grad_buffer_count() const {
  return static_cast<std::size_t>(
      std::count_if(params_.begin(), params_.end(), [](const Parameter& p) { return p.has_grad(); }));
}

void ParameterStore::release_grads() {
  for (auto& p : params_) p.grad_.reset();
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params_) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        auto bits = std::bit_cast<std::uint64_t>(p.value(r, c));
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xFF;
          h *= 1099511628211ULL;
        }
      }
    }
  }
  return h;
}

std::vector<Matrix> ParameterStore::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterStore::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw Error(ErrorCode::ShapeMismatch, "snapshot size differs");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = values[i];
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

bool Graph::any_requires_grad(std::initializer_list<Var> vars) const {
  return std::any_of(vars.begin(), vars.end(), [&](Var v) { return nodes_[v.id].requires_grad; });
}

Matrix& Graph::accumulate(std::size_t id, const Eigen::Ref<const Matrix>& delta) {
  Node& n = nodes_[id];
  if (!n.grad) {
    n.grad = delta;
    ++node_grad_allocations_;
  } else {
    *n.grad += delta;
  }
  return *n.grad;
}

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = OpTag::Constant;
  return push(std::move(n));
}

Var Graph::param(std::size_t slot) {
  if (slot >= store_->size()) throw Error(ErrorCode::ShapeMismatch, "parameter slot out of range");
  Node n;
  n.value = (*store_)[slot].value;
  n.op = OpTag::Param;
  n.slot = slot;
  n.requires_grad = (*store_)[slot].requires_grad;
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.rows()) throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions differ");
  Node n;
  n.value = A * B;
  n.op = OpTag::MatMul;
  n.parents = {a.id, b.id};
  n.requires_grad = any_requires_grad({a, b});
  n.backprop = [](Graph& g, Node& self) {
    const std::size_t ia = self.parents[0];
    const std::size_t ib = self.parents[1];
    if (g.nodes_[ia].requires_grad) g.accumulate(ia, *self.grad * g.nodes_[ib].value.transpose());
    if (g.nodes_[ib].requires_grad) g.accumulate(ib, g.nodes_[ia].value.transpose() * *self.grad);
  };
  return push(std::move(n));
}

Var Graph::add_bias(Var a, Var bias) {
  const Matrix& A = value(a);
  const Matrix& b = value(bias);
  if (b.rows() != 1 || b.cols() != A.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "bias must be a 1 x cols row");
  }
  Node n;
  n.value = A.rowwise() + b.row(0);
  n.op = OpTag::AddBias;
  n.parents = {a.id, bias.id};
  n.requires_grad = any_requires_grad({a, bias});
  n.backprop = [](Graph& g, Node& self) {
    if (g.nodes_[self.parents[0]].requires_grad) g.accumulate(self.parents[0], *self.grad);
    if (g.nodes_[self.parents[1]].requires_grad) {
      g.accumulate(self.parents[1], self.grad->colwise().sum());
    }
  };
  return push(std::move(n));
}

Var Graph::tanh(Var a) {
  Node n;
  n.value = value(a).array().tanh().matrix();
  n.op = OpTag::Tanh;
  n.parents = {a.id};
  n.requires_grad = any_requires_grad({a});
  n.backprop = [](Graph& g, Node& self) {
    if (!g.nodes_[self.parents[0]].requires_grad) return;
    const Matrix local = (1.0 - self.value.array().square()).matrix();
    g.accumulate(self.parents[0], self.grad->cwiseProduct(local));
  };
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw Error(ErrorCode::ShapeMismatch, "add operands differ in shape");
  }
  Node n;
  n.value = value(a) + value(b);
  n.op = OpTag::Add;
  n.parents = {a.id, b.id};
  n.requires_grad = any_requires_grad({a, b});
  n.backprop = [](Graph& g, Node& self) {
    for (std::size_t p : self.parents) {
      if (g.nodes_[p].requires_grad) g.accumulate(p, *self.grad);
    }
  };
  return push(std::move(n));
}

Var Graph::scale(Var a, double factor) {
  Node n;
  n.value = value(a) * factor;
  n.op = OpTag::Scale;
  n.parents = {a.id};
  n.requires_grad = any_requires_grad({a});
  n.backprop = [factor](Graph& g, Node& self) {
    if (g.nodes_[self.parents[0]].requires_grad) g.accumulate(self.parents[0], *self.grad * factor);
  };
  return push(std::move(n));
}

Var Graph::ssi_loss(Var pred, const Matrix& target, const std::vector<std::uint8_t>& mask) {
  const Matrix& P = value(pred);
  if (P.cols() != 1 || target.rows() != P.rows() || target.cols() != 1 ||
      mask.size() != static_cast<std::size_t>(P.rows())) {
    throw Error(ErrorCode::ShapeMismatch, "ssi loss expects matching n x 1 columns and mask");
  }
  const auto rows = static_cast<std::size_t>(P.rows());
  DisparityMap p(1, rows);
  DisparityMap t(1, rows);
  Mask m(1, rows);
  for (std::size_t i = 0; i < rows; ++i) {
    p[i] = P(static_cast<Eigen::Index>(i), 0);
    t[i] = target(static_cast<Eigen::Index>(i), 0);
    m[i] = mask[i];
  }
  const ScaleShift ss = fit_scale_shift(p, t, m);

  Matrix residual = Matrix::Zero(P.rows(), 1);
  std::size_t n_masked = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!mask[i]) continue;
    const double r = ss.scale * p[i] + ss.shift - t[i];
    residual(static_cast<Eigen::Index>(i), 0) = r;
    sum += r * r;
    ++n_masked;
  }
  const double inv_n = 1.0 / static_cast<double>(n_masked);

  Node n;
  n.value = Matrix::Constant(1, 1, sum * inv_n);
  n.op = OpTag::SsiLoss;
  n.parents = {pred.id};
  n.requires_grad = any_requires_grad({pred});
  n.backprop = [residual = std::move(residual), s = ss.scale, inv_n](Graph& g, Node& self) {
    if (!g.nodes_[self.parents[0]].requires_grad) return;
    g.accumulate(self.parents[0], residual * (2.0 * s * inv_n * (*self.grad)(0, 0)));
  };
  return push(std::move(n));
}

Var Graph::bce_with_logits(Var logits, const Matrix& target) {
  const Matrix& Z = value(logits);
  if (Z.rows() != target.rows() || Z.cols() != target.cols() || Z.size() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "bce logits and targets differ in shape");
  }
  constexpr double kClamp = 1e-12;
  const double inv_n = 1.0 / static_cast<double>(Z.size());
  Matrix local(Z.rows(), Z.cols());
  double sum = 0.0;
  for (Eigen::Index r = 0; r < Z.rows(); ++r) {
    for (Eigen::Index c = 0; c < Z.cols(); ++c) {
      const double y = target(r, c);
      const double raw = 1.0 / (1.0 + std::exp(-Z(r, c)));
      const double p = std::clamp(raw, kClamp, 1.0 - kClamp);
      sum += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
      // Zero slope where the clamp is active.
      local(r, c) = (raw == p) ? (p - y) : 0.0;
    }
  }
  Node n;
  n.value = Matrix::Constant(1, 1, sum * inv_n);
  n.op = OpTag::BceWithLogits;
  n.parents = {logits.id};
  n.requires_grad = any_requires_grad({logits});
  n.backprop = [local = std::move(local), inv_n](Graph& g, Node& self) {
    if (!g.nodes_[self.parents[0]].requires_grad) return;
    g.accumulate(self.parents[0], local * (inv_n * (*self.grad)(0, 0)));
  };
  return push(std::move(n));
}

double Graph::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw Error(ErrorCode::NonScalarLoss, "value is not a scalar");
  return m(0, 0);
}

std::vector<Var> Graph::parents(Var v) const {
  std::vector<Var> out;
  for (std::size_t p : nodes_[v.id].parents) out.push_back(Var{p});
  return out;
}

const Matrix& Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.grad) throw Error(ErrorCode::MissingGradients, "node has no gradient");
  return *n.grad;
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) throw Error(ErrorCode::NonScalarLoss, "backward needs a 1 x 1 loss");
  for (auto& n : nodes_) n.grad.reset();
  node_grad_allocations_ = 0;
  store_->release_grads();

  if (nodes_[loss.id].requires_grad) {
    accumulate(loss.id, Matrix::Ones(1, 1));
    // Nodes are appended after their operands, so reverse id order is a
    // reverse topological order.
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.grad && n.backprop) n.backprop(*this, n);
    }
  }

  for (const Node& n : nodes_) {
    if (!n.slot || !n.grad) continue;
    Parameter& p = (*store_)[*n.slot];
    if (!p.requires_grad) continue;
    if (p.grad_) {
      *p.grad_ += *n.grad;
    } else {
      p.grad_ = *n.grad;
    }
  }
  store_->note_buffers();
}

// ---------------------------------------------------------------------------

void sgd_step(ParameterStore& store, double learning_rate) {
  for (auto& p : store) {
    if (!p.requires_grad) continue;
    if (!p.has_grad()) {
      throw Error(ErrorCode::MissingGradients, "trainable parameter '" + p.name() + "' has no gradient");
    }
  }
  for (auto& p : store) {
    if (p.requires_grad) p.value -= learning_rate * p.grad();
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store) {
  binary::Writer w;
  w.text("SDPT");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Parameter& p = store[i];
    w.u32(static_cast<std::uint32_t>(i));
    w.u32(static_cast<std::uint32_t>(p.rank()));
    for (std::size_t d : p.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) w.f64(p.value(r, c));
    }
  }
  write_file(path, w.buffer());
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& store) {
  const std::vector<char> bytes = read_file(path);
  binary::Reader r(bytes);
  auto magic = r.take(4);
  if (std::string(magic.begin(), magic.end()) != "SDPT") {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an SDPT checkpoint");
  }
  if (r.u32() != kCheckpointVersion) {
    throw Error(ErrorCode::MalformedHeader, "unsupported checkpoint version in " + path.string());
  }
  if (r.u32() != store.size()) throw Error(ErrorCode::SizeMismatch, "checkpoint parameter count differs");

  std::vector<Matrix> values;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (r.u32() != i) throw Error(ErrorCode::MalformedHeader, "checkpoint slots out of order");
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    if (dims != store[i].dims()) throw Error(ErrorCode::SizeMismatch, "checkpoint shape differs at slot " + std::to_string(i));
    Matrix m(store[i].value.rows(), store[i].value.cols());
    for (Eigen::Index row = 0; row < m.rows(); ++row) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(row, c) = r.f64();
    }
    values.push_back(std::move(m));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::SizeMismatch, "trailing bytes in checkpoint");
  store.restore(values);
}

}  // namespace monoocc
