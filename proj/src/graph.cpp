#include "hmn/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace hmn::diff {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

MatMap as_mat(Tensor& t) { return MatMap(t.raw(), t.shape()[0], t.shape()[1]); }
ConstMatMap as_mat(const Tensor& t) { return ConstMatMap(t.raw(), t.shape()[0], t.shape()[1]); }
VecMap as_vec(Tensor& t) { return VecMap(t.raw(), static_cast<Eigen::Index>(t.size())); }
ConstVecMap as_vec(const Tensor& t) {
  return ConstVecMap(t.raw(), static_cast<Eigen::Index>(t.size()));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                   shape_string(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " + shape_string(a));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::leaf: return "leaf";
    case Primitive::matvec: return "matvec";
    case Primitive::matvec_transposed: return "matvec_transposed";
    case Primitive::matmul: return "matmul";
    case Primitive::add: return "add";
    case Primitive::sub: return "sub";
    case Primitive::elementwise_mul: return "elementwise_mul";
    case Primitive::tanh: return "tanh";
    case Primitive::sigmoid: return "sigmoid";
    case Primitive::softmax: return "softmax";
    case Primitive::embedding_row_lookup: return "embedding_row_lookup";
    case Primitive::select_row: return "select_row";
    case Primitive::sum_rows: return "sum_rows";
    case Primitive::inner_product: return "inner_product";
    case Primitive::scale: return "scale";
    case Primitive::cross_entropy: return "cross_entropy";
    case Primitive::stack: return "stack";
    case Primitive::scatter_add: return "scatter_add";
    case Primitive::custom: return "custom";
  }
  return "?";
}

NodeId Graph::push(Node n) {
  n.requires_grad = n.requires_grad || std::any_of(n.inputs.begin(), n.inputs.end(),
                                                   [&](NodeId i) { return needs_grad(i); });
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw std::out_of_range("node id out of range");
  return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const {
  const auto& n = node(id);
  return n.param ? n.param->value : n.value;
}

Tensor Graph::grad(NodeId id) const {
  const auto& n = node(id);
  if (n.param) return n.param->grad;
  if (n.grad.empty() && !value(id).empty()) return Tensor(value(id).shape());
  return n.grad;
}

Tensor& Graph::grad_buffer(NodeId id) {
  auto& n = nodes_[id.index];
  if (n.param) return n.param->grad;
  if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.shape());
  }
  return n.grad;
}

Graph::Node Graph::make_node(Primitive op, std::vector<NodeId> inputs, Tensor value) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  return n;
}

NodeId Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.requires_grad = false;
  return push(std::move(n));
}

NodeId Graph::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.requires_grad = true;
  n.requires_grad = true;
  return push(std::move(n));
}

NodeId Graph::param(Parameter& p) {
  if (auto it = bound_params_.find(&p); it != bound_params_.end()) return it->second;
  if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
  Node n;
  n.param = &p;
  n.requires_grad = true;
  auto id = push(std::move(n));
  bound_params_.emplace(&p, id);
  return id;
}

NodeId Graph::matvec(NodeId m, NodeId x) {
  const auto& M = value(m);
  const auto& X = value(x);
  if (M.rank() != 2 || X.rank() != 1 || M.shape()[1] != X.size()) {
    shape_fail("matvec", M.shape(), X.shape());
  }
  Tensor out(Shape{M.shape()[0]});
  as_vec(out).noalias() = as_mat(M) * as_vec(X);
  auto n = make_node(Primitive::matvec, {m, x}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::matvec_transposed(NodeId m, NodeId x) {
  const auto& M = value(m);
  const auto& X = value(x);
  if (M.rank() != 2 || X.rank() != 1 || M.shape()[0] != X.size()) {
    shape_fail("matvec_transposed", M.shape(), X.shape());
  }
  Tensor out(Shape{M.shape()[1]});
  as_vec(out).noalias() = as_mat(M).transpose() * as_vec(X);
  auto n = make_node(Primitive::matvec_transposed, {m, x}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.shape()[1] != B.shape()[0]) {
    shape_fail("matmul", A.shape(), B.shape());
  }
  Tensor out(Shape{A.shape()[0], B.shape()[1]});
  as_mat(out).noalias() = as_mat(A) * as_mat(B);
  auto n = make_node(Primitive::matmul, {a, b}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_fail("add", A.shape(), B.shape());
  Tensor out = A;
  out.requires_grad = false;
  out.add_(B);
  auto n = make_node(Primitive::add, {a, b}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_fail("sub", A.shape(), B.shape());
  Tensor out = A;
  out.requires_grad = false;
  out.add_(B, -1.0);
  auto n = make_node(Primitive::sub, {a, b}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_fail("elementwise_mul", A.shape(), B.shape());
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  auto n = make_node(Primitive::elementwise_mul, {a, b}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  const auto& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(A[i]);
  auto n = make_node(Primitive::tanh, {a}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  const auto& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(A[i]);
  auto n = make_node(Primitive::sigmoid, {a}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId a) {
  const auto& A = value(a);
  if (A.rank() != 1 || A.size() == 0) shape_fail("softmax", A.shape());
  Tensor out(A.shape());
  const double mx = *std::max_element(A.data().begin(), A.data().end());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(A[i] - mx);
    total += out[i];
  }
  for (auto& v : out.data()) v /= total;
  auto n = make_node(Primitive::softmax, {a}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::embedding_row_lookup(NodeId table, std::span<const int> ids) {
  const auto& T = value(table);
  if (T.rank() != 2) shape_fail("embedding_row_lookup", T.shape());
  const auto rows = T.shape()[0];
  const auto cols = T.shape()[1];
  Tensor out(Shape{ids.size(), cols});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= rows) {
      throw std::out_of_range("embedding_row_lookup: id " + std::to_string(ids[r]) +
                              " outside table of shape " + shape_string(T.shape()));
    }
    auto src = T.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  auto n = make_node(Primitive::embedding_row_lookup, {table}, std::move(out));
  n.ids.assign(ids.begin(), ids.end());
  return push(std::move(n));
}

NodeId Graph::select_row(NodeId table, int id) {
  const auto& T = value(table);
  if (T.rank() != 2) shape_fail("select_row", T.shape());
  if (id < 0 || static_cast<std::size_t>(id) >= T.shape()[0]) {
    throw std::out_of_range("select_row: row " + std::to_string(id) +
                            " outside table of shape " + shape_string(T.shape()));
  }
  auto src = T.row(static_cast<std::size_t>(id));
  Tensor out(Shape{T.shape()[1]}, std::vector<double>(src.begin(), src.end()));
  auto n = make_node(Primitive::select_row, {table}, std::move(out));
  n.ids = {id};
  return push(std::move(n));
}

NodeId Graph::sum_rows(NodeId m) {
  const auto& M = value(m);
  if (M.rank() != 2) shape_fail("sum_rows", M.shape());
  Tensor out(Shape{M.shape()[1]});
  for (std::size_t r = 0; r < M.shape()[0]; ++r) {
    auto row = M.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  auto n = make_node(Primitive::sum_rows, {m}, std::move(out));
  return push(std::move(n));
}

NodeId Graph::inner_product(NodeId a, NodeId b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_fail("inner_product", A.shape(), B.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * B[i];
  auto n = make_node(Primitive::inner_product, {a, b}, Tensor::scalar(s));
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double s) {
  Tensor out = value(a);
  out.requires_grad = false;
  out.scale_(s);
  auto n = make_node(Primitive::scale, {a}, std::move(out));
  n.scalar = s;
  return push(std::move(n));
}

NodeId Graph::cross_entropy(NodeId probs, int target, double floor) {
  const auto& P = value(probs);
  if (P.rank() != 1) shape_fail("cross_entropy", P.shape());
  if (target < 0 || static_cast<std::size_t>(target) >= P.size()) {
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) +
                            " outside distribution of shape " + shape_string(P.shape()));
  }
  const double p = std::max(P[static_cast<std::size_t>(target)], floor);
  auto n = make_node(Primitive::cross_entropy, {probs}, Tensor::scalar(-std::log(p)));
  n.ids = {target};
  n.scalar = floor;
  return push(std::move(n));
}

NodeId Graph::stack(std::span<const NodeId> parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  const auto& first = value(parts[0]).shape();
  Shape out_shape{parts.size()};
  out_shape.insert(out_shape.end(), first.begin(), first.end());
  std::vector<double> data;
  data.reserve(shape_size(out_shape));
  for (auto p : parts) {
    const auto& v = value(p);
    if (v.shape() != first) shape_fail("stack", first, v.shape());
    data.insert(data.end(), v.data().begin(), v.data().end());
  }
  auto n = make_node(Primitive::stack, {parts.begin(), parts.end()}, Tensor(out_shape, std::move(data)));
  return push(std::move(n));
}

NodeId Graph::scatter_add(NodeId v, std::span<const int> ids, std::size_t size) {
  const auto& V = value(v);
  if (V.rank() != 1 || V.size() != ids.size()) {
    shape_fail("scatter_add", V.shape(), Shape{ids.size()});
  }
  Tensor out(Shape{size});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= size) {
      throw std::out_of_range("scatter_add: id " + std::to_string(ids[t]) +
                              " outside output of length " + std::to_string(size));
    }
    out[static_cast<std::size_t>(ids[t])] += V[t];
  }
  auto n = make_node(Primitive::scatter_add, {v}, std::move(out));
  n.ids.assign(ids.begin(), ids.end());
  return push(std::move(n));
}

NodeId Graph::custom(std::vector<NodeId> inputs, Tensor value, CustomBackward backward) {
  auto n = make_node(Primitive::custom, std::move(inputs), std::move(value));
  n.custom_backward = std::move(backward);
  return push(std::move(n));
}

void Graph::backward(NodeId loss) {
  const auto& L = value(loss);
  if (L.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(L.shape()));
  }
  for (auto& n : nodes_) {
    if (!n.param) n.grad = Tensor();
  }
  if (!needs_grad(loss)) return;
  grad_buffer(loss)[0] += 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    backprop_node(i);
  }
}

void Graph::backprop_node(std::size_t index) {
  Node& n = nodes_[index];
  if (n.op == Primitive::leaf || !n.requires_grad || n.grad.empty()) return;
  const Tensor& g = n.grad;
  const Tensor& out = n.value;
  const auto in = [&](std::size_t k) { return n.inputs[k]; };
  const auto want = [&](std::size_t k) { return needs_grad(n.inputs[k]); };

  switch (n.op) {
    case Primitive::leaf:
      break;
    case Primitive::matvec: {
      const auto& M = value(in(0));
      const auto& X = value(in(1));
      if (want(0)) as_mat(grad_buffer(in(0))).noalias() += as_vec(g) * as_vec(X).transpose();
      if (want(1)) as_vec(grad_buffer(in(1))).noalias() += as_mat(M).transpose() * as_vec(g);
      break;
    }
    case Primitive::matvec_transposed: {
      const auto& M = value(in(0));
      const auto& X = value(in(1));
      if (want(0)) as_mat(grad_buffer(in(0))).noalias() += as_vec(X) * as_vec(g).transpose();
      if (want(1)) as_vec(grad_buffer(in(1))).noalias() += as_mat(M) * as_vec(g);
      break;
    }
    case Primitive::matmul: {
      const auto& A = value(in(0));
      const auto& B = value(in(1));
      if (want(0)) as_mat(grad_buffer(in(0))).noalias() += as_mat(g) * as_mat(B).transpose();
      if (want(1)) as_mat(grad_buffer(in(1))).noalias() += as_mat(A).transpose() * as_mat(g);
      break;
    }
    case Primitive::add:
      if (want(0)) grad_buffer(in(0)).add_(g);
      if (want(1)) grad_buffer(in(1)).add_(g);
      break;
    case Primitive::sub:
      if (want(0)) grad_buffer(in(0)).add_(g);
      if (want(1)) grad_buffer(in(1)).add_(g, -1.0);
      break;
    case Primitive::elementwise_mul: {
      const auto& A = value(in(0));
      const auto& B = value(in(1));
      if (want(0)) {
        auto& ga = grad_buffer(in(0));
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      }
      if (want(1)) {
        auto& gb = grad_buffer(in(1));
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      }
      break;
    }
    case Primitive::tanh: {
      auto& ga = grad_buffer(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - out[i] * out[i]);
      break;
    }
    case Primitive::sigmoid: {
      auto& ga = grad_buffer(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * out[i] * (1.0 - out[i]);
      break;
    }
    case Primitive::softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * out[i];
      auto& ga = grad_buffer(in(0));
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += out[i] * (g[i] - dot);
      break;
    }
    case Primitive::embedding_row_lookup: {
      auto& gt = grad_buffer(in(0));
      for (std::size_t r = 0; r < n.ids.size(); ++r) {
        auto dst = gt.row(static_cast<std::size_t>(n.ids[r]));
        auto src = g.row(r);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      }
      break;
    }
    case Primitive::select_row: {
      auto dst = grad_buffer(in(0)).row(static_cast<std::size_t>(n.ids[0]));
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += g[c];
      break;
    }
    case Primitive::sum_rows: {
      auto& gm = grad_buffer(in(0));
      for (std::size_t r = 0; r < gm.shape()[0]; ++r) {
        auto dst = gm.row(r);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += g[c];
      }
      break;
    }
    case Primitive::inner_product: {
      const double s = g[0];
      const auto& A = value(in(0));
      const auto& B = value(in(1));
      if (want(0)) grad_buffer(in(0)).add_(B, s);
      if (want(1)) grad_buffer(in(1)).add_(A, s);
      break;
    }
    case Primitive::scale:
      grad_buffer(in(0)).add_(g, n.scalar);
      break;
    case Primitive::cross_entropy: {
      const auto& P = value(in(0));
      const auto t = static_cast<std::size_t>(n.ids[0]);
      if (P[t] > n.scalar) grad_buffer(in(0))[t] += -g[0] / P[t];
      break;
    }
    case Primitive::stack: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const auto len = value(in(k)).size();
        if (want(k)) {
          auto& gk = grad_buffer(in(k));
          for (std::size_t i = 0; i < len; ++i) gk[i] += g[offset + i];
        }
        offset += len;
      }
      break;
    }
    case Primitive::scatter_add: {
      auto& gv = grad_buffer(in(0));
      for (std::size_t t = 0; t < n.ids.size(); ++t) gv[t] += g[static_cast<std::size_t>(n.ids[t])];
      break;
    }
    case Primitive::custom: {
      std::vector<const Tensor*> ins;
      std::vector<Tensor*> gins;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        ins.push_back(&value(in(k)));
        gins.push_back(want(k) ? &grad_buffer(in(k)) : nullptr);
      }
      n.custom_backward(ins, out, g, gins);
      break;
    }
  }
}

}  // namespace hmn::diff
