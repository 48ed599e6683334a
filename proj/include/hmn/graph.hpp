#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hmn/params.hpp"
#include "hmn/tensor.hpp"

namespace hmn::diff {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Primitive : std::uint8_t {
  leaf,
  matvec,             // M x
  matvec_transposed,  // M^T x
  matmul,
  add,
  sub,
  elementwise_mul,
  tanh,
  sigmoid,
  softmax,
  embedding_row_lookup,
  select_row,
  sum_rows,
  inner_product,
  scale,
  cross_entropy,
  stack,
  scatter_add,
  custom,
};

const char* primitive_name(Primitive p);

/// Backward rule for Graph::custom. `input_grads[i]` is null when input i
/// does not require a gradient; otherwise accumulate into it.
using CustomBackward = std::function<void(std::span<const Tensor* const> inputs,
                                          const Tensor& output, const Tensor& output_grad,
                                          std::span<Tensor* const> input_grads)>;

/// Eager tape. Every primitive computes its value on insertion; backward()
/// walks the tape once in reverse insertion order.
///
/// Leaves created with param() alias a Parameter: their gradient is
/// accumulated straight into Parameter::grad, so several graphs evaluated
/// back to back sum their contributions (this is how minibatches accumulate).
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId constant(Tensor value);
  NodeId variable(Tensor value);
  NodeId param(Parameter& p);

  NodeId matvec(NodeId m, NodeId x);
  NodeId matvec_transposed(NodeId m, NodeId x);
  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId softmax(NodeId a);
  /// Rows `ids` of a matrix, as a |ids| x cols matrix.
  NodeId embedding_row_lookup(NodeId table, std::span<const int> ids);
  /// Row `id` of a matrix, as a vector.
  NodeId select_row(NodeId table, int id);
  NodeId sum_rows(NodeId m);
  NodeId inner_product(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  /// -log(max(p[target], floor)) for a probability vector p.
  NodeId cross_entropy(NodeId probs, int target, double floor = 1e-12);
  /// Equal-shape inputs stacked along a new leading axis.
  NodeId stack(std::span<const NodeId> parts);
  /// out[ids[t]] += v[t]; output length `size`.
  NodeId scatter_add(NodeId v, std::span<const int> ids, std::size_t size);
  NodeId custom(std::vector<NodeId> inputs, Tensor value, CustomBackward backward);

  const Tensor& value(NodeId id) const;
  /// Gradient of the last backward() target with respect to the node; zeros
  /// when the node did not participate.
  Tensor grad(NodeId id) const;
  Primitive primitive(NodeId id) const { return nodes_.at(id.index).op; }
  std::span<const NodeId> inputs(NodeId id) const { return nodes_.at(id.index).inputs; }
  std::size_t size() const { return nodes_.size(); }

  void backward(NodeId loss);

 private:
  struct Node {
    Primitive op = Primitive::leaf;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    std::vector<int> ids;
    double scalar = 0.0;
    CustomBackward custom_backward;
  };

  static Node make_node(Primitive op, std::vector<NodeId> inputs, Tensor value);
  NodeId push(Node node);
  const Node& node(NodeId id) const;
  Tensor& grad_buffer(NodeId id);
  bool needs_grad(NodeId id) const { return nodes_[id.index].requires_grad; }
  void backprop_node(std::size_t index);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, NodeId> bound_params_;
};

}  // namespace hmn::diff
