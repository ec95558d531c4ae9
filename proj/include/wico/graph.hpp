#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wico/tensor.hpp"

namespace wico {

using NodeId = std::size_t;

// Reverse-mode tape. Nodes are appended in topological order; leaves hold
// values directly and may be re-assigned between recompute() calls, which is
// what finite-difference checking and gradient descent rely on.
class Graph {
public:
    using ForwardFn = std::function<Tensor(const std::vector<const Tensor*>&)>;
    // Accumulates input gradients given (inputs, output, output gradient).
    using BackwardFn = std::function<void(const std::vector<const Tensor*>&,
                                          const Tensor&, const Tensor&,
                                          std::vector<Tensor*>&)>;

    NodeId input(Tensor value, bool trainable = false);
    NodeId param(Tensor value) { return input(std::move(value), true); }

    NodeId matmul(NodeId a, NodeId b);
    NodeId softmax_rows(NodeId a);
    NodeId layer_norm(NodeId a, NodeId gain, NodeId bias, double eps);
    NodeId interp_axis0(NodeId a, std::size_t target);
    NodeId reshape(NodeId a, std::vector<std::size_t> new_shape);
    NodeId transpose2d(NodeId a);
    NodeId gelu(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);
    NodeId add_rowvec(NodeId a, NodeId b);
    NodeId sum(NodeId a);
    NodeId gather(NodeId a, std::vector<std::size_t> index_map,
                  std::vector<std::size_t> out_shape);
    NodeId slice_cols(NodeId a, std::size_t start, std::size_t count);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    // sum((a-b)^2)/N; convenience composition.
    NodeId mse(NodeId a, NodeId b);

    NodeId custom(std::vector<NodeId> inputs, ForwardFn fwd, BackwardFn bwd,
                  std::string name);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    // Leaf values may be mutated in place; recompute() refreshes the rest.
    Tensor& leaf_value(NodeId id);
    bool is_leaf(NodeId id) const { return !nodes_[id].forward; }
    std::size_t node_count() const { return nodes_.size(); }
    std::vector<NodeId> trainable() const;

    void recompute();
    // root must be scalar; seeds its gradient with 1.
    void backward(NodeId root);

private:
    struct Node {
        std::vector<NodeId> inputs;
        Tensor value;
        Tensor grad;
        bool trainable = false;
        ForwardFn forward;  // empty for leaves
        BackwardFn backward;
        std::string name;
    };

    NodeId emit(std::vector<NodeId> inputs, ForwardFn fwd, BackwardFn bwd,
                std::string name);
    std::vector<const Tensor*> input_values(const Node& n) const;

    std::vector<Node> nodes_;
};

// Compares analytic gradients of every trainable leaf against central
// differences of the scalar loss; returns the worst relative error with
// denominator max(|analytic|, |numeric|, 1e-8). Requires a float64 graph.
double grad_check(Graph& g, NodeId loss, double eps = 1e-5);

}  // namespace wico
