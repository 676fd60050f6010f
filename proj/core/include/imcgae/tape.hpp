#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "imcgae/array.hpp"
#include "imcgae/graph.hpp"

namespace imcgae {

using ValueId = std::int32_t;

/// Recorded forward computation over NumArrays with analytic backward
/// rules. Nodes are appended in evaluation order, so one reverse sweep is
/// a valid topological traversal. Double precision throughout.
class Tape {
 public:
  /// Registers a leaf. Parameters are the leaves whose gradients the
  /// caller reads back after backward().
  ValueId leaf(NumArray value, bool parameter = false);

  /// Embedding lookup: out[k] = table[indices[k]]. Backward scatter-adds,
  /// so repeated indices accumulate.
  ValueId gather(ValueId table, std::vector<std::int32_t> indices);

  /// Columns of the parts stacked left to right; zero-column parts are legal.
  ValueId concat_cols(const std::vector<ValueId>& parts);

  /// Masked symmetric-normalized propagation of x through one rating level.
  ValueId spmm(const RatingGraph& graph, int level, const LayerMask* mask, ValueId x);

  ValueId relu(ValueId x);
  ValueId tanh_map(ValueId x);

  /// a (m,k) times b (n,k) transposed -> (m,n). Rows of both operands are
  /// contiguous, which is why the decoder and encoder transforms use this
  /// orientation.
  ValueId matmul_nt(ValueId a, ValueId b);

  /// Elementwise sum of alpha_k * x_k over same-shaped terms.
  ValueId scale_add(std::vector<std::pair<double, ValueId>> terms);

  /// out[p] = dot(a.row(pairs[p].first), b.row(pairs[p].second)), shape (P,1).
  ValueId pair_dot(ValueId a, ValueId b, std::vector<std::pair<std::int32_t, std::int32_t>> pairs);

  /// Row-wise stabilized softmax.
  ValueId softmax_rows(ValueId logits);

  /// Mean over rows of -log probs[row, target[row]], a scalar.
  ValueId cross_entropy_rows(ValueId probs, std::vector<std::int32_t> targets);

  /// Row-wise softmax-weighted mean of `values` computed straight from the
  /// logits: out[p] = sum_t softmax(logits[p])_t * values[t], shape (P,1).
  /// All-equal logits give exactly mean(values).
  ValueId expected_value_rows(ValueId logits, std::vector<double> values);

  /// Row-wise cosine similarity clamped to [-1, 1]; rows with a zero vector
  /// on either side yield 0 with zero gradient. Shape (N,1).
  ValueId cosine_rows(ValueId a, ValueId b);

  /// Sum of all entries, a scalar.
  ValueId sum_all(ValueId x);

  /// Frozen-weight reduction sum(x * weights), a scalar. Weights get no
  /// gradient; used by the gradient-check harness to scalarize outputs.
  ValueId dot_const(ValueId x, NumArray weights);

  /// Reverse sweep from a scalar loss; fills gradients for every node that
  /// influences it. Throws if loss is not 1x1.
  void backward(ValueId loss);

  const NumArray& value(ValueId id) const { return nodes_[id].value; }
  const NumArray& grad(ValueId id) const { return nodes_[id].grad; }
  bool is_parameter(ValueId id) const { return nodes_[id].parameter; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    NumArray value;
    NumArray grad;
    bool parameter = false;
    std::function<void(Tape&)> backprop;  // null for leaves
  };

  ValueId push(NumArray value, std::function<void(Tape&)> backprop);
  NumArray& grad_mut(ValueId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace imcgae
