#include "imcgae/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imcgae {

namespace {

void check_same_shape(const NumArray& a, const NumArray& b, const char* op) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

ValueId Tape::push(NumArray value, std::function<void(Tape&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::leaf(NumArray value, bool parameter) {
  const ValueId id = push(std::move(value), nullptr);
  nodes_[id].parameter = parameter;
  return id;
}

ValueId Tape::gather(ValueId table, std::vector<std::int32_t> indices) {
  const NumArray& t = nodes_[table].value;
  for (const auto k : indices)
    if (k < 0 || k >= t.rows) throw std::out_of_range("gather: index out of range");

  NumArray out(static_cast<int>(indices.size()), t.cols);
  for (std::size_t r = 0; r < indices.size(); ++r)
    std::copy_n(t.row(indices[r]), t.cols, out.row(static_cast<int>(r)));

  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [table, id, idx = std::move(indices)](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    NumArray& gt = tp.grad_mut(table);
    for (std::size_t r = 0; r < idx.size(); ++r)
      axpy(gt.row(idx[r]), 1.0, g.row(static_cast<int>(r)), g.cols);
  };
  return id;
}

ValueId Tape::concat_cols(const std::vector<ValueId>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int rows = nodes_[parts[0]].value.rows;
  int cols = 0;
  for (const auto p : parts) {
    if (nodes_[p].value.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += nodes_[p].value.cols;
  }
  NumArray out(rows, cols);
  int off = 0;
  for (const auto p : parts) {
    const NumArray& x = nodes_[p].value;
    for (int r = 0; r < rows; ++r) std::copy_n(x.row(r), x.cols, out.row(r) + off);
    off += x.cols;
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, ps = parts](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    int off = 0;
    for (const auto p : ps) {
      NumArray& gp = tp.grad_mut(p);
      for (int r = 0; r < g.rows; ++r) axpy(gp.row(r), 1.0, g.row(r) + off, gp.cols);
      off += gp.cols;
    }
  };
  return id;
}

ValueId Tape::spmm(const RatingGraph& graph, int level, const LayerMask* mask, ValueId x) {
  NumArray out = propagate(nodes_[x].value, graph, level, mask);
  const ValueId id = push(std::move(out), nullptr);
  // d/dx[j] = keep[j] * rescale * sum_{i in N(j)} c(i,j) * gout[i]: propagate
  // the upstream gradient unmasked, then apply the sender scaling per row.
  nodes_[id].backprop = [id, x, &graph, level, mask](Tape& tp) {
    NumArray back = propagate(tp.nodes_[id].grad, graph, level, nullptr);
    NumArray& gx = tp.grad_mut(x);
    for (int r = 0; r < back.rows; ++r) {
      const double scale = mask ? (mask->keep[r] ? mask->rescale : 0.0) : 1.0;
      if (scale != 0.0) axpy(gx.row(r), scale, back.row(r), back.cols);
    }
  };
  return id;
}

ValueId Tape::relu(ValueId x) {
  const NumArray& in = nodes_[x].value;
  NumArray out = in;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, x](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& in = tp.nodes_[x].value;
    NumArray& gx = tp.grad_mut(x);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (in.data[k] > 0.0) gx.data[k] += g.data[k];
  };
  return id;
}

ValueId Tape::tanh_map(ValueId x) {
  NumArray out = nodes_[x].value;
  for (auto& v : out.data) v = std::tanh(v);
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, x](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& y = tp.nodes_[id].value;
    NumArray& gx = tp.grad_mut(x);
    for (std::size_t k = 0; k < g.size(); ++k)
      gx.data[k] += g.data[k] * (1.0 - y.data[k] * y.data[k]);
  };
  return id;
}

ValueId Tape::matmul_nt(ValueId a, ValueId b) {
  const NumArray& A = nodes_[a].value;
  const NumArray& B = nodes_[b].value;
  if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  NumArray out(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double* oi = out.row(i);
    for (int j = 0; j < B.rows; ++j) oi[j] = dot(ai, B.row(j), A.cols);
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, a, b](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& A = tp.nodes_[a].value;
    const NumArray& B = tp.nodes_[b].value;
    NumArray& ga = tp.grad_mut(a);
    NumArray& gb = tp.grad_mut(b);
    for (int i = 0; i < g.rows; ++i) {
      const double* gi = g.row(i);
      for (int j = 0; j < g.cols; ++j) {
        if (gi[j] == 0.0) continue;
        axpy(ga.row(i), gi[j], B.row(j), B.cols);
        axpy(gb.row(j), gi[j], A.row(i), A.cols);
      }
    }
  };
  return id;
}

ValueId Tape::scale_add(std::vector<std::pair<double, ValueId>> terms) {
  if (terms.empty()) throw std::invalid_argument("scale_add: no terms");
  NumArray out = NumArray::zeros_like(nodes_[terms[0].second].value);
  for (const auto& [alpha, t] : terms) {
    check_same_shape(out, nodes_[t].value, "scale_add");
    axpy(out.data.data(), alpha, nodes_[t].value.data.data(), static_cast<int>(out.size()));
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, ts = std::move(terms)](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    for (const auto& [alpha, t] : ts)
      axpy(tp.grad_mut(t).data.data(), alpha, g.data.data(), static_cast<int>(g.size()));
  };
  return id;
}

ValueId Tape::pair_dot(ValueId a, ValueId b,
                       std::vector<std::pair<std::int32_t, std::int32_t>> pairs) {
  const NumArray& A = nodes_[a].value;
  const NumArray& B = nodes_[b].value;
  if (A.cols != B.cols) throw std::invalid_argument("pair_dot: column mismatch");
  NumArray out(static_cast<int>(pairs.size()), 1);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    if (i < 0 || i >= A.rows || j < 0 || j >= B.rows)
      throw std::out_of_range("pair_dot: pair index out of range");
    out.data[p] = dot(A.row(i), B.row(j), A.cols);
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, a, b, ps = std::move(pairs)](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& A = tp.nodes_[a].value;
    const NumArray& B = tp.nodes_[b].value;
    NumArray& ga = tp.grad_mut(a);
    NumArray& gb = tp.grad_mut(b);
    for (std::size_t p = 0; p < ps.size(); ++p) {
      const double gp = g.data[p];
      if (gp == 0.0) continue;
      const auto [i, j] = ps[p];
      axpy(ga.row(i), gp, B.row(j), B.cols);
      axpy(gb.row(j), gp, A.row(i), A.cols);
    }
  };
  return id;
}

ValueId Tape::softmax_rows(ValueId logits) {
  const NumArray& x = nodes_[logits].value;
  if (x.cols < 1) throw std::invalid_argument("softmax_rows: need at least one column");
  NumArray out(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* yr = out.row(r);
    double m = xr[0];
    for (int c = 1; c < x.cols; ++c) m = std::max(m, xr[c]);
    double s = 0.0;
    for (int c = 0; c < x.cols; ++c) {
      yr[c] = std::exp(xr[c] - m);
      s += yr[c];
    }
    for (int c = 0; c < x.cols; ++c) yr[c] /= s;
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, logits](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& y = tp.nodes_[id].value;
    NumArray& gx = tp.grad_mut(logits);
    for (int r = 0; r < g.rows; ++r) {
      const double* gr = g.row(r);
      const double* yr = y.row(r);
      const double inner = dot(gr, yr, g.cols);
      double* gxr = gx.row(r);
      for (int c = 0; c < g.cols; ++c) gxr[c] += yr[c] * (gr[c] - inner);
    }
  };
  return id;
}

ValueId Tape::cross_entropy_rows(ValueId probs, std::vector<std::int32_t> targets) {
  const NumArray& p = nodes_[probs].value;
  if (p.rows == 0) throw std::invalid_argument("cross_entropy_rows: empty batch");
  if (targets.size() != static_cast<std::size_t>(p.rows))
    throw std::invalid_argument("cross_entropy_rows: target count mismatch");
  double loss = 0.0;
  for (int r = 0; r < p.rows; ++r) {
    const std::int32_t t = targets[r];
    if (t < 0 || t >= p.cols) throw std::out_of_range("cross_entropy_rows: target out of range");
    loss -= std::log(p.at(r, t));
  }
  loss /= static_cast<double>(p.rows);
  const ValueId id = push(NumArray::scalar(loss), nullptr);
  nodes_[id].backprop = [id, probs, ts = std::move(targets)](Tape& tp) {
    const double g = tp.nodes_[id].grad.data[0];
    const NumArray& p = tp.nodes_[probs].value;
    NumArray& gp = tp.grad_mut(probs);
    const double inv_n = 1.0 / static_cast<double>(p.rows);
    for (int r = 0; r < p.rows; ++r) gp.at(r, ts[r]) -= g * inv_n / p.at(r, ts[r]);
  };
  return id;
}

ValueId Tape::expected_value_rows(ValueId logits, std::vector<double> values) {
  const NumArray& x = nodes_[logits].value;
  if (values.size() != static_cast<std::size_t>(x.cols))
    throw std::invalid_argument("expected_value_rows: value count mismatch");
  NumArray out(x.rows, 1);
  // Ratio of stabilized weights rather than a dot with normalized
  // probabilities: equal logits then give exactly mean(values).
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double m = xr[0];
    for (int c = 1; c < x.cols; ++c) m = std::max(m, xr[c]);
    double den = 0.0, num = 0.0;
    for (int c = 0; c < x.cols; ++c) {
      const double w = std::exp(xr[c] - m);
      den += w;
      num += w * values[c];
    }
    out.data[r] = num / den;
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, logits, vs = std::move(values)](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& x = tp.nodes_[logits].value;
    const NumArray& y = tp.nodes_[id].value;
    NumArray& gx = tp.grad_mut(logits);
    for (int r = 0; r < x.rows; ++r) {
      const double gr = g.data[r];
      if (gr == 0.0) continue;
      const double* xr = x.row(r);
      double m = xr[0];
      for (int c = 1; c < x.cols; ++c) m = std::max(m, xr[c]);
      double den = 0.0;
      for (int c = 0; c < x.cols; ++c) den += std::exp(xr[c] - m);
      double* gxr = gx.row(r);
      for (int c = 0; c < x.cols; ++c) {
        const double s = std::exp(xr[c] - m) / den;
        gxr[c] += gr * s * (vs[c] - y.data[r]);
      }
    }
  };
  return id;
}

ValueId Tape::cosine_rows(ValueId a, ValueId b) {
  const NumArray& A = nodes_[a].value;
  const NumArray& B = nodes_[b].value;
  check_same_shape(A, B, "cosine_rows");
  NumArray out(A.rows, 1);
  for (int r = 0; r < A.rows; ++r) {
    const double daa = dot(A.row(r), A.row(r), A.cols);
    const double dbb = dot(B.row(r), B.row(r), B.cols);
    if (daa == 0.0 || dbb == 0.0) {
      out.data[r] = 0.0;  // cos(0, v) := 0
    } else {
      const double c = dot(A.row(r), B.row(r), A.cols) / (std::sqrt(daa) * std::sqrt(dbb));
      out.data[r] = std::clamp(c, -1.0, 1.0);
    }
  }
  const ValueId id = push(std::move(out), nullptr);
  nodes_[id].backprop = [id, a, b](Tape& tp) {
    const NumArray& g = tp.nodes_[id].grad;
    const NumArray& A = tp.nodes_[a].value;
    const NumArray& B = tp.nodes_[b].value;
    NumArray& ga = tp.grad_mut(a);
    NumArray& gb = tp.grad_mut(b);
    for (int r = 0; r < A.rows; ++r) {
      const double gr = g.data[r];
      if (gr == 0.0) continue;
      const double daa = dot(A.row(r), A.row(r), A.cols);
      const double dbb = dot(B.row(r), B.row(r), B.cols);
      if (daa == 0.0 || dbb == 0.0) continue;  // zero-vector rows: zero gradient
      const double na = std::sqrt(daa), nb = std::sqrt(dbb);
      const double c = dot(A.row(r), B.row(r), A.cols) / (na * nb);
      double* gar = ga.row(r);
      double* gbr = gb.row(r);
      const double* ar = A.row(r);
      const double* br = B.row(r);
      for (int k = 0; k < A.cols; ++k) {
        gar[k] += gr * (br[k] / (na * nb) - c * ar[k] / daa);
        gbr[k] += gr * (ar[k] / (na * nb) - c * br[k] / dbb);
      }
    }
  };
  return id;
}

ValueId Tape::sum_all(ValueId x) {
  const NumArray& in = nodes_[x].value;
  double s = 0.0;
  for (const double v : in.data) s += v;
  const ValueId id = push(NumArray::scalar(s), nullptr);
  nodes_[id].backprop = [id, x](Tape& tp) {
    const double g = tp.nodes_[id].grad.data[0];
    NumArray& gx = tp.grad_mut(x);
    for (auto& v : gx.data) v += g;
  };
  return id;
}

ValueId Tape::dot_const(ValueId x, NumArray weights) {
  const NumArray& in = nodes_[x].value;
  check_same_shape(in, weights, "dot_const");
  const double s = dot(in.data.data(), weights.data.data(), static_cast<int>(in.size()));
  const ValueId id = push(NumArray::scalar(s), nullptr);
  nodes_[id].backprop = [id, x, w = std::move(weights)](Tape& tp) {
    const double g = tp.nodes_[id].grad.data[0];
    NumArray& gx = tp.grad_mut(x);
    axpy(gx.data.data(), g, w.data.data(), static_cast<int>(gx.size()));
  };
  return id;
}

void Tape::backward(ValueId loss) {
  if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
    throw std::out_of_range("backward: unknown node");
  if (!nodes_[loss].value.is_scalar())
    throw std::invalid_argument("backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad = NumArray::zeros_like(n.value);
  nodes_[loss].grad.data[0] = 1.0;
  for (ValueId id = loss; id >= 0; --id)
    if (nodes_[id].backprop) nodes_[id].backprop(*this);
}

}  // namespace imcgae
