#pragma once

#include <cstdint>
#include <vector>

#include "imcgae/array.hpp"
#include "imcgae/dataset.hpp"

namespace imcgae {

/// Edges of one rating level, parallel arrays. `item` holds the raw item
/// index; its unified node id is n_users + item.
struct LevelEdges {
  std::vector<std::int32_t> user;
  std::vector<std::int32_t> item;
  std::vector<double> coeff;  // 1 / sqrt(|N_t(u)| * |N_t(i)|), symmetric
};

/// Per-rating-level bipartite adjacency over a unified node index space:
/// users occupy [0, n_users), items [n_users, n_users + n_items).
struct RatingGraph {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  std::vector<LevelEdges> levels;
  std::vector<std::vector<std::int32_t>> degree;  // [level][unified node]

  std::int32_t node_count() const { return n_users + n_items; }
  std::size_t level_count() const { return levels.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.user.size();
    return n;
  }
};

/// Builds the per-level subgraphs with symmetric-normalization coefficients.
RatingGraph build_graph(const RatingDataset& train);

/// Same edges, inflated node space (for evaluation with unseen nodes).
RatingGraph build_graph(const RatingDataset& train, std::int32_t n_users, std::int32_t n_items);

/// Node keep-mask for one message-passing layer, shared across rating
/// subgraphs. Kept senders are rescaled by 1/(1-p) so masked propagation
/// matches the deterministic one in expectation.
struct LayerMask {
  double p = 0.0;
  double rescale = 1.0;
  std::vector<std::uint8_t> keep;
};

struct DropoutPlan {
  double p0 = 0.0;
  double theta = 0.0;
  std::vector<LayerMask> layers;  // layer l in [1..L] uses layers[l-1]

  std::vector<double> schedule() const {
    std::vector<double> p;
    p.reserve(layers.size());
    for (const auto& m : layers) p.push_back(m.p);
    return p;
  }
};

/// Layer l in [1..L] drops nodes with probability p_l = max(p0-(l-1)*theta, 0).
/// Masks are Bernoulli per (layer, node), deterministic per seed.
DropoutPlan sample_dropout(double p0, double theta, int n_layers, std::int32_t n_nodes,
                           std::uint64_t seed);

/// out[i] = sum over kept neighbors j of c_t(i,j) * rescale * x[j].
/// Dropped nodes send nothing but still receive; isolated nodes get zeros.
NumArray propagate(const NumArray& features, const RatingGraph& graph, int level,
                   const LayerMask* mask = nullptr);

}  // namespace imcgae
