#include "imcgae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imcgae/rng.hpp"

namespace imcgae {

RatingGraph build_graph(const RatingDataset& train) {
  return build_graph(train, train.n_users, train.n_items);
}

RatingGraph build_graph(const RatingDataset& train, std::int32_t n_users, std::int32_t n_items) {
  if (train.triples.empty()) throw std::invalid_argument("build_graph: empty training set");
  if (n_users < train.n_users || n_items < train.n_items)
    throw std::invalid_argument("build_graph: node space smaller than the dataset");

  RatingGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  const std::size_t T = train.levels.size();
  g.levels.resize(T);
  g.degree.assign(T, std::vector<std::int32_t>(g.node_count(), 0));

  for (const auto& t : train.triples) {
    g.levels[t.level].user.push_back(t.user);
    g.levels[t.level].item.push_back(t.item);
    ++g.degree[t.level][t.user];
    ++g.degree[t.level][n_users + t.item];
  }
  for (std::size_t t = 0; t < T; ++t) {
    auto& e = g.levels[t];
    e.coeff.reserve(e.user.size());
    for (std::size_t k = 0; k < e.user.size(); ++k) {
      const double du = g.degree[t][e.user[k]];
      const double di = g.degree[t][n_users + e.item[k]];
      e.coeff.push_back(1.0 / std::sqrt(du * di));
    }
  }
  return g;
}

DropoutPlan sample_dropout(double p0, double theta, int n_layers, std::int32_t n_nodes,
                           std::uint64_t seed) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw std::invalid_argument("sample_dropout: p0 must be in [0, 1)");
  if (theta < 0.0) throw std::invalid_argument("sample_dropout: theta must be >= 0");
  if (n_layers < 1) throw std::invalid_argument("sample_dropout: need at least one layer");

  DropoutPlan plan;
  plan.p0 = p0;
  plan.theta = theta;
  plan.layers.resize(n_layers);
  rng::Engine g(seed);
  for (int l = 0; l < n_layers; ++l) {
    auto& m = plan.layers[l];
    m.p = std::max(p0 - l * theta, 0.0);
    m.rescale = 1.0 / (1.0 - m.p);
    m.keep.assign(n_nodes, 1);
    if (m.p > 0.0) {
      for (std::int32_t v = 0; v < n_nodes; ++v) m.keep[v] = rng::unit(g) >= m.p ? 1 : 0;
    }
  }
  return plan;
}

NumArray propagate(const NumArray& features, const RatingGraph& graph, int level,
                   const LayerMask* mask) {
  if (features.rows != graph.node_count())
    throw std::invalid_argument("propagate: feature rows must equal node count");
  if (level < 0 || static_cast<std::size_t>(level) >= graph.level_count())
    throw std::invalid_argument("propagate: level out of range");
  if (mask && mask->keep.size() != static_cast<std::size_t>(graph.node_count()))
    throw std::invalid_argument("propagate: mask length must equal node count");

  NumArray out(features.rows, features.cols);
  const auto& e = graph.levels[level];
  const int d = features.cols;
  const double rescale = mask ? mask->rescale : 1.0;
  for (std::size_t k = 0; k < e.user.size(); ++k) {
    const std::int32_t u = e.user[k];
    const std::int32_t v = graph.n_users + e.item[k];
    const double c = e.coeff[k];
    if (!mask || mask->keep[v]) axpy(out.row(u), c * rescale, features.row(v), d);
    if (!mask || mask->keep[u]) axpy(out.row(v), c * rescale, features.row(u), d);
  }
  return out;
}

}  // namespace imcgae
