#include "imcgae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "imcgae/rng.hpp"

namespace imcgae {

std::vector<RawRating> synth_ratings(const SynthConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_items < 1) throw std::invalid_argument("synth: empty node set");
  if (!(cfg.density > 0.0 && cfg.density <= 1.0))
    throw std::invalid_argument("synth: density must be in (0, 1]");
  if (cfg.n_levels < 1) throw std::invalid_argument("synth: need at least one level");

  rng::Engine g(cfg.seed);
  const std::int32_t U = cfg.n_users;
  const std::int32_t I = cfg.n_items;

  std::vector<double> user_bias(U), item_bias(I);
  std::vector<std::vector<double>> uf(U, std::vector<double>(cfg.rank));
  std::vector<std::vector<double>> vf(I, std::vector<double>(cfg.rank));
  for (auto& b : user_bias) b = 0.7 * rng::normal(g);
  for (auto& b : item_bias) b = 0.7 * rng::normal(g);
  for (auto& f : uf)
    for (auto& v : f) v = rng::normal(g);
  for (auto& f : vf)
    for (auto& v : f) v = rng::normal(g);

  const std::uint64_t cells = static_cast<std::uint64_t>(U) * static_cast<std::uint64_t>(I);
  const std::uint64_t target =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(cfg.density * cells)));

  std::unordered_set<std::uint64_t> picked;
  picked.reserve(target * 2);
  std::vector<RawRating> out;
  out.reserve(target);
  const double mid = (1.0 + cfg.n_levels) / 2.0;
  while (out.size() < target) {
    const std::uint64_t cell = rng::bounded(g, cells);
    if (!picked.insert(cell).second) continue;
    const std::int32_t u = static_cast<std::int32_t>(cell / I);
    const std::int32_t i = static_cast<std::int32_t>(cell % I);
    double score = mid + user_bias[u] + item_bias[i] + cfg.noise * rng::normal(g);
    for (int k = 0; k < cfg.rank; ++k) score += 0.45 * uf[u][k] * vf[i][k];
    const double rating = std::clamp(std::round(score), 1.0, static_cast<double>(cfg.n_levels));
    out.push_back({"u" + std::to_string(u), "i" + std::to_string(i), rating, {}});
  }
  return out;
}

}  // namespace imcgae
