#pragma once

#include <cstdint>
#include <vector>

#include "imcgae/dataset.hpp"

namespace imcgae {

/// Latent-factor rating simulator in MovieLens form: user/item biases plus
/// a low-rank interaction, noised and rounded onto a 1..n_levels scale.
/// Useful for exercising the full pipeline when no real dataset is mounted.
struct SynthConfig {
  std::int32_t n_users = 300;
  std::int32_t n_items = 400;
  double density = 0.05;
  int n_levels = 5;
  int rank = 4;
  double noise = 0.6;
  std::uint64_t seed = 0;
};

std::vector<RawRating> synth_ratings(const SynthConfig& cfg);

}  // namespace imcgae
