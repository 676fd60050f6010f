#pragma once

#include <optional>
#include <span>
#include <vector>

#include "imcgae/dataset.hpp"

namespace imcgae {

/// Density plus the Pearson correlation of each local-graph heuristic with
/// the true ratings, computed leave-one-out over the training triples.
/// A heuristic undefined on a pair is excluded from its correlation;
/// coverage reports the defined fraction.
struct HeuristicReport {
  double density = 0.0;
  std::optional<double> pcc_aur;
  std::optional<double> pcc_air;
  std::optional<double> pcc_mcr;
  std::optional<double> pcc_scf;
  double coverage_aur = 0.0;
  double coverage_air = 0.0;
  double coverage_mcr = 0.0;
  double coverage_scf = 0.0;
  std::size_t pair_count = 0;
};

/// Mean rating value of a user; empty if the user has no ratings.
std::optional<double> aur(const RatingDataset& train, std::int32_t user);

/// Mean rating value of an item; empty if the item has no ratings.
std::optional<double> air(const RatingDataset& train, std::int32_t item);

/// Most common rating value in the multiset union of the user's and the
/// item's ratings; ties break toward the lower value.
std::optional<double> mcr(const RatingDataset& train, std::int32_t user, std::int32_t item);

/// Rating the guider gave to the item, where the guider is the user (!= u)
/// rating the item with the largest co-interaction overlap |N(u) & N(v)|;
/// ties break toward the smaller user index.
std::optional<double> scf(const RatingDataset& train, std::int32_t user, std::int32_t item);

/// Sample Pearson correlation; empty on length mismatch, length < 2, or
/// zero variance in either sequence.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

/// Leave-one-out heuristic analysis over every training triple.
HeuristicReport analyze(const RatingDataset& train);

}  // namespace imcgae
