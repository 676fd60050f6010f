#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace imcgae {

/// One line of a rating log, tokens kept verbatim.
struct RawRating {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;  // parsed, never used by the model
};

struct RatingTriple {
  std::int32_t user = 0;   // in [0, n_users)
  std::int32_t item = 0;   // in [0, n_items)
  std::int32_t level = 0;  // index into RatingDataset::levels
};

/// Deduplicated rating triples over dense internal ids plus the sorted
/// list of distinct rating values (one bipartite subgraph per value).
struct RatingDataset {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  std::vector<RatingTriple> triples;
  std::vector<double> levels;  // strictly ascending
  std::vector<std::string> user_tokens;  // index -> external token
  std::vector<std::string> item_tokens;
  std::unordered_map<std::string, std::int32_t> user_index;  // token -> index
  std::unordered_map<std::string, std::int32_t> item_index;

  std::size_t level_count() const { return levels.size(); }
  double value_of(std::int32_t level_idx) const { return levels[level_idx]; }
  double rating_of(const RatingTriple& t) const { return levels[t.level]; }
};

/// Test triples remapped through the training id maps. Nodes absent from
/// training get fresh indices >= the training counts and are flagged.
/// `dataset.levels` are the training levels; `true_ratings` keeps the raw
/// test values for RMSE even when they were clamped to a training level.
struct AlignedTest {
  RatingDataset dataset;
  std::vector<double> true_ratings;        // parallel to dataset.triples
  std::vector<std::uint8_t> user_unseen;   // per user index in dataset
  std::vector<std::uint8_t> item_unseen;   // per item index in dataset
  std::int32_t train_users = 0;
  std::int32_t train_items = 0;

  std::int32_t unseen_user_count() const { return dataset.n_users - train_users; }
  std::int32_t unseen_item_count() const { return dataset.n_items - train_items; }
};

struct SplitSpec {
  enum class Kind { CanonicalFiles, RandomHoldout, SparsitySubsample, NodeHoldout };
  Kind kind = Kind::CanonicalFiles;
  double fraction = 1.0;  // in (0, 1]
  std::uint64_t seed = 0;
};

/// Parses delimiter-separated rating lines: user item rating [timestamp].
/// Throws std::runtime_error naming the line on malformed input.
std::vector<RawRating> parse_movielens(const std::string& path, char delimiter = '\t');

/// Same parser over an in-memory buffer; `origin` names the source in errors.
std::vector<RawRating> parse_movielens_text(const std::string& text, char delimiter,
                                            const std::string& origin);

/// Assigns dense ids in first-appearance order. Duplicate (user, item)
/// pairs keep the last rating. Throws on empty input.
RatingDataset build_dataset(const std::vector<RawRating>& ratings);

AlignedTest align_test(const std::vector<RawRating>& test, const RatingDataset& train);

/// Keeps ceil(ratio * |triples|) triples, uniform without replacement,
/// deterministic per seed. Counts, levels and id maps are unchanged.
RatingDataset subsample(const RatingDataset& ds, double ratio, std::uint64_t seed);

/// Moves all triples of a uniformly chosen user_fraction of users into the
/// test part. Both parts share the input dims, id maps and levels, so the
/// held-out users are zero-degree (unseen) in the train part.
std::pair<RatingDataset, RatingDataset> node_holdout(const RatingDataset& ds,
                                                     double user_fraction, std::uint64_t seed);

/// Users/items that appear in at least one triple; the complement is what
/// inductive imputation has to fill in.
std::vector<std::uint8_t> users_with_ratings(const RatingDataset& ds);
std::vector<std::uint8_t> items_with_ratings(const RatingDataset& ds);

/// Index of the level value nearest to `value` (ties toward the lower level).
std::int32_t nearest_level(const std::vector<double>& levels, double value);

}  // namespace imcgae
