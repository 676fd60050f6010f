#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imcgae/dataset.hpp"

namespace imcgae::testsupport {

struct Cell {
  std::int32_t user;
  std::int32_t item;
  double value;
};

/// Dataset with explicit dims over already-internal ids; keeps empty rows
/// and columns, unlike build_dataset.
inline RatingDataset make_dataset(std::int32_t n_users, std::int32_t n_items,
                                  const std::vector<Cell>& cells, std::vector<double> levels) {
  RatingDataset ds;
  ds.n_users = n_users;
  ds.n_items = n_items;
  ds.levels = std::move(levels);
  for (std::int32_t u = 0; u < n_users; ++u) {
    ds.user_tokens.push_back("u" + std::to_string(u));
    ds.user_index.emplace(ds.user_tokens.back(), u);
  }
  for (std::int32_t i = 0; i < n_items; ++i) {
    ds.item_tokens.push_back("i" + std::to_string(i));
    ds.item_index.emplace(ds.item_tokens.back(), i);
  }
  for (const auto& c : cells) {
    std::int32_t level = -1;
    for (std::size_t t = 0; t < ds.levels.size(); ++t)
      if (ds.levels[t] == c.value) level = static_cast<std::int32_t>(t);
    ds.triples.push_back({c.user, c.item, level});
  }
  return ds;
}

inline RawRating raw(std::string user, std::string item, double rating) {
  return {std::move(user), std::move(item), rating, {}};
}

}  // namespace imcgae::testsupport
