#include "imcgae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "imcgae/rng.hpp"

namespace imcgae {

namespace {

[[noreturn]] void line_error(const std::string& origin, std::size_t line_no, const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + what);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool parse_int64(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::vector<RawRating> parse_movielens_text(const std::string& text, char delimiter,
                                            const std::string& origin) {
  std::vector<RawRating> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, delimiter);
    if (fields.size() < 3 || fields.size() > 4)
      line_error(origin, line_no,
                 "expected user<delim>item<delim>rating[<delim>timestamp], got " +
                     std::to_string(fields.size()) + " fields");
    RawRating r;
    r.user = fields[0];
    r.item = fields[1];
    if (r.user.empty()) line_error(origin, line_no, "empty user token");
    if (r.item.empty()) line_error(origin, line_no, "empty item token");
    if (!parse_double(fields[2], r.rating) || !std::isfinite(r.rating))
      line_error(origin, line_no, "rating '" + fields[2] + "' is not a finite number");
    if (fields.size() == 4) {
      std::int64_t ts = 0;
      if (!parse_int64(fields[3], ts))
        line_error(origin, line_no, "timestamp '" + fields[3] + "' is not an integer");
      r.timestamp = ts;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawRating> parse_movielens(const std::string& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open rating file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("i/o error while reading: " + path);
  return parse_movielens_text(buf.str(), delimiter, path);
}

RatingDataset build_dataset(const std::vector<RawRating>& ratings) {
  if (ratings.empty()) throw std::invalid_argument("build_dataset: empty rating sequence");

  RatingDataset ds;
  // (user, item) -> slot in a first-appearance list; last write wins.
  std::unordered_map<std::int64_t, std::size_t> pair_slot;
  struct Entry {
    std::int32_t user, item;
    double rating;
  };
  std::vector<Entry> entries;
  entries.reserve(ratings.size());

  for (const auto& r : ratings) {
    auto [uit, unew] = ds.user_index.try_emplace(r.user, ds.n_users);
    if (unew) {
      ds.user_tokens.push_back(r.user);
      ++ds.n_users;
    }
    auto [iit, inew] = ds.item_index.try_emplace(r.item, ds.n_items);
    if (inew) {
      ds.item_tokens.push_back(r.item);
      ++ds.n_items;
    }
    const std::int32_t u = uit->second;
    const std::int32_t i = iit->second;
    const std::int64_t key = (static_cast<std::int64_t>(u) << 32) | static_cast<std::uint32_t>(i);
    auto [pit, pnew] = pair_slot.try_emplace(key, entries.size());
    if (pnew) {
      entries.push_back({u, i, r.rating});
    } else {
      entries[pit->second].rating = r.rating;  // duplicate pair: keep the last
    }
  }

  // Levels come from the surviving ratings only.
  std::vector<double> values;
  values.reserve(entries.size());
  for (const auto& e : entries) values.push_back(e.rating);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  ds.levels = std::move(values);

  std::unordered_map<double, std::int32_t> level_of;
  for (std::size_t t = 0; t < ds.levels.size(); ++t)
    level_of.emplace(ds.levels[t], static_cast<std::int32_t>(t));

  ds.triples.reserve(entries.size());
  for (const auto& e : entries)
    ds.triples.push_back({e.user, e.item, level_of.at(e.rating)});
  return ds;
}

std::int32_t nearest_level(const std::vector<double>& levels, double value) {
  std::int32_t best = 0;
  double best_d = std::abs(levels[0] - value);
  for (std::size_t t = 1; t < levels.size(); ++t) {
    const double d = std::abs(levels[t] - value);
    if (d < best_d) {  // strict: ties keep the lower level
      best_d = d;
      best = static_cast<std::int32_t>(t);
    }
  }
  return best;
}

AlignedTest align_test(const std::vector<RawRating>& test, const RatingDataset& train) {
  AlignedTest out;
  out.train_users = train.n_users;
  out.train_items = train.n_items;

  RatingDataset& ds = out.dataset;
  ds.n_users = train.n_users;
  ds.n_items = train.n_items;
  ds.levels = train.levels;
  ds.user_tokens = train.user_tokens;
  ds.item_tokens = train.item_tokens;
  ds.user_index = train.user_index;
  ds.item_index = train.item_index;

  std::unordered_map<std::int64_t, std::size_t> pair_slot;
  struct Entry {
    std::int32_t user, item;
    double rating;
  };
  std::vector<Entry> entries;
  entries.reserve(test.size());

  for (const auto& r : test) {
    auto [uit, unew] = ds.user_index.try_emplace(r.user, ds.n_users);
    if (unew) {
      ds.user_tokens.push_back(r.user);
      ++ds.n_users;
    }
    auto [iit, inew] = ds.item_index.try_emplace(r.item, ds.n_items);
    if (inew) {
      ds.item_tokens.push_back(r.item);
      ++ds.n_items;
    }
    const std::int64_t key =
        (static_cast<std::int64_t>(uit->second) << 32) | static_cast<std::uint32_t>(iit->second);
    auto [pit, pnew] = pair_slot.try_emplace(key, entries.size());
    if (pnew) {
      entries.push_back({uit->second, iit->second, r.rating});
    } else {
      entries[pit->second].rating = r.rating;
    }
  }

  ds.triples.reserve(entries.size());
  out.true_ratings.reserve(entries.size());
  for (const auto& e : entries) {
    ds.triples.push_back({e.user, e.item, nearest_level(ds.levels, e.rating)});
    out.true_ratings.push_back(e.rating);
  }

  out.user_unseen.assign(ds.n_users, 0);
  for (std::int32_t u = train.n_users; u < ds.n_users; ++u) out.user_unseen[u] = 1;
  out.item_unseen.assign(ds.n_items, 0);
  for (std::int32_t i = train.n_items; i < ds.n_items; ++i) out.item_unseen[i] = 1;
  return out;
}

RatingDataset subsample(const RatingDataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("subsample: ratio must be in (0, 1]");
  const std::size_t n = ds.triples.size();
  const std::size_t k =
      std::min(n, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n))));

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng::Engine g(seed);
  for (std::size_t j = 0; j < k; ++j) {  // partial Fisher-Yates
    const std::size_t pick = j + rng::bounded(g, n - j);
    std::swap(idx[j], idx[pick]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());  // keep the original triple order

  RatingDataset out = ds;
  out.triples.clear();
  out.triples.reserve(k);
  for (const std::size_t j : idx) out.triples.push_back(ds.triples[j]);
  return out;
}

std::pair<RatingDataset, RatingDataset> node_holdout(const RatingDataset& ds,
                                                     double user_fraction, std::uint64_t seed) {
  if (!(user_fraction > 0.0 && user_fraction < 1.0))
    throw std::invalid_argument("node_holdout: user_fraction must be in (0, 1)");
  const std::size_t n = static_cast<std::size_t>(ds.n_users);
  const std::size_t k = static_cast<std::size_t>(user_fraction * static_cast<double>(n));
  if (k == 0) throw std::invalid_argument("node_holdout: no users selected");
  if (k >= n) throw std::invalid_argument("node_holdout: all users selected");

  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Engine g(seed);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + rng::bounded(g, n - j);
    std::swap(order[j], order[pick]);
  }
  std::vector<std::uint8_t> held(n, 0);
  for (std::size_t j = 0; j < k; ++j) held[order[j]] = 1;

  RatingDataset train = ds;
  RatingDataset test = ds;
  train.triples.clear();
  test.triples.clear();
  for (const auto& t : ds.triples)
    (held[t.user] ? test.triples : train.triples).push_back(t);
  return {std::move(train), std::move(test)};
}

std::vector<std::uint8_t> users_with_ratings(const RatingDataset& ds) {
  std::vector<std::uint8_t> seen(ds.n_users, 0);
  for (const auto& t : ds.triples) seen[t.user] = 1;
  return seen;
}

std::vector<std::uint8_t> items_with_ratings(const RatingDataset& ds) {
  std::vector<std::uint8_t> seen(ds.n_items, 0);
  for (const auto& t : ds.triples) seen[t.item] = 1;
  return seen;
}

}  // namespace imcgae
