#include "imcgae/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imcgae {

namespace {

struct Profile {
  std::vector<std::vector<std::int32_t>> user_levels;  // [user] -> level indices
  std::vector<std::vector<std::int32_t>> item_levels;
  std::vector<std::vector<std::int32_t>> user_items;           // [user] -> rated items
  std::vector<std::vector<std::int32_t>> item_users;           // [item] -> raters
  std::vector<std::vector<std::int32_t>> item_user_levels;     // parallel to item_users

  explicit Profile(const RatingDataset& ds)
      : user_levels(ds.n_users),
        item_levels(ds.n_items),
        user_items(ds.n_users),
        item_users(ds.n_items),
        item_user_levels(ds.n_items) {
    for (const auto& t : ds.triples) {
      user_levels[t.user].push_back(t.level);
      item_levels[t.item].push_back(t.level);
      user_items[t.user].push_back(t.item);
      item_users[t.item].push_back(t.user);
      item_user_levels[t.item].push_back(t.level);
    }
  }
};

double mean_value(const RatingDataset& ds, const std::vector<std::int32_t>& levels) {
  double s = 0.0;
  for (const auto l : levels) s += ds.levels[l];
  return s / static_cast<double>(levels.size());
}

std::optional<double> mode_value(const RatingDataset& ds, const std::vector<std::int32_t>& counts) {
  std::int32_t best = -1;
  std::int32_t best_count = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > best_count) {  // strict: ties keep the lower level
      best_count = counts[t];
      best = static_cast<std::int32_t>(t);
    }
  }
  if (best < 0) return std::nullopt;
  return ds.levels[best];
}

}  // namespace

std::optional<double> aur(const RatingDataset& train, std::int32_t user) {
  std::vector<std::int32_t> levels;
  for (const auto& t : train.triples)
    if (t.user == user) levels.push_back(t.level);
  if (levels.empty()) return std::nullopt;
  return mean_value(train, levels);
}

std::optional<double> air(const RatingDataset& train, std::int32_t item) {
  std::vector<std::int32_t> levels;
  for (const auto& t : train.triples)
    if (t.item == item) levels.push_back(t.level);
  if (levels.empty()) return std::nullopt;
  return mean_value(train, levels);
}

std::optional<double> mcr(const RatingDataset& train, std::int32_t user, std::int32_t item) {
  std::vector<std::int32_t> counts(train.levels.size(), 0);
  bool any = false;
  for (const auto& t : train.triples) {
    if (t.user == user || t.item == item) {
      // A triple on both endpoints contributes to both histories.
      if (t.user == user) ++counts[t.level];
      if (t.item == item) ++counts[t.level];
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return mode_value(train, counts);
}

std::optional<double> scf(const RatingDataset& train, std::int32_t user, std::int32_t item) {
  const Profile prof(train);
  std::vector<std::uint8_t> in_nu(train.n_items, 0);
  for (const auto i : prof.user_items[user]) in_nu[i] = 1;

  std::int32_t guider = -1;
  std::int32_t guider_overlap = -1;
  std::int32_t guider_level = -1;
  const auto& raters = prof.item_users[item];
  for (std::size_t k = 0; k < raters.size(); ++k) {
    const std::int32_t v = raters[k];
    if (v == user) continue;
    std::int32_t overlap = 0;
    for (const auto i : prof.user_items[v]) overlap += in_nu[i];
    if (overlap > guider_overlap || (overlap == guider_overlap && v < guider)) {
      guider = v;
      guider_overlap = overlap;
      guider_level = prof.item_user_levels[item][k];
    }
  }
  if (guider < 0) return std::nullopt;
  return train.levels[guider_level];
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double dx = xs[k] - mx;
    const double dy = ys[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

HeuristicReport analyze(const RatingDataset& train) {
  if (train.triples.size() < 2) throw std::invalid_argument("analyze: need at least 2 triples");

  const Profile prof(train);
  const std::size_t T = train.levels.size();
  const std::int32_t n_users = train.n_users;

  // Per-endpoint running statistics; the left-out triple is subtracted.
  std::vector<double> user_sum(n_users, 0.0), item_sum(train.n_items, 0.0);
  std::vector<std::int32_t> user_cnt(n_users, 0), item_cnt(train.n_items, 0);
  std::vector<std::vector<std::int32_t>> user_hist(n_users, std::vector<std::int32_t>(T, 0));
  std::vector<std::vector<std::int32_t>> item_hist(train.n_items, std::vector<std::int32_t>(T, 0));
  for (const auto& t : train.triples) {
    const double v = train.levels[t.level];
    user_sum[t.user] += v;
    item_sum[t.item] += v;
    ++user_cnt[t.user];
    ++item_cnt[t.item];
    ++user_hist[t.user][t.level];
    ++item_hist[t.item][t.level];
  }

  std::vector<std::vector<RatingTriple>> by_user(n_users);
  for (const auto& t : train.triples) by_user[t.user].push_back(t);

  struct Series {
    std::vector<double> score, truth;
  };
  Series s_aur, s_air, s_mcr, s_scf;
  const auto push = [](Series& s, double score, double truth) {
    s.score.push_back(score);
    s.truth.push_back(truth);
  };
  std::vector<std::int32_t> hist(T, 0);
  std::vector<std::int32_t> overlap(n_users, 0);

  for (std::int32_t u = 0; u < n_users; ++u) {
    if (by_user[u].empty()) continue;
    // |N(u) & N(v)| for every v, counted through u's items once per user.
    std::vector<std::int32_t> touched;
    for (const auto i : prof.user_items[u]) {
      const auto& raters = prof.item_users[i];
      for (const auto v : raters) {
        if (overlap[v] == 0) touched.push_back(v);
        ++overlap[v];
      }
    }

    for (const auto& t : by_user[u]) {
      const double truth = train.levels[t.level];

      if (user_cnt[u] > 1)  // leave-one-out: drop the target rating
        push(s_aur, (user_sum[u] - truth) / (user_cnt[u] - 1), truth);
      if (item_cnt[t.item] > 1)
        push(s_air, (item_sum[t.item] - truth) / (item_cnt[t.item] - 1), truth);

      // MCR over the union multiset minus the target on both sides.
      bool any = false;
      for (std::size_t lv = 0; lv < T; ++lv) {
        hist[lv] = user_hist[u][lv] + item_hist[t.item][lv];
        if (static_cast<std::int32_t>(lv) == t.level) hist[lv] -= 2;
        if (hist[lv] > 0) any = true;
      }
      if (any) {
        std::int32_t best = 0, best_count = hist[0];
        for (std::size_t lv = 1; lv < T; ++lv)
          if (hist[lv] > best_count) {
            best_count = hist[lv];
            best = static_cast<std::int32_t>(lv);
          }
        push(s_mcr, train.levels[best], truth);
      }

      // SCF: every candidate v rated t.item, so after removing t.item from
      // N(u) each overlap drops by exactly one and the argmax is unchanged.
      const auto& raters = prof.item_users[t.item];
      std::int32_t guider = -1, guider_overlap = -1, guider_level = -1;
      for (std::size_t k = 0; k < raters.size(); ++k) {
        const std::int32_t v = raters[k];
        if (v == u) continue;
        const std::int32_t ov = overlap[v] - 1;
        if (ov > guider_overlap || (ov == guider_overlap && v < guider)) {
          guider = v;
          guider_overlap = ov;
          guider_level = prof.item_user_levels[t.item][k];
        }
      }
      if (guider >= 0) push(s_scf, train.levels[guider_level], truth);
    }

    for (const auto v : touched) overlap[v] = 0;
  }

  HeuristicReport rep;
  rep.pair_count = train.triples.size();
  rep.density = static_cast<double>(train.triples.size()) /
                (static_cast<double>(train.n_users) * static_cast<double>(train.n_items));
  const double n_pairs = static_cast<double>(rep.pair_count);
  rep.pcc_aur = pearson(s_aur.score, s_aur.truth);
  rep.pcc_air = pearson(s_air.score, s_air.truth);
  rep.pcc_mcr = pearson(s_mcr.score, s_mcr.truth);
  rep.pcc_scf = pearson(s_scf.score, s_scf.truth);
  rep.coverage_aur = static_cast<double>(s_aur.score.size()) / n_pairs;
  rep.coverage_air = static_cast<double>(s_air.score.size()) / n_pairs;
  rep.coverage_mcr = static_cast<double>(s_mcr.score.size()) / n_pairs;
  rep.coverage_scf = static_cast<double>(s_scf.score.size()) / n_pairs;
  return rep;
}

}  // namespace imcgae
