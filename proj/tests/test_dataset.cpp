#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>

#include "imcgae/dataset.hpp"
#include "imcgae/rng.hpp"
#include "support.hpp"

using namespace imcgae;
using testsupport::raw;

TEST_CASE("parse_movielens handles the u.data line format") {
  const auto rows = parse_movielens_text("196\t242\t3\t881250949\n", '\t', "mem");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].user == "196");
  CHECK(rows[0].item == "242");
  CHECK(rows[0].rating == 3.0);
  REQUIRE(rows[0].timestamp.has_value());
  CHECK(*rows[0].timestamp == 881250949);
}

TEST_CASE("parse_movielens empty input and blank lines") {
  CHECK(parse_movielens_text("", '\t', "mem").empty());
  CHECK(parse_movielens_text("\n\n", '\t', "mem").empty());
  const auto rows = parse_movielens_text("a\tb\t4\n\nc\td\t5\n", '\t', "mem");
  CHECK(rows.size() == 2);
}

TEST_CASE("parse_movielens rejects malformed lines with the line number") {
  CHECK_THROWS_WITH_AS(parse_movielens_text("a,b\n", ',', "mem"),
                       doctest::Contains("mem:1"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_movielens_text("a\tb\t4\nu\ti\tbad\n", '\t', "mem"),
                       doctest::Contains("mem:2"), std::runtime_error);
  CHECK_THROWS_AS(parse_movielens_text("u\ti\tnan\n", '\t', "mem"), std::runtime_error);
  CHECK_THROWS_AS(parse_movielens_text("u\ti\t3\tnot_a_ts\n", '\t', "mem"), std::runtime_error);
  CHECK_THROWS_AS(parse_movielens_text("u\ti\t3\t1\textra\n", '\t', "mem"), std::runtime_error);
}

TEST_CASE("parse_movielens reports unreadable files") {
  CHECK_THROWS_AS(parse_movielens("/nonexistent/ratings.dat"), std::runtime_error);
}

TEST_CASE("parse_movielens supports CSV delimiters and CRLF") {
  const auto rows = parse_movielens_text("u,i,4.5\r\n", ',', "mem");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].rating == 4.5);
  CHECK_FALSE(rows[0].timestamp.has_value());
}

TEST_CASE("build_dataset keeps the last duplicate and derives levels from survivors") {
  const auto ds = build_dataset({raw("u1", "i1", 5), raw("u2", "i1", 3), raw("u1", "i1", 4)});
  CHECK(ds.n_users == 2);
  CHECK(ds.n_items == 1);
  REQUIRE(ds.levels == std::vector<double>{3.0, 4.0});
  REQUIRE(ds.triples.size() == 2);
  CHECK(ds.triples[0].user == 0);
  CHECK(ds.triples[0].item == 0);
  CHECK(ds.rating_of(ds.triples[0]) == 4.0);
  CHECK(ds.triples[1].user == 1);
  CHECK(ds.rating_of(ds.triples[1]) == 3.0);
}

TEST_CASE("build_dataset degenerate single rating") {
  const auto ds = build_dataset({raw("u", "i", 2)});
  CHECK(ds.n_users == 1);
  CHECK(ds.n_items == 1);
  CHECK(ds.levels == std::vector<double>{2.0});
  CHECK(ds.triples.size() == 1);
}

TEST_CASE("build_dataset rejects empty input") {
  CHECK_THROWS_AS(build_dataset({}), std::invalid_argument);
}

TEST_CASE("build_dataset assigns ids in first-appearance order") {
  const auto ds = build_dataset({raw("b", "y", 1), raw("a", "x", 2), raw("b", "x", 3)});
  CHECK(ds.user_index.at("b") == 0);
  CHECK(ds.user_index.at("a") == 1);
  CHECK(ds.item_index.at("y") == 0);
  CHECK(ds.item_index.at("x") == 1);
  CHECK(ds.user_tokens[0] == "b");
  CHECK(ds.item_tokens[1] == "x");
}

TEST_CASE("build_dataset is idempotent up to index relabeling") {
  rng::Engine g(7);
  std::vector<RawRating> rows;
  for (int k = 0; k < 200; ++k)
    rows.push_back(raw("u" + std::to_string(rng::bounded(g, 12)),
                       "i" + std::to_string(rng::bounded(g, 15)),
                       1.0 + static_cast<double>(rng::bounded(g, 5))));
  const auto ds = build_dataset(rows);

  std::vector<RawRating> remapped;
  for (const auto& t : ds.triples)
    remapped.push_back(raw(std::to_string(t.user), std::to_string(t.item), ds.rating_of(t)));
  const auto ds2 = build_dataset(remapped);

  CHECK(ds2.n_users == ds.n_users);
  CHECK(ds2.n_items == ds.n_items);
  CHECK(ds2.levels == ds.levels);
  REQUIRE(ds2.triples.size() == ds.triples.size());
  std::multiset<std::tuple<std::string, std::string, double>> a, b;
  for (const auto& t : ds.triples)
    a.emplace(ds.user_tokens[t.user], ds.item_tokens[t.item], ds.rating_of(t));
  for (const auto& t : ds2.triples)
    b.emplace(ds2.user_tokens[t.user], ds2.item_tokens[t.item], ds2.rating_of(t));
  // ds2 tokens are ds indices; compare through the relabeling.
  std::multiset<std::tuple<std::string, std::string, double>> b_mapped;
  for (const auto& t : ds2.triples)
    b_mapped.emplace(ds.user_tokens[std::stoi(ds2.user_tokens[t.user])],
                     ds.item_tokens[std::stoi(ds2.item_tokens[t.item])], ds2.rating_of(t));
  CHECK(a == b_mapped);
}

TEST_CASE("every triple level indexes a level and levels ascend") {
  rng::Engine g(3);
  std::vector<RawRating> rows;
  for (int k = 0; k < 300; ++k)
    rows.push_back(raw("u" + std::to_string(rng::bounded(g, 20)),
                       "i" + std::to_string(rng::bounded(g, 25)),
                       0.5 * (1.0 + static_cast<double>(rng::bounded(g, 9)))));
  const auto ds = build_dataset(rows);
  CHECK(std::is_sorted(ds.levels.begin(), ds.levels.end()));
  CHECK(std::adjacent_find(ds.levels.begin(), ds.levels.end()) == ds.levels.end());
  for (const auto& t : ds.triples) {
    CHECK(t.level >= 0);
    CHECK(static_cast<std::size_t>(t.level) < ds.levels.size());
    CHECK(t.user < ds.n_users);
    CHECK(t.item < ds.n_items);
  }
  std::set<std::pair<std::int32_t, std::int32_t>> pairs;
  for (const auto& t : ds.triples) CHECK(pairs.emplace(t.user, t.item).second);
}

TEST_CASE("align_test maps seen tokens to train indices and flags unseen nodes") {
  const auto train = build_dataset({raw("196", "242", 3), raw("22", "377", 1)});
  const auto aligned = align_test({raw("196", "377", 4), raw("fresh", "242", 2)}, train);

  REQUIRE(aligned.dataset.triples.size() == 2);
  CHECK(aligned.dataset.triples[0].user == train.user_index.at("196"));
  CHECK(aligned.dataset.triples[0].item == train.item_index.at("377"));
  CHECK(aligned.dataset.triples[1].user == train.n_users);  // fresh index
  CHECK(aligned.train_users == train.n_users);
  CHECK(aligned.unseen_user_count() == 1);
  CHECK(aligned.unseen_item_count() == 0);
  CHECK(aligned.user_unseen[train.n_users] == 1);
  CHECK(aligned.user_unseen[0] == 0);
}

TEST_CASE("align_test clamps off-level ratings but keeps the true value") {
  const auto train = build_dataset({raw("a", "x", 1), raw("a", "y", 2), raw("b", "x", 4)});
  REQUIRE(train.levels == std::vector<double>{1.0, 2.0, 4.0});

  const auto aligned = align_test({raw("b", "y", 2.4), raw("a", "x", 3.0), raw("b", "b2", 9)},
                                  train);
  CHECK(aligned.dataset.levels == train.levels);
  CHECK(aligned.dataset.triples[0].level == 1);   // 2.4 -> level value 2
  CHECK(aligned.true_ratings[0] == 2.4);
  CHECK(aligned.dataset.triples[1].level == 1);   // 3.0 ties 2 vs 4 -> lower
  CHECK(aligned.true_ratings[1] == 3.0);
  CHECK(aligned.dataset.triples[2].level == 2);   // 9 clamps to 4
  CHECK(aligned.true_ratings[2] == 9.0);
}

TEST_CASE("subsample identity, determinism and counting") {
  rng::Engine g(11);
  std::vector<RawRating> rows;
  for (int k = 0; k < 123; ++k)
    rows.push_back(raw("u" + std::to_string(k % 17), "i" + std::to_string(k),
                       1.0 + static_cast<double>(rng::bounded(g, 5))));
  const auto ds = build_dataset(rows);

  const auto full = subsample(ds, 1.0, 5);
  REQUIRE(full.triples.size() == ds.triples.size());
  for (std::size_t k = 0; k < ds.triples.size(); ++k) {
    CHECK(full.triples[k].user == ds.triples[k].user);
    CHECK(full.triples[k].item == ds.triples[k].item);
  }

  const auto a = subsample(ds, 0.2, 7);
  const auto b = subsample(ds, 0.2, 7);
  REQUIRE(a.triples.size() == b.triples.size());
  for (std::size_t k = 0; k < a.triples.size(); ++k)
    CHECK(a.triples[k].user == b.triples[k].user);

  CHECK(subsample(ds, 0.1, 1).triples.size() == 13);  // ceil(0.1 * 123)
  CHECK(a.n_users == ds.n_users);
  CHECK(a.levels == ds.levels);
  CHECK(a.user_tokens == ds.user_tokens);

  CHECK_THROWS_AS(subsample(ds, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(subsample(ds, 1.5, 1), std::invalid_argument);
}

TEST_CASE("subsample output is a subset of the input triples") {
  const auto ds = build_dataset({raw("a", "x", 1), raw("a", "y", 2), raw("b", "x", 3),
                                 raw("b", "z", 4), raw("c", "y", 5)});
  const auto sub = subsample(ds, 0.5, 3);
  CHECK(sub.triples.size() == 3);
  std::set<std::pair<std::int32_t, std::int32_t>> all;
  for (const auto& t : ds.triples) all.emplace(t.user, t.item);
  for (const auto& t : sub.triples) CHECK(all.count({t.user, t.item}) == 1);
}

TEST_CASE("node_holdout partitions triples by held-out users") {
  rng::Engine g(2);
  std::vector<RawRating> rows;
  for (int k = 0; k < 400; ++k)
    rows.push_back(raw("u" + std::to_string(rng::bounded(g, 40)),
                       "i" + std::to_string(rng::bounded(g, 30)),
                       1.0 + static_cast<double>(rng::bounded(g, 5))));
  const auto ds = build_dataset(rows);

  const auto [train, test] = node_holdout(ds, 0.25, 9);
  CHECK(train.triples.size() + test.triples.size() == ds.triples.size());
  CHECK(train.n_users == ds.n_users);
  CHECK(test.n_users == ds.n_users);

  const auto train_users = users_with_ratings(train);
  std::set<std::int32_t> held;
  for (const auto& t : test.triples) {
    held.insert(t.user);
    CHECK(train_users[t.user] == 0);  // held users contribute nothing to train
  }
  CHECK(held.size() == 10);  // floor(0.25 * 40)

  const auto [train2, test2] = node_holdout(ds, 0.25, 9);
  REQUIRE(test2.triples.size() == test.triples.size());
  for (std::size_t k = 0; k < test.triples.size(); ++k)
    CHECK(test2.triples[k].user == test.triples[k].user);
}

TEST_CASE("node_holdout edge fractions") {
  const auto ds = build_dataset({raw("a", "x", 1), raw("b", "x", 2), raw("c", "x", 3)});
  const auto [train, test] = node_holdout(ds, 0.34, 1);  // exactly one user
  CHECK(test.triples.size() == 1);
  CHECK(train.triples.size() == 2);
  CHECK_THROWS_AS(node_holdout(ds, 0.01, 1), std::invalid_argument);  // selects none
  CHECK_THROWS_AS(node_holdout(ds, 1.0, 1), std::invalid_argument);
}

TEST_CASE("nearest_level picks the closest value, ties toward the lower") {
  const std::vector<double> levels{1, 2, 4, 5};
  CHECK(nearest_level(levels, 1.4) == 0);
  CHECK(nearest_level(levels, 3.0) == 1);  // tie between 2 and 4
  CHECK(nearest_level(levels, 4.9) == 3);
  CHECK(nearest_level(levels, -3) == 0);
  CHECK(nearest_level(levels, 99) == 3);
}
