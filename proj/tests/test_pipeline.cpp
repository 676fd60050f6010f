#include <doctest.h>

#include <cmath>

#include "imcgae/dataset.hpp"
#include "imcgae/graph.hpp"
#include "imcgae/model.hpp"
#include "imcgae/synth.hpp"

// End-to-end runs on a seeded synthetic matrix: sanity margins over the
// global-mean baseline, degradation under subsampling, and the inductive
// node-holdout path. Real-dataset tolerances live in the acceptance suite.

using namespace imcgae;

namespace {

double global_mean_rmse(const RatingDataset& train, const AlignedTest& aligned) {
  double mean = 0;
  for (const auto& t : train.triples) mean += train.rating_of(t);
  mean /= static_cast<double>(train.triples.size());
  double s = 0;
  for (const double r : aligned.true_ratings) s += (mean - r) * (mean - r);
  return std::sqrt(s / static_cast<double>(aligned.true_ratings.size()));
}

struct Bundle {
  RatingDataset all;
  RatingDataset train;
  AlignedTest test;
};

Bundle make_bundle() {
  SynthConfig cfg;
  cfg.n_users = 200;
  cfg.n_items = 260;
  cfg.density = 0.07;
  cfg.seed = 42;
  const auto rows = synth_ratings(cfg);

  Bundle b;
  b.all = build_dataset(rows);
  std::vector<RawRating> train_raw, test_raw;
  for (std::size_t k = 0; k < rows.size(); ++k)
    (k % 5 == 4 ? test_raw : train_raw).push_back(rows[k]);
  b.train = build_dataset(train_raw);
  b.test = align_test(test_raw, b.train);
  return b;
}

HyperParams pipeline_hp() {
  HyperParams hp;
  hp.dim_identical = 16;
  hp.dim_role = 16;
  hp.dim_latent = 16;
  hp.dim_decode = 16;
  hp.lr = 0.01;
  hp.epochs = 150;
  hp.seed = 0;
  return hp;
}

}  // namespace

TEST_CASE("trained model clearly beats the global-mean baseline") {
  const Bundle b = make_bundle();
  const double baseline = global_mean_rmse(b.train, b.test);
  const auto result = fit(b.train, pipeline_hp(), &b.test);
  CHECK(result.report.best_test_rmse < baseline - 0.1);
  CHECK(result.report.best_epoch >= 1);
}

TEST_CASE("subsampled training degrades the test error") {
  const Bundle b = make_bundle();
  const HyperParams hp = pipeline_hp();
  const double full = fit(b.train, hp, &b.test).report.best_test_rmse;
  const double sparse10 =
      fit(subsample(b.train, 0.1, hp.seed), hp, &b.test).report.best_test_rmse;
  const double sparse1 =
      fit(subsample(b.train, 0.01, hp.seed), hp, &b.test).report.best_test_rmse;
  CHECK(full + 0.05 < sparse10);
  CHECK(full + 0.05 < sparse1);
}

TEST_CASE("imputed node-holdout users beat the global-mean baseline") {
  const Bundle b = make_bundle();
  const auto [train, test] = node_holdout(b.all, 0.1, 5);

  std::vector<RawRating> test_raw;
  for (const auto& t : test.triples)
    test_raw.push_back({b.all.user_tokens[t.user], b.all.item_tokens[t.item],
                        b.all.rating_of(t), {}});
  const auto aligned = align_test(test_raw, train);

  const double baseline = global_mean_rmse(train, aligned);
  const auto result = fit(train, pipeline_hp(), &aligned);
  CHECK(std::isfinite(result.report.best_test_rmse));
  CHECK(result.report.best_test_rmse < baseline);

  // The held-out users were never trained; their latent rows come from
  // imputation, and every prediction stays inside the level range.
  const auto ready = prepare_eval_params(result.best_params, train, aligned);
  const auto graph = build_graph(train, aligned.dataset.n_users, aligned.dataset.n_items);
  const auto enc = encode(graph, ready, pipeline_hp());
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (const auto& t : aligned.dataset.triples)
    pairs.emplace_back(t.user, aligned.dataset.n_users + t.item);
  for (const auto& p : decode(enc.node_repr, pairs, ready)) {
    CHECK(p.expected_rating >= b.all.levels.front());
    CHECK(p.expected_rating <= b.all.levels.back());
  }
}

TEST_CASE("training twice with one seed reproduces the trajectory bitwise") {
  const Bundle b = make_bundle();
  HyperParams hp = pipeline_hp();
  hp.epochs = 40;
  const auto a = fit(b.train, hp, &b.test);
  const auto c = fit(b.train, hp, &b.test);
  REQUIRE(a.report.epochs.size() == c.report.epochs.size());
  for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
    CHECK(a.report.epochs[e].train_loss == c.report.epochs[e].train_loss);
    CHECK(a.report.epochs[e].test_rmse == c.report.epochs[e].test_rmse);
  }
  CHECK(a.best_params.transform.data == c.best_params.transform.data);
}
