#include "imcgae/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "imcgae/rng.hpp"

namespace imcgae {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::pair<std::int32_t, std::int32_t>> unified_pairs(const RatingDataset& ds,
                                                                 std::int32_t n_users) {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  pairs.reserve(ds.triples.size());
  for (const auto& t : ds.triples) pairs.emplace_back(t.user, n_users + t.item);
  return pairs;
}

double rmse_of(const NumArray& expected, const std::vector<double>& truth) {
  double s = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = expected.data[k] - truth[k];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

}  // namespace

void HyperParams::validate() const {
  if (layers < 1) throw std::invalid_argument("layers must be >= 1");
  if (dim_identical < 0 || dim_role < 0 || dim_latent < 0)
    throw std::invalid_argument("embedding widths must be >= 0");
  if (input_dim() < 1) throw std::invalid_argument("input width must be >= 1");
  if (dim_decode < 1) throw std::invalid_argument("decoder width must be >= 1");
  if (!(p0 >= 0.0 && p0 < 1.0)) throw std::invalid_argument("p0 must be in [0, 1)");
  if (theta < 0.0) throw std::invalid_argument("theta must be >= 0");
  if (lambda_nrr < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
}

std::vector<NumArray*> ModelParams::tensors() {
  std::vector<NumArray*> out{&identical, &role};
  for (auto& t : latent) out.push_back(&t);
  out.push_back(&transform);
  for (auto& t : decoder) out.push_back(&t);
  return out;
}

std::vector<const NumArray*> ModelParams::tensors() const {
  std::vector<const NumArray*> out{&identical, &role};
  for (const auto& t : latent) out.push_back(&t);
  out.push_back(&transform);
  for (const auto& t : decoder) out.push_back(&t);
  return out;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> names{"identical", "role"};
  for (std::size_t t = 0; t < latent.size(); ++t) names.push_back("latent." + std::to_string(t));
  names.push_back("transform");
  for (std::size_t t = 0; t < decoder.size(); ++t) names.push_back("decoder." + std::to_string(t));
  return names;
}

void assign_tensors(ModelParams& params, const std::vector<NumArray>& values) {
  const auto tensors = params.tensors();
  if (tensors.size() != values.size())
    throw std::invalid_argument("assign_tensors: tensor count mismatch");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (!tensors[k]->same_shape(values[k]))
      throw std::invalid_argument("assign_tensors: shape mismatch");
    *tensors[k] = values[k];
  }
}

std::vector<ValueId> TapeParamIds::all() const {
  std::vector<ValueId> out{identical, role};
  out.insert(out.end(), latent.begin(), latent.end());
  out.push_back(transform);
  out.insert(out.end(), decoder.begin(), decoder.end());
  return out;
}

TapeParamIds register_params(Tape& tape, const ModelParams& params, bool as_parameters) {
  TapeParamIds ids;
  ids.identical = tape.leaf(params.identical, as_parameters);
  ids.role = tape.leaf(params.role, as_parameters);
  for (const auto& t : params.latent) ids.latent.push_back(tape.leaf(t, as_parameters));
  ids.transform = tape.leaf(params.transform, as_parameters);
  for (const auto& t : params.decoder) ids.decoder.push_back(tape.leaf(t, as_parameters));
  return ids;
}

TapeEncoded encode_on_tape(Tape& tape, const RatingGraph& graph, const TapeParamIds& ids,
                           const HyperParams& hp, const DropoutPlan* dropout) {
  const std::int32_t n = graph.node_count();
  if (dropout && static_cast<int>(dropout->layers.size()) < hp.layers)
    throw std::invalid_argument("encode: dropout plan has fewer layers than the encoder");
  if (tape.value(ids.latent.at(0)).rows != n)
    throw std::invalid_argument("encode: latent tables do not cover the graph node space");

  ValueId id_rows = -1;
  ValueId role_rows = -1;
  if (tape.value(ids.identical).cols > 0)
    id_rows = tape.gather(ids.identical, std::vector<std::int32_t>(n, 0));
  if (tape.value(ids.role).cols > 0) {
    std::vector<std::int32_t> role_idx(n, 1);
    for (std::int32_t v = 0; v < graph.n_users; ++v) role_idx[v] = 0;
    role_rows = tape.gather(ids.role, std::move(role_idx));
  }

  TapeEncoded out;
  const std::size_t T = graph.level_count();
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<ValueId> parts;
    if (id_rows >= 0) parts.push_back(id_rows);
    if (role_rows >= 0) parts.push_back(role_rows);
    if (tape.value(ids.latent[t]).cols > 0) parts.push_back(ids.latent[t]);
    const ValueId x0 = tape.concat_cols(parts);

    // Accumulate the pre-activation layer outputs, weighted 1/(l+1);
    // ReLU sits between successive propagation layers only.
    std::vector<std::pair<double, ValueId>> terms{{1.0, x0}};
    ValueId cur = x0;
    for (int l = 1; l <= hp.layers; ++l) {
      const LayerMask* mask = dropout ? &dropout->layers[l - 1] : nullptr;
      const ValueId xl = tape.spmm(graph, static_cast<int>(t), mask, cur);
      terms.emplace_back(1.0 / (l + 1.0), xl);
      cur = l < hp.layers ? tape.relu(xl) : xl;
    }
    out.level_repr.push_back(tape.scale_add(std::move(terms)));
  }

  std::vector<std::pair<double, ValueId>> level_sum;
  for (const auto h : out.level_repr) level_sum.emplace_back(1.0, h);
  const ValueId h = tape.scale_add(std::move(level_sum));
  out.node_repr = tape.tanh_map(tape.matmul_nt(h, ids.transform));
  return out;
}

TapeDecoded decode_on_tape(Tape& tape, ValueId node_repr, const TapeParamIds& ids,
                           const std::vector<double>& levels,
                           const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs) {
  std::vector<ValueId> per_level;
  for (const auto dec : ids.decoder) {
    const ValueId projected = tape.matmul_nt(node_repr, dec);  // row i holds W_t n[i]
    per_level.push_back(tape.pair_dot(node_repr, projected, pairs));
  }
  TapeDecoded out;
  out.logits = tape.concat_cols(per_level);
  out.probs = tape.softmax_rows(out.logits);
  out.expected = tape.expected_value_rows(out.logits, levels);
  return out;
}

ValueId nrr_on_tape(Tape& tape, const std::vector<ValueId>& level_repr) {
  if (level_repr.size() < 2) return tape.leaf(NumArray::scalar(0.0));
  std::vector<std::pair<double, ValueId>> terms;
  for (std::size_t t = 0; t + 1 < level_repr.size(); ++t)
    terms.emplace_back(-1.0, tape.sum_all(tape.cosine_rows(level_repr[t], level_repr[t + 1])));
  return tape.scale_add(std::move(terms));
}

ModelParams init_params(const HyperParams& hp, std::int32_t n_users, std::int32_t n_items,
                        std::vector<double> levels, std::uint64_t seed) {
  if (n_users < 1 || n_items < 1) throw std::invalid_argument("init_params: empty node set");
  if (levels.empty()) throw std::invalid_argument("init_params: no rating levels");

  rng::Engine g(seed);
  const auto xavier = [&g](int rows, int cols) {
    NumArray a(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& v : a.data) v = rng::uniform(g, -bound, bound);
    return a;
  };

  ModelParams p;
  p.n_users = n_users;
  p.n_items = n_items;
  p.levels = std::move(levels);
  const std::size_t T = p.levels.size();
  p.identical = xavier(1, hp.dim_identical);
  p.role = xavier(2, hp.dim_role);
  for (std::size_t t = 0; t < T; ++t) p.latent.push_back(xavier(n_users + n_items, hp.dim_latent));
  p.transform = xavier(hp.dim_decode, hp.input_dim());
  for (std::size_t t = 0; t < T; ++t) p.decoder.push_back(xavier(hp.dim_decode, hp.dim_decode));
  return p;
}

Encoded encode(const RatingGraph& graph, const ModelParams& params, const HyperParams& hp,
               const DropoutPlan* dropout) {
  Tape tape;
  const TapeParamIds ids = register_params(tape, params, false);
  const TapeEncoded enc = encode_on_tape(tape, graph, ids, hp, dropout);
  Encoded out;
  out.node_repr = tape.value(enc.node_repr);
  for (const auto h : enc.level_repr) out.level_repr.push_back(tape.value(h));
  return out;
}

std::vector<LinkPrediction> decode(const NumArray& node_repr,
                                   const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs,
                                   const ModelParams& params) {
  Tape tape;
  const ValueId n = tape.leaf(node_repr);
  TapeParamIds ids;
  for (const auto& d : params.decoder) ids.decoder.push_back(tape.leaf(d));
  const TapeDecoded dec = decode_on_tape(tape, n, ids, params.levels, pairs);

  const NumArray& logits = tape.value(dec.logits);
  const NumArray& probs = tape.value(dec.probs);
  const NumArray& expected = tape.value(dec.expected);
  std::vector<LinkPrediction> out(pairs.size());
  const int T = logits.cols;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto& lp = out[p];
    lp.logits.assign(logits.row(static_cast<int>(p)), logits.row(static_cast<int>(p)) + T);
    lp.probabilities.assign(probs.row(static_cast<int>(p)), probs.row(static_cast<int>(p)) + T);
    lp.expected_rating = expected.data[p];
  }
  return out;
}

double ce_loss(const std::vector<LinkPrediction>& predictions,
               const std::vector<std::int32_t>& true_levels) {
  if (predictions.empty()) throw std::invalid_argument("ce_loss: empty pair set");
  if (predictions.size() != true_levels.size())
    throw std::invalid_argument("ce_loss: prediction/target count mismatch");
  double s = 0.0;
  for (std::size_t p = 0; p < predictions.size(); ++p)
    s -= std::log(predictions[p].probabilities[true_levels[p]]);
  return s / static_cast<double>(predictions.size());
}

double nrr_loss(const std::vector<NumArray>& level_repr) {
  if (level_repr.size() < 2) return 0.0;
  Tape tape;
  std::vector<ValueId> ids;
  for (const auto& h : level_repr) ids.push_back(tape.leaf(h));
  return tape.value(nrr_on_tape(tape, ids)).data[0];
}

ModelParams extend_params(const ModelParams& params, std::int32_t n_users, std::int32_t n_items) {
  if (n_users < params.n_users || n_items < params.n_items)
    throw std::invalid_argument("extend_params: target node space is smaller");
  ModelParams out = params;
  out.n_users = n_users;
  out.n_items = n_items;
  for (std::size_t t = 0; t < params.latent.size(); ++t) {
    const NumArray& src = params.latent[t];
    NumArray dst(n_users + n_items, src.cols);
    for (std::int32_t u = 0; u < params.n_users; ++u)
      std::copy_n(src.row(u), src.cols, dst.row(u));
    for (std::int32_t i = 0; i < params.n_items; ++i)
      std::copy_n(src.row(params.n_users + i), src.cols, dst.row(n_users + i));
    out.latent[t] = std::move(dst);
  }
  return out;
}

ModelParams impute_unseen(const ModelParams& params, const std::vector<std::uint8_t>& user_seen,
                          const std::vector<std::uint8_t>& item_seen) {
  if (user_seen.size() != static_cast<std::size_t>(params.n_users) ||
      item_seen.size() != static_cast<std::size_t>(params.n_items))
    throw std::invalid_argument("impute_unseen: flag lengths do not match node counts");

  const auto count_seen = [](const std::vector<std::uint8_t>& seen) {
    std::size_t n = 0;
    for (const auto s : seen) n += s != 0;
    return n;
  };
  const std::size_t seen_users = count_seen(user_seen);
  const std::size_t seen_items = count_seen(item_seen);
  const bool any_unseen_user = seen_users < user_seen.size();
  const bool any_unseen_item = seen_items < item_seen.size();
  if (any_unseen_user && seen_users == 0)
    throw std::invalid_argument("impute_unseen: no seen users to average");
  if (any_unseen_item && seen_items == 0)
    throw std::invalid_argument("impute_unseen: no seen items to average");

  ModelParams out = params;
  for (std::size_t t = 0; t < params.latent.size(); ++t) {
    const NumArray& src = params.latent[t];
    if (src.cols == 0) continue;
    NumArray& dst = out.latent[t];
    if (any_unseen_user) {
      std::vector<double> mean(src.cols, 0.0);
      for (std::int32_t u = 0; u < params.n_users; ++u)
        if (user_seen[u]) axpy(mean.data(), 1.0, src.row(u), src.cols);
      for (auto& v : mean) v /= static_cast<double>(seen_users);
      for (std::int32_t u = 0; u < params.n_users; ++u)
        if (!user_seen[u]) std::copy(mean.begin(), mean.end(), dst.row(u));
    }
    if (any_unseen_item) {
      std::vector<double> mean(src.cols, 0.0);
      for (std::int32_t i = 0; i < params.n_items; ++i)
        if (item_seen[i]) axpy(mean.data(), 1.0, src.row(params.n_users + i), src.cols);
      for (auto& v : mean) v /= static_cast<double>(seen_items);
      for (std::int32_t i = 0; i < params.n_items; ++i)
        if (!item_seen[i]) std::copy(mean.begin(), mean.end(), dst.row(params.n_users + i));
    }
  }
  return out;
}

ModelParams prepare_eval_params(const ModelParams& params, const RatingDataset& train,
                                const AlignedTest& test) {
  ModelParams extended = extend_params(params, test.dataset.n_users, test.dataset.n_items);
  // Seen means "has at least one training rating": zero-degree train nodes
  // never receive decoder gradient either, so they are imputed the same way
  // as genuinely new nodes.
  std::vector<std::uint8_t> user_seen = users_with_ratings(train);
  std::vector<std::uint8_t> item_seen = items_with_ratings(train);
  user_seen.resize(test.dataset.n_users, 0);
  item_seen.resize(test.dataset.n_items, 0);
  return impute_unseen(extended, user_seen, item_seen);
}

double evaluate_rmse(const ModelParams& params, const RatingGraph& graph, const HyperParams& hp,
                     const AlignedTest& test) {
  if (test.dataset.triples.empty()) throw std::invalid_argument("evaluate_rmse: empty test set");
  if (graph.node_count() != params.n_users + params.n_items)
    throw std::invalid_argument("evaluate_rmse: graph/params node space mismatch");

  Tape tape;
  const TapeParamIds ids = register_params(tape, params, false);
  const TapeEncoded enc = encode_on_tape(tape, graph, ids, hp, nullptr);
  const auto pairs = unified_pairs(test.dataset, params.n_users);
  const TapeDecoded dec = decode_on_tape(tape, enc.node_repr, ids, params.levels, pairs);
  return rmse_of(tape.value(dec.expected), test.true_ratings);
}

FitResult fit(const RatingDataset& train, const HyperParams& hp, const AlignedTest* test,
              const EpochCallback& on_epoch) {
  hp.validate();
  if (train.triples.empty()) throw std::invalid_argument("fit: empty training set");

  const RatingGraph graph = build_graph(train);
  const std::int32_t n_nodes = graph.node_count();

  FitResult result;
  result.params = init_params(hp, train.n_users, train.n_items, train.levels, hp.seed);
  result.report.seed = hp.seed;
  for (int l = 1; l <= hp.layers; ++l)
    result.report.dropout_schedule.push_back(std::max(hp.p0 - (l - 1) * hp.theta, 0.0));
  result.report.best_test_rmse = kNaN;
  result.report.final_train_loss = kNaN;

  // Evaluation graph covers the aligned node space (unseen nodes isolated).
  RatingGraph eval_graph;
  if (test) eval_graph = build_graph(train, test->dataset.n_users, test->dataset.n_items);

  const auto train_pairs = unified_pairs(train, train.n_users);
  std::vector<std::int32_t> targets;
  targets.reserve(train.triples.size());
  for (const auto& t : train.triples) targets.push_back(t.level);

  AdamState adam;
  adam.lr = hp.lr;

  double best_rmse = kNaN;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    DropoutPlan plan;
    const DropoutPlan* plan_ptr = nullptr;
    if (hp.p0 > 0.0) {
      plan = sample_dropout(hp.p0, hp.theta, hp.layers, n_nodes, rng::mix(hp.seed, epoch));
      plan_ptr = &plan;
    }

    Tape tape;
    const TapeParamIds ids = register_params(tape, result.params, true);
    const TapeEncoded enc = encode_on_tape(tape, graph, ids, hp, plan_ptr);
    const TapeDecoded dec = decode_on_tape(tape, enc.node_repr, ids, result.params.levels,
                                           train_pairs);
    const ValueId ce = tape.cross_entropy_rows(dec.probs, targets);
    const ValueId nrr = nrr_on_tape(tape, enc.level_repr);
    const ValueId loss =
        hp.lambda_nrr == 0.0 ? ce : tape.scale_add({{1.0, ce}, {hp.lambda_nrr, nrr}});

    EpochRecord rec;
    rec.epoch = epoch;
    rec.ce = tape.value(ce).data[0];
    rec.nrr = tape.value(nrr).data[0];
    rec.train_loss = tape.value(loss).data[0];
    rec.test_rmse = kNaN;
    if (!std::isfinite(rec.train_loss))
      throw std::runtime_error("fit: training diverged at epoch " + std::to_string(epoch) +
                               " (loss=" + std::to_string(rec.train_loss) + ")");

    tape.backward(loss);

    std::vector<NumArray*> tensors = result.params.tensors();
    std::vector<const NumArray*> grads;
    for (const auto id : ids.all()) grads.push_back(&tape.grad(id));
    adam_step(tensors, grads, adam);

    if (test) {
      const ModelParams ready = prepare_eval_params(result.params, train, *test);
      rec.test_rmse = evaluate_rmse(ready, eval_graph, hp, *test);
      if (!(rec.test_rmse >= best_rmse)) {  // NaN-safe "improved"
        best_rmse = rec.test_rmse;
        result.best_params = result.params;
        result.report.best_epoch = epoch;
      }
    }
    result.report.final_train_loss = rec.train_loss;
    result.report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  result.report.best_test_rmse = best_rmse;
  if (!test || result.report.best_epoch < 0) result.best_params = result.params;
  return result;
}

}  // namespace imcgae
