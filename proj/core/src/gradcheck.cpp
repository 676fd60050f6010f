#include "imcgae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "imcgae/model.hpp"
#include "imcgae/rng.hpp"

namespace imcgae::gradcheck {

namespace {

NumArray random_array(rng::Engine& g, int rows, int cols, double scale = 1.0) {
  NumArray a(rows, cols);
  for (auto& v : a.data) v = rng::uniform(g, -scale, scale);
  return a;
}

/// Random values kept away from zero (ReLU kink, cosine scale).
NumArray random_array_off_zero(rng::Engine& g, int rows, int cols) {
  NumArray a = random_array(g, rows, cols);
  for (auto& v : a.data)
    if (std::abs(v) < 0.05) v = v < 0.0 ? v - 0.1 : v + 0.1;
  return a;
}

double eval_loss(const LossBuilder& build, const std::vector<NumArray>& params) {
  Tape tape;
  std::vector<ValueId> ids;
  ids.reserve(params.size());
  for (const auto& p : params) ids.push_back(tape.leaf(p, true));
  return tape.value(build(tape, ids)).data[0];
}

/// Tiny fixed problem: 3 users, 3 items, 3 rating levels, 7 edges.
struct ToyProblem {
  RatingDataset ds;
  RatingGraph graph;
  HyperParams hp;
  ModelParams params;
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  std::vector<std::int32_t> targets;
};

ToyProblem make_toy(std::uint64_t seed) {
  ToyProblem toy;
  std::vector<RawRating> raw{
      {"u0", "i0", 1.0, {}}, {"u0", "i1", 2.0, {}}, {"u1", "i0", 3.0, {}},
      {"u1", "i2", 1.0, {}}, {"u2", "i1", 3.0, {}}, {"u2", "i2", 2.0, {}},
      {"u0", "i2", 3.0, {}},
  };
  toy.ds = build_dataset(raw);
  toy.graph = build_graph(toy.ds);
  toy.hp.layers = 2;
  toy.hp.dim_identical = 2;
  toy.hp.dim_role = 2;
  toy.hp.dim_latent = 2;
  toy.hp.dim_decode = 3;
  toy.hp.p0 = 0.3;
  toy.hp.theta = 0.1;
  toy.hp.lambda_nrr = 0.7;
  toy.params = init_params(toy.hp, toy.ds.n_users, toy.ds.n_items, toy.ds.levels, seed);
  for (const auto& t : toy.ds.triples) {
    toy.pairs.emplace_back(t.user, toy.ds.n_users + t.item);
    toy.targets.push_back(t.level);
  }
  return toy;
}

}  // namespace

double max_rel_error(const LossBuilder& build, const std::vector<NumArray>& params, double step) {
  Tape tape;
  std::vector<ValueId> ids;
  ids.reserve(params.size());
  for (const auto& p : params) ids.push_back(tape.leaf(p, true));
  tape.backward(build(tape, ids));

  double worst = 0.0;
  std::vector<NumArray> probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t e = 0; e < params[k].size(); ++e) {
      const double keep = probe[k].data[e];
      probe[k].data[e] = keep + step;
      const double up = eval_loss(build, probe);
      probe[k].data[e] = keep - step;
      const double down = eval_loss(build, probe);
      probe[k].data[e] = keep;

      const double fd = (up - down) / (2.0 * step);
      const double an = tape.grad(ids[k]).data[e];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

std::vector<CheckResult> run_all(std::uint64_t seed, double tolerance) {
  rng::Engine g(seed);
  std::vector<CheckResult> results;
  const auto check = [&](const std::string& name, const LossBuilder& build,
                         std::vector<NumArray> params, double step = 1e-4) {
    const double err = max_rel_error(build, params, step);
    results.push_back({name, err, err < tolerance});
  };

  ToyProblem toy = make_toy(rng::mix(seed, 101));
  const RatingGraph& graph = toy.graph;
  const std::int32_t n = graph.node_count();

  // gather: 3x2 table read with a repeated index.
  check("gather",
        [w = random_array(g, 4, 2)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.gather(p[0], {2, 0, 2, 1}), w);
        },
        {random_array(g, 3, 2)});

  check("concat_cols",
        [w = random_array(g, 2, 4)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.concat_cols({p[0], p[1], p[2]}), w);
        },
        {random_array(g, 2, 1), random_array(g, 2, 2), random_array(g, 2, 1)});

  check("spmm",
        [&graph, w = random_array(g, n, 2)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.spmm(graph, 0, nullptr, p[0]), w);
        },
        {random_array(g, n, 2)});

  const DropoutPlan plan = sample_dropout(0.4, 0.1, 2, n, rng::mix(seed, 7));
  check("spmm_masked",
        [&graph, &plan, w = random_array(g, n, 2)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.spmm(graph, 1, &plan.layers[0], p[0]), w);
        },
        {random_array(g, n, 2)});

  check("relu",
        [w = random_array(g, 3, 4)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.relu(p[0]), w);
        },
        {random_array_off_zero(g, 3, 4)});

  check("tanh",
        [w = random_array(g, 3, 4)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.tanh_map(p[0]), w);
        },
        {random_array(g, 3, 4)});

  check("linear",
        [w = random_array(g, 4, 3)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.matmul_nt(p[0], p[1]), w);
        },
        {random_array(g, 4, 5), random_array(g, 3, 5)});

  check("scale_add",
        [w = random_array(g, 3, 3)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.scale_add({{0.5, p[0]}, {-1.25, p[1]}, {2.0, p[0]}}), w);
        },
        {random_array(g, 3, 3), random_array(g, 3, 3)});

  check("bilinear_pairs",
        [w = random_array(g, 3, 1)](Tape& t, const std::vector<ValueId>& p) {
          const ValueId projected = t.matmul_nt(p[0], p[1]);
          return t.dot_const(t.pair_dot(p[0], projected, {{0, 2}, {1, 3}, {2, 0}}), w);
        },
        {random_array(g, 4, 3), random_array(g, 3, 3)});

  check("softmax_rows",
        [w = random_array(g, 3, 4)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.softmax_rows(p[0]), w);
        },
        {random_array(g, 3, 4)});

  check("cross_entropy",
        [](Tape& t, const std::vector<ValueId>& p) {
          return t.cross_entropy_rows(t.softmax_rows(p[0]), {1, 0, 2});
        },
        {random_array(g, 3, 3)});

  check("expected_value",
        [w = random_array(g, 3, 1)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.expected_value_rows(p[0], {1.0, 2.5, 4.0, 5.0}), w);
        },
        {random_array(g, 3, 4)});

  check("cosine_rows",
        [w = random_array(g, 3, 1)](Tape& t, const std::vector<ValueId>& p) {
          return t.dot_const(t.cosine_rows(p[0], p[1]), w);
        },
        {random_array_off_zero(g, 3, 4), random_array_off_zero(g, 3, 4)});

  check("sum_all",
        [](Tape& t, const std::vector<ValueId>& p) { return t.sum_all(t.tanh_map(p[0])); },
        {random_array(g, 3, 4)});

  // End-to-end training loss, with and without node dropout.
  const auto end_to_end = [&toy](const DropoutPlan* plan) {
    return [&toy, plan](Tape& t, const std::vector<ValueId>& p) {
      TapeParamIds ids;
      ids.identical = p[0];
      ids.role = p[1];
      const std::size_t T = toy.params.latent.size();
      for (std::size_t k = 0; k < T; ++k) ids.latent.push_back(p[2 + k]);
      ids.transform = p[2 + T];
      for (std::size_t k = 0; k < T; ++k) ids.decoder.push_back(p[3 + T + k]);

      const TapeEncoded enc = encode_on_tape(t, toy.graph, ids, toy.hp, plan);
      const TapeDecoded dec = decode_on_tape(t, enc.node_repr, ids, toy.params.levels, toy.pairs);
      const ValueId ce = t.cross_entropy_rows(dec.probs, toy.targets);
      const ValueId nrr = nrr_on_tape(t, enc.level_repr);
      return t.scale_add({{1.0, ce}, {toy.hp.lambda_nrr, nrr}});
    };
  };

  std::vector<NumArray> model_tensors;
  for (const auto* t : static_cast<const ModelParams&>(toy.params).tensors())
    model_tensors.push_back(*t);
  check("end_to_end", end_to_end(nullptr), model_tensors);

  const DropoutPlan train_plan =
      sample_dropout(toy.hp.p0, toy.hp.theta, toy.hp.layers, n, rng::mix(seed, 21));
  check("end_to_end_dropout", end_to_end(&train_plan), model_tensors);

  return results;
}

}  // namespace imcgae::gradcheck
