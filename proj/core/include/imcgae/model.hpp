#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "imcgae/adam.hpp"
#include "imcgae/array.hpp"
#include "imcgae/dataset.hpp"
#include "imcgae/graph.hpp"
#include "imcgae/tape.hpp"

namespace imcgae {

struct HyperParams {
  int layers = 2;        // message-passing layers L
  int dim_identical = 60;
  int dim_role = 60;
  int dim_latent = 60;
  int dim_decode = 40;
  double p0 = 0.2;       // initial node dropout probability
  double theta = 0.1;    // per-layer dropout decay
  double lambda_nrr = 4e-3;
  double lr = 0.01;
  int epochs = 1000;
  std::uint64_t seed = 0;

  int input_dim() const { return dim_identical + dim_role + dim_latent; }
  /// Throws std::invalid_argument on out-of-range settings. Feature widths
  /// may be zero individually (ablations) as long as the input stays non-empty.
  void validate() const;
};

/// Learnable state. The identical embedding is one row shared by every
/// node, the role table has a user row and an item row, and each rating
/// level owns a latent table over the unified node space plus a decoder
/// matrix. Levels and node counts are carried along so checkpoints are
/// self-describing.
struct ModelParams {
  NumArray identical;              // 1 x dim_identical
  NumArray role;                   // 2 x dim_role
  std::vector<NumArray> latent;    // T tables, (n_users + n_items) x dim_latent
  NumArray transform;              // dim_decode x input_dim
  std::vector<NumArray> decoder;   // T matrices, dim_decode x dim_decode
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  std::vector<double> levels;

  std::vector<NumArray*> tensors();
  std::vector<const NumArray*> tensors() const;
  std::vector<std::string> tensor_names() const;
};

/// Xavier-uniform initialization, bound sqrt(6 / (rows + cols)) per table.
ModelParams init_params(const HyperParams& hp, std::int32_t n_users, std::int32_t n_items,
                        std::vector<double> levels, std::uint64_t seed);

/// Per-level representations h_t (input_dim columns) and the final node
/// representations n (dim_decode columns).
struct Encoded {
  NumArray node_repr;
  std::vector<NumArray> level_repr;
};

Encoded encode(const RatingGraph& graph, const ModelParams& params, const HyperParams& hp,
               const DropoutPlan* dropout = nullptr);

/// Per-pair rating distribution: logits over levels, their softmax, and the
/// expected rating under the level values.
struct LinkPrediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
  double expected_rating = 0.0;
};

std::vector<LinkPrediction> decode(const NumArray& node_repr,
                                   const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs,
                                   const ModelParams& params);

/// Mean cross entropy of the true level under each prediction.
double ce_loss(const std::vector<LinkPrediction>& predictions,
               const std::vector<std::int32_t>& true_levels);

/// Negative cosine similarity between adjacent levels' representations,
/// summed over all nodes; zero when there is a single level.
double nrr_loss(const std::vector<NumArray>& level_repr);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double ce = 0.0;
  double nrr = 0.0;
  double test_rmse = 0.0;   // NaN when no test set is tracked
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<double> dropout_schedule;  // p_l for l in [1..L]
  double best_test_rmse = 0.0;           // NaN when no test set
  int best_epoch = -1;
  double final_train_loss = 0.0;
  std::uint64_t seed = 0;
};

struct FitResult {
  ModelParams params;       // after the last epoch
  ModelParams best_params;  // best test RMSE; == params when no test set
  TrainReport report;
};

/// Full-batch training: per epoch resample dropout, encode, decode every
/// training pair, CE + lambda*NRR, backward, Adam. Deterministic per seed.
/// Throws on divergence (non-finite loss).
using EpochCallback = std::function<void(const EpochRecord&)>;
FitResult fit(const RatingDataset& train, const HyperParams& hp,
              const AlignedTest* test = nullptr, const EpochCallback& on_epoch = {});

/// Replaces latent rows of nodes not marked seen with the mean latent row
/// of the seen nodes of the same role, per level. Identical/role embeddings
/// are shared and need no imputation. Throws when a role has no seen node
/// (only for roles that actually have unseen nodes).
ModelParams impute_unseen(const ModelParams& params, const std::vector<std::uint8_t>& user_seen,
                          const std::vector<std::uint8_t>& item_seen);

/// Re-homes the latent tables into a larger node space (train users keep
/// their indices, items shift by the new user count). New rows are zero
/// until impute_unseen fills them.
ModelParams extend_params(const ModelParams& params, std::int32_t n_users, std::int32_t n_items);

/// Extend + impute for an aligned test set in one step.
ModelParams prepare_eval_params(const ModelParams& params, const RatingDataset& train,
                                const AlignedTest& test);

/// RMSE of expected ratings against the true test values, dropout disabled.
/// `params` must already cover the graph's node space. Throws on empty test.
double evaluate_rmse(const ModelParams& params, const RatingGraph& graph, const HyperParams& hp,
                     const AlignedTest& test);

// Tape-level assembly, shared by fit, decode, evaluation and the gradient
// check harness.

struct TapeParamIds {
  ValueId identical = -1;
  ValueId role = -1;
  std::vector<ValueId> latent;
  ValueId transform = -1;
  std::vector<ValueId> decoder;

  std::vector<ValueId> all() const;
};

TapeParamIds register_params(Tape& tape, const ModelParams& params, bool as_parameters);

struct TapeEncoded {
  ValueId node_repr = -1;
  std::vector<ValueId> level_repr;
};

TapeEncoded encode_on_tape(Tape& tape, const RatingGraph& graph, const TapeParamIds& ids,
                           const HyperParams& hp, const DropoutPlan* dropout);

struct TapeDecoded {
  ValueId logits = -1;
  ValueId probs = -1;
  ValueId expected = -1;
};

TapeDecoded decode_on_tape(Tape& tape, ValueId node_repr, const TapeParamIds& ids,
                           const std::vector<double>& levels,
                           const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs);

ValueId nrr_on_tape(Tape& tape, const std::vector<ValueId>& level_repr);

/// Copies same-shaped tensor values into the canonical tensor order.
void assign_tensors(ModelParams& params, const std::vector<NumArray>& values);

}  // namespace imcgae
