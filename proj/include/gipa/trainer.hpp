#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gipa/checkpoint.hpp"
#include "gipa/dataset.hpp"
#include "gipa/graph.hpp"
#include "gipa/metrics.hpp"
#include "gipa/model.hpp"
#include "gipa/nn.hpp"

namespace gipa {

// Defaults follow the published GIPA hyperparameter table; weight_decay,
// epochs and eval_every are not given there.
struct TrainConfig {
  std::size_t node_emb = 80;
  std::size_t edge_emb = 16;
  std::size_t att_mlp_depth = 2;
  std::size_t heads = 8;
  std::size_t prop_mlp_depth = 2;
  std::size_t hidden_units = 80;
  std::size_t num_gipa_layers = 6;
  double edge_drop = 0.1;
  double dropout_node = 0.1;
  double dropout_attention = 0.1;
  double dropout_propagation = 0.25;
  double dropout_aggregation = 0.25;
  double dropout_final_fc = 0.5;
  double lr = 0.01;
  double weight_decay = 0.0;
  std::size_t epochs = 200;
  std::size_t eval_every = 5;
  std::uint64_t seed = 0;
  bool ablate_prop_edges = false;
  std::string data_dir;
  std::string out_dir;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const TrainConfig& cfg);

ModelSpec model_spec(const TrainConfig& cfg, std::size_t node_in, std::size_t edge_in,
                     std::size_t num_labels);

// Turns every dropout (including edge drop) off.
TrainConfig without_dropout(TrainConfig cfg);

// Keep-mask over undirected edge ids; each edge is dropped independently
// with probability `rate`.
std::vector<bool> edge_drop(const CsrGraph& g, double rate, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> valid_auc;
  std::optional<double> test_auc;
};

// Raised when the loss stops being finite.
class TrainingAborted : public NumericError {
 public:
  using NumericError::NumericError;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<NamedTensor> best_parameters;
  std::size_t best_epoch = 0;
  EvalReport best_valid;
  EvalReport best_test;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full-graph training: one AdamW step per epoch on the masked BCE of the
/// train nodes, with evaluation every eval_every epochs (and at the last
/// epoch). Keeps the parameters with the best validation AUC; with no
/// usable validation AUC the final parameters are kept.
TrainResult train(const DatasetBundle& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Builds the model for `data` from `cfg` and loads `checkpoint` into it.
GipaModel load_model(const DatasetBundle& data, const TrainConfig& cfg,
                     const std::filesystem::path& checkpoint);

struct SplitReports {
  EvalReport valid;
  EvalReport test;
};
// Eval-mode forward on the full graph.
SplitReports evaluate_model(const GipaModel& model, const DatasetBundle& data);

std::string metrics_csv(const std::vector<EpochRecord>& history);

}  // namespace gipa
