#include "gipa/trainer.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace gipa {
namespace {

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1), got " + std::to_string(r));
  }
}

std::vector<NamedTensor> snapshot(GipaModel& model) {
  std::vector<NamedTensor> out;
  for (auto* p : model.parameters()) out.emplace_back(p->name, p->value);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.node_emb == 0 || c.edge_emb == 0 || c.hidden_units == 0) {
    throw std::invalid_argument("widths must be positive");
  }
  if (c.att_mlp_depth == 0 || c.prop_mlp_depth == 0 || c.num_gipa_layers == 0) {
    throw std::invalid_argument("depths and layer count must be positive");
  }
  if (c.heads == 0 || c.node_emb % c.heads != 0) {
    throw std::invalid_argument("heads (" + std::to_string(c.heads) + ") must divide node_emb (" +
                                std::to_string(c.node_emb) + ")");
  }
  check_rate(c.edge_drop, "edge_drop");
  check_rate(c.dropout_node, "dropout_node");
  check_rate(c.dropout_attention, "dropout_attention");
  check_rate(c.dropout_propagation, "dropout_propagation");
  check_rate(c.dropout_aggregation, "dropout_aggregation");
  check_rate(c.dropout_final_fc, "dropout_final_fc");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) throw std::invalid_argument("lr must be >= 0");
  if (!(c.weight_decay >= 0.0) || !std::isfinite(c.weight_decay)) {
    throw std::invalid_argument("weight_decay must be >= 0");
  }
  if (c.eval_every == 0) throw std::invalid_argument("eval_every must be >= 1");
}

ModelSpec model_spec(const TrainConfig& c, std::size_t node_in, std::size_t edge_in,
                     std::size_t num_labels) {
  ModelSpec s;
  s.node_in = node_in;
  s.edge_in = edge_in;
  s.num_labels = num_labels;
  s.num_layers = c.num_gipa_layers;
  s.node_emb = c.node_emb;
  s.edge_emb = c.edge_emb;
  s.heads = c.heads;
  s.hidden = c.hidden_units;
  s.att_depth = c.att_mlp_depth;
  s.prop_depth = c.prop_mlp_depth;
  s.dropout = {c.dropout_node, c.dropout_attention, c.dropout_propagation, c.dropout_aggregation};
  s.final_dropout = c.dropout_final_fc;
  s.ablate_prop_edges = c.ablate_prop_edges;
  return s;
}

TrainConfig without_dropout(TrainConfig c) {
  c.edge_drop = 0.0;
  c.dropout_node = c.dropout_attention = c.dropout_propagation = c.dropout_aggregation = 0.0;
  c.dropout_final_fc = 0.0;
  return c;
}

std::vector<bool> edge_drop(const CsrGraph& g, double rate, Rng& rng) {
  check_rate(rate, "edge drop rate");
  std::vector<bool> keep(g.num_undirected_edges(), true);
  if (rate == 0.0) return keep;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t e = 0; e < keep.size(); ++e) keep[e] = !(u(rng) < rate);
  return keep;
}

SplitReports evaluate_model(const GipaModel& model, const DatasetBundle& data) {
  Rng unused(0);
  auto act = model.forward(data.graph, Phase::eval, unused);
  return {evaluate_logits(act.logits, data.labels, data.splits.valid),
          evaluate_logits(act.logits, data.labels, data.splits.test)};
}

TrainResult train(const DatasetBundle& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  const auto& g = data.graph;
  require_shape(data.labels.rows() == g.num_nodes(), "train: labels do not match graph");
  if (data.splits.train.empty()) throw std::invalid_argument("train: empty train split");

  Rng rng(cfg.seed);
  GipaModel model(model_spec(cfg, g.node_dim(), g.edge_dim(), data.num_labels()));
  model.init_glorot(rng);
  const auto params = model.parameters();
  const AdamWOptions opt{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};

  TrainResult result;
  result.best_parameters = snapshot(model);
  double best_valid = -1.0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto keep = edge_drop(g, cfg.edge_drop, rng);
    const CsrGraph dropped = cfg.edge_drop > 0.0 ? g.with_edges_kept(keep) : CsrGraph{};
    const CsrGraph& gt = cfg.edge_drop > 0.0 ? dropped : g;

    auto act = model.forward(gt, Phase::train, rng);
    auto bce = bce_with_logits(act.logits, data.labels, data.splits.train);
    if (!std::isfinite(bce.loss)) {
      std::ostringstream msg;
      msg << "non-finite training loss at epoch " << epoch << " (loss=" << bce.loss
          << ", logits finite=" << (act.logits.all_finite() ? "yes" : "no") << ")";
      throw TrainingAborted(msg.str());
    }
    model.backward(gt, act, bce.grad);
    for (auto* p : params) {
      try {
        adamw_step(*p, opt);
      } catch (const NumericError& e) {
        throw TrainingAborted("epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }

    EpochRecord rec{epoch, bce.loss, std::nullopt, std::nullopt};
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      auto rep = evaluate_model(model, data);
      if (std::isfinite(rep.valid.mean_auc)) rec.valid_auc = rep.valid.mean_auc;
      if (std::isfinite(rep.test.mean_auc)) rec.test_auc = rep.test.mean_auc;
      const bool better = rec.valid_auc ? *rec.valid_auc > best_valid : best_valid < 0.0;
      if (better) {
        if (rec.valid_auc) best_valid = *rec.valid_auc;
        result.best_parameters = snapshot(model);
        result.best_epoch = epoch;
        result.best_valid = rep.valid;
        result.best_test = rep.test;
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

GipaModel load_model(const DatasetBundle& data, const TrainConfig& cfg,
                     const std::filesystem::path& checkpoint) {
  validate(cfg);
  GipaModel model(model_spec(cfg, data.graph.node_dim(), data.graph.edge_dim(), data.num_labels()));
  load_parameters(checkpoint, model.parameters());
  return model;
}

std::string metrics_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,valid_auc,test_auc\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + ',' + fmt(r.train_loss) + ',';
    if (r.valid_auc) out += fmt(*r.valid_auc);
    out += ',';
    if (r.test_auc) out += fmt(*r.test_auc);
    out += '\n';
  }
  return out;
}

}  // namespace gipa
