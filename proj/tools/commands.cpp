#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "gipa/checkpoint.hpp"
#include "gipa/config.hpp"
#include "gipa/dataset.hpp"
#include "gipa/gradcheck.hpp"
#include "gipa/trainer.hpp"

namespace gipa::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void print_report(std::ostream& out, const char* split, const EvalReport& r) {
  out << split << "_auc=" << (std::isnan(r.mean_auc) ? "n/a" : fmt(r.mean_auc))
      << " " << split << "_loss=" << fmt(r.loss) << " excluded_labels=" << r.excluded_labels
      << '\n';
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  DatasetBundle data;
  try {
    cfg = load_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    if (cfg.data_dir.empty()) throw ConfigError("config does not set data_dir");
    if (cfg.out_dir.empty()) throw ConfigError("config does not set out_dir");
    data = load_dataset(cfg.data_dir);
    fs::create_directories(cfg.out_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  TrainResult result;
  try {
    result = train(data, cfg);
  } catch (const NumericError& e) {
    err << "training aborted: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    const fs::path dir = cfg.out_dir;
    write_checkpoint(dir / "checkpoint.bin", result.best_parameters);
    std::ofstream csv(dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    csv << metrics_csv(result.history);
    if (!csv) throw std::runtime_error("cannot write metrics.csv");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  out << "best_epoch=" << result.best_epoch << '\n';
  print_report(out, "valid", result.best_valid);
  print_report(out, "test", result.best_test);
  return kOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = load_config(args.config);
    if (cfg.data_dir.empty()) throw ConfigError("config does not set data_dir");
    const auto data = load_dataset(cfg.data_dir);
    const auto model = load_model(data, cfg, args.checkpoint);
    const auto rep = evaluate_model(model, data);
    print_report(out, "valid", rep.valid);
    print_report(out, "test", rep.test);
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err) {
  GradCheckOptions opt;
  TrainConfig cfg;
  try {
    if (args.nodes == 0 || args.nodes > 50) throw std::invalid_argument("--nodes must be in 1..50");
    if (!(args.tolerance > 0.0) || !(args.abs_tolerance >= 0.0)) {
      throw std::invalid_argument("tolerances must be positive");
    }
    if (!args.config.empty()) cfg = load_config(args.config);
    opt.nodes = args.nodes;
    opt.avg_degree = args.degree;
    opt.layers = args.layers;
    opt.rel_tol = args.tolerance;
    opt.abs_tol = args.abs_tolerance;
    opt.max_entries = args.max_entries;
    opt.seed = args.seed;
    if (args.inject_fault) {
      // Negative control: perturb one analytic gradient tensor.
      opt.tamper = [](GipaModel& m, InputGrads&) {
        auto& w = m.layers().front().att_mlp.weights().front();
        for (double& v : w.grad.data()) v = v * 1.5 + 1e-3;
      };
    }
    cfg.num_gipa_layers = opt.layers;
    validate(cfg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  const auto report = run_gradcheck(cfg, opt);
  out << std::left << std::setw(34) << "tensor" << std::setw(9) << "entries" << std::setw(14)
      << "max_abs_err" << std::setw(14) << "max_rel_err" << "result\n";
  const TensorCheck* worst = nullptr;
  for (const auto& t : report.tensors) {
    out << std::left << std::setw(34) << t.name << std::setw(9) << t.entries_checked
        << std::setw(14) << std::setprecision(3) << std::scientific << t.max_abs_error
        << std::setw(14) << t.max_rel_error << std::defaultfloat << (t.passed ? "pass" : "FAIL")
        << '\n';
    if (!t.passed && (worst == nullptr || t.max_rel_error > worst->max_rel_error)) worst = &t;
  }
  if (!report.passed) {
    err << "gradient check failed; worst tensor " << worst->name << " relative error "
        << worst->max_rel_error << '\n';
    return kVerificationFailed;
  }
  out << "all " << report.tensors.size() << " tensors pass\n";
  return kOk;
}

int cmd_gen(const GenArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.out_dir.empty()) throw std::invalid_argument("--out is required");
    SyntheticSpec spec;
    spec.num_nodes = args.n;
    spec.avg_degree = args.degree;
    spec.seed = args.seed;
    spec.node_dim = args.node_dim;
    spec.edge_dim = args.edge_dim;
    spec.num_labels = args.labels;
    const auto bundle = generate_synthetic(spec);
    write_dataset(bundle, args.out_dir);
    out << "wrote " << bundle.graph.num_nodes() << " nodes, " << bundle.graph.num_undirected_edges()
        << " edges, " << bundle.num_labels() << " labels to " << args.out_dir << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace gipa::cli
