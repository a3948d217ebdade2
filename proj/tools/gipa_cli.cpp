#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace gipa::cli;
  CLI::App app{"GIPA graph attention trainer"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train a model, write checkpoint.bin and metrics.csv");
  train_cmd->add_option("--config", train.config, "config file")->required();
  train_cmd->add_option("--seed", train.seed, "override the config seed");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the valid/test splits");
  eval_cmd->add_option("--config", eval.config, "config file")->required();
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  grad_cmd->add_option("--config", grad.config, "config file (default: built-in defaults)");
  grad_cmd->add_option("--nodes", grad.nodes, "random graph size, 1..50")->capture_default_str();
  grad_cmd->add_option("--degree", grad.degree, "average degree")->capture_default_str();
  grad_cmd->add_option("--layers", grad.layers, "stacked GIPA layers")->capture_default_str();
  grad_cmd->add_option("--tolerance", grad.tolerance, "relative tolerance")->capture_default_str();
  grad_cmd->add_option("--abs-tolerance", grad.abs_tolerance, "absolute tolerance near zero")
      ->capture_default_str();
  grad_cmd->add_option("--max-entries", grad.max_entries, "entries probed per tensor, 0 = all")
      ->capture_default_str();
  grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
  grad_cmd->add_flag("--inject-fault", grad.inject_fault, "corrupt one gradient (negative control)")
      ->group("");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic dataset");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--n", gen.n, "number of nodes")->capture_default_str();
  gen_cmd->add_option("--degree", gen.degree, "average degree")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--node-dim", gen.node_dim)->capture_default_str();
  gen_cmd->add_option("--edge-dim", gen.edge_dim)->capture_default_str();
  gen_cmd->add_option("--labels", gen.labels)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
  if (*grad_cmd) return cmd_gradcheck(grad, std::cout, std::cerr);
  if (*gen_cmd) return cmd_gen(gen, std::cout, std::cerr);
  return kUsageError;
}
