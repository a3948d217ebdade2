#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace gipa::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kUsageError = 2,
  kNumericFailure = 3,
};

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::string config;
  std::string checkpoint;
};
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

struct GradcheckArgs {
  std::string config;  // empty: built-in defaults
  std::size_t nodes = 12;
  double degree = 3.0;
  std::size_t layers = 2;
  double tolerance = 1e-4;
  double abs_tolerance = 1e-7;
  std::size_t max_entries = 64;
  std::uint64_t seed = 0;
  bool inject_fault = false;
};
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err);

struct GenArgs {
  std::string out_dir;
  std::size_t n = 300;
  double degree = 3.0;
  std::uint64_t seed = 0;
  std::size_t node_dim = 8;
  std::size_t edge_dim = 8;
  std::size_t labels = 8;
};
int cmd_gen(const GenArgs& args, std::ostream& out, std::ostream& err);

}  // namespace gipa::cli
