#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gipa/dense_matrix.hpp"

namespace gipa {

using Rng = std::mt19937_64;

enum class Phase { train, eval };

// Raised when a non-finite value reaches a place that must stay finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A learnable tensor together with its gradient accumulator and the two
/// AdamW moment buffers. All four matrices share one shape.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
  DenseMatrix m1;
  DenseMatrix m2;
  std::uint64_t step_count = 0;

  Parameter() = default;
  explicit Parameter(DenseMatrix v, std::string n = {});

  void zero_grad() { grad.fill(0.0); }
};

DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// out = x * w (+ bias broadcast over rows).
DenseMatrix linear(const DenseMatrix& x, const Parameter& w, const Parameter* bias = nullptr);
// Accumulates w.grad (and bias.grad) and returns the gradient w.r.t. x.
DenseMatrix linear_backward(const DenseMatrix& x, Parameter& w, Parameter* bias,
                            const DenseMatrix& grad_out);

DenseMatrix relu(const DenseMatrix& x);
// Subgradient at 0 is 0.
DenseMatrix relu_backward(const DenseMatrix& x, const DenseMatrix& grad_out);

// Per-entry multiplier recorded by a training-mode dropout call: 0 for a
// dropped entry, 1/(1-rate) for a survivor. Empty means identity.
struct DropoutMask {
  std::vector<double> scale;
  bool identity() const { return scale.empty(); }
};

// Inverted dropout. Eval mode and rate 0 are exact identities.
DenseMatrix dropout(const DenseMatrix& x, double rate, Rng& rng, Phase phase, DropoutMask& mask);
DenseMatrix dropout_backward(const DropoutMask& mask, const DenseMatrix& grad_out);

DenseMatrix concat_cols(const std::vector<const DenseMatrix*>& parts);
// Inverse of concat_cols for gradients: splits columns into blocks of the given widths.
std::vector<DenseMatrix> split_cols(const DenseMatrix& m, const std::vector<std::size_t>& widths);

struct MlpSpec {
  // widths[0] is the input width, widths.back() the output width; one linear
  // layer per consecutive pair. Hidden layers use ReLU then dropout, the
  // final layer is linear with identity activation.
  std::vector<std::size_t> widths;
  bool use_bias = true;
  double dropout_rate = 0.0;
};

// Everything the backward pass needs from one forward call.
struct MlpCache {
  std::vector<DenseMatrix> inputs;        // input to each linear layer
  std::vector<DenseMatrix> pre_activation;  // hidden pre-ReLU values
  std::vector<DropoutMask> masks;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, const std::string& name);

  void init_glorot(Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  std::size_t depth() const { return weights_.size(); }
  std::size_t in_width() const { return spec_.widths.front(); }
  std::size_t out_width() const { return spec_.widths.back(); }

  DenseMatrix forward(const DenseMatrix& x, Phase phase, Rng& rng, MlpCache& cache) const;
  DenseMatrix backward(const MlpCache& cache, const DenseMatrix& grad_out);

  std::vector<Parameter>& weights() { return weights_; }
  const std::vector<Parameter>& weights() const { return weights_; }
  std::vector<Parameter>& biases() { return biases_; }
  const std::vector<Parameter>& biases() const { return biases_; }

  void collect(std::vector<Parameter*>& out);

 private:
  MlpSpec spec_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
};

struct AdamWOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled weight decay followed by a bias-corrected Adam update. Zeroes
// the gradient and increments step_count. Throws NumericError on a
// non-finite gradient without touching the parameter.
void adamw_step(Parameter& p, const AdamWOptions& opt);

}  // namespace gipa
