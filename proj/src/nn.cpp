#include "gipa/nn.hpp"

#include <cmath>

namespace gipa {

Parameter::Parameter(DenseMatrix v, std::string n)
    : name(std::move(n)),
      value(std::move(v)),
      grad(value.rows(), value.cols()),
      m1(value.rows(), value.cols()),
      m2(value.rows(), value.cols()) {}

DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseMatrix w(fan_in, fan_out);
  for (double& v : w.data()) v = dist(rng);
  return w;
}

DenseMatrix linear(const DenseMatrix& x, const Parameter& w, const Parameter* bias) {
  require_shape(x.cols() == w.value.rows(),
                "linear: x " + shape_string(x) + " vs w " + shape_string(w.value));
  const std::size_t n = x.rows(), a = x.cols(), b = w.value.cols();
  if (bias != nullptr) {
    require_shape(bias->value.rows() == 1 && bias->value.cols() == b,
                  "linear: bias " + shape_string(bias->value));
  }
  DenseMatrix out(n, b);
  for (std::size_t i = 0; i < n; ++i) {
    auto o = out.row(i);
    if (bias != nullptr) {
      auto bv = bias->value.row(0);
      for (std::size_t j = 0; j < b; ++j) o[j] = bv[j];
    }
    auto xi = x.row(i);
    for (std::size_t k = 0; k < a; ++k) {
      const double xv = xi[k];
      if (xv == 0.0) continue;
      auto wk = w.value.row(k);
      for (std::size_t j = 0; j < b; ++j) o[j] += xv * wk[j];
    }
  }
  return out;
}

DenseMatrix linear_backward(const DenseMatrix& x, Parameter& w, Parameter* bias,
                            const DenseMatrix& grad_out) {
  const std::size_t n = x.rows(), a = x.cols(), b = w.value.cols();
  require_shape(a == w.value.rows() && grad_out.rows() == n && grad_out.cols() == b,
                "linear_backward: x " + shape_string(x) + ", w " + shape_string(w.value) +
                    ", grad " + shape_string(grad_out));
  DenseMatrix grad_x(n, a);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = grad_out.row(i);
    auto xi = x.row(i);
    auto gx = grad_x.row(i);
    for (std::size_t k = 0; k < a; ++k) {
      auto wk = w.value.row(k);
      auto gwk = w.grad.row(k);
      double acc = 0.0;
      const double xv = xi[k];
      for (std::size_t j = 0; j < b; ++j) {
        acc += g[j] * wk[j];
        gwk[j] += xv * g[j];
      }
      gx[k] = acc;
    }
    if (bias != nullptr) {
      auto gb = bias->grad.row(0);
      for (std::size_t j = 0; j < b; ++j) gb[j] += g[j];
    }
  }
  return grad_x;
}

DenseMatrix relu(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

DenseMatrix relu_backward(const DenseMatrix& x, const DenseMatrix& grad_out) {
  require_shape(x.same_shape(grad_out), "relu_backward: " + shape_string(x) + " vs " +
                                            shape_string(grad_out));
  DenseMatrix out = grad_out;
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    if (!(xd[i] > 0.0)) od[i] = 0.0;
  }
  return out;
}

DenseMatrix dropout(const DenseMatrix& x, double rate, Rng& rng, Phase phase, DropoutMask& mask) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  mask.scale.clear();
  if (phase == Phase::eval || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mask.scale.resize(x.size());
  DenseMatrix out = x;
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    mask.scale[i] = u(rng) < rate ? 0.0 : keep_scale;
    od[i] *= mask.scale[i];
  }
  return out;
}

DenseMatrix dropout_backward(const DropoutMask& mask, const DenseMatrix& grad_out) {
  if (mask.identity()) return grad_out;
  require_shape(mask.scale.size() == grad_out.size(), "dropout_backward: stale mask");
  DenseMatrix out = grad_out;
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= mask.scale[i];
  return out;
}

DenseMatrix concat_cols(const std::vector<const DenseMatrix*>& parts) {
  require_shape(!parts.empty(), "concat_cols: no inputs");
  const std::size_t n = parts.front()->rows();
  std::size_t width = 0;
  for (const auto* p : parts) {
    require_shape(p->rows() == n, "concat_cols: row mismatch " + shape_string(*p));
    width += p->cols();
  }
  DenseMatrix out(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    auto o = out.row(i);
    std::size_t off = 0;
    for (const auto* p : parts) {
      auto src = p->row(i);
      for (std::size_t c = 0; c < src.size(); ++c) o[off + c] = src[c];
      off += src.size();
    }
  }
  return out;
}

std::vector<DenseMatrix> split_cols(const DenseMatrix& m, const std::vector<std::size_t>& widths) {
  std::size_t total = 0;
  for (auto w : widths) total += w;
  require_shape(total == m.cols(), "split_cols: widths do not sum to " + std::to_string(m.cols()));
  std::vector<DenseMatrix> out;
  out.reserve(widths.size());
  for (auto w : widths) out.emplace_back(m.rows(), w);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      auto dst = out[p].row(i);
      for (std::size_t c = 0; c < widths[p]; ++c) dst[c] = src[off + c];
      off += widths[p];
    }
  }
  return out;
}

Mlp::Mlp(MlpSpec spec, const std::string& name) : spec_(std::move(spec)) {
  if (spec_.widths.size() < 2) throw std::invalid_argument("MlpSpec: needs at least one layer");
  if (!(spec_.dropout_rate >= 0.0 && spec_.dropout_rate < 1.0)) {
    throw std::invalid_argument("MlpSpec: dropout rate must lie in [0, 1)");
  }
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    if (spec_.widths[l] == 0 || spec_.widths[l + 1] == 0) {
      throw std::invalid_argument("MlpSpec: zero width in " + name);
    }
    weights_.emplace_back(DenseMatrix(spec_.widths[l], spec_.widths[l + 1]),
                          name + ".w" + std::to_string(l));
    if (spec_.use_bias) {
      biases_.emplace_back(DenseMatrix(1, spec_.widths[l + 1]), name + ".b" + std::to_string(l));
    }
  }
}

void Mlp::init_glorot(Rng& rng) {
  for (auto& w : weights_) w.value = glorot_uniform(w.value.rows(), w.value.cols(), rng);
  for (auto& b : biases_) b.value.fill(0.0);
}

DenseMatrix Mlp::forward(const DenseMatrix& x, Phase phase, Rng& rng, MlpCache& cache) const {
  require_shape(x.cols() == in_width(), "Mlp::forward: input width " + std::to_string(x.cols()) +
                                            ", expected " + std::to_string(in_width()));
  const std::size_t layers = depth();
  cache.inputs.assign(layers, {});
  cache.pre_activation.assign(layers - 1, {});
  cache.masks.assign(layers - 1, {});
  cache.inputs[0] = x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    cache.pre_activation[l] =
        linear(cache.inputs[l], weights_[l], spec_.use_bias ? &biases_[l] : nullptr);
    cache.inputs[l + 1] =
        dropout(relu(cache.pre_activation[l]), spec_.dropout_rate, rng, phase, cache.masks[l]);
  }
  return linear(cache.inputs[layers - 1], weights_[layers - 1],
                spec_.use_bias ? &biases_[layers - 1] : nullptr);
}

DenseMatrix Mlp::backward(const MlpCache& cache, const DenseMatrix& grad_out) {
  require_shape(cache.inputs.size() == depth(), "Mlp::backward: stale cache");
  DenseMatrix g = grad_out;
  for (std::size_t l = depth(); l-- > 0;) {
    g = linear_backward(cache.inputs[l], weights_[l], spec_.use_bias ? &biases_[l] : nullptr, g);
    if (l > 0) {
      g = relu_backward(cache.pre_activation[l - 1], dropout_backward(cache.masks[l - 1], g));
    }
  }
  return g;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    if (spec_.use_bias) out.push_back(&biases_[l]);
  }
}

void adamw_step(Parameter& p, const AdamWOptions& opt) {
  if (!p.grad.all_finite()) throw NumericError("adamw_step: non-finite gradient in " + p.name);
  p.step_count += 1;
  const double t = static_cast<double>(p.step_count);
  const double bc1 = 1.0 - std::pow(opt.beta1, t);
  const double bc2 = 1.0 - std::pow(opt.beta2, t);
  auto v = p.value.data();
  auto g = p.grad.data();
  auto m1 = p.m1.data();
  auto m2 = p.m2.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] -= opt.lr * opt.weight_decay * v[i];
    m1[i] = opt.beta1 * m1[i] + (1.0 - opt.beta1) * g[i];
    m2[i] = opt.beta2 * m2[i] + (1.0 - opt.beta2) * g[i] * g[i];
    const double m_hat = m1[i] / bc1;
    const double v_hat = m2[i] / bc2;
    v[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    g[i] = 0.0;
  }
}

}  // namespace gipa
