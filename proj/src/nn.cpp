#include "listrank/nn.hpp"

#include <cmath>
#include <string>

#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"

namespace listrank::nn {

namespace {

void check_layer_input(std::span<const double> x, const DenseLayer& layer) {
  if (x.size() != layer.in_dim) {
    throw ShapeError("dense layer expects input of length " +
                     std::to_string(layer.in_dim) + ", got " +
                     std::to_string(x.size()));
  }
}

}  // namespace

DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Activation act,
                      Rng& rng) {
  DenseLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.activation = act;
  layer.weights.resize(in_dim * out_dim);
  layer.bias.assign(out_dim, 0.0);
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (double& w : layer.weights) w = rng.uniform(-bound, bound);
  return layer;
}

std::vector<double> dense_affine(std::span<const double> x, const DenseLayer& layer) {
  check_layer_input(x, layer);
  std::vector<double> z(layer.out_dim);
  kernels::matvec(layer.weights.data(), layer.out_dim, layer.in_dim, x.data(),
                  z.data());
  kernels::axpy(1.0, layer.bias.data(), z.data(), layer.out_dim);
  return z;
}

std::vector<double> activate(std::span<const double> z, Activation act) {
  std::vector<double> y(z.begin(), z.end());
  if (act == Activation::Relu) {
    for (double& v : y) v = v > 0.0 ? v : 0.0;
  }
  return y;
}

std::vector<double> dense_forward(std::span<const double> x, const DenseLayer& layer) {
  return activate(dense_affine(x, layer), layer.activation);
}

DenseGrad zero_grad(const DenseLayer& layer) {
  DenseGrad g;
  g.weights.assign(layer.weights.size(), 0.0);
  g.bias.assign(layer.bias.size(), 0.0);
  return g;
}

std::vector<double> dense_backward(std::span<const double> x,
                                   std::span<const double> z,
                                   std::span<const double> grad_out,
                                   const DenseLayer& layer, DenseGrad& grad) {
  check_layer_input(x, layer);
  if (z.size() != layer.out_dim || grad_out.size() != layer.out_dim) {
    throw ShapeError("dense backward: output-side length mismatch");
  }
  // dL/dz, relu' taken as 0 at z == 0
  std::vector<double> gz(grad_out.begin(), grad_out.end());
  if (layer.activation == Activation::Relu) {
    for (std::size_t i = 0; i < gz.size(); ++i) {
      if (z[i] <= 0.0) gz[i] = 0.0;
    }
  }
  kernels::rank1_update(grad.weights.data(), layer.out_dim, layer.in_dim, 1.0,
                        gz.data(), x.data());
  kernels::axpy(1.0, gz.data(), grad.bias.data(), layer.out_dim);
  std::vector<double> gx(layer.in_dim);
  kernels::matvec_t(layer.weights.data(), layer.out_dim, layer.in_dim, gz.data(),
                    gx.data());
  return gx;
}

std::vector<double> mlp_forward(std::span<const double> x, const Mlp& mlp,
                                MlpTrace* trace) {
  std::vector<double> cur(x.begin(), x.end());
  if (trace) {
    trace->inputs.clear();
    trace->preacts.clear();
    trace->inputs.reserve(mlp.layers.size());
    trace->preacts.reserve(mlp.layers.size());
  }
  for (const DenseLayer& layer : mlp.layers) {
    std::vector<double> z = dense_affine(cur, layer);
    if (trace) {
      trace->inputs.push_back(std::move(cur));
      trace->preacts.push_back(z);
    }
    cur = activate(z, layer.activation);
  }
  return cur;
}

std::vector<double> mlp_backward(const Mlp& mlp, const MlpTrace& trace,
                                 std::span<const double> grad_out,
                                 std::vector<DenseGrad>& grads) {
  if (trace.inputs.size() != mlp.layers.size() || grads.size() != mlp.layers.size()) {
    throw ShapeError("mlp backward: trace/grad size mismatch");
  }
  std::vector<double> g(grad_out.begin(), grad_out.end());
  for (std::size_t li = mlp.layers.size(); li-- > 0;) {
    g = dense_backward(trace.inputs[li], trace.preacts[li], g, mlp.layers[li],
                       grads[li]);
  }
  return g;
}

std::vector<DenseGrad> zero_grads(const Mlp& mlp) {
  std::vector<DenseGrad> grads;
  grads.reserve(mlp.layers.size());
  for (const DenseLayer& layer : mlp.layers) grads.push_back(zero_grad(layer));
  return grads;
}

std::vector<double> softmax(std::span<const double> scores, double tau) {
  if (scores.empty()) throw DomainError("softmax: empty score vector");
  if (!(tau > 0.0)) throw DomainError("softmax: tau must be > 0");
  for (double s : scores) {
    if (!std::isfinite(s)) throw DomainError("softmax: non-finite score");
  }
  const double m = kernels::max_value(scores.data(), scores.size());
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp((scores[i] - m) / tau);
  }
  const double total = kernels::sum(p.data(), p.size());
  for (double& v : p) {
    v /= total;
    // keep entries inside (0, 1] even when an exponent underflows
    if (v < kProbFloor) v = kProbFloor;
  }
  return p;
}

double cross_entropy(std::span<const double> targets, std::span<const double> probs) {
  if (targets.size() != probs.size()) {
    throw ShapeError("cross_entropy: length mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0.0) throw DomainError("cross_entropy: negative target");
    if (targets[i] == 0.0) continue;
    const double p = probs[i] < kProbFloor ? kProbFloor : probs[i];
    loss -= targets[i] * std::log(p);
  }
  return loss;
}

AdamState make_adam(std::size_t n_params, double lr) {
  AdamState st;
  st.lr = lr;
  st.first_moment.assign(n_params, 0.0);
  st.second_moment.assign(n_params, 0.0);
  return st;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n ||
      state.second_moment.size() != n) {
    throw ShapeError("adam_step: parameter/gradient/moment shape mismatch");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  kernels::adam_update(params.data(), state.first_moment.data(),
                       state.second_moment.data(), grads.data(), n, state.lr,
                       state.beta1, state.beta2, state.epsilon, bc1, bc2);
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: h must be > 0");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> g(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double orig = xs[i];
    xs[i] = orig + h;
    const double fp = f(xs);
    xs[i] = orig - h;
    const double fm = f(xs);
    xs[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value");
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace listrank::nn
