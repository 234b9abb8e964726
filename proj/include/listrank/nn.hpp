#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "listrank/rng.hpp"

// Minimal dense network kernels with exact analytic gradients. All math is in
// 64-bit floats; problem sizes are small and the gradient checks run at 1e-6
// relative tolerance.
namespace listrank::nn {

enum class Activation { Relu, Identity };

struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::Identity;
  std::vector<double> weights;  // row-major [out_dim x in_dim]
  std::vector<double> bias;     // [out_dim]
};

// Weights uniform in [-sqrt(6/(in+out)), +sqrt(6/(in+out))], biases zero.
DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Activation act,
                      Rng& rng);

// activation(W x + b)
std::vector<double> dense_forward(std::span<const double> x, const DenseLayer& layer);
// Pre-activation only: z = W x + b
std::vector<double> dense_affine(std::span<const double> x, const DenseLayer& layer);
std::vector<double> activate(std::span<const double> z, Activation act);

struct DenseGrad {
  std::vector<double> weights;
  std::vector<double> bias;
};

DenseGrad zero_grad(const DenseLayer& layer);

// Chains dL/dy through the layer given the forward input x and pre-activation z.
// Accumulates weight/bias gradients into `grad` and returns dL/dx.
std::vector<double> dense_backward(std::span<const double> x,
                                   std::span<const double> z,
                                   std::span<const double> grad_out,
                                   const DenseLayer& layer, DenseGrad& grad);

// Plain feed-forward stack. Layer dims must chain.
struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
};

// Per-layer forward state kept for backprop.
struct MlpTrace {
  std::vector<std::vector<double>> inputs;   // input to each layer
  std::vector<std::vector<double>> preacts;  // z of each layer
};

std::vector<double> mlp_forward(std::span<const double> x, const Mlp& mlp,
                                MlpTrace* trace = nullptr);
// Returns dL/dx; accumulates per-layer grads (sized like mlp.layers).
std::vector<double> mlp_backward(const Mlp& mlp, const MlpTrace& trace,
                                 std::span<const double> grad_out,
                                 std::vector<DenseGrad>& grads);
std::vector<DenseGrad> zero_grads(const Mlp& mlp);

// Probabilities are floored at this value before any log so cross-entropy with
// extreme logits stays finite.
inline constexpr double kProbFloor = 1e-300;

// probs[i] = exp(scores[i]/tau) / sum_j exp(scores[j]/tau), max-subtracted.
std::vector<double> softmax(std::span<const double> scores, double tau);

// -sum_i targets[i] * log(probs[i]); a term is 0 whenever targets[i] == 0.
// Targets are nonnegative but need not sum to 1.
double cross_entropy(std::span<const double> targets, std::span<const double> probs);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

AdamState make_adam(std::size_t n_params, double lr);

// In-place Adam update with bias correction.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h = 1e-5);

}  // namespace listrank::nn
