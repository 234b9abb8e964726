#include "listrank/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"

namespace listrank::pretrain {

namespace {

using nn::Activation;

// Adam state per tensor (weights and bias of every layer).
struct Optimizer {
  std::vector<nn::AdamState> states;

  explicit Optimizer(const std::vector<nn::Mlp*>& nets, double lr) {
    for (nn::Mlp* net : nets) {
      for (nn::DenseLayer& layer : net->layers) {
        states.push_back(nn::make_adam(layer.weights.size(), lr));
        states.push_back(nn::make_adam(layer.bias.size(), lr));
      }
    }
  }

  void step(const std::vector<nn::Mlp*>& nets,
            const std::vector<std::vector<nn::DenseGrad>*>& grads) {
    std::size_t s = 0;
    for (std::size_t n = 0; n < nets.size(); ++n) {
      for (std::size_t li = 0; li < nets[n]->layers.size(); ++li) {
        nn::DenseLayer& layer = nets[n]->layers[li];
        nn::DenseGrad& g = (*grads[n])[li];
        nn::adam_step(layer.weights, g.weights, states[s++]);
        nn::adam_step(layer.bias, g.bias, states[s++]);
      }
    }
  }
};

}  // namespace

Autoencoder init_autoencoder(std::size_t input_dim, const Config& config, Rng& rng) {
  if (input_dim == 0) throw ShapeError("autoencoder: input_dim must be > 0");
  if (config.latent == 0) throw ShapeError("autoencoder: latent must be > 0");
  Autoencoder ae;
  std::size_t prev = input_dim;
  for (std::size_t width : config.hidden) {
    ae.encoder.layers.push_back(nn::make_dense(prev, width, Activation::Relu, rng));
    prev = width;
  }
  ae.encoder.layers.push_back(
      nn::make_dense(prev, config.latent, Activation::Identity, rng));
  prev = config.latent;
  for (auto it = config.hidden.rbegin(); it != config.hidden.rend(); ++it) {
    ae.decoder.layers.push_back(nn::make_dense(prev, *it, Activation::Relu, rng));
    prev = *it;
  }
  ae.decoder.layers.push_back(
      nn::make_dense(prev, input_dim, Activation::Identity, rng));
  return ae;
}

Reconstruction autoencode(std::span<const double> x, const Autoencoder& ae) {
  Reconstruction out;
  out.embedding = nn::mlp_forward(x, ae.encoder);
  out.reconstruction = nn::mlp_forward(out.embedding, ae.decoder);
  return out;
}

double reconstruction_loss(const std::vector<std::vector<double>>& xs,
                           const Autoencoder& ae) {
  return reconstruction_loss_and_grads(xs, ae, nullptr, nullptr);
}

double reconstruction_loss_and_grads(const std::vector<std::vector<double>>& xs,
                                     const Autoencoder& ae,
                                     std::vector<nn::DenseGrad>* enc_grads,
                                     std::vector<nn::DenseGrad>* dec_grads) {
  if (xs.empty()) throw DomainError("reconstruction loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  for (const std::vector<double>& x : xs) {
    nn::MlpTrace enc_trace, dec_trace;
    const std::vector<double> u = nn::mlp_forward(x, ae.encoder, &enc_trace);
    const std::vector<double> recon = nn::mlp_forward(u, ae.decoder, &dec_trace);
    loss += kernels::sumsq_diff(x.data(), recon.data(), x.size()) * inv_n;
    if (!enc_grads) continue;
    // d/dx~ of (1/n)||x - x~||^2
    std::vector<double> grad(recon.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] = 2.0 * (recon[i] - x[i]) * inv_n;
    }
    const std::vector<double> gu =
        nn::mlp_backward(ae.decoder, dec_trace, grad, *dec_grads);
    nn::mlp_backward(ae.encoder, enc_trace, gu, *enc_grads);
  }
  return loss;
}

Autoencoder pretrain(const std::vector<std::vector<double>>& train_x,
                     const Config& config, std::vector<EpochLoss>* log) {
  if (train_x.empty()) throw DomainError("pretrain: no training cells");
  Rng rng(config.seed);
  Autoencoder ae = init_autoencoder(train_x.front().size(), config, rng);

  if (log) log->push_back({0, reconstruction_loss(train_x, ae)});
  if (config.epochs <= 0) return ae;

  std::vector<nn::Mlp*> nets{&ae.encoder, &ae.decoder};
  Optimizer opt(nets, config.lr);
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch =
      std::min<std::size_t>(std::max<std::size_t>(config.batch_size, 1),
                            train_x.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, order.size());
      std::vector<std::vector<double>> chunk;
      chunk.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) chunk.push_back(train_x[order[i]]);
      std::vector<nn::DenseGrad> enc_g = nn::zero_grads(ae.encoder);
      std::vector<nn::DenseGrad> dec_g = nn::zero_grads(ae.decoder);
      reconstruction_loss_and_grads(chunk, ae, &enc_g, &dec_g);
      std::vector<std::vector<nn::DenseGrad>*> grads{&enc_g, &dec_g};
      opt.step(nets, grads);
    }
    const double epoch_loss = reconstruction_loss(train_x, ae);
    if (!std::isfinite(epoch_loss)) {
      throw TrainError("pretraining diverged at epoch " + std::to_string(epoch));
    }
    if (log) log->push_back({epoch, epoch_loss});
  }
  return ae;
}

}  // namespace listrank::pretrain
