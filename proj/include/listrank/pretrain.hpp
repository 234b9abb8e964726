#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "listrank/nn.hpp"

// Stacked autoencoder over (standardized) expression profiles. The encoder is
// exported for finetuning by the ranking model; the mirrored decoder exists
// only during pretraining.
namespace listrank::pretrain {

struct Config {
  std::vector<std::size_t> hidden{4096, 1024};  // encoder hidden widths
  std::size_t latent = 128;
  int epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct Autoencoder {
  nn::Mlp encoder;  // relu hidden layers, identity output
  nn::Mlp decoder;  // mirrored widths, relu hidden, identity output
};

Autoencoder init_autoencoder(std::size_t input_dim, const Config& config, Rng& rng);

struct Reconstruction {
  std::vector<double> embedding;
  std::vector<double> reconstruction;
};

Reconstruction autoencode(std::span<const double> x, const Autoencoder& ae);

// (1/|C|) * sum_c ||x_c - x~_c||^2
double reconstruction_loss(const std::vector<std::vector<double>>& xs,
                           const Autoencoder& ae);

// Same value, with gradients accumulated into enc_grads / dec_grads when given.
double reconstruction_loss_and_grads(const std::vector<std::vector<double>>& xs,
                                     const Autoencoder& ae,
                                     std::vector<nn::DenseGrad>* enc_grads,
                                     std::vector<nn::DenseGrad>* dec_grads);

struct EpochLoss {
  int epoch = 0;     // 0 = at initialization
  double loss = 0.0; // full training-set reconstruction loss
};

// Mini-batch Adam on the reconstruction objective. Throws TrainError naming
// the epoch if the loss turns non-finite.
Autoencoder pretrain(const std::vector<std::vector<double>>& train_x,
                     const Config& config, std::vector<EpochLoss>* log = nullptr);

}  // namespace listrank::pretrain
