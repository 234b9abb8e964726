#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "listrank/dataset.hpp"
#include "listrank/linalg.hpp"
#include "listrank/nn.hpp"
#include "listrank/pretrain.hpp"

// The scoring model: finetunable cell encoder, fingerprint drug encoder, and
// the bilinear scoring function, plus the per-fold listwise training loop.
namespace listrank::ranker {

enum class LossKind { ListOne, ListAll };

LossKind parse_loss_kind(const std::string& name);  // "list_one" / "list_all"
const char* loss_kind_name(LossKind kind);

struct Model {
  data::Standardizer standardizer;
  nn::Mlp gene_encoder;  // genes -> ... -> latent, finetuned from pretraining
  nn::Mlp drug_encoder;  // fingerprint -> hidden (relu) -> M (identity)
  Matrix bilinear;       // [latent x M]
};

struct TrainConfig {
  LossKind loss = LossKind::ListAll;
  int epochs = 300;
  double lr = 1e-3;
  double tau = 0.5;              // List-All temperature; List-One uses tau = 1
  std::size_t drug_hidden = 128;
  std::size_t embedding_dim = 100;  // M
  std::uint64_t seed = 0;
};

std::vector<double> encode_cell(std::span<const double> expression,
                                const Model& model);
std::vector<double> encode_drug(std::span<const double> fingerprint,
                                const Model& model);
// u^T W v
double score(std::span<const double> u, std::span<const double> v, const Matrix& w);

struct ScoredDrug {
  std::size_t drug_index = 0;
  double value = 0.0;
};

// Scores for exactly the observed drugs, sorted descending; ties broken by
// ascending drug index.
std::vector<ScoredDrug> score_list(
    std::span<const double> expression,
    const std::vector<std::span<const double>>& fingerprints,
    const std::vector<std::size_t>& drug_indices, const Model& model);

// One cell line's ranked list, the unit consumed by a training step.
struct ListSample {
  std::span<const double> expression;
  std::vector<std::span<const double>> fingerprints;
  std::vector<double> aucs;
  std::vector<int> labels;
};

struct ModelGrads {
  std::vector<nn::DenseGrad> gene;
  std::vector<nn::DenseGrad> drug;
  Matrix bilinear;
};

ModelGrads zero_grads(const Model& model);

// Listwise loss of one cell and, when grads != nullptr, the exact gradients
// w.r.t. every learnable tensor (accumulated).
double list_loss_and_grads(const Model& model, const ListSample& sample,
                           LossKind kind, double tau, ModelGrads* grads);

struct EpochLoss {
  int epoch = 0;     // 0 = at initialization
  double loss = 0.0; // sum of per-cell losses over the epoch's training set
};

struct FitResult {
  Model model;
  std::vector<EpochLoss> log;
};

// Trains on the given samples starting from the pretrained encoder (deep
// copied; the checkpoint is not mutated). Throws TrainError naming the epoch
// if the loss turns non-finite.
FitResult fit(const std::vector<ListSample>& train,
              const data::Standardizer& standardizer,
              const nn::Mlp& pretrained_encoder, std::size_t fingerprint_dim,
              const TrainConfig& config);

// Flat parameter vector in a fixed order (gene layers, drug layers, bilinear);
// used by the finite-difference checks.
std::vector<double> flatten_params(const Model& model);
void unflatten_params(std::span<const double> flat, Model& model);
std::vector<double> flatten_grads(const Model& model, const ModelGrads& grads);

}  // namespace listrank::ranker
