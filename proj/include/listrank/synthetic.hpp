#pragma once

#include <cstdint>
#include <filesystem>

#include "listrank/dataset.hpp"
#include "listrank/linalg.hpp"

// Synthetic benchmark generator: expression = cancer-type centroid + noise,
// random-sparse count fingerprints, and AUCs produced by sigmoid-squashing the
// negated score of a planted bilinear model plus observation noise. The
// planted scores are kept so tests can compare against the planted oracle
// ranking.
namespace listrank::synth {

struct Config {
  int n_cells = 100;
  int n_drugs = 60;
  int n_types = 4;
  std::size_t n_genes = 40;
  std::size_t fp_dim = 64;
  std::size_t planted_rank = 2;   // rank of the planted interaction term
  double type_spread = 2.0;       // centroid scale
  double expression_noise = 0.5;
  double fp_density = 0.3;
  // Relative weight of the drug potency term (a fingerprint-linear factor,
  // i.e. the bilinear model's rank-1 augmentation against a constant cell
  // direction) vs the cell-drug interaction term. Real response panels have
  // strong drug main effects; 0 disables it.
  double potency_weight = 1.5;
  double auc_noise_sd = 0.003;
  double missing_rate = 0.15;
  std::uint64_t seed = 0;
};

struct Data {
  std::vector<data::CellProfile> cells;
  std::vector<data::DrugProfile> drugs;
  data::ResponseTable responses;  // only non-missing pairs
  Matrix true_scores;             // [n_cells x n_drugs], planted and noise-free
};

Data generate(const Config& config);

// responses.csv, expression.csv, fingerprints.csv, truth.csv
void write_csv(const Data& data, const std::filesystem::path& dir);

}  // namespace listrank::synth
