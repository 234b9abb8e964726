#pragma once

#include <cstdint>
#include <vector>

#include "listrank/checkpoint.hpp"
#include "listrank/dataset.hpp"
#include "listrank/metrics.hpp"
#include "listrank/pretrain.hpp"
#include "listrank/ranker.hpp"

// Glue between the data tables and the per-fold pipeline stages. Both the CLI
// and the test suites run folds through these helpers so they share exact
// semantics (train/test membership, seeding, sample construction).
namespace listrank::harness {

// Joined view: every response cell/drug resolved to its profile.
struct Bundle {
  data::LabeledDataset labeled;
  std::vector<data::CellProfile> cells;  // expression file order
  std::vector<data::DrugProfile> drugs;  // fingerprint file order
  std::vector<std::size_t> profile_of_cell;  // response cell idx -> cells idx
  std::vector<std::size_t> profile_of_drug;  // response drug idx -> drugs idx
};

Bundle make_bundle(data::ResponseTable responses,
                   std::vector<data::CellProfile> cells,
                   std::vector<data::DrugProfile> drugs, double percentile);

// Distinct seed streams per stage so pretraining and ranking never share one.
std::uint64_t pretrain_seed(std::uint64_t seed, int fold);
std::uint64_t train_seed(std::uint64_t seed, int fold);

// Expression-profile indices of cells outside the test fold.
std::vector<std::size_t> training_profiles(const Bundle& bundle,
                                           const data::FoldAssignment& folds,
                                           int test_fold);

// Standardizer fit on the training folds' cells plus an autoencoder
// pretrained on their standardized expression.
io::EncoderCheckpoint pretrain_fold(const Bundle& bundle,
                                    const data::FoldAssignment& folds, int test_fold,
                                    const pretrain::Config& config,
                                    std::vector<pretrain::EpochLoss>* log = nullptr);

// One ListSample per training cell with at least one observation, in response
// cell order; drug lists in ascending drug-index order.
std::vector<ranker::ListSample> training_samples(const Bundle& bundle,
                                                 const data::FoldAssignment& folds,
                                                 int test_fold);

ranker::FitResult train_fold(const Bundle& bundle, const data::FoldAssignment& folds,
                             int test_fold, const io::EncoderCheckpoint& checkpoint,
                             const ranker::TrainConfig& config);

// Metric reports for the test fold's cells.
std::vector<metrics::CellReport> evaluate_fold(const Bundle& bundle,
                                               const data::FoldAssignment& folds,
                                               int test_fold,
                                               const ranker::Model& model,
                                               const std::vector<int>& ks);

}  // namespace listrank::harness
