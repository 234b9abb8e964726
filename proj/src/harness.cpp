#include "listrank/harness.hpp"

#include <unordered_map>

#include "listrank/errors.hpp"
#include "listrank/rng.hpp"

namespace listrank::harness {

Bundle make_bundle(data::ResponseTable responses,
                   std::vector<data::CellProfile> cells,
                   std::vector<data::DrugProfile> drugs, double percentile) {
  Bundle bundle;
  std::unordered_map<std::string, std::size_t> cell_idx, drug_idx;
  for (std::size_t i = 0; i < cells.size(); ++i) cell_idx.emplace(cells[i].id, i);
  for (std::size_t i = 0; i < drugs.size(); ++i) drug_idx.emplace(drugs[i].id, i);
  bundle.profile_of_cell.reserve(responses.cells.size());
  for (const std::string& id : responses.cells) {
    auto it = cell_idx.find(id);
    if (it == cell_idx.end()) {
      throw DomainError("no expression profile for cell '" + id + "'");
    }
    bundle.profile_of_cell.push_back(it->second);
  }
  bundle.profile_of_drug.reserve(responses.drugs.size());
  for (const std::string& id : responses.drugs) {
    auto it = drug_idx.find(id);
    if (it == drug_idx.end()) {
      throw DomainError("no fingerprint for drug '" + id + "'");
    }
    bundle.profile_of_drug.push_back(it->second);
  }
  bundle.labeled = data::label_sensitivity(std::move(responses), percentile);
  bundle.cells = std::move(cells);
  bundle.drugs = std::move(drugs);
  return bundle;
}

std::uint64_t pretrain_seed(std::uint64_t seed, int fold) {
  return derive_seed(seed, 0x100u + static_cast<std::uint64_t>(fold));
}

std::uint64_t train_seed(std::uint64_t seed, int fold) {
  return derive_seed(seed, 0x200u + static_cast<std::uint64_t>(fold));
}

std::vector<std::size_t> training_profiles(const Bundle& bundle,
                                           const data::FoldAssignment& folds,
                                           int test_fold) {
  if (folds.fold.size() != bundle.cells.size()) {
    throw ShapeError("fold assignment does not cover the expression file");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
    if (folds.fold[i] != test_fold) out.push_back(i);
  }
  if (out.empty()) throw DomainError("no training cells outside the test fold");
  return out;
}

io::EncoderCheckpoint pretrain_fold(const Bundle& bundle,
                                    const data::FoldAssignment& folds, int test_fold,
                                    const pretrain::Config& config,
                                    std::vector<pretrain::EpochLoss>* log) {
  const std::vector<std::size_t> train = training_profiles(bundle, folds, test_fold);
  io::EncoderCheckpoint ckpt;
  std::vector<const data::CellProfile*> train_cells;
  train_cells.reserve(train.size());
  for (std::size_t i : train) train_cells.push_back(&bundle.cells[i]);
  ckpt.standardizer.fit(train_cells);
  std::vector<std::vector<double>> xs;
  xs.reserve(train.size());
  for (std::size_t i : train) {
    xs.push_back(ckpt.standardizer.apply(bundle.cells[i].expression));
  }
  pretrain::Config fold_config = config;
  fold_config.seed = pretrain_seed(config.seed, test_fold);
  const pretrain::Autoencoder ae = pretrain::pretrain(xs, fold_config, log);
  ckpt.encoder = ae.encoder;
  return ckpt;
}

std::vector<ranker::ListSample> training_samples(const Bundle& bundle,
                                                 const data::FoldAssignment& folds,
                                                 int test_fold) {
  const auto& table = bundle.labeled.table;
  std::vector<ranker::ListSample> samples;
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    const std::size_t profile = bundle.profile_of_cell[c];
    if (folds.fold[profile] == test_fold) continue;
    const auto& obs_list = table.cell_observations[c];
    if (obs_list.empty()) continue;
    ranker::ListSample sample;
    sample.expression = bundle.cells[profile].expression;
    sample.fingerprints.reserve(obs_list.size());
    sample.aucs.reserve(obs_list.size());
    sample.labels.reserve(obs_list.size());
    for (std::size_t oi : obs_list) {
      const data::Observation& obs = table.observations[oi];
      sample.fingerprints.emplace_back(
          bundle.drugs[bundle.profile_of_drug[obs.drug]].fingerprint);
      sample.aucs.push_back(obs.auc);
      sample.labels.push_back(bundle.labeled.labels[oi]);
    }
    samples.push_back(std::move(sample));
  }
  if (samples.empty()) {
    throw DomainError("no training cells with observations outside the test fold");
  }
  return samples;
}

ranker::FitResult train_fold(const Bundle& bundle, const data::FoldAssignment& folds,
                             int test_fold, const io::EncoderCheckpoint& checkpoint,
                             const ranker::TrainConfig& config) {
  const std::vector<ranker::ListSample> samples =
      training_samples(bundle, folds, test_fold);
  ranker::TrainConfig fold_config = config;
  fold_config.seed = train_seed(config.seed, test_fold);
  const std::size_t fp_dim = bundle.drugs.front().fingerprint.size();
  return ranker::fit(samples, checkpoint.standardizer, checkpoint.encoder, fp_dim,
                     fold_config);
}

std::vector<metrics::CellReport> evaluate_fold(const Bundle& bundle,
                                               const data::FoldAssignment& folds,
                                               int test_fold,
                                               const ranker::Model& model,
                                               const std::vector<int>& ks) {
  const auto& table = bundle.labeled.table;
  std::vector<metrics::CellReport> reports;
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    const std::size_t profile = bundle.profile_of_cell[c];
    if (folds.fold[profile] != test_fold) continue;
    const auto& obs_list = table.cell_observations[c];
    if (obs_list.empty()) continue;
    const std::vector<double> u =
        ranker::encode_cell(bundle.cells[profile].expression, model);
    std::vector<double> scores, aucs;
    std::vector<int> labels;
    scores.reserve(obs_list.size());
    for (std::size_t oi : obs_list) {
      const data::Observation& obs = table.observations[oi];
      const std::vector<double> v = ranker::encode_drug(
          bundle.drugs[bundle.profile_of_drug[obs.drug]].fingerprint, model);
      scores.push_back(ranker::score(u, v, model.bilinear));
      aucs.push_back(obs.auc);
      labels.push_back(bundle.labeled.labels[oi]);
    }
    reports.push_back(
        metrics::evaluate_cell(table.cells[c], test_fold, scores, aucs, labels, ks));
  }
  return reports;
}

}  // namespace listrank::harness
