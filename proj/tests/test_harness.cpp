#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "listrank/errors.hpp"
#include "listrank/harness.hpp"
#include "listrank/rng.hpp"
#include "listrank/synthetic.hpp"

using namespace listrank;

namespace {

synth::Data small_data(std::uint64_t seed) {
  synth::Config cfg;
  cfg.n_cells = 25;
  cfg.n_drugs = 12;
  cfg.n_types = 3;
  cfg.n_genes = 8;
  cfg.fp_dim = 10;
  cfg.seed = seed;
  return synth::generate(cfg);
}

pretrain::Config small_pretrain() {
  pretrain::Config cfg;
  cfg.hidden = {8};
  cfg.latent = 3;
  cfg.epochs = 5;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("make_bundle validates the join") {
  synth::Data d = small_data(1);
  SUBCASE("missing expression profile") {
    auto cells = d.cells;
    cells.pop_back();
    CHECK_THROWS_AS(harness::make_bundle(d.responses, cells, d.drugs, 5.0),
                    DomainError);
  }
  SUBCASE("missing fingerprint") {
    auto drugs = d.drugs;
    drugs.pop_back();
    CHECK_THROWS_AS(harness::make_bundle(d.responses, d.cells, drugs, 5.0),
                    DomainError);
  }
  SUBCASE("valid join resolves every id") {
    const auto bundle = harness::make_bundle(d.responses, d.cells, d.drugs, 5.0);
    CHECK(bundle.profile_of_cell.size() == bundle.labeled.table.cells.size());
    CHECK(bundle.profile_of_drug.size() == bundle.labeled.table.drugs.size());
  }
}

TEST_CASE("training data never includes test-fold cells") {
  const synth::Data d = small_data(2);
  const auto bundle = harness::make_bundle(d.responses, d.cells, d.drugs, 5.0);
  const auto folds = data::make_lco_folds(bundle.cells, 5, 9);

  for (int fold = 0; fold < 5; ++fold) {
    const auto train = harness::training_profiles(bundle, folds, fold);
    for (std::size_t idx : train) CHECK(folds.fold[idx] != fold);
    const auto samples = harness::training_samples(bundle, folds, fold);
    std::size_t expected = 0;
    for (std::size_t c = 0; c < bundle.labeled.table.cells.size(); ++c) {
      const bool in_train =
          folds.fold[bundle.profile_of_cell[c]] != fold &&
          !bundle.labeled.table.cell_observations[c].empty();
      if (in_train) ++expected;
    }
    CHECK(samples.size() == expected);
  }
}

TEST_CASE("pretrain_fold is a pure function of the training folds") {
  synth::Data d = small_data(3);
  const auto folds_src = harness::make_bundle(d.responses, d.cells, d.drugs, 5.0);
  const auto folds = data::make_lco_folds(folds_src.cells, 5, 4);
  const int test_fold = 2;

  const auto base = harness::pretrain_fold(
      harness::make_bundle(d.responses, d.cells, d.drugs, 5.0), folds, test_fold,
      small_pretrain());

  // mutate a test-fold cell's expression; the checkpoint must not move
  synth::Data mutated = d;
  for (std::size_t i = 0; i < mutated.cells.size(); ++i) {
    if (folds.fold[i] == test_fold) {
      for (double& v : mutated.cells[i].expression) v += 100.0;
    }
  }
  const auto shifted = harness::pretrain_fold(
      harness::make_bundle(mutated.responses, mutated.cells, mutated.drugs, 5.0),
      folds, test_fold, small_pretrain());
  CHECK(base.standardizer.mean == shifted.standardizer.mean);
  for (std::size_t li = 0; li < base.encoder.layers.size(); ++li) {
    CHECK(base.encoder.layers[li].weights == shifted.encoder.layers[li].weights);
  }

  // mutate a training-fold cell instead; the checkpoint must move
  synth::Data train_mutated = d;
  for (std::size_t i = 0; i < train_mutated.cells.size(); ++i) {
    if (folds.fold[i] != test_fold) {
      for (double& v : train_mutated.cells[i].expression) v += 100.0;
      break;
    }
  }
  const auto moved = harness::pretrain_fold(
      harness::make_bundle(train_mutated.responses, train_mutated.cells,
                           train_mutated.drugs, 5.0),
      folds, test_fold, small_pretrain());
  CHECK(base.standardizer.mean != moved.standardizer.mean);
}

TEST_CASE("evaluate_fold reports exactly the test cells") {
  const synth::Data d = small_data(5);
  const auto bundle = harness::make_bundle(d.responses, d.cells, d.drugs, 5.0);
  const auto folds = data::make_lco_folds(bundle.cells, 5, 11);

  ranker::TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.drug_hidden = 6;
  tcfg.embedding_dim = 3;
  tcfg.seed = 1;
  const auto ckpt = harness::pretrain_fold(bundle, folds, 0, small_pretrain());
  const auto fit = harness::train_fold(bundle, folds, 0, ckpt, tcfg);
  const auto reports =
      harness::evaluate_fold(bundle, folds, 0, fit.model, {1, 3, 5});

  std::size_t expected = 0;
  for (std::size_t c = 0; c < bundle.labeled.table.cells.size(); ++c) {
    if (folds.fold[bundle.profile_of_cell[c]] == 0 &&
        !bundle.labeled.table.cell_observations[c].empty()) {
      ++expected;
    }
  }
  CHECK(reports.size() == expected);
  for (const auto& r : reports) {
    CHECK(r.fold == 0);
    CHECK(r.hits.size() == 3);
    CHECK(r.ap_defined);  // labeling guarantees >= 1 positive per cell
  }
}

TEST_CASE("fold seeds differ per stage and per fold") {
  CHECK(harness::pretrain_seed(1, 0) != harness::pretrain_seed(1, 1));
  CHECK(harness::pretrain_seed(1, 0) != harness::train_seed(1, 0));
  CHECK(harness::train_seed(1, 0) != harness::train_seed(1, 1));
  CHECK(harness::pretrain_seed(1, 0) == harness::pretrain_seed(1, 0));
}

TEST_CASE("synthetic generator invariants") {
  const synth::Data d = small_data(7);
  // every cell retains observations after the missing mask
  for (const auto& obs_list :
       harness::make_bundle(d.responses, d.cells, d.drugs, 5.0)
           .labeled.table.cell_observations) {
    CHECK(!obs_list.empty());
  }
  // AUCs clamped to the valid range and finite
  for (const auto& obs : d.responses.observations) {
    CHECK(obs.auc >= 0.0);
    CHECK(std::isfinite(obs.auc));
  }
  // deterministic
  const synth::Data again = small_data(7);
  CHECK(again.responses.observations.size() == d.responses.observations.size());
  CHECK(again.true_scores.data == d.true_scores.data);
}
