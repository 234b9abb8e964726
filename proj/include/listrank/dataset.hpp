#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

// Ingestion of response / expression / fingerprint tables, percentile
// sensitivity labeling, and stratified leave-cell-lines-out folds.
namespace listrank::data {

struct Observation {
  std::size_t cell = 0;  // index into ResponseTable::cells
  std::size_t drug = 0;  // index into ResponseTable::drugs
  double auc = 0.0;      // lower AUC = more sensitive
};

// Sparse (cell, drug, AUC) observations with per-cell drug lists.
struct ResponseTable {
  std::vector<std::string> cells;
  std::vector<std::string> drugs;
  std::vector<Observation> observations;
  // Per cell: observation indices sorted by drug index ascending.
  std::vector<std::vector<std::size_t>> cell_observations;

  void rebuild_cell_index();
};

struct CellProfile {
  std::string id;
  std::string cancer_type;
  std::vector<double> expression;
};

struct DrugProfile {
  std::string id;
  std::vector<double> fingerprint;  // nonnegative counts
};

struct LabeledDataset {
  ResponseTable table;
  std::vector<int> labels;         // aligned with table.observations
  std::vector<double> thresholds;  // per cell
};

// Map cell index -> fold in [0, n_folds); stratified per cancer type.
struct FoldAssignment {
  std::vector<int> fold;
  int n_folds = 0;
  std::uint64_t seed = 0;
};

// CSV `cell_id,drug_id,auc`. Duplicate (cell, drug) pairs are rejected with
// the offending line number.
ResponseTable load_responses(const std::filesystem::path& path);

// CSV `cell_id,cancer_type,g_1..g_G`.
std::vector<CellProfile> load_expression(const std::filesystem::path& path);

// CSV `drug_id,f_1..f_F`; entries must be >= 0.
std::vector<DrugProfile> load_fingerprints(const std::filesystem::path& path);

// p-th percentile with linear interpolation between order statistics.
double percentile_linear(std::vector<double> values, double p);

// Per cell: threshold = percentile of that cell's AUCs; label 1 iff
// AUC <= threshold (ties at the threshold are all sensitive).
LabeledDataset label_sensitivity(ResponseTable table, double percentile = 5.0);

// Per cancer type: shuffle with the seed, then deal round-robin, so fold sizes
// within a type differ by at most one.
FoldAssignment make_lco_folds(const std::vector<CellProfile>& cells, int n_folds,
                              std::uint64_t seed);

void save_folds(const std::filesystem::path& path,
                const std::vector<CellProfile>& cells, const FoldAssignment& folds);
// Returned vector is aligned with `cells`; every cell must appear in the file.
FoldAssignment load_folds(const std::filesystem::path& path,
                          const std::vector<CellProfile>& cells);

// Per-gene zero-mean / unit-variance transform, fit on training cells only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;  // constant genes keep stdev 1

  void fit(const std::vector<const CellProfile*>& cells);
  std::vector<double> apply(std::span<const double> x) const;
};

}  // namespace listrank::data
