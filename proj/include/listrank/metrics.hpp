#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

// Ranking-quality metrics per cell line and aggregated: AP@K, AH@K (hit count
// at K), concordance index over all comparable AUC pairs, and the concordance
// index restricted to sensitive drugs. Cells where a metric is undefined are
// skipped and counted, never imputed.
namespace listrank::metrics {

// Indices sorted by score descending; ties broken by ascending index.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

// Number of label-1 items among the top min(k, n) positions.
int hits_at_k(const std::vector<std::size_t>& ranking, std::span<const int> labels,
              int k);

// (1/min(k, #positives)) * sum_{j<=k} Prec@j * rel(j). Positives are counted
// over the whole list. nullopt when the list has no positive.
std::optional<double> ap_at_k(const std::vector<std::size_t>& ranking,
                              std::span<const int> labels, int k);

// Over pairs with aucs[i] < aucs[j] (i truly more sensitive): score[i] >
// score[j] counts 1, score ties 0.5, else 0; divided by the number of
// comparable pairs. AUC ties contribute no pair. nullopt when no pair exists.
std::optional<double> concordance_index(std::span<const double> aucs,
                                        std::span<const double> scores);

// concordance_index restricted to pairs where both drugs are sensitive.
std::optional<double> sensitive_ci(std::span<const double> aucs,
                                   std::span<const double> scores,
                                   std::span<const int> labels);

struct CellReport {
  std::string cell_id;
  int fold = 0;
  std::vector<int> hits;              // aligned with the K list
  std::vector<double> ap;             // aligned with the K list; valid iff ap_defined
  bool ap_defined = false;
  std::optional<double> ci;
  std::optional<double> sci;
};

CellReport evaluate_cell(const std::string& cell_id, int fold,
                         std::span<const double> scores,
                         std::span<const double> aucs, std::span<const int> labels,
                         const std::vector<int>& ks);

struct AggregateReport {
  std::vector<int> ks;
  std::vector<double> mean_ap;  // over cells with AP defined
  std::vector<double> mean_ah;  // over all cells
  double mean_ci = 0.0;
  double mean_sci = 0.0;
  std::size_t n_cells = 0;
  std::size_t skipped_ap = 0;
  std::size_t skipped_ci = 0;
  std::size_t skipped_sci = 0;
};

AggregateReport aggregate(const std::vector<CellReport>& cells,
                          const std::vector<int>& ks);

}  // namespace listrank::metrics
