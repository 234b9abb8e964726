#include "listrank/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "listrank/errors.hpp"

namespace listrank::metrics {

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return idx;
}

int hits_at_k(const std::vector<std::size_t>& ranking, std::span<const int> labels,
              int k) {
  if (k < 1) throw DomainError("hits_at_k: k must be >= 1");
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                ranking.size());
  int hits = 0;
  for (std::size_t pos = 0; pos < top; ++pos) hits += labels[ranking[pos]];
  return hits;
}

std::optional<double> ap_at_k(const std::vector<std::size_t>& ranking,
                              std::span<const int> labels, int k) {
  if (k < 1) throw DomainError("ap_at_k: k must be >= 1");
  int total_positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) total_positives += labels[i];
  if (total_positives == 0) return std::nullopt;

  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                ranking.size());
  int hits = 0;
  double precision_sum = 0.0;
  for (std::size_t pos = 0; pos < top; ++pos) {
    if (labels[ranking[pos]]) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  const int denom = std::min(k, total_positives);
  return precision_sum / static_cast<double>(denom);
}

std::optional<double> concordance_index(std::span<const double> aucs,
                                        std::span<const double> scores) {
  if (aucs.size() != scores.size()) {
    throw ShapeError("concordance_index: length mismatch");
  }
  std::size_t pairs = 0;
  double concordant = 0.0;
  for (std::size_t i = 0; i < aucs.size(); ++i) {
    for (std::size_t j = 0; j < aucs.size(); ++j) {
      if (aucs[i] >= aucs[j]) continue;  // need i strictly more sensitive
      ++pairs;
      if (scores[i] > scores[j]) {
        concordant += 1.0;
      } else if (scores[i] == scores[j]) {
        concordant += 0.5;
      }
    }
  }
  if (pairs == 0) return std::nullopt;
  return concordant / static_cast<double>(pairs);
}

std::optional<double> sensitive_ci(std::span<const double> aucs,
                                   std::span<const double> scores,
                                   std::span<const int> labels) {
  if (aucs.size() != scores.size() || aucs.size() != labels.size()) {
    throw ShapeError("sensitive_ci: length mismatch");
  }
  std::vector<double> sa, ss;
  for (std::size_t i = 0; i < aucs.size(); ++i) {
    if (labels[i]) {
      sa.push_back(aucs[i]);
      ss.push_back(scores[i]);
    }
  }
  if (sa.size() < 2) return std::nullopt;
  return concordance_index(sa, ss);
}

CellReport evaluate_cell(const std::string& cell_id, int fold,
                         std::span<const double> scores,
                         std::span<const double> aucs, std::span<const int> labels,
                         const std::vector<int>& ks) {
  CellReport report;
  report.cell_id = cell_id;
  report.fold = fold;
  const std::vector<std::size_t> ranking = rank_by_score(scores);
  report.hits.reserve(ks.size());
  report.ap.reserve(ks.size());
  report.ap_defined = true;
  for (int k : ks) {
    report.hits.push_back(hits_at_k(ranking, labels, k));
    if (auto ap = ap_at_k(ranking, labels, k)) {
      report.ap.push_back(*ap);
    } else {
      report.ap_defined = false;
      report.ap.push_back(0.0);
    }
  }
  report.ci = concordance_index(aucs, scores);
  report.sci = sensitive_ci(aucs, scores, labels);
  return report;
}

AggregateReport aggregate(const std::vector<CellReport>& cells,
                          const std::vector<int>& ks) {
  AggregateReport agg;
  agg.ks = ks;
  agg.mean_ap.assign(ks.size(), 0.0);
  agg.mean_ah.assign(ks.size(), 0.0);
  agg.n_cells = cells.size();
  std::size_t ap_cells = 0, ci_cells = 0, sci_cells = 0;
  for (const CellReport& cell : cells) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      agg.mean_ah[i] += cell.hits[i];
    }
    if (cell.ap_defined) {
      ++ap_cells;
      for (std::size_t i = 0; i < ks.size(); ++i) agg.mean_ap[i] += cell.ap[i];
    }
    if (cell.ci) {
      ++ci_cells;
      agg.mean_ci += *cell.ci;
    }
    if (cell.sci) {
      ++sci_cells;
      agg.mean_sci += *cell.sci;
    }
  }
  if (!cells.empty()) {
    for (double& v : agg.mean_ah) v /= static_cast<double>(cells.size());
  }
  if (ap_cells > 0) {
    for (double& v : agg.mean_ap) v /= static_cast<double>(ap_cells);
  }
  agg.mean_ci = ci_cells > 0 ? agg.mean_ci / static_cast<double>(ci_cells) : 0.0;
  agg.mean_sci = sci_cells > 0 ? agg.mean_sci / static_cast<double>(sci_cells) : 0.0;
  agg.skipped_ap = cells.size() - ap_cells;
  agg.skipped_ci = cells.size() - ci_cells;
  agg.skipped_sci = cells.size() - sci_cells;
  return agg;
}

}  // namespace listrank::metrics
