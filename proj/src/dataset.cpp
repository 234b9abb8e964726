#include "listrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "listrank/csvio.hpp"
#include "listrank/errors.hpp"
#include "listrank/rng.hpp"

namespace listrank::data {

namespace {

void expect_header(const io::CsvFile& csv, const std::filesystem::path& path,
                   const std::vector<std::string>& expected_prefix) {
  if (csv.header.size() < expected_prefix.size()) {
    throw ParseError(path.string() + ": malformed header");
  }
  for (std::size_t i = 0; i < expected_prefix.size(); ++i) {
    if (csv.header[i] != expected_prefix[i]) {
      throw ParseError(path.string() + ": expected header column '" +
                       expected_prefix[i] + "', got '" + csv.header[i] + "'");
    }
  }
}

}  // namespace

void ResponseTable::rebuild_cell_index() {
  cell_observations.assign(cells.size(), {});
  for (std::size_t oi = 0; oi < observations.size(); ++oi) {
    cell_observations[observations[oi].cell].push_back(oi);
  }
  for (auto& list : cell_observations) {
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return observations[a].drug < observations[b].drug;
    });
  }
}

ResponseTable load_responses(const std::filesystem::path& path) {
  const io::CsvFile csv = io::read_csv(path);
  expect_header(csv, path, {"cell_id", "drug_id", "auc"});
  ResponseTable table;
  std::unordered_map<std::string, std::size_t> cell_ids, drug_ids;
  std::unordered_set<std::uint64_t> seen_pairs;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    if (row.size() != 3) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": expected 3 fields, got " + std::to_string(row.size()));
    }
    const double auc = io::parse_double(row[2], path, line);
    if (!std::isfinite(auc)) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": non-finite AUC");
    }
    auto [ci, cinserted] = cell_ids.try_emplace(row[0], table.cells.size());
    if (cinserted) table.cells.push_back(row[0]);
    auto [di, dinserted] = drug_ids.try_emplace(row[1], table.drugs.size());
    if (dinserted) table.drugs.push_back(row[1]);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(ci->second) << 32) | di->second;
    if (!seen_pairs.insert(key).second) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": duplicate (cell, drug) pair '" + row[0] + "," + row[1] +
                       "'");
    }
    table.observations.push_back({ci->second, di->second, auc});
  }
  table.rebuild_cell_index();
  return table;
}

std::vector<CellProfile> load_expression(const std::filesystem::path& path) {
  const io::CsvFile csv = io::read_csv(path);
  expect_header(csv, path, {"cell_id", "cancer_type"});
  const std::size_t n_genes = csv.header.size() - 2;
  std::vector<CellProfile> cells;
  std::unordered_set<std::string> seen;
  cells.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    if (row.size() != csv.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": expected " + std::to_string(csv.header.size()) +
                       " fields, got " + std::to_string(row.size()));
    }
    if (!seen.insert(row[0]).second) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": duplicate cell_id '" + row[0] + "'");
    }
    CellProfile cell;
    cell.id = row[0];
    cell.cancer_type = row[1];
    cell.expression.reserve(n_genes);
    for (std::size_t g = 0; g < n_genes; ++g) {
      const double v = io::parse_double(row[2 + g], path, line);
      if (!std::isfinite(v)) {
        throw ParseError(path.string() + ":" + std::to_string(line) +
                         ": non-finite expression value");
      }
      cell.expression.push_back(v);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<DrugProfile> load_fingerprints(const std::filesystem::path& path) {
  const io::CsvFile csv = io::read_csv(path);
  expect_header(csv, path, {"drug_id"});
  const std::size_t fp_dim = csv.header.size() - 1;
  std::vector<DrugProfile> drugs;
  std::unordered_set<std::string> seen;
  drugs.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    if (row.size() != csv.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": expected " + std::to_string(csv.header.size()) +
                       " fields, got " + std::to_string(row.size()));
    }
    if (!seen.insert(row[0]).second) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": duplicate drug_id '" + row[0] + "'");
    }
    DrugProfile drug;
    drug.id = row[0];
    drug.fingerprint.reserve(fp_dim);
    for (std::size_t f = 0; f < fp_dim; ++f) {
      const double v = io::parse_double(row[1 + f], path, line);
      if (v < 0.0) {
        throw ParseError(path.string() + ":" + std::to_string(line) +
                         ": negative fingerprint count");
      }
      drug.fingerprint.push_back(v);
    }
    drugs.push_back(std::move(drug));
  }
  return drugs;
}

double percentile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("percentile_linear: empty input");
  if (!(p > 0.0 && p < 100.0)) {
    throw DomainError("percentile must be in (0,100)");
  }
  std::sort(values.begin(), values.end());
  const double h = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

LabeledDataset label_sensitivity(ResponseTable table, double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw DomainError("percentile must be in (0,100)");
  }
  table.rebuild_cell_index();
  LabeledDataset out;
  out.labels.assign(table.observations.size(), 0);
  out.thresholds.assign(table.cells.size(), 0.0);
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    const auto& obs = table.cell_observations[c];
    if (obs.empty()) {
      throw DomainError("cell '" + table.cells[c] + "' has no observations");
    }
    std::vector<double> aucs;
    aucs.reserve(obs.size());
    for (std::size_t oi : obs) aucs.push_back(table.observations[oi].auc);
    const double threshold = percentile_linear(std::move(aucs), percentile);
    out.thresholds[c] = threshold;
    for (std::size_t oi : obs) {
      out.labels[oi] = table.observations[oi].auc <= threshold ? 1 : 0;
    }
  }
  out.table = std::move(table);
  return out;
}

FoldAssignment make_lco_folds(const std::vector<CellProfile>& cells, int n_folds,
                              std::uint64_t seed) {
  if (n_folds < 2) throw DomainError("make_lco_folds: n_folds must be >= 2");
  FoldAssignment assignment;
  assignment.fold.assign(cells.size(), -1);
  assignment.n_folds = n_folds;
  assignment.seed = seed;
  // Types processed in lexicographic order so the result is independent of
  // the input ordering of cells from different types.
  std::map<std::string, std::vector<std::size_t>> by_type;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    by_type[cells[i].cancer_type].push_back(i);
  }
  Rng rng(seed);
  for (auto& [type, members] : by_type) {
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      assignment.fold[members[i]] = static_cast<int>(i % n_folds);
    }
  }
  return assignment;
}

void save_folds(const std::filesystem::path& path,
                const std::vector<CellProfile>& cells, const FoldAssignment& folds) {
  std::ostringstream out;
  out << "cell_id,fold\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out << cells[i].id << "," << folds.fold[i] << "\n";
  }
  io::write_text_file(path, out.str());
}

FoldAssignment load_folds(const std::filesystem::path& path,
                          const std::vector<CellProfile>& cells) {
  const io::CsvFile csv = io::read_csv(path);
  expect_header(csv, path, {"cell_id", "fold"});
  std::unordered_map<std::string, int> fold_of;
  int max_fold = -1;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    if (row.size() != 2) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": expected 2 fields");
    }
    const int fold = static_cast<int>(io::parse_double(row[1], path, line));
    if (fold < 0) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": negative fold index");
    }
    if (!fold_of.emplace(row[0], fold).second) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": duplicate cell_id '" + row[0] + "'");
    }
    max_fold = std::max(max_fold, fold);
  }
  FoldAssignment assignment;
  assignment.n_folds = max_fold + 1;
  assignment.fold.reserve(cells.size());
  for (const CellProfile& cell : cells) {
    auto it = fold_of.find(cell.id);
    if (it == fold_of.end()) {
      throw ParseError(path.string() + ": no fold for cell '" + cell.id + "'");
    }
    assignment.fold.push_back(it->second);
  }
  return assignment;
}

void Standardizer::fit(const std::vector<const CellProfile*>& cells) {
  if (cells.empty()) throw DomainError("Standardizer: no training cells");
  const std::size_t n_genes = cells.front()->expression.size();
  mean.assign(n_genes, 0.0);
  stdev.assign(n_genes, 1.0);
  for (const CellProfile* cell : cells) {
    if (cell->expression.size() != n_genes) {
      throw ShapeError("Standardizer: inconsistent expression lengths");
    }
    for (std::size_t g = 0; g < n_genes; ++g) mean[g] += cell->expression[g];
  }
  for (double& m : mean) m /= static_cast<double>(cells.size());
  std::vector<double> var(n_genes, 0.0);
  for (const CellProfile* cell : cells) {
    for (std::size_t g = 0; g < n_genes; ++g) {
      const double d = cell->expression[g] - mean[g];
      var[g] += d * d;
    }
  }
  for (std::size_t g = 0; g < n_genes; ++g) {
    const double v = var[g] / static_cast<double>(cells.size());
    stdev[g] = v > 0.0 ? std::sqrt(v) : 1.0;
  }
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw ShapeError("Standardizer: expression length mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t g = 0; g < x.size(); ++g) {
    out[g] = (x[g] - mean[g]) / stdev[g];
  }
  return out;
}

}  // namespace listrank::data
