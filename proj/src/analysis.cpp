#include "listrank/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"
#include "listrank/rng.hpp"

namespace listrank::analysis {

namespace {

SimilarityMatrix make_matrix(SimilarityKind kind, std::size_t n) {
  SimilarityMatrix m;
  m.kind = kind;
  m.n = n;
  m.values.assign(n * n, 0.0);
  m.defined.assign(n * n, false);
  return m;
}

void set_pair(SimilarityMatrix& m, std::size_t i, std::size_t j, double v) {
  m.values[i * m.n + j] = v;
  m.values[j * m.n + i] = v;
  m.defined[i * m.n + j] = true;
  m.defined[j * m.n + i] = true;
}

// Average ranks, ties get the mean of their positions (1-based).
std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = rank;
    i = j;
  }
  return ranks;
}

}  // namespace

SimilarityMatrix rbf_similarity(const std::vector<std::vector<double>>& embeddings,
                                std::optional<double> gamma) {
  const std::size_t n = embeddings.size();
  SimilarityMatrix m = make_matrix(SimilarityKind::RbfLatent, n);
  std::vector<double> sq(n * n, 0.0);
  std::vector<double> pairwise;
  pairwise.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = kernels::sumsq_diff(embeddings[i].data(),
                                           embeddings[j].data(),
                                           embeddings[i].size());
      sq[i * n + j] = d;
      sq[j * n + i] = d;
      pairwise.push_back(d);
    }
  }
  double g;
  if (gamma) {
    g = *gamma;
  } else if (pairwise.empty()) {
    g = 1.0;
  } else {
    std::nth_element(pairwise.begin(), pairwise.begin() + pairwise.size() / 2,
                     pairwise.end());
    const double median = pairwise[pairwise.size() / 2];
    g = median > 0.0 ? 1.0 / median : 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    set_pair(m, i, i, 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      set_pair(m, i, j, std::exp(-g * sq[i * n + j]));
    }
  }
  return m;
}

std::optional<double> spearman_shared(const data::ResponseTable& table,
                                      std::size_t cell_p, std::size_t cell_q) {
  std::unordered_map<std::size_t, double> q_auc;
  for (std::size_t oi : table.cell_observations[cell_q]) {
    q_auc.emplace(table.observations[oi].drug, table.observations[oi].auc);
  }
  std::vector<double> p_vals, q_vals;
  for (std::size_t oi : table.cell_observations[cell_p]) {
    auto it = q_auc.find(table.observations[oi].drug);
    if (it == q_auc.end()) continue;
    p_vals.push_back(table.observations[oi].auc);
    q_vals.push_back(it->second);
  }
  if (p_vals.size() < 3) return std::nullopt;
  return pearson(average_ranks(p_vals), average_ranks(q_vals));
}

SimilarityMatrix spearman_response_matrix(const data::ResponseTable& table) {
  const std::size_t n = table.cells.size();
  SimilarityMatrix m = make_matrix(SimilarityKind::SpearmanResponse, n);
  for (std::size_t i = 0; i < n; ++i) {
    set_pair(m, i, i, 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (auto rho = spearman_shared(table, i, j)) set_pair(m, i, j, *rho);
    }
  }
  return m;
}

std::optional<double> jaccard_sensitivity(const data::LabeledDataset& dataset,
                                          std::size_t drug_a, std::size_t drug_b) {
  const auto& table = dataset.table;
  // label per cell for each drug, over cells observing it
  std::unordered_map<std::size_t, int> a_label, b_label;
  for (std::size_t oi = 0; oi < table.observations.size(); ++oi) {
    const data::Observation& obs = table.observations[oi];
    if (obs.drug == drug_a) a_label[obs.cell] = dataset.labels[oi];
    if (obs.drug == drug_b) b_label[obs.cell] = dataset.labels[oi];
  }
  std::size_t both = 0, either = 0;
  for (const auto& [cell, la] : a_label) {
    auto it = b_label.find(cell);
    if (it == b_label.end()) continue;
    const int lb = it->second;
    if (la && lb) ++both;
    if (la || lb) ++either;
  }
  if (either == 0) return std::nullopt;
  return static_cast<double>(both) / static_cast<double>(either);
}

SimilarityMatrix jaccard_sensitivity_matrix(const data::LabeledDataset& dataset) {
  const std::size_t n = dataset.table.drugs.size();
  // Per-drug sensitivity profile over cells, built once.
  std::vector<std::unordered_map<std::size_t, int>> profile(n);
  for (std::size_t oi = 0; oi < dataset.table.observations.size(); ++oi) {
    const data::Observation& obs = dataset.table.observations[oi];
    profile[obs.drug][obs.cell] = dataset.labels[oi];
  }
  SimilarityMatrix m = make_matrix(SimilarityKind::JaccardSensitivity, n);
  for (std::size_t a = 0; a < n; ++a) {
    bool any_positive = false;
    for (const auto& [cell, l] : profile[a]) {
      if (l) { any_positive = true; break; }
    }
    if (any_positive) set_pair(m, a, a, 1.0);
    for (std::size_t b = a + 1; b < n; ++b) {
      std::size_t both = 0, either = 0;
      const auto& small = profile[a].size() <= profile[b].size() ? profile[a] : profile[b];
      const auto& large = profile[a].size() <= profile[b].size() ? profile[b] : profile[a];
      for (const auto& [cell, l1] : small) {
        auto it = large.find(cell);
        if (it == large.end()) continue;
        if (l1 && it->second) ++both;
        if (l1 || it->second) ++either;
      }
      if (either > 0) {
        set_pair(m, a, b, static_cast<double>(both) / static_cast<double>(either));
      }
    }
  }
  return m;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) return std::nullopt;
  const double mx = kernels::sum(x.data(), n) / static_cast<double>(n);
  const double my = kernels::sum(y.data(), n) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> matrix_correlation(const SimilarityMatrix& a,
                                         const SimilarityMatrix& b) {
  if (a.n != b.n) throw ShapeError("matrix_correlation: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = i + 1; j < a.n; ++j) {
      if (!a.is_defined(i, j) || !b.is_defined(i, j)) continue;
      xs.push_back(a.at(i, j));
      ys.push_back(b.at(i, j));
    }
  }
  return pearson(xs, ys);
}

KnnAccuracy knn_accuracy(const std::vector<std::vector<double>>& embeddings,
                         const std::vector<std::string>& categories, int k) {
  const std::size_t n = embeddings.size();
  if (categories.size() != n) throw ShapeError("knn_accuracy: size mismatch");
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw DomainError("knn_accuracy: need 1 <= k < number of items");
  }
  KnnAccuracy out;
  out.per_item.resize(n);
  std::vector<std::size_t> others;
  for (std::size_t c = 0; c < n; ++c) {
    others.clear();
    for (std::size_t o = 0; o < n; ++o) {
      if (o != c) others.push_back(o);
    }
    std::vector<double> dist(n, 0.0);
    for (std::size_t o : others) {
      dist[o] = kernels::sumsq_diff(embeddings[c].data(), embeddings[o].data(),
                                    embeddings[c].size());
    }
    std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    });
    int same = 0;
    for (int i = 0; i < k; ++i) {
      if (categories[others[static_cast<std::size_t>(i)]] == categories[c]) ++same;
    }
    out.per_item[c] = static_cast<double>(same) / static_cast<double>(k);
  }
  out.mean = kernels::sum(out.per_item.data(), n) / static_cast<double>(n);
  return out;
}

Clustering kmeans_cluster(const std::vector<std::vector<double>>& embeddings, int k,
                          std::uint64_t seed) {
  const std::size_t n = embeddings.size();
  if (n == 0) throw DomainError("kmeans: no items");
  if (k < 1) throw DomainError("kmeans: k must be >= 1");
  const std::size_t dim = embeddings.front().size();
  Rng rng(seed);

  // k-means++ seeding. When all remaining D^2 mass is zero (duplicates), stop
  // adding centers; the surplus cluster ids stay unused.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(embeddings[rng.uniform_index(n)]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) {
        best = std::min(best,
                        kernels::sumsq_diff(embeddings[i].data(), c.data(), dim));
      }
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;
    const double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      cum += d2[i];
      if (cum >= target) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(embeddings[chosen]);
  }

  Clustering clustering;
  clustering.k = k;
  clustering.seed = seed;
  clustering.assignment.assign(n, 0);

  for (int iter = 0; iter < 300; ++iter) {
    // Assign: nearest centroid, distance ties to the lower cluster id.
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d =
            kernels::sumsq_diff(embeddings[i].data(), centroids[c].data(), dim);
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      clustering.assignment[i] = best_c;
    }
    // Update; empty clusters keep their previous centroid.
    std::vector<std::vector<double>> next(centroids.size(),
                                          std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(clustering.assignment[i]);
      kernels::axpy(1.0, embeddings[i].data(), next[c].data(), dim);
      ++counts[c];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) {
        next[c] = centroids[c];
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (double& v : next[c]) v *= inv;
      shift += kernels::sumsq_diff(next[c].data(), centroids[c].data(), dim);
    }
    centroids = std::move(next);
    if (shift < 1e-8) break;
  }
  return clustering;
}

double kmeans_objective(const std::vector<std::vector<double>>& embeddings,
                        const Clustering& clustering) {
  // Objective w.r.t. cluster means of the final assignment.
  const std::size_t n = embeddings.size();
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().size();
  std::vector<std::vector<double>> means(static_cast<std::size_t>(clustering.k),
                                         std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(clustering.k), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(clustering.assignment[i]);
    kernels::axpy(1.0, embeddings[i].data(), means[c].data(), dim);
    ++counts[c];
  }
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& v : means[c]) v *= inv;
  }
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(clustering.assignment[i]);
    obj += kernels::sumsq_diff(embeddings[i].data(), means[c].data(), dim);
  }
  return obj;
}

std::vector<ClusterSummary> intra_cluster_summary(const Clustering& clustering,
                                                  const SimilarityMatrix& latent,
                                                  const SimilarityMatrix& reference) {
  if (latent.n != clustering.assignment.size() || reference.n != latent.n) {
    throw ShapeError("intra_cluster_summary: size mismatch");
  }
  std::vector<std::vector<std::size_t>> members(
      static_cast<std::size_t>(clustering.k));
  for (std::size_t i = 0; i < clustering.assignment.size(); ++i) {
    members[static_cast<std::size_t>(clustering.assignment[i])].push_back(i);
  }
  std::vector<ClusterSummary> out;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() < 2) continue;  // singleton clusters skipped
    double lat = 0.0, ref = 0.0;
    std::size_t lat_pairs = 0, ref_pairs = 0;
    for (std::size_t a = 0; a < members[c].size(); ++a) {
      for (std::size_t b = a + 1; b < members[c].size(); ++b) {
        const std::size_t i = members[c][a], j = members[c][b];
        if (latent.is_defined(i, j)) {
          lat += latent.at(i, j);
          ++lat_pairs;
        }
        if (reference.is_defined(i, j)) {
          ref += reference.at(i, j);
          ++ref_pairs;
        }
      }
    }
    ClusterSummary summary;
    summary.cluster = static_cast<int>(c);
    summary.size = members[c].size();
    summary.mean_latent = lat_pairs ? lat / static_cast<double>(lat_pairs) : 0.0;
    summary.mean_reference = ref_pairs ? ref / static_cast<double>(ref_pairs) : 0.0;
    out.push_back(summary);
  }
  return out;
}

std::vector<int> top_compact_clusters(const Clustering& clustering,
                                      const SimilarityMatrix& latent, int top_n) {
  std::vector<ClusterSummary> summaries =
      intra_cluster_summary(clustering, latent, latent);
  std::sort(summaries.begin(), summaries.end(),
            [](const ClusterSummary& a, const ClusterSummary& b) {
              if (a.mean_latent != b.mean_latent) return a.mean_latent > b.mean_latent;
              return a.cluster < b.cluster;
            });
  std::vector<int> out;
  for (const ClusterSummary& s : summaries) {
    if (static_cast<int>(out.size()) >= top_n) break;
    out.push_back(s.cluster);
  }
  return out;
}

std::vector<std::vector<double>> category_cluster_distribution(
    const Clustering& clustering, const std::vector<std::string>& item_categories,
    const std::vector<int>& selected_clusters,
    std::vector<std::string>* categories_out) {
  if (item_categories.size() != clustering.assignment.size()) {
    throw ShapeError("category_cluster_distribution: size mismatch");
  }
  std::map<std::string, std::size_t> category_index;
  for (const std::string& c : item_categories) {
    category_index.emplace(c, 0);
  }
  std::size_t next = 0;
  for (auto& [name, idx] : category_index) idx = next++;
  std::vector<std::vector<double>> dist(category_index.size(),
                                        std::vector<double>(selected_clusters.size(),
                                                            0.0));
  for (std::size_t i = 0; i < item_categories.size(); ++i) {
    for (std::size_t s = 0; s < selected_clusters.size(); ++s) {
      if (clustering.assignment[i] == selected_clusters[s]) {
        dist[category_index[item_categories[i]]][s] += 1.0;
        break;
      }
    }
  }
  for (auto& row : dist) {
    const double total = kernels::sum(row.data(), row.size());
    if (total > 0.0) {
      for (double& v : row) v /= total;
    }
  }
  if (categories_out) {
    categories_out->resize(category_index.size());
    for (const auto& [name, idx] : category_index) (*categories_out)[idx] = name;
  }
  return dist;
}

SimilarityMatrix cluster_overlap_similarity(
    const std::vector<std::vector<double>>& distributions) {
  const std::size_t n = distributions.size();
  SimilarityMatrix m = make_matrix(SimilarityKind::ClusterOverlap, n);
  for (std::size_t i = 0; i < n; ++i) {
    set_pair(m, i, i, 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distributions[i].size() != distributions[j].size()) {
        throw ShapeError("cluster_overlap_similarity: distribution length mismatch");
      }
      double min_sum = 0.0, max_sum = 0.0;
      for (std::size_t s = 0; s < distributions[i].size(); ++s) {
        min_sum += std::min(distributions[i][s], distributions[j][s]);
        max_sum += std::max(distributions[i][s], distributions[j][s]);
      }
      set_pair(m, i, j, max_sum > 0.0 ? min_sum / max_sum : 0.0);
    }
  }
  return m;
}

}  // namespace listrank::analysis
