#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "listrank/dataset.hpp"
#include "listrank/linalg.hpp"

// Embedding-quality analyses: similarity matrices, correlation studies, kNN
// accuracy, k-means clustering and intra-cluster summaries. Pairs or cells
// where a quantity is undefined (insufficient shared data, zero variance) are
// skipped and counted, never imputed.
namespace listrank::analysis {

enum class SimilarityKind { RbfLatent, SpearmanResponse, JaccardSensitivity, ClusterOverlap };

struct SimilarityMatrix {
  SimilarityKind kind = SimilarityKind::RbfLatent;
  std::size_t n = 0;
  std::vector<double> values;       // n x n, symmetric
  std::vector<bool> defined;        // false where the pair was skipped

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  bool is_defined(std::size_t i, std::size_t j) const { return defined[i * n + j]; }
};

// S[i][j] = exp(-gamma * ||e_i - e_j||^2); gamma defaults to
// 1 / (median pairwise squared distance), or 1 when that median is zero.
SimilarityMatrix rbf_similarity(const std::vector<std::vector<double>>& embeddings,
                                std::optional<double> gamma = std::nullopt);

// Spearman rho (average-rank ties) on the AUCs of drugs observed in both
// cells; undefined when fewer than 3 drugs are shared or a side has zero
// rank variance.
std::optional<double> spearman_shared(const data::ResponseTable& table,
                                      std::size_t cell_p, std::size_t cell_q);
SimilarityMatrix spearman_response_matrix(const data::ResponseTable& table);

// |both sensitive| / |either sensitive| over cells with responses recorded
// for both drugs; undefined when no shared cell has either drug sensitive.
std::optional<double> jaccard_sensitivity(const data::LabeledDataset& dataset,
                                          std::size_t drug_a, std::size_t drug_b);
SimilarityMatrix jaccard_sensitivity_matrix(const data::LabeledDataset& dataset);

// Undefined for length < 3 or zero variance on either side.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson over the defined upper-triangle entries shared by both matrices.
std::optional<double> matrix_correlation(const SimilarityMatrix& a,
                                         const SimilarityMatrix& b);

struct KnnAccuracy {
  std::vector<double> per_item;
  double mean = 0.0;
};

// Fraction of the k nearest neighbors (Euclidean, self excluded, distance
// ties by index) sharing the query's category.
KnnAccuracy knn_accuracy(const std::vector<std::vector<double>>& embeddings,
                         const std::vector<std::string>& categories, int k);

struct Clustering {
  std::vector<int> assignment;
  int k = 0;
  std::uint64_t seed = 0;
};

// Lloyd's algorithm with k-means++ seeding; at most 300 iterations or until
// the total centroid shift drops below 1e-8. Deterministic given the seed.
Clustering kmeans_cluster(const std::vector<std::vector<double>>& embeddings, int k,
                          std::uint64_t seed);

// Within-cluster sum of squared distances to the assigned centroid.
double kmeans_objective(const std::vector<std::vector<double>>& embeddings,
                        const Clustering& clustering);

struct ClusterSummary {
  int cluster = 0;
  std::size_t size = 0;
  double mean_latent = 0.0;     // mean pairwise latent similarity
  double mean_reference = 0.0;  // mean pairwise reference similarity
};

// Average pairwise similarity within each cluster; singletons are skipped.
// Reference pairs that are undefined are left out of that cluster's mean.
std::vector<ClusterSummary> intra_cluster_summary(const Clustering& clustering,
                                                  const SimilarityMatrix& latent,
                                                  const SimilarityMatrix& reference);

// Cluster ids ranked by descending mean intra-cluster latent similarity
// (singletons excluded), ties by ascending id; at most top_n entries.
std::vector<int> top_compact_clusters(const Clustering& clustering,
                                      const SimilarityMatrix& latent, int top_n);

// Normalized distribution of each category's members over the selected
// clusters. Rows align with the sorted unique category names returned via
// `categories_out`.
std::vector<std::vector<double>> category_cluster_distribution(
    const Clustering& clustering, const std::vector<std::string>& item_categories,
    const std::vector<int>& selected_clusters,
    std::vector<std::string>* categories_out);

// Generalized Jaccard (sum min / sum max) between category distributions.
SimilarityMatrix cluster_overlap_similarity(
    const std::vector<std::vector<double>>& distributions);

}  // namespace listrank::analysis
