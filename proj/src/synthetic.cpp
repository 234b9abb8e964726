#include "listrank/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "listrank/csvio.hpp"
#include "listrank/errors.hpp"
#include "listrank/rng.hpp"

namespace listrank::synth {

Data generate(const Config& config) {
  if (config.n_cells < 1 || config.n_drugs < 2 || config.n_types < 1) {
    throw DomainError("synthetic: need >= 1 cell, >= 2 drugs, >= 1 type");
  }
  Rng rng(config.seed);
  Data out;

  // Cancer-type centroids and expression profiles.
  std::vector<std::vector<double>> centroids(
      static_cast<std::size_t>(config.n_types),
      std::vector<double>(config.n_genes));
  for (auto& centroid : centroids) {
    for (double& v : centroid) v = rng.normal(0.0, config.type_spread);
  }
  out.cells.resize(static_cast<std::size_t>(config.n_cells));
  for (int c = 0; c < config.n_cells; ++c) {
    data::CellProfile& cell = out.cells[static_cast<std::size_t>(c)];
    const int type = c % config.n_types;
    cell.id = "cell" + std::to_string(c);
    cell.cancer_type = "type" + std::to_string(type);
    cell.expression.resize(config.n_genes);
    for (std::size_t g = 0; g < config.n_genes; ++g) {
      cell.expression[g] = centroids[static_cast<std::size_t>(type)][g] +
                           rng.normal(0.0, config.expression_noise);
    }
  }

  // Random-sparse count fingerprints.
  out.drugs.resize(static_cast<std::size_t>(config.n_drugs));
  for (int d = 0; d < config.n_drugs; ++d) {
    data::DrugProfile& drug = out.drugs[static_cast<std::size_t>(d)];
    drug.id = "drug" + std::to_string(d);
    drug.fingerprint.assign(config.fp_dim, 0.0);
    for (double& v : drug.fingerprint) {
      if (rng.uniform() < config.fp_density) {
        v = 1.0 + static_cast<double>(rng.uniform_index(3));
      }
    }
  }

  // Planted bilinear model: t(c, d) = (P x_c) . (Q fp_d) + w_pot (q_pot . fp_d).
  // The potency term is a rank-1 augmentation (fingerprint-linear factor
  // against a constant cell direction, reachable through the encoder biases).
  // Interaction and potency are standardized separately before mixing, and the
  // mix is standardized over all pairs so the sigmoid squash sees unit scale.
  const std::size_t rank = config.planted_rank;
  std::vector<std::vector<double>> p(rank, std::vector<double>(config.n_genes));
  std::vector<std::vector<double>> q(rank, std::vector<double>(config.fp_dim));
  std::vector<double> q_pot(config.fp_dim);
  for (auto& row : p) {
    for (double& v : row) {
      v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.n_genes)));
    }
  }
  for (auto& row : q) {
    for (double& v : row) {
      v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.fp_dim)));
    }
  }
  for (double& v : q_pot) {
    v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.fp_dim)));
  }
  auto project = [&](const std::vector<std::vector<double>>& m,
                     const std::vector<double>& x) {
    std::vector<double> y(m.size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r) {
      for (std::size_t i = 0; i < x.size(); ++i) y[r] += m[r][i] * x[i];
    }
    return y;
  };
  auto standardize = [](std::vector<double>& v) {
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    const double inv = sd > 0.0 ? 1.0 / sd : 1.0;
    for (double& x : v) x = (x - mean) * inv;
  };

  out.true_scores = Matrix(static_cast<std::size_t>(config.n_cells),
                           static_cast<std::size_t>(config.n_drugs));
  std::vector<std::vector<double>> cell_factors, drug_factors;
  std::vector<double> potency;
  for (const auto& cell : out.cells) cell_factors.push_back(project(p, cell.expression));
  for (const auto& drug : out.drugs) drug_factors.push_back(project(q, drug.fingerprint));
  for (const auto& drug : out.drugs) {
    double pot = 0.0;
    for (std::size_t i = 0; i < config.fp_dim; ++i) {
      pot += q_pot[i] * drug.fingerprint[i];
    }
    potency.push_back(pot);
  }
  standardize(potency);

  std::vector<double> interaction(out.true_scores.rows * out.true_scores.cols);
  for (std::size_t c = 0; c < out.true_scores.rows; ++c) {
    for (std::size_t d = 0; d < out.true_scores.cols; ++d) {
      double t = 0.0;
      for (std::size_t r = 0; r < rank; ++r) {
        t += cell_factors[c][r] * drug_factors[d][r];
      }
      interaction[c * out.true_scores.cols + d] = t;
    }
  }
  standardize(interaction);
  for (std::size_t c = 0; c < out.true_scores.rows; ++c) {
    for (std::size_t d = 0; d < out.true_scores.cols; ++d) {
      out.true_scores(c, d) = interaction[c * out.true_scores.cols + d] +
                              config.potency_weight * potency[d];
    }
  }
  standardize(out.true_scores.data);

  // Observed responses: AUC = sigmoid(-t) + noise, with a missing fraction.
  out.responses.cells.reserve(out.cells.size());
  for (const auto& cell : out.cells) out.responses.cells.push_back(cell.id);
  out.responses.drugs.reserve(out.drugs.size());
  for (const auto& drug : out.drugs) out.responses.drugs.push_back(drug.id);
  for (std::size_t c = 0; c < out.true_scores.rows; ++c) {
    std::vector<std::size_t> kept;
    for (std::size_t d = 0; d < out.true_scores.cols; ++d) {
      if (rng.uniform() < config.missing_rate) continue;
      kept.push_back(d);
    }
    // every cell needs at least one observation for percentile labeling
    if (kept.empty()) kept.push_back(rng.uniform_index(out.true_scores.cols));
    for (std::size_t d : kept) {
      const double t = out.true_scores(c, d);
      double auc = 1.0 / (1.0 + std::exp(t)) + rng.normal(0.0, config.auc_noise_sd);
      if (auc < 0.0) auc = 0.0;
      out.responses.observations.push_back({c, d, auc});
    }
  }
  out.responses.rebuild_cell_index();
  return out;
}

void write_csv(const Data& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream s;
    s << "cell_id,drug_id,auc\n";
    for (const data::Observation& obs : data.responses.observations) {
      s << data.responses.cells[obs.cell] << "," << data.responses.drugs[obs.drug]
        << "," << io::fmt_double(obs.auc) << "\n";
    }
    io::write_text_file(dir / "responses.csv", s.str());
  }
  {
    std::ostringstream s;
    s << "cell_id,cancer_type";
    for (std::size_t g = 0; g < data.cells.front().expression.size(); ++g) {
      s << ",g_" << (g + 1);
    }
    s << "\n";
    for (const data::CellProfile& cell : data.cells) {
      s << cell.id << "," << cell.cancer_type;
      for (double v : cell.expression) s << "," << io::fmt_double(v);
      s << "\n";
    }
    io::write_text_file(dir / "expression.csv", s.str());
  }
  {
    std::ostringstream s;
    s << "drug_id";
    for (std::size_t f = 0; f < data.drugs.front().fingerprint.size(); ++f) {
      s << ",f_" << (f + 1);
    }
    s << "\n";
    for (const data::DrugProfile& drug : data.drugs) {
      s << drug.id;
      for (double v : drug.fingerprint) s << "," << io::fmt_double(v);
      s << "\n";
    }
    io::write_text_file(dir / "fingerprints.csv", s.str());
  }
  {
    std::ostringstream s;
    s << "cell_id,drug_id,true_score\n";
    for (std::size_t c = 0; c < data.true_scores.rows; ++c) {
      for (std::size_t d = 0; d < data.true_scores.cols; ++d) {
        s << data.cells[c].id << "," << data.drugs[d].id << ","
          << io::fmt_double(data.true_scores(c, d)) << "\n";
      }
    }
    io::write_text_file(dir / "truth.csv", s.str());
  }
}

}  // namespace listrank::synth
