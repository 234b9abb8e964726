// listrank: listwise learning-to-rank pipeline for drug prioritization.
// Subcommands: synth, split, pretrain, train, evaluate, analyze.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "listrank/analysis.hpp"
#include "listrank/checkpoint.hpp"
#include "listrank/csvio.hpp"
#include "listrank/dataset.hpp"
#include "listrank/errors.hpp"
#include "listrank/harness.hpp"
#include "listrank/kernels.hpp"
#include "listrank/metrics.hpp"
#include "listrank/ranker.hpp"
#include "listrank/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace listrank;

namespace {

struct RunConfig {
  // paths
  std::string responses;
  std::string expression;
  std::string fingerprints;
  std::string folds;
  std::string checkpoint;  // directory with encoder_fold<i>.json
  std::string models;      // directory with model_fold<i>.json
  std::string moa;         // optional drug_id,category file for analyze
  std::string out;
  // pipeline
  std::string loss = "list_all";
  double percentile = 5.0;
  int n_folds = 5;
  int pretrain_epochs = 100;
  int epochs = 300;
  double lr = 1e-3;
  double tau = 0.5;
  int embedding_dim = 100;  // M
  int latent_dim = 128;
  std::vector<int> gene_hidden{4096, 1024};
  int drug_hidden = 128;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::vector<int> ks{1, 3, 5, 10, 20, 40, 60};
  int jobs = 1;
  int fold = -1;  // -1 = all folds
  std::string kernels = "auto";
  // analyze
  int cell_clusters = 20;
  int drug_clusters = 10;
  int top_compact = 10;
  std::vector<int> knn_ks{1, 3, 5};
  // synth
  int synth_cells = 100;
  int synth_drugs = 60;
  int synth_types = 4;
  int synth_genes = 40;
  int synth_fp_dim = 64;
  double synth_missing = 0.15;
  double synth_noise = 0.003;
};

void apply_config_file(const fs::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": config must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "responses") cfg.responses = value.get<std::string>();
      else if (key == "expression") cfg.expression = value.get<std::string>();
      else if (key == "fingerprints") cfg.fingerprints = value.get<std::string>();
      else if (key == "folds") cfg.folds = value.get<std::string>();
      else if (key == "checkpoint") cfg.checkpoint = value.get<std::string>();
      else if (key == "models") cfg.models = value.get<std::string>();
      else if (key == "moa") cfg.moa = value.get<std::string>();
      else if (key == "out") cfg.out = value.get<std::string>();
      else if (key == "loss") cfg.loss = value.get<std::string>();
      else if (key == "percentile") cfg.percentile = value.get<double>();
      else if (key == "n_folds") cfg.n_folds = value.get<int>();
      else if (key == "pretrain_epochs") cfg.pretrain_epochs = value.get<int>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "tau") cfg.tau = value.get<double>();
      else if (key == "embedding_dim") cfg.embedding_dim = value.get<int>();
      else if (key == "latent_dim") cfg.latent_dim = value.get<int>();
      else if (key == "gene_hidden") cfg.gene_hidden = value.get<std::vector<int>>();
      else if (key == "drug_hidden") cfg.drug_hidden = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "ks") cfg.ks = value.get<std::vector<int>>();
      else if (key == "jobs") cfg.jobs = value.get<int>();
      else if (key == "fold") cfg.fold = value.get<int>();
      else if (key == "kernels") cfg.kernels = value.get<std::string>();
      else if (key == "cell_clusters") cfg.cell_clusters = value.get<int>();
      else if (key == "drug_clusters") cfg.drug_clusters = value.get<int>();
      else if (key == "top_compact") cfg.top_compact = value.get<int>();
      else if (key == "knn_ks") cfg.knn_ks = value.get<std::vector<int>>();
      else if (key == "synth_cells") cfg.synth_cells = value.get<int>();
      else if (key == "synth_drugs") cfg.synth_drugs = value.get<int>();
      else if (key == "synth_types") cfg.synth_types = value.get<int>();
      else if (key == "synth_genes") cfg.synth_genes = value.get<int>();
      else if (key == "synth_fp_dim") cfg.synth_fp_dim = value.get<int>();
      else if (key == "synth_missing") cfg.synth_missing = value.get<double>();
      else if (key == "synth_noise") cfg.synth_noise = value.get<double>();
      else throw ConfigError(path.string() + ": unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": bad value for '" + key + "': " + e.what());
    }
  }
}

void validate(const RunConfig& cfg) {
  if (!(cfg.percentile > 0.0 && cfg.percentile < 100.0)) {
    throw ConfigError("percentile must be in (0,100)");
  }
  if (cfg.n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
  if (!(cfg.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(cfg.tau > 0.0)) throw ConfigError("tau must be > 0");
  if (cfg.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (cfg.latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (cfg.drug_hidden < 1) throw ConfigError("drug_hidden must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  for (int width : cfg.gene_hidden) {
    if (width < 1) throw ConfigError("gene_hidden widths must be >= 1");
  }
  for (int k : cfg.ks) {
    if (k < 1) throw ConfigError("ks entries must be >= 1");
  }
  if (cfg.loss != "list_one" && cfg.loss != "list_all") {
    throw ConfigError("loss must be list_one or list_all");
  }
  if (cfg.kernels != "auto" && cfg.kernels != "scalar" && cfg.kernels != "avx2") {
    throw ConfigError("kernels must be auto, scalar or avx2");
  }
  if (cfg.synth_cells < 1) throw ConfigError("synth_cells must be >= 1");
  if (cfg.synth_drugs < 2) throw ConfigError("synth_drugs must be >= 2");
  if (cfg.synth_types < 1) throw ConfigError("synth_types must be >= 1");
  if (cfg.synth_genes < 1) throw ConfigError("synth_genes must be >= 1");
  if (cfg.synth_fp_dim < 1) throw ConfigError("synth_fp_dim must be >= 1");
  if (!(cfg.synth_missing >= 0.0 && cfg.synth_missing < 1.0)) {
    throw ConfigError("synth_missing must be in [0,1)");
  }
  if (!(cfg.synth_noise >= 0.0)) throw ConfigError("synth_noise must be >= 0");
}

void select_kernels(const RunConfig& cfg) {
  if (cfg.kernels == "scalar") {
    kernels::set_backend(kernels::Backend::Scalar);
  } else if (cfg.kernels == "avx2") {
    kernels::set_backend(kernels::Backend::Avx2);
  } else {
    kernels::reset_backend();
  }
}

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["responses"] = cfg.responses;
  j["expression"] = cfg.expression;
  j["fingerprints"] = cfg.fingerprints;
  j["folds"] = cfg.folds;
  j["checkpoint"] = cfg.checkpoint;
  j["models"] = cfg.models;
  j["moa"] = cfg.moa;
  j["out"] = cfg.out;
  j["loss"] = cfg.loss;
  j["percentile"] = cfg.percentile;
  j["n_folds"] = cfg.n_folds;
  j["pretrain_epochs"] = cfg.pretrain_epochs;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr;
  j["tau"] = cfg.tau;
  j["embedding_dim"] = cfg.embedding_dim;
  j["latent_dim"] = cfg.latent_dim;
  j["gene_hidden"] = cfg.gene_hidden;
  j["drug_hidden"] = cfg.drug_hidden;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["ks"] = cfg.ks;
  j["jobs"] = cfg.jobs;
  j["fold"] = cfg.fold;
  j["kernels"] = cfg.kernels;
  j["cell_clusters"] = cfg.cell_clusters;
  j["drug_clusters"] = cfg.drug_clusters;
  j["top_compact"] = cfg.top_compact;
  j["knn_ks"] = cfg.knn_ks;
  j["synth_cells"] = cfg.synth_cells;
  j["synth_drugs"] = cfg.synth_drugs;
  j["synth_types"] = cfg.synth_types;
  j["synth_genes"] = cfg.synth_genes;
  j["synth_fp_dim"] = cfg.synth_fp_dim;
  j["synth_missing"] = cfg.synth_missing;
  j["synth_noise"] = cfg.synth_noise;
  return j;
}

// Resolved config + seed + content hash of every input consumed.
void write_provenance(const RunConfig& cfg, const std::string& command,
                      const std::vector<fs::path>& inputs) {
  fs::create_directories(cfg.out);
  json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config"] = config_to_json(cfg);
  json hashes = json::object();
  for (const fs::path& p : inputs) hashes[p.string()] = hash_file(p);
  j["input_hashes"] = hashes;
  j["kernel_backend"] = kernels::backend_name(kernels::active_backend());
  std::ofstream out(fs::path(cfg.out) / ("provenance_" + command + ".json"),
                    std::ios::binary);
  out << j.dump(2) << "\n";
}

harness::Bundle load_bundle(const RunConfig& cfg) {
  if (cfg.responses.empty()) throw ConfigError("missing required path: responses");
  if (cfg.expression.empty()) throw ConfigError("missing required path: expression");
  if (cfg.fingerprints.empty()) {
    throw ConfigError("missing required path: fingerprints");
  }
  return harness::make_bundle(data::load_responses(cfg.responses),
                              data::load_expression(cfg.expression),
                              data::load_fingerprints(cfg.fingerprints),
                              cfg.percentile);
}

data::FoldAssignment load_fold_file(const RunConfig& cfg,
                                    const std::vector<data::CellProfile>& cells) {
  if (cfg.folds.empty()) throw ConfigError("missing required path: folds");
  return data::load_folds(cfg.folds, cells);
}

std::vector<int> fold_list(const RunConfig& cfg, int n_folds) {
  if (cfg.fold >= 0) {
    if (cfg.fold >= n_folds) throw ConfigError("fold index out of range");
    return {cfg.fold};
  }
  std::vector<int> folds(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) folds[static_cast<std::size_t>(f)] = f;
  return folds;
}

// Runs fn(fold) for each fold, at most cfg.jobs at a time. Exceptions are
// rethrown on the caller thread.
void for_each_fold(const std::vector<int>& folds, int jobs,
                   const std::function<void(int)>& fn) {
  if (jobs <= 1 || folds.size() <= 1) {
    for (int f : folds) fn(f);
    return;
  }
  std::vector<std::exception_ptr> errors(folds.size());
  std::size_t next = 0;
  while (next < folds.size()) {
    const std::size_t batch =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), folds.size() - next);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t slot = next + i;
      threads.emplace_back([&, slot] {
        try {
          fn(folds[slot]);
        } catch (...) {
          errors[slot] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    next += batch;
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string epoch_log_csv(const std::vector<std::pair<int, double>>& log) {
  std::ostringstream s;
  s << "epoch,loss\n";
  for (const auto& [epoch, loss] : log) {
    s << epoch << "," << io::fmt_double(loss) << "\n";
  }
  return s.str();
}

int cmd_synth(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("missing required path: out");
  synth::Config scfg;
  scfg.n_cells = cfg.synth_cells;
  scfg.n_drugs = cfg.synth_drugs;
  scfg.n_types = cfg.synth_types;
  scfg.n_genes = static_cast<std::size_t>(cfg.synth_genes);
  scfg.fp_dim = static_cast<std::size_t>(cfg.synth_fp_dim);
  scfg.missing_rate = cfg.synth_missing;
  scfg.auc_noise_sd = cfg.synth_noise;
  scfg.seed = cfg.seed;
  const synth::Data dataset = synth::generate(scfg);
  synth::write_csv(dataset, cfg.out);
  write_provenance(cfg, "synth", {});
  std::cout << "synth: wrote " << dataset.responses.observations.size()
            << " responses for " << dataset.cells.size() << " cells x "
            << dataset.drugs.size() << " drugs to " << cfg.out << "\n";
  return 0;
}

int cmd_split(const RunConfig& cfg) {
  if (cfg.expression.empty()) throw ConfigError("missing required path: expression");
  if (cfg.out.empty()) throw ConfigError("missing required path: out");
  const auto cells = data::load_expression(cfg.expression);
  if (cells.empty()) throw DomainError("expression file has no cells");
  const auto folds = data::make_lco_folds(cells, cfg.n_folds, cfg.seed);
  fs::create_directories(cfg.out);
  data::save_folds(fs::path(cfg.out) / "folds.csv", cells, folds);
  write_provenance(cfg, "split", {cfg.expression});
  std::cout << "split: assigned " << cells.size() << " cells to " << cfg.n_folds
            << " folds\n";
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  if (cfg.expression.empty()) throw ConfigError("missing required path: expression");
  if (cfg.out.empty()) throw ConfigError("missing required path: out");
  harness::Bundle bundle = load_bundle(cfg);
  const auto folds = load_fold_file(cfg, bundle.cells);
  fs::create_directories(cfg.out);

  pretrain::Config pcfg;
  pcfg.hidden.clear();
  for (int w : cfg.gene_hidden) pcfg.hidden.push_back(static_cast<std::size_t>(w));
  pcfg.latent = static_cast<std::size_t>(cfg.latent_dim);
  pcfg.epochs = cfg.pretrain_epochs;
  pcfg.batch_size = static_cast<std::size_t>(cfg.batch_size);
  pcfg.lr = cfg.lr;
  pcfg.seed = cfg.seed;

  for_each_fold(fold_list(cfg, folds.n_folds), cfg.jobs, [&](int fold) {
    std::vector<pretrain::EpochLoss> log;
    const io::EncoderCheckpoint ckpt =
        harness::pretrain_fold(bundle, folds, fold, pcfg, &log);
    io::save_encoder(
        fs::path(cfg.out) / ("encoder_fold" + std::to_string(fold) + ".json"), ckpt);
    std::vector<std::pair<int, double>> rows;
    for (const auto& e : log) rows.emplace_back(e.epoch, e.loss);
    io::write_text_file(
        fs::path(cfg.out) / ("pretrain_loss_fold" + std::to_string(fold) + ".csv"),
        epoch_log_csv(rows));
  });
  write_provenance(cfg, "pretrain",
                   {cfg.responses, cfg.expression, cfg.fingerprints, cfg.folds});
  std::cout << "pretrain: wrote encoder checkpoints to " << cfg.out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) {
    throw ConfigError("missing required path: checkpoint (encoder directory)");
  }
  if (cfg.out.empty()) throw ConfigError("missing required path: out");
  harness::Bundle bundle = load_bundle(cfg);
  const auto folds = load_fold_file(cfg, bundle.cells);
  fs::create_directories(cfg.out);

  ranker::TrainConfig tcfg;
  tcfg.loss = ranker::parse_loss_kind(cfg.loss);
  tcfg.epochs = cfg.epochs;
  tcfg.lr = cfg.lr;
  tcfg.tau = cfg.tau;
  tcfg.drug_hidden = static_cast<std::size_t>(cfg.drug_hidden);
  tcfg.embedding_dim = static_cast<std::size_t>(cfg.embedding_dim);
  tcfg.seed = cfg.seed;

  std::vector<fs::path> inputs{cfg.responses, cfg.expression, cfg.fingerprints,
                               cfg.folds};
  for_each_fold(fold_list(cfg, folds.n_folds), cfg.jobs, [&](int fold) {
    const fs::path enc_path =
        fs::path(cfg.checkpoint) / ("encoder_fold" + std::to_string(fold) + ".json");
    const io::EncoderCheckpoint ckpt = io::load_encoder(enc_path);
    const ranker::FitResult result =
        harness::train_fold(bundle, folds, fold, ckpt, tcfg);
    io::save_model(
        fs::path(cfg.out) / ("model_fold" + std::to_string(fold) + ".json"),
        result.model);
    std::vector<std::pair<int, double>> rows;
    for (const auto& e : result.log) rows.emplace_back(e.epoch, e.loss);
    io::write_text_file(
        fs::path(cfg.out) / ("train_loss_fold" + std::to_string(fold) + ".csv"),
        epoch_log_csv(rows));
  });
  for (int fold : fold_list(cfg, folds.n_folds)) {
    inputs.push_back(fs::path(cfg.checkpoint) /
                     ("encoder_fold" + std::to_string(fold) + ".json"));
  }
  write_provenance(cfg, "train", inputs);
  std::cout << "train: wrote " << cfg.loss << " model checkpoints to " << cfg.out
            << "\n";
  return 0;
}

std::string metrics_csv(const std::vector<metrics::CellReport>& reports,
                        const std::vector<int>& ks) {
  std::ostringstream s;
  s << "fold,cell_id";
  for (int k : ks) s << ",ap@" << k;
  for (int k : ks) s << ",ah@" << k;
  s << ",ci,sci\n";
  for (const auto& r : reports) {
    s << r.fold << "," << r.cell_id;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (r.ap_defined) {
        s << "," << io::fmt_double(r.ap[i]);
      } else {
        s << ",NA";
      }
    }
    for (std::size_t i = 0; i < ks.size(); ++i) s << "," << r.hits[i];
    s << "," << (r.ci ? io::fmt_double(*r.ci) : "NA");
    s << "," << (r.sci ? io::fmt_double(*r.sci) : "NA");
    s << "\n";
  }
  return s.str();
}

json aggregate_to_json(const metrics::AggregateReport& agg) {
  json j;
  j["n_cells"] = agg.n_cells;
  json table = json::object();
  for (std::size_t i = 0; i < agg.ks.size(); ++i) {
    const std::string k = std::to_string(agg.ks[i]);
    table["ap@" + k] = agg.mean_ap[i];
    table["ah@" + k] = agg.mean_ah[i];
  }
  table["ci"] = agg.mean_ci;
  table["sci"] = agg.mean_sci;
  j["means"] = table;
  j["skipped"] = {{"ap", agg.skipped_ap},
                  {"ci", agg.skipped_ci},
                  {"sci", agg.skipped_sci}};
  return j;
}

int cmd_evaluate(const RunConfig& cfg) {
  if (cfg.models.empty()) {
    throw ConfigError("missing required path: models (model directory)");
  }
  if (cfg.out.empty()) throw ConfigError("missing required path: out");
  harness::Bundle bundle = load_bundle(cfg);
  const auto folds = load_fold_file(cfg, bundle.cells);
  fs::create_directories(cfg.out);

  const std::vector<int> targets = fold_list(cfg, folds.n_folds);
  std::vector<std::vector<metrics::CellReport>> per_fold(targets.size());
  std::vector<fs::path> inputs{cfg.responses, cfg.expression, cfg.fingerprints,
                               cfg.folds};
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const fs::path model_path =
        fs::path(cfg.models) / ("model_fold" + std::to_string(targets[i]) + ".json");
    if (!fs::exists(model_path)) {
      throw ConfigError("missing model checkpoint: " + model_path.string());
    }
    inputs.push_back(model_path);
  }
  for_each_fold(targets, cfg.jobs, [&](int fold) {
    const fs::path model_path =
        fs::path(cfg.models) / ("model_fold" + std::to_string(fold) + ".json");
    const ranker::Model model = io::load_model(model_path);
    std::vector<metrics::CellReport> reports =
        harness::evaluate_fold(bundle, folds, fold, model, cfg.ks);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i] == fold) per_fold[i] = std::move(reports);
    }
  });

  std::vector<metrics::CellReport> all;
  json per_fold_json = json::object();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto agg = metrics::aggregate(per_fold[i], cfg.ks);
    per_fold_json["fold" + std::to_string(targets[i])] = aggregate_to_json(agg);
    all.insert(all.end(), per_fold[i].begin(), per_fold[i].end());
  }
  io::write_text_file(fs::path(cfg.out) / "metrics.csv", metrics_csv(all, cfg.ks));
  json j;
  j["overall"] = aggregate_to_json(metrics::aggregate(all, cfg.ks));
  j["per_fold"] = per_fold_json;
  j["loss"] = cfg.loss;
  j["seed"] = cfg.seed;
  std::ofstream out(fs::path(cfg.out) / "metrics.json", std::ios::binary);
  out << j.dump(2) << "\n";
  out.close();
  write_provenance(cfg, "evaluate", inputs);
  std::cout << "evaluate: wrote metrics for " << all.size() << " test cells to "
            << cfg.out << "\n";
  return 0;
}

std::string similarity_csv(const analysis::SimilarityMatrix& m,
                           const std::vector<std::string>& ids) {
  std::ostringstream s;
  s << "id";
  for (const auto& id : ids) s << "," << id;
  s << "\n";
  for (std::size_t i = 0; i < m.n; ++i) {
    s << ids[i];
    for (std::size_t j = 0; j < m.n; ++j) {
      s << ",";
      if (m.is_defined(i, j)) {
        s << io::fmt_double(m.at(i, j));
      } else {
        s << "NA";
      }
    }
    s << "\n";
  }
  return s.str();
}

int cmd_analyze(const RunConfig& cfg) {
  if (cfg.models.empty()) {
    throw ConfigError("missing required path: models (model directory)");
  }
  if (cfg.out.empty()) throw ConfigError("missing required path: out");
  harness::Bundle bundle = load_bundle(cfg);
  const auto folds = load_fold_file(cfg, bundle.cells);
  const int fold = cfg.fold >= 0 ? cfg.fold : 0;
  const fs::path model_path =
      fs::path(cfg.models) / ("model_fold" + std::to_string(fold) + ".json");
  if (!fs::exists(model_path)) {
    throw ConfigError("missing model checkpoint: " + model_path.string());
  }
  const ranker::Model model = io::load_model(model_path);
  fs::create_directories(cfg.out);
  const fs::path out(cfg.out);

  // Embed every cell and drug in the chosen fold's latent spaces. Cells of
  // this fold were unseen during its training.
  std::vector<std::vector<double>> cell_emb, drug_emb;
  std::vector<std::string> cell_ids, drug_ids, cell_types;
  std::vector<bool> unseen;
  for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
    cell_emb.push_back(ranker::encode_cell(bundle.cells[i].expression, model));
    cell_ids.push_back(bundle.cells[i].id);
    cell_types.push_back(bundle.cells[i].cancer_type);
    unseen.push_back(folds.fold[i] == fold);
  }
  for (const auto& drug : bundle.drugs) {
    drug_emb.push_back(ranker::encode_drug(drug.fingerprint, model));
    drug_ids.push_back(drug.id);
  }

  json summary;
  summary["fold"] = fold;

  // Cell side: latent similarity vs response-profile similarity.
  const auto cell_latent = analysis::rbf_similarity(cell_emb);
  io::write_text_file(out / "cell_similarity_latent.csv",
                      similarity_csv(cell_latent, cell_ids));
  // The response table indexes cells in its own order; build the spearman
  // matrix there and re-map onto expression order.
  const auto resp_spearman =
      analysis::spearman_response_matrix(bundle.labeled.table);
  analysis::SimilarityMatrix cell_response;
  cell_response.kind = analysis::SimilarityKind::SpearmanResponse;
  cell_response.n = bundle.cells.size();
  cell_response.values.assign(cell_response.n * cell_response.n, 0.0);
  cell_response.defined.assign(cell_response.n * cell_response.n, false);
  for (std::size_t a = 0; a < bundle.labeled.table.cells.size(); ++a) {
    for (std::size_t b = 0; b < bundle.labeled.table.cells.size(); ++b) {
      const std::size_t pa = bundle.profile_of_cell[a];
      const std::size_t pb = bundle.profile_of_cell[b];
      cell_response.values[pa * cell_response.n + pb] = resp_spearman.at(a, b);
      cell_response.defined[pa * cell_response.n + pb] =
          resp_spearman.is_defined(a, b);
    }
  }
  io::write_text_file(out / "cell_similarity_response.csv",
                      similarity_csv(cell_response, cell_ids));
  if (const auto corr = analysis::matrix_correlation(cell_latent, cell_response)) {
    summary["corr_cell_latent_response"] = *corr;
  } else {
    summary["corr_cell_latent_response"] = nullptr;
  }

  // kNN accuracy by cancer type, reported over unseen cells and over all.
  json knn = json::object();
  for (int k : cfg.knn_ks) {
    if (k < 1 || static_cast<std::size_t>(k) >= cell_emb.size()) continue;
    const auto acc = analysis::knn_accuracy(cell_emb, cell_types, k);
    double unseen_sum = 0.0;
    std::size_t unseen_count = 0;
    for (std::size_t i = 0; i < acc.per_item.size(); ++i) {
      if (unseen[i]) {
        unseen_sum += acc.per_item[i];
        ++unseen_count;
      }
    }
    json entry;
    entry["all_cells"] = acc.mean;
    entry["unseen_cells"] =
        unseen_count ? unseen_sum / static_cast<double>(unseen_count) : 0.0;
    knn["k" + std::to_string(k)] = entry;
  }
  summary["knn_accuracy"] = knn;

  // Cell clustering and per-cluster similarity summary.
  const int k_cells =
      std::min<int>(cfg.cell_clusters, static_cast<int>(cell_emb.size()));
  const auto cell_clusters =
      analysis::kmeans_cluster(cell_emb, k_cells, derive_seed(cfg.seed, 0x31));
  {
    std::ostringstream s;
    s << "cell_id,cluster\n";
    for (std::size_t i = 0; i < cell_ids.size(); ++i) {
      s << cell_ids[i] << "," << cell_clusters.assignment[i] << "\n";
    }
    io::write_text_file(out / "cell_clusters.csv", s.str());
  }
  {
    const auto summaries =
        analysis::intra_cluster_summary(cell_clusters, cell_latent, cell_response);
    std::ostringstream s;
    s << "cluster,size,mean_latent_sim,mean_response_sim\n";
    for (const auto& c : summaries) {
      s << c.cluster << "," << c.size << "," << io::fmt_double(c.mean_latent) << ","
        << io::fmt_double(c.mean_reference) << "\n";
    }
    io::write_text_file(out / "cell_intra_cluster.csv", s.str());
  }
  {
    const auto top =
        analysis::top_compact_clusters(cell_clusters, cell_latent, cfg.top_compact);
    std::vector<std::string> type_names;
    const auto dist = analysis::category_cluster_distribution(
        cell_clusters, cell_types, top, &type_names);
    const auto overlap = analysis::cluster_overlap_similarity(dist);
    io::write_text_file(out / "cell_type_overlap.csv",
                        similarity_csv(overlap, type_names));
  }

  // Drug side: latent similarity vs sensitivity-profile similarity.
  const auto drug_latent = analysis::rbf_similarity(drug_emb);
  io::write_text_file(out / "drug_similarity_latent.csv",
                      similarity_csv(drug_latent, drug_ids));
  const auto drug_jaccard = analysis::jaccard_sensitivity_matrix(bundle.labeled);
  analysis::SimilarityMatrix drug_sens;
  drug_sens.kind = analysis::SimilarityKind::JaccardSensitivity;
  drug_sens.n = bundle.drugs.size();
  drug_sens.values.assign(drug_sens.n * drug_sens.n, 0.0);
  drug_sens.defined.assign(drug_sens.n * drug_sens.n, false);
  for (std::size_t a = 0; a < bundle.labeled.table.drugs.size(); ++a) {
    for (std::size_t b = 0; b < bundle.labeled.table.drugs.size(); ++b) {
      const std::size_t pa = bundle.profile_of_drug[a];
      const std::size_t pb = bundle.profile_of_drug[b];
      drug_sens.values[pa * drug_sens.n + pb] = drug_jaccard.at(a, b);
      drug_sens.defined[pa * drug_sens.n + pb] = drug_jaccard.is_defined(a, b);
    }
  }
  io::write_text_file(out / "drug_similarity_sensitivity.csv",
                      similarity_csv(drug_sens, drug_ids));
  if (const auto corr = analysis::matrix_correlation(drug_latent, drug_sens)) {
    summary["corr_drug_latent_sensitivity"] = *corr;
  } else {
    summary["corr_drug_latent_sensitivity"] = nullptr;
  }

  const int k_drugs =
      std::min<int>(cfg.drug_clusters, static_cast<int>(drug_emb.size()));
  const auto drug_clusters =
      analysis::kmeans_cluster(drug_emb, k_drugs, derive_seed(cfg.seed, 0x32));
  {
    std::ostringstream s;
    s << "drug_id,cluster\n";
    for (std::size_t i = 0; i < drug_ids.size(); ++i) {
      s << drug_ids[i] << "," << drug_clusters.assignment[i] << "\n";
    }
    io::write_text_file(out / "drug_clusters.csv", s.str());
  }
  {
    const auto summaries =
        analysis::intra_cluster_summary(drug_clusters, drug_latent, drug_sens);
    std::ostringstream s;
    s << "cluster,size,mean_latent_sim,mean_sensitivity_sim\n";
    for (const auto& c : summaries) {
      s << c.cluster << "," << c.size << "," << io::fmt_double(c.mean_latent) << ","
        << io::fmt_double(c.mean_reference) << "\n";
    }
    io::write_text_file(out / "drug_intra_cluster.csv", s.str());
  }

  std::vector<fs::path> inputs{cfg.responses, cfg.expression, cfg.fingerprints,
                               cfg.folds, model_path};
  // Optional MoA categories for the drug-side overlap matrix.
  if (!cfg.moa.empty()) {
    const io::CsvFile moa_csv = io::read_csv(cfg.moa);
    std::map<std::string, std::string> moa_of;
    for (std::size_t r = 0; r < moa_csv.rows.size(); ++r) {
      if (moa_csv.rows[r].size() != 2) {
        throw ParseError(cfg.moa + ":" + std::to_string(moa_csv.line_numbers[r]) +
                         ": expected 2 fields");
      }
      moa_of[moa_csv.rows[r][0]] = moa_csv.rows[r][1];
    }
    std::vector<std::string> drug_cats;
    for (const auto& id : drug_ids) {
      auto it = moa_of.find(id);
      drug_cats.push_back(it == moa_of.end() ? "unknown" : it->second);
    }
    const auto top = analysis::top_compact_clusters(drug_clusters, drug_latent,
                                                    cfg.top_compact);
    std::vector<std::string> moa_names;
    const auto dist = analysis::category_cluster_distribution(drug_clusters,
                                                              drug_cats, top,
                                                              &moa_names);
    io::write_text_file(out / "drug_moa_overlap.csv",
                        similarity_csv(analysis::cluster_overlap_similarity(dist),
                                       moa_names));
    inputs.push_back(cfg.moa);
  }

  std::ofstream sum(out / "correlations.json", std::ios::binary);
  sum << summary.dump(2) << "\n";
  sum.close();
  write_provenance(cfg, "analyze", inputs);
  std::cout << "analyze: wrote embedding analyses to " << cfg.out << "\n";
  return 0;
}

void add_common_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--config", "JSON config file (flags override file values)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--responses", cfg.responses, "response CSV (cell_id,drug_id,auc)");
  cmd->add_option("--expression", cfg.expression,
                  "expression CSV (cell_id,cancer_type,g_1..g_G)");
  cmd->add_option("--fingerprints", cfg.fingerprints,
                  "fingerprint CSV (drug_id,f_1..f_F)");
  cmd->add_option("--folds", cfg.folds, "fold CSV from `split`");
  cmd->add_option("--checkpoint", cfg.checkpoint, "encoder checkpoint directory");
  cmd->add_option("--models", cfg.models, "model checkpoint directory");
  cmd->add_option("--out", cfg.out, "output directory");
  cmd->add_option("--loss", cfg.loss, "list_one or list_all");
  cmd->add_option("--percentile", cfg.percentile, "sensitivity percentile");
  cmd->add_option("--n-folds", cfg.n_folds, "number of LCO folds");
  cmd->add_option("--pretrain-epochs", cfg.pretrain_epochs, "autoencoder epochs");
  cmd->add_option("--epochs", cfg.epochs, "ranking epochs");
  cmd->add_option("--lr", cfg.lr, "Adam learning rate");
  cmd->add_option("--tau", cfg.tau, "List-All softmax temperature");
  cmd->add_option("--embedding-dim", cfg.embedding_dim, "drug embedding dim M");
  cmd->add_option("--latent-dim", cfg.latent_dim, "cell embedding dim");
  cmd->add_option("--gene-hidden", cfg.gene_hidden, "encoder hidden widths");
  cmd->add_option("--drug-hidden", cfg.drug_hidden, "drug encoder hidden width");
  cmd->add_option("--batch-size", cfg.batch_size, "pretraining batch size");
  cmd->add_option("--seed", cfg.seed, "global seed");
  cmd->add_option("--ks", cfg.ks, "metric cutoffs K");
  cmd->add_option("--jobs", cfg.jobs, "parallel folds");
  cmd->add_option("--fold", cfg.fold, "restrict to one fold (-1 = all)");
  cmd->add_option("--kernels", cfg.kernels, "auto, scalar or avx2");
  cmd->add_option("--moa", cfg.moa, "drug category CSV (drug_id,category)");
  cmd->add_option("--cell-clusters", cfg.cell_clusters, "cell k-means k");
  cmd->add_option("--drug-clusters", cfg.drug_clusters, "drug k-means k");
  cmd->add_option("--top-compact", cfg.top_compact, "clusters used for overlap");
  cmd->add_option("--knn-ks", cfg.knn_ks, "kNN accuracy cutoffs");
  cmd->add_option("--synth-cells", cfg.synth_cells, "synthetic cell count");
  cmd->add_option("--synth-drugs", cfg.synth_drugs, "synthetic drug count");
  cmd->add_option("--synth-types", cfg.synth_types, "synthetic cancer types");
  cmd->add_option("--synth-genes", cfg.synth_genes, "synthetic gene count");
  cmd->add_option("--synth-fp-dim", cfg.synth_fp_dim, "synthetic fingerprint dim");
  cmd->add_option("--synth-missing", cfg.synth_missing, "synthetic missing rate");
  cmd->add_option("--synth-noise", cfg.synth_noise, "synthetic AUC noise sd");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"listwise learning-to-rank pipeline for drug prioritization"};
  app.require_subcommand(1);

  RunConfig cfg;
  // First pass: --config applies before flags so flags win.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_file(argv[i + 1], cfg);
      } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate synthetic benchmark data");
  CLI::App* split_cmd = app.add_subcommand("split", "write stratified LCO folds");
  CLI::App* pre_cmd = app.add_subcommand("pretrain", "pretrain per-fold autoencoders");
  CLI::App* train_cmd = app.add_subcommand("train", "train per-fold ranking models");
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "score test folds and report metrics");
  CLI::App* ana_cmd = app.add_subcommand("analyze", "embedding-quality analyses");
  for (CLI::App* cmd : {synth_cmd, split_cmd, pre_cmd, train_cmd, eval_cmd, ana_cmd}) {
    add_common_options(cmd, cfg);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    validate(cfg);
    select_kernels(cfg);
    if (synth_cmd->parsed()) return cmd_synth(cfg);
    if (split_cmd->parsed()) return cmd_split(cfg);
    if (pre_cmd->parsed()) return cmd_pretrain(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg);
    if (ana_cmd->parsed()) return cmd_analyze(cfg);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    // parse/shape/domain/numeric: data errors
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
