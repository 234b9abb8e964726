#include "listrank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "listrank/errors.hpp"
#include "listrank/kernels.hpp"
#include "listrank/losses.hpp"

namespace listrank::ranker {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "list_one") return LossKind::ListOne;
  if (name == "list_all") return LossKind::ListAll;
  throw ConfigError("unknown loss '" + name + "' (expected list_one or list_all)");
}

const char* loss_kind_name(LossKind kind) {
  return kind == LossKind::ListOne ? "list_one" : "list_all";
}

std::vector<double> encode_cell(std::span<const double> expression,
                                const Model& model) {
  return nn::mlp_forward(model.standardizer.apply(expression), model.gene_encoder);
}

std::vector<double> encode_drug(std::span<const double> fingerprint,
                                const Model& model) {
  return nn::mlp_forward(fingerprint, model.drug_encoder);
}

double score(std::span<const double> u, std::span<const double> v, const Matrix& w) {
  if (u.size() != w.rows || v.size() != w.cols) {
    throw ShapeError("score: embedding dims do not match bilinear matrix");
  }
  std::vector<double> wv(w.rows);
  kernels::matvec(w.data.data(), w.rows, w.cols, v.data(), wv.data());
  return kernels::dot(u.data(), wv.data(), u.size());
}

std::vector<ScoredDrug> score_list(
    std::span<const double> expression,
    const std::vector<std::span<const double>>& fingerprints,
    const std::vector<std::size_t>& drug_indices, const Model& model) {
  if (fingerprints.size() != drug_indices.size()) {
    throw ShapeError("score_list: fingerprints/indices length mismatch");
  }
  const std::vector<double> u = encode_cell(expression, model);
  std::vector<ScoredDrug> scored;
  scored.reserve(fingerprints.size());
  for (std::size_t i = 0; i < fingerprints.size(); ++i) {
    const std::vector<double> v = encode_drug(fingerprints[i], model);
    scored.push_back({drug_indices[i], score(u, v, model.bilinear)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredDrug& a, const ScoredDrug& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.drug_index < b.drug_index;
  });
  return scored;
}

ModelGrads zero_grads(const Model& model) {
  ModelGrads g;
  g.gene = nn::zero_grads(model.gene_encoder);
  g.drug = nn::zero_grads(model.drug_encoder);
  g.bilinear = Matrix(model.bilinear.rows, model.bilinear.cols);
  return g;
}

double list_loss_and_grads(const Model& model, const ListSample& sample,
                           LossKind kind, double tau, ModelGrads* grads) {
  const std::size_t n_drugs = sample.fingerprints.size();
  if (n_drugs == 0) throw DomainError("list loss: empty drug list");
  if (sample.aucs.size() != n_drugs || sample.labels.size() != n_drugs) {
    throw ShapeError("list loss: aucs/labels length mismatch");
  }

  // Forward through both encoders and the bilinear scorer.
  nn::MlpTrace cell_trace;
  const std::vector<double> x = model.standardizer.apply(sample.expression);
  const std::vector<double> u =
      nn::mlp_forward(x, model.gene_encoder, grads ? &cell_trace : nullptr);

  std::vector<nn::MlpTrace> drug_traces(grads ? n_drugs : 0);
  std::vector<std::vector<double>> v(n_drugs);
  std::vector<double> scores(n_drugs);
  const Matrix& w = model.bilinear;
  std::vector<double> wv(w.rows);
  for (std::size_t d = 0; d < n_drugs; ++d) {
    v[d] = nn::mlp_forward(sample.fingerprints[d], model.drug_encoder,
                           grads ? &drug_traces[d] : nullptr);
    kernels::matvec(w.data.data(), w.rows, w.cols, v[d].data(), wv.data());
    scores[d] = kernels::dot(u.data(), wv.data(), u.size());
  }

  losses::ListLoss loss;
  if (kind == LossKind::ListOne) {
    std::vector<double> target = losses::top_one_target(sample.aucs);
    loss = losses::list_one(scores, target);
  } else {
    std::vector<double> labels(sample.labels.begin(), sample.labels.end());
    loss = losses::list_all(scores, labels, tau);
  }
  if (!grads) return loss.value;

  // Backward. With g_d = dL/df_d:
  //   dL/dW  = u (sum_d g_d v_d)^T
  //   dL/du  = W (sum_d g_d v_d)
  //   dL/dv_d = g_d W^T u
  std::vector<double> weighted_v(w.cols, 0.0);
  for (std::size_t d = 0; d < n_drugs; ++d) {
    kernels::axpy(loss.score_grad[d], v[d].data(), weighted_v.data(), w.cols);
  }
  kernels::rank1_update(grads->bilinear.data.data(), w.rows, w.cols, 1.0, u.data(),
                        weighted_v.data());

  std::vector<double> gu(w.rows);
  kernels::matvec(w.data.data(), w.rows, w.cols, weighted_v.data(), gu.data());
  nn::mlp_backward(model.gene_encoder, cell_trace, gu, grads->gene);

  std::vector<double> wtu(w.cols);
  kernels::matvec_t(w.data.data(), w.rows, w.cols, u.data(), wtu.data());
  std::vector<double> gv(w.cols);
  for (std::size_t d = 0; d < n_drugs; ++d) {
    for (std::size_t j = 0; j < w.cols; ++j) gv[j] = loss.score_grad[d] * wtu[j];
    nn::mlp_backward(model.drug_encoder, drug_traces[d], gv, grads->drug);
  }
  return loss.value;
}

namespace {

struct TensorRef {
  std::vector<double>* params;
  std::vector<double>* grads;
};

std::vector<TensorRef> tensor_refs(Model& model, ModelGrads& grads) {
  std::vector<TensorRef> refs;
  for (std::size_t li = 0; li < model.gene_encoder.layers.size(); ++li) {
    refs.push_back({&model.gene_encoder.layers[li].weights, &grads.gene[li].weights});
    refs.push_back({&model.gene_encoder.layers[li].bias, &grads.gene[li].bias});
  }
  for (std::size_t li = 0; li < model.drug_encoder.layers.size(); ++li) {
    refs.push_back({&model.drug_encoder.layers[li].weights, &grads.drug[li].weights});
    refs.push_back({&model.drug_encoder.layers[li].bias, &grads.drug[li].bias});
  }
  refs.push_back({&model.bilinear.data, &grads.bilinear.data});
  return refs;
}

}  // namespace

FitResult fit(const std::vector<ListSample>& train,
              const data::Standardizer& standardizer,
              const nn::Mlp& pretrained_encoder, std::size_t fingerprint_dim,
              const TrainConfig& config) {
  if (train.empty()) throw DomainError("fit: no training cells");
  if (pretrained_encoder.layers.empty()) {
    throw ConfigError("fit: pretrained encoder is empty");
  }
  Rng rng(config.seed);
  FitResult result;
  result.model.standardizer = standardizer;
  result.model.gene_encoder = pretrained_encoder;
  result.model.drug_encoder.layers.push_back(nn::make_dense(
      fingerprint_dim, config.drug_hidden, nn::Activation::Relu, rng));
  result.model.drug_encoder.layers.push_back(nn::make_dense(
      config.drug_hidden, config.embedding_dim, nn::Activation::Identity, rng));
  const std::size_t latent = pretrained_encoder.out_dim();
  result.model.bilinear = Matrix(latent, config.embedding_dim);
  {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(latent + config.embedding_dim));
    for (double& w : result.model.bilinear.data) w = rng.uniform(-bound, bound);
  }

  Model& model = result.model;

  // Initial objective value (epoch 0).
  double init_loss = 0.0;
  for (const ListSample& sample : train) {
    init_loss += list_loss_and_grads(model, sample, config.loss, config.tau, nullptr);
  }
  result.log.push_back({0, init_loss});

  ModelGrads grads = zero_grads(model);
  std::vector<TensorRef> refs = tensor_refs(model, grads);
  std::vector<nn::AdamState> opt;
  opt.reserve(refs.size());
  for (const TensorRef& ref : refs) {
    opt.push_back(nn::make_adam(ref.params->size(), config.lr));
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      for (const TensorRef& ref : refs) {
        std::fill(ref.grads->begin(), ref.grads->end(), 0.0);
      }
      epoch_loss += list_loss_and_grads(model, train[idx], config.loss, config.tau,
                                        &grads);
      for (std::size_t t = 0; t < refs.size(); ++t) {
        nn::adam_step(*refs[t].params, *refs[t].grads, opt[t]);
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw TrainError("training diverged at epoch " + std::to_string(epoch));
    }
    result.log.push_back({epoch, epoch_loss});
  }
  return result;
}

std::vector<double> flatten_params(const Model& model) {
  std::vector<double> flat;
  for (const nn::DenseLayer& layer : model.gene_encoder.layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  for (const nn::DenseLayer& layer : model.drug_encoder.layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  flat.insert(flat.end(), model.bilinear.data.begin(), model.bilinear.data.end());
  return flat;
}

void unflatten_params(std::span<const double> flat, Model& model) {
  std::size_t pos = 0;
  auto take = [&](std::vector<double>& dst) {
    if (pos + dst.size() > flat.size()) {
      throw ShapeError("unflatten_params: flat vector too short");
    }
    std::copy(flat.begin() + pos, flat.begin() + pos + dst.size(), dst.begin());
    pos += dst.size();
  };
  for (nn::DenseLayer& layer : model.gene_encoder.layers) {
    take(layer.weights);
    take(layer.bias);
  }
  for (nn::DenseLayer& layer : model.drug_encoder.layers) {
    take(layer.weights);
    take(layer.bias);
  }
  take(model.bilinear.data);
  if (pos != flat.size()) {
    throw ShapeError("unflatten_params: flat vector too long");
  }
}

std::vector<double> flatten_grads(const Model& model, const ModelGrads& grads) {
  std::vector<double> flat;
  for (std::size_t li = 0; li < model.gene_encoder.layers.size(); ++li) {
    flat.insert(flat.end(), grads.gene[li].weights.begin(),
                grads.gene[li].weights.end());
    flat.insert(flat.end(), grads.gene[li].bias.begin(), grads.gene[li].bias.end());
  }
  for (std::size_t li = 0; li < model.drug_encoder.layers.size(); ++li) {
    flat.insert(flat.end(), grads.drug[li].weights.begin(),
                grads.drug[li].weights.end());
    flat.insert(flat.end(), grads.drug[li].bias.begin(), grads.drug[li].bias.end());
  }
  flat.insert(flat.end(), grads.bilinear.data.begin(), grads.bilinear.data.end());
  return flat;
}

}  // namespace listrank::ranker
