#include "listrank/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "listrank/errors.hpp"

namespace listrank::io {

namespace {

using nlohmann::json;

constexpr int kVersion = 1;

json layer_to_json(const nn::DenseLayer& layer) {
  json j;
  j["in"] = layer.in_dim;
  j["out"] = layer.out_dim;
  j["activation"] = layer.activation == nn::Activation::Relu ? "relu" : "identity";
  j["weights"] = layer.weights;
  j["bias"] = layer.bias;
  return j;
}

nn::DenseLayer layer_from_json(const json& j) {
  nn::DenseLayer layer;
  layer.in_dim = j.at("in").get<std::size_t>();
  layer.out_dim = j.at("out").get<std::size_t>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "relu") {
    layer.activation = nn::Activation::Relu;
  } else if (act == "identity") {
    layer.activation = nn::Activation::Identity;
  } else {
    throw ParseError("checkpoint: unknown activation '" + act + "'");
  }
  layer.weights = j.at("weights").get<std::vector<double>>();
  layer.bias = j.at("bias").get<std::vector<double>>();
  if (layer.weights.size() != layer.in_dim * layer.out_dim ||
      layer.bias.size() != layer.out_dim) {
    throw ParseError("checkpoint: layer shape does not match payload");
  }
  return layer;
}

json mlp_to_json(const nn::Mlp& mlp) {
  json layers = json::array();
  for (const nn::DenseLayer& layer : mlp.layers) layers.push_back(layer_to_json(layer));
  return layers;
}

nn::Mlp mlp_from_json(const json& j) {
  nn::Mlp mlp;
  for (const json& l : j) mlp.layers.push_back(layer_from_json(l));
  return mlp;
}

json standardizer_to_json(const data::Standardizer& st) {
  json j;
  j["mean"] = st.mean;
  j["stdev"] = st.stdev;
  return j;
}

data::Standardizer standardizer_from_json(const json& j) {
  data::Standardizer st;
  st.mean = j.at("mean").get<std::vector<double>>();
  st.stdev = j.at("stdev").get<std::vector<double>>();
  if (st.mean.size() != st.stdev.size()) {
    throw ParseError("checkpoint: standardizer shape mismatch");
  }
  return st;
}

json read_checkpoint(const std::filesystem::path& path, const char* expected_kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": invalid checkpoint JSON: " + e.what());
  }
  if (j.value("format", "") != "listrank-checkpoint" ||
      j.value("kind", "") != expected_kind) {
    throw ParseError(path.string() + ": not a " + std::string(expected_kind) +
                     " checkpoint");
  }
  if (j.value("version", 0) != kVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version");
  }
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void save_encoder(const std::filesystem::path& path, const EncoderCheckpoint& ckpt) {
  json j;
  j["format"] = "listrank-checkpoint";
  j["kind"] = "encoder";
  j["version"] = kVersion;
  j["standardizer"] = standardizer_to_json(ckpt.standardizer);
  j["encoder"] = mlp_to_json(ckpt.encoder);
  write_json(path, j);
}

EncoderCheckpoint load_encoder(const std::filesystem::path& path) {
  const json j = read_checkpoint(path, "encoder");
  EncoderCheckpoint ckpt;
  ckpt.standardizer = standardizer_from_json(j.at("standardizer"));
  ckpt.encoder = mlp_from_json(j.at("encoder"));
  return ckpt;
}

void save_model(const std::filesystem::path& path, const ranker::Model& model) {
  json j;
  j["format"] = "listrank-checkpoint";
  j["kind"] = "model";
  j["version"] = kVersion;
  j["standardizer"] = standardizer_to_json(model.standardizer);
  j["gene_encoder"] = mlp_to_json(model.gene_encoder);
  j["drug_encoder"] = mlp_to_json(model.drug_encoder);
  j["bilinear"] = {{"rows", model.bilinear.rows},
                   {"cols", model.bilinear.cols},
                   {"data", model.bilinear.data}};
  write_json(path, j);
}

ranker::Model load_model(const std::filesystem::path& path) {
  const json j = read_checkpoint(path, "model");
  ranker::Model model;
  model.standardizer = standardizer_from_json(j.at("standardizer"));
  model.gene_encoder = mlp_from_json(j.at("gene_encoder"));
  model.drug_encoder = mlp_from_json(j.at("drug_encoder"));
  const json& b = j.at("bilinear");
  model.bilinear.rows = b.at("rows").get<std::size_t>();
  model.bilinear.cols = b.at("cols").get<std::size_t>();
  model.bilinear.data = b.at("data").get<std::vector<double>>();
  if (model.bilinear.data.size() != model.bilinear.rows * model.bilinear.cols) {
    throw ParseError(path.string() + ": bilinear shape does not match payload");
  }
  return model;
}

}  // namespace listrank::io
