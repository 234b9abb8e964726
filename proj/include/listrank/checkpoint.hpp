#pragma once

#include <filesystem>

#include "listrank/dataset.hpp"
#include "listrank/nn.hpp"
#include "listrank/ranker.hpp"

// Versioned JSON checkpoints. The encoder checkpoint carries the per-gene
// standardizer fit on the training folds so downstream stages apply the same
// transform; the model checkpoint is self-contained for scoring.
namespace listrank::io {

struct EncoderCheckpoint {
  data::Standardizer standardizer;
  nn::Mlp encoder;
};

void save_encoder(const std::filesystem::path& path, const EncoderCheckpoint& ckpt);
EncoderCheckpoint load_encoder(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const ranker::Model& model);
ranker::Model load_model(const std::filesystem::path& path);

}  // namespace listrank::io
