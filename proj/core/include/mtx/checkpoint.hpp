#pragma once

#include <string>

#include "mtx/autodiff.hpp"
#include "mtx/config.hpp"
#include "mtx/text.hpp"

namespace mtx {

// Everything a checkpoint carries besides raw tensor values.
struct CheckpointInfo {
  ModelConfig config;
  Vocabulary vocab;
  int step = 0;
};

// Single binary file: 8-byte magic, little-endian u64 manifest length, JSON
// manifest (config, vocabulary, tensor table, optimizer step), then float32
// blobs — parameters in store order followed by the two Adam moment sets
// when the optimizer has stepped.
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocabulary& vocab,
                     const ad::ParamStore& params, const ad::Adam::State& adam, int step);

// Manifest only; enough to rebuild the model before loading tensors.
CheckpointInfo read_checkpoint_info(const std::string& path);

// Overwrites the store's tensor values and the Adam state. The live store
// must match the stored table name-for-name and shape-for-shape.
CheckpointInfo load_checkpoint(const std::string& path, ad::ParamStore& params,
                               ad::Adam::State& adam);

}  // namespace mtx
