#include "mtx/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace mtx {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'M', 'T', 'X', 'C', 'K', 'P', 'T', '1'};

void write_mat(std::ofstream& out, const ad::Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(m.size())));
}

void read_mat(std::ifstream& in, ad::Mat& m, const std::string& path) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(m.size())));
  if (!in) throw std::runtime_error("checkpoint " + path + ": truncated tensor data");
}

json read_manifest(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint " + path + ": bad magic");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw std::runtime_error("checkpoint " + path + ": truncated header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint " + path + ": truncated manifest");
  json m = json::parse(text, nullptr, false);
  if (m.is_discarded() || !m.is_object())
    throw std::runtime_error("checkpoint " + path + ": manifest is not valid JSON");
  if (m.value("version", 0) != 1)
    throw std::runtime_error("checkpoint " + path + ": unsupported version");
  return m;
}

CheckpointInfo info_from_manifest(const json& m, const std::string& path) {
  CheckpointInfo info;
  try {
    info.config = ModelConfig::from_json(m.at("config").dump());
    info.vocab = Vocabulary(m.at("vocab").get<std::vector<std::string>>());
    info.step = m.at("step").get<int>();
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
  return info;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocabulary& vocab,
                     const ad::ParamStore& params, const ad::Adam::State& adam, int step) {
  const bool moments = !adam.m.empty();
  if (moments && (adam.m.size() != params.items.size() || adam.v.size() != params.items.size()))
    throw std::invalid_argument("save_checkpoint: optimizer state does not cover the store");

  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, node] : params.items) {
    tensors.push_back({{"name", name},
                       {"rows", static_cast<int>(node->val.rows())},
                       {"cols", static_cast<int>(node->val.cols())},
                       {"offset", offset}});
    offset += sizeof(float) * static_cast<std::uint64_t>(node->val.size());
  }
  const std::vector<std::string>& all = vocab.tokens();
  const std::vector<std::string> learned(all.begin() + Vocabulary::kNumSpecials, all.end());
  json manifest{{"version", 1},
                {"step", step},
                {"config", json::parse(cfg.to_json())},
                {"vocab", learned},
                {"tensors", tensors},
                {"adam_t", adam.t},
                {"has_moments", moments}};
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint " + path + ": cannot open for writing");
  out.write(kMagic, 8);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, node] : params.items) write_mat(out, node->val);
  if (moments) {
    for (const auto& m : adam.m) write_mat(out, m);
    for (const auto& v : adam.v) write_mat(out, v);
  }
  out.flush();
  if (!out) throw std::runtime_error("checkpoint " + path + ": write failed");
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint " + path + ": cannot open");
  return info_from_manifest(read_manifest(in, path), path);
}

CheckpointInfo load_checkpoint(const std::string& path, ad::ParamStore& params,
                               ad::Adam::State& adam) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint " + path + ": cannot open");
  const json manifest = read_manifest(in, path);
  CheckpointInfo info = info_from_manifest(manifest, path);

  const json& tensors = manifest.at("tensors");
  if (tensors.size() != params.items.size())
    throw std::runtime_error("checkpoint " + path + ": stores " +
                             std::to_string(tensors.size()) + " tensors, model has " +
                             std::to_string(params.items.size()));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    const auto& [name, node] = params.items[i];
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != name)
      throw std::runtime_error("checkpoint " + path + ": tensor " + std::to_string(i) + " is '" +
                               t.at("name").get<std::string>() + "', model expects '" + name +
                               "'");
    if (t.at("rows").get<int>() != node->val.rows() || t.at("cols").get<int>() != node->val.cols())
      throw std::runtime_error("checkpoint " + path + ": tensor '" + name + "' shape mismatch");
  }
  for (auto& [name, node] : params.items) read_mat(in, node->val, path);

  adam.t = manifest.at("adam_t").get<int>();
  adam.m.clear();
  adam.v.clear();
  if (manifest.at("has_moments").get<bool>()) {
    for (const auto& [name, node] : params.items) {
      adam.m.emplace_back(ad::Mat::Zero(node->val.rows(), node->val.cols()));
      read_mat(in, adam.m.back(), path);
    }
    for (const auto& [name, node] : params.items) {
      adam.v.emplace_back(ad::Mat::Zero(node->val.rows(), node->val.cols()));
      read_mat(in, adam.v.back(), path);
    }
  }
  return info;
}

}  // namespace mtx
