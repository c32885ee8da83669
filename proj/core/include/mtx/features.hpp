#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/config.hpp"
#include "mtx/rng.hpp"
#include "mtx/types.hpp"

namespace mtx {

// The five stream kinds of the joint sequence.
enum class Role { question, object, ocr, expl_slot, ans_slot };
const char* role_name(Role r);

// [x_min/W, y_min/H, x_max/W, y_max/H]; out-of-bounds boxes are clamped with
// a warning.
std::array<float, 4> relative_location(const BoundingBox& box, double image_w, double image_h);

// Pyramidal histogram of characters: unigram levels 2..5 over a-z0-9
// (504 bits) then a level-2 histogram over the 50 most common English
// bigrams (100 bits). Occupancy is decided by an exact integer overlap test.
// Characters outside [a-z0-9] are dropped after lowercasing; a word that
// filters to nothing encodes as all zeros with a warning.
constexpr int kPhocDim = 604;
extern const std::array<const char*, 50> kPhocBigrams;
std::vector<float> phoc_encode(const std::string& word);

// Deterministic stand-in for pretrained word vectors: mean of hash-seeded
// unit vectors of the word's character 3-5 grams (with <> boundary markers).
std::vector<float> subword_embed(const std::string& word, int dim = 300);

// Optional pretrained table: one "token v0 v1 ... v_{dim-1}" line per word.
class VectorTable {
 public:
  VectorTable() = default;
  static VectorTable load(const std::string& path);
  const std::vector<float>* find(const std::string& word) const;
  int dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::vector<float>> table_;
  int dim_ = 0;
};

// Table hit when available, hash fallback otherwise.
std::vector<float> word_vector(const std::string& word, int dim, const VectorTable* table);

// A stream of token embeddings: one row per token, d_model columns.
struct EmbeddedStream {
  ad::NodePtr rows;
  Role role = Role::question;
  int count = 0;
};

// Owns the learned projections that lift raw features into d_model space.
// Parameters are registered on the shared store under "embed.*".
class Embedder {
 public:
  Embedder(const ModelConfig& cfg, ad::ParamStore& params, Rng& rng,
           const VectorTable* table = nullptr);

  // Raw per-token feature matrices, computed once per sample and reused
  // across forwards.
  struct OcrFeatures {
    Eigen::MatrixXf fasttext;    // n x fasttext_dim
    Eigen::MatrixXf appearance;  // n x d_app
    Eigen::MatrixXf phoc;        // n x phoc_dim
    Eigen::MatrixXf location;    // n x 4
  };
  struct ObjectFeatures {
    Eigen::MatrixXf appearance;  // n x d_app
    Eigen::MatrixXf location;    // n x 4
  };

  OcrFeatures ocr_features(const std::vector<OcrToken>& tokens, double image_w,
                           double image_h) const;
  ObjectFeatures object_features(const std::vector<ObjectRegion>& regions, double image_w,
                                 double image_h) const;
  Eigen::MatrixXf text_features(const std::vector<std::string>& tokens) const;

  // LN(W_ft.ft + W_app.app) + LN(W_phoc.phoc + W_loc.loc) + role vector
  EmbeddedStream embed_ocr(const OcrFeatures& f) const;
  // LN(W_app.app) + LN(W_loc.loc) + role vector
  EmbeddedStream embed_objects(const ObjectFeatures& f) const;
  // W_txt.subword + position + role vector; list must already fit the cap
  EmbeddedStream embed_text(const Eigen::MatrixXf& subword, Role role) const;
  // Adds step positions and the stream's role vector to already-lifted
  // decode feedback rows (vocabulary-table rows or copied token embeddings).
  EmbeddedStream embed_decode(const ad::NodePtr& rows, Role role) const;

  int role_cap(Role r) const;
  const ModelConfig& config() const { return cfg_; }
  const VectorTable* table() const { return table_; }

 private:
  ModelConfig cfg_;
  const VectorTable* table_ = nullptr;

  ad::NodePtr w_ocr_ft_, w_ocr_app_, w_ocr_phoc_, w_ocr_loc_;
  ad::NodePtr ln1_g_, ln1_b_, ln2_g_, ln2_b_;
  ad::NodePtr w_obj_app_, w_obj_loc_;
  ad::NodePtr obj_ln1_g_, obj_ln1_b_, obj_ln2_g_, obj_ln2_b_;
  ad::NodePtr w_txt_;
  ad::NodePtr role_vecs_;  // 5 x d_model
  ad::NodePtr pos_question_, pos_expl_, pos_ans_;
};

}  // namespace mtx
