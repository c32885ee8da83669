#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/config.hpp"

namespace mtx {

// How a decode-region stream participates in one forward pass.
//  decoding: being predicted; causal within itself
//  context:  teacher-forced/known tokens the other stream may read
//  padded:   absent; attends nowhere and receives no attention
enum class StreamMode { decoding, context, padded };

// Slot ranges of the joint sequence:
// [question | objects | ocr | explanation decode | answer decode]
struct SequenceLayout {
  int q0 = 0, nq = 0;
  int obj0 = 0, nobj = 0;
  int ocr0 = 0, nocr = 0;
  int expl0 = 0, nexpl = 0;
  int ans0 = 0, nans = 0;
  int total = 0;

  static SequenceLayout from_config(const ModelConfig& cfg);
};

// attention(i, j) = 1 when slot i may read slot j:
//  - encoder slots (question/objects/ocr) read present encoder slots only
//  - context slots read present encoder slots and their own earlier slots
//  - decoding slots read present encoder slots, every present slot of a
//    context stream, and their own earlier slots
//  - absent slots read nothing and are read by nobody
ad::Mat build_attention_mask(const SequenceLayout& layout, const std::vector<char>& present,
                             StreamMode expl_mode, StreamMode ans_mode);

struct MultimodalSequence {
  SequenceLayout layout;
  ad::NodePtr embeddings;     // total x d
  ad::Mat attention;          // total x total
  std::vector<char> present;  // per slot
};

// Places the per-stream embedding rows (each row count <= its cap) into the
// fixed slot layout, zero rows elsewhere, and builds the attention mask.
MultimodalSequence assemble_sequence(const SequenceLayout& layout, const ad::NodePtr& question,
                                     const ad::NodePtr& objects, const ad::NodePtr& ocr,
                                     const ad::NodePtr& expl, const ad::NodePtr& ans,
                                     StreamMode expl_mode, StreamMode ans_mode);

struct TransformerLayerParams {
  ad::NodePtr wq, bq, wk, bk, wv, bv, wo, bo;
  ad::NodePtr ln1_g, ln1_b;
  ad::NodePtr ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  ad::NodePtr ln2_g, ln2_b;
};

struct TransformerParams {
  int n_heads = 0;
  std::vector<TransformerLayerParams> layers;
};

TransformerParams make_transformer_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                                          const std::string& prefix = "mmt");

// Post-norm multi-head self-attention stack honoring seq.attention.
ad::NodePtr transformer_forward(const MultimodalSequence& seq, const TransformerParams& p);

struct PointerParams {
  ad::NodePtr w_v, b_v;  // d x vocab, 1 x vocab
  ad::NodePtr w_q, b_q;  // d x d,     1 x d
  ad::NodePtr w_o, b_o;  // d x d,     1 x d
};

PointerParams make_pointer_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                                  const std::string& prefix = "ptr");

// Rows = decode steps. Output n x (vocab + n_ocr): fixed-vocab scores
// W_v z + b_v next to copy scores (W_q z + b_q) . (W_o y_n + b_o).
ad::NodePtr pointer_logits(const PointerParams& p, const ad::NodePtr& decode_rows,
                           const ad::NodePtr& ocr_rows);

// Inference view of one step's scores; absent OCR slots hold -inf.
struct PointerScores {
  std::vector<float> vocab_scores;
  std::vector<float> ocr_scores;
};

PointerScores pointer_scores(const PointerParams& p, const ad::NodePtr& decode_row,
                             const ad::NodePtr& ocr_rows, int max_ocr);

enum class TokenSource { vocab, ocr };

struct Emitted {
  TokenSource source = TokenSource::vocab;
  int index = 0;

  bool operator==(const Emitted& o) const { return source == o.source && index == o.index; }
};

struct DecodingState {
  int cap = 0;
  bool teacher_forcing = false;
  std::vector<Emitted> emitted;
  bool finished = false;

  int step() const { return static_cast<int>(emitted.size()); }
};

// Greedy argmax over [vocab ‖ ocr] (ties -> lowest combined index), or the
// ground-truth token under teacher forcing. Emitting <end> or reaching the
// cap finishes the stream.
Emitted decode_step(DecodingState& state, const PointerScores& scores,
                    const std::optional<Emitted>& ground_truth = std::nullopt);

}  // namespace mtx
