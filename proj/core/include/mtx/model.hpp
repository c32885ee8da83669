#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/config.hpp"
#include "mtx/features.hpp"
#include "mtx/graph.hpp"
#include "mtx/mmt.hpp"
#include "mtx/seghead.hpp"
#include "mtx/text.hpp"
#include "mtx/types.hpp"

namespace mtx {

// Which decode stream trains first within one step. Sequential orderings
// hand the first stream's ground truth to the second pass as context;
// `independent` keeps the streams blind to each other.
enum class Ordering { answer_first, text_first, independent };

const char* ordering_name(Ordering o);

// Per-sample work that is identical across every forward pass: normalized
// text, raw feature matrices, the containment graph, decode supervision and
// the segmentation ground truth. Computed once, reused for the whole run.
struct PreparedSample {
  std::string question_id;
  std::string image_id;

  std::vector<std::string> question_tokens;
  std::vector<std::string> ocr_texts;  // normalized, aligned with feature rows
  Eigen::MatrixXf question_subword;
  Embedder::OcrFeatures ocr_feats;
  Embedder::ObjectFeatures obj_feats;
  SceneGraph graph;
  bool has_graph = false;

  // One supervised decode step: the multi-hot scoring targets over the
  // combined [vocabulary | ocr slots] axis plus the token identity that is
  // fed back into the next slot under teacher forcing.
  struct DecodeStep {
    Emitted feed;
    std::vector<int> positives;
  };

  std::string answer_text;  // consensus answer, normalized
  std::vector<DecodeStep> answer_steps;
  std::vector<std::string> expl_texts;               // normalized references
  std::vector<std::vector<DecodeStep>> expl_steps;   // aligned with expl_texts

  ad::Mat image_planes;  // 3 x S*S, only when the mask head is active
  ad::Mat vis_gt;        // 1 x S*S binary, same condition
};

// Scalar loss node per active task; inactive tasks stay null.
struct TaskLosses {
  ad::NodePtr answer;
  ad::NodePtr text;
  ad::NodePtr vis;
};

// Learned log-variance weights balancing the three tasks; null when the
// matching task is switched off.
struct TaskWeights {
  ad::NodePtr answer;
  ad::NodePtr text;
  ad::NodePtr vis;
};

struct Prediction {
  std::vector<std::string> answer_tokens;
  std::vector<std::string> explanation_tokens;
  std::string answer_text;       // tokens joined with single spaces
  std::string explanation_text;  // empty when text explanations are off
  SegmentationMask mask;         // S x S; empty (has_mask false) when off
  bool has_mask = false;
};

// The full network: feature embedders, containment-graph attention over the
// visual streams, the joint multimodal transformer, one pointer head shared
// by both decode streams, and the mask head fed from the transformer output.
class MtxNet {
 public:
  // The vocabulary fixes the pointer head width, so cfg.vocab_size is
  // overridden with the actual vocabulary size.
  MtxNet(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed,
         const VectorTable* table = nullptr);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const SequenceLayout& layout() const { return layout_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }
  const TaskWeights& task_weights() const { return weights_; }

  PreparedSample prepare(const Sample& s) const;

  // One training step's pass scheme. text_ref selects the reference
  // explanation to supervise (ignored when text explanations are off).
  TaskLosses forward_losses(const PreparedSample& ps, Ordering ordering, int text_ref) const;

  // Greedy rollout: answer first, mask from the forward that emitted the
  // final answer token, then the explanation with the predicted answer as
  // context.
  Prediction predict(const PreparedSample& ps) const;

 private:
  struct Encoded {
    ad::NodePtr question, objects, ocr;  // what the transformer sees
    ad::NodePtr ocr_input;               // pre-graph ocr rows, decode feedback source
    int n_ocr = 0;
  };

  Encoded encode(const PreparedSample& ps) const;
  ad::NodePtr feedback_rows(const std::vector<Emitted>& picks,
                            const ad::NodePtr& ocr_input) const;
  ad::NodePtr teacher_rows(const std::vector<PreparedSample::DecodeStep>& steps,
                           const ad::NodePtr& ocr_input, Role role) const;
  ad::NodePtr run_transformer(const Encoded& enc, const ad::NodePtr& expl_rows,
                              const ad::NodePtr& ans_rows, StreamMode expl_mode,
                              StreamMode ans_mode) const;
  ad::NodePtr decode_loss(const ad::NodePtr& seq_out, int stream0,
                          const std::vector<PreparedSample::DecodeStep>& steps,
                          int n_ocr) const;
  ad::NodePtr mask_logits(const PreparedSample& ps, const ad::NodePtr& seq_out) const;
  std::vector<PreparedSample::DecodeStep> decode_targets(
      const std::vector<std::string>& tokens, int cap,
      const std::vector<std::string>& ocr_texts) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  SequenceLayout layout_;
  ad::ParamStore params_;
  std::optional<Embedder> embedder_;
  GatParams gat_;
  TransformerParams mmt_;
  PointerParams ptr_;
  ad::NodePtr decode_tok_;  // vocabulary feedback table, row = token
  std::optional<SegParams> seg_;
  TaskWeights weights_;
};

}  // namespace mtx
