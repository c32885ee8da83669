#include "mtx/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "mtx/image.hpp"
#include "mtx/rng.hpp"

namespace mtx {

const char* ordering_name(Ordering o) {
  switch (o) {
    case Ordering::answer_first: return "answer_first";
    case Ordering::text_first: return "text_first";
    case Ordering::independent: return "independent";
  }
  return "?";
}

namespace {

// most frequent normalized answer, first occurrence breaking ties
std::string consensus_answer(const std::vector<std::string>& answers) {
  std::vector<std::string> norm;
  norm.reserve(answers.size());
  for (const auto& a : answers) norm.push_back(normalize_join(a));
  std::string best;
  int best_count = 0;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    int count = 0;
    for (const auto& other : norm)
      if (other == norm[i]) ++count;
    if (count > best_count) {
      best_count = count;
      best = norm[i];
    }
  }
  return best;
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

MtxNet::MtxNet(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed,
               const VectorTable* table)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.vocab_size = vocab_.size();
  cfg_.validate();
  layout_ = SequenceLayout::from_config(cfg_);

  Rng rng(hash_combine(fnv1a("model"), seed));
  embedder_.emplace(cfg_, params_, rng, table);
  if (cfg_.gat_enabled) gat_ = make_gat_params(cfg_, params_, rng);
  mmt_ = make_transformer_params(cfg_, params_, rng);
  ptr_ = make_pointer_params(cfg_, params_, rng);
  decode_tok_ =
      params_.add("decode.tok", ad::normal_init(vocab_.size(), cfg_.d_model, 0.02f, rng));
  if (cfg_.vis_expl_enabled) seg_ = make_seg_params(cfg_, params_, rng);
  weights_.answer = params_.add("w.ans", ad::Mat::Zero(1, 1));
  if (cfg_.text_expl_enabled) weights_.text = params_.add("w.text", ad::Mat::Zero(1, 1));
  if (cfg_.vis_expl_enabled) weights_.vis = params_.add("w.vis", ad::Mat::Zero(1, 1));
}

std::vector<PreparedSample::DecodeStep> MtxNet::decode_targets(
    const std::vector<std::string>& tokens, int cap,
    const std::vector<std::string>& ocr_texts) const {
  std::vector<PreparedSample::DecodeStep> steps;
  const int n_tok = std::min(static_cast<int>(tokens.size()), cap - 1);
  for (int t = 0; t < n_tok; ++t) {
    const std::string& tok = tokens[static_cast<std::size_t>(t)];
    PreparedSample::DecodeStep st;
    const int v = vocab_.index(tok);
    if (v != Vocabulary::kUnk) st.positives.push_back(v);
    int first_copy = -1;
    for (int i = 0; i < static_cast<int>(ocr_texts.size()); ++i)
      if (ocr_texts[static_cast<std::size_t>(i)] == tok) {
        st.positives.push_back(cfg_.vocab_size + i);
        if (first_copy < 0) first_copy = i;
      }
    if (st.positives.empty()) st.positives.push_back(Vocabulary::kUnk);
    if (first_copy >= 0)
      st.feed = {TokenSource::ocr, first_copy};
    else
      st.feed = {TokenSource::vocab, v};  // kUnk when out of vocabulary
    steps.push_back(std::move(st));
  }
  PreparedSample::DecodeStep end;
  end.positives = {Vocabulary::kEnd};
  end.feed = {TokenSource::vocab, Vocabulary::kEnd};
  steps.push_back(std::move(end));
  return steps;
}

PreparedSample MtxNet::prepare(const Sample& s) const {
  PreparedSample ps;
  ps.question_id = s.question_id;
  ps.image_id = s.image_id;

  ps.question_tokens = normalize_text(s.question);
  if (static_cast<int>(ps.question_tokens.size()) > cfg_.max_question_len)
    ps.question_tokens.resize(static_cast<std::size_t>(cfg_.max_question_len));
  ps.question_subword = embedder_->text_features(ps.question_tokens);

  std::vector<OcrToken> ocr(
      s.ocr.begin(),
      s.ocr.begin() + std::min<std::size_t>(s.ocr.size(), static_cast<std::size_t>(cfg_.max_ocr)));
  std::vector<ObjectRegion> objects(
      s.objects.begin(),
      s.objects.begin() +
          std::min<std::size_t>(s.objects.size(), static_cast<std::size_t>(cfg_.max_objects)));
  for (const auto& t : ocr) ps.ocr_texts.push_back(normalize_join(t.text));
  ps.ocr_feats = embedder_->ocr_features(ocr, s.image.width, s.image.height);
  ps.obj_feats = embedder_->object_features(objects, s.image.width, s.image.height);
  if (!objects.empty() || !ocr.empty()) {
    ps.graph = build_containment_graph(objects, ocr);
    ps.has_graph = true;
  }

  ps.answer_text = consensus_answer(s.answers);
  ps.answer_steps =
      decode_targets(normalize_text(ps.answer_text), cfg_.max_answer_len, ps.ocr_texts);

  if (cfg_.text_expl_enabled) {
    if (s.text_explanations.empty())
      throw std::invalid_argument("sample " + s.question_id + " has no text explanations");
    for (const auto& e : s.text_explanations) {
      ps.expl_texts.push_back(normalize_join(e));
      ps.expl_steps.push_back(decode_targets(normalize_text(e), cfg_.max_expl_len, ps.ocr_texts));
    }
  }

  if (cfg_.vis_expl_enabled) {
    const int S = cfg_.seg_input_size;
    ps.image_planes = image_to_planes(resize_bilinear(s.image, S, S));
    const SegmentationMask m = resize_mask_nearest(s.visual_explanation, S, S);
    ps.vis_gt = ad::Mat(1, S * S);
    for (int i = 0; i < S * S; ++i)
      ps.vis_gt(0, i) = m.values[static_cast<std::size_t>(i)] >= 0.5f ? 1.f : 0.f;
  }
  return ps;
}

MtxNet::Encoded MtxNet::encode(const PreparedSample& ps) const {
  Encoded e;
  EmbeddedStream q = embedder_->embed_text(ps.question_subword, Role::question);
  EmbeddedStream obj = embedder_->embed_objects(ps.obj_feats);
  EmbeddedStream ocr = embedder_->embed_ocr(ps.ocr_feats);
  e.question = q.count > 0 ? q.rows : nullptr;
  e.n_ocr = ocr.count;

  ad::NodePtr objects = obj.count > 0 ? obj.rows : nullptr;
  ad::NodePtr ocr_rows = ocr.count > 0 ? ocr.rows : nullptr;
  e.ocr_input = ocr_rows;

  if (!gat_.layers.empty() && ps.has_graph) {
    std::vector<ad::NodePtr> parts;
    if (objects) parts.push_back(objects);
    if (ocr_rows) parts.push_back(ocr_rows);
    ad::NodePtr feats = parts.size() == 1 ? parts[0] : ad::concat_rows(parts);
    ad::NodePtr enriched = ad::add(feats, gat_forward(ps.graph, feats, gat_));
    if (objects) objects = ad::row_slice(enriched, 0, obj.count);
    if (ocr_rows) ocr_rows = ad::row_slice(enriched, obj.count, ocr.count);
  }
  e.objects = objects;
  e.ocr = ocr_rows;
  return e;
}

ad::NodePtr MtxNet::feedback_rows(const std::vector<Emitted>& picks,
                                  const ad::NodePtr& ocr_input) const {
  std::vector<ad::NodePtr> rows;
  rows.reserve(picks.size() + 1);
  rows.push_back(ad::gather_rows(decode_tok_, {Vocabulary::kBegin}));
  for (const Emitted& e : picks) {
    if (e.source == TokenSource::vocab) {
      rows.push_back(ad::gather_rows(decode_tok_, {e.index}));
    } else {
      if (!ocr_input || e.index < 0 || e.index >= ocr_input->rows())
        throw std::logic_error("feedback_rows: copied token slot out of range");
      rows.push_back(ad::gather_rows(ocr_input, {e.index}));
    }
  }
  return rows.size() == 1 ? rows[0] : ad::concat_rows(rows);
}

ad::NodePtr MtxNet::teacher_rows(const std::vector<PreparedSample::DecodeStep>& steps,
                                 const ad::NodePtr& ocr_input, Role role) const {
  std::vector<Emitted> feeds;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) feeds.push_back(steps[i].feed);
  return embedder_->embed_decode(feedback_rows(feeds, ocr_input), role).rows;
}

ad::NodePtr MtxNet::run_transformer(const Encoded& enc, const ad::NodePtr& expl_rows,
                                    const ad::NodePtr& ans_rows, StreamMode expl_mode,
                                    StreamMode ans_mode) const {
  MultimodalSequence seq = assemble_sequence(layout_, enc.question, enc.objects, enc.ocr,
                                             expl_rows, ans_rows, expl_mode, ans_mode);
  return transformer_forward(seq, mmt_);
}

ad::NodePtr MtxNet::decode_loss(const ad::NodePtr& seq_out, int stream0,
                                const std::vector<PreparedSample::DecodeStep>& steps,
                                int n_ocr) const {
  const int n = static_cast<int>(steps.size());
  ad::NodePtr decode_rows = ad::row_slice(seq_out, stream0, n);
  ad::NodePtr ocr_out = n_ocr > 0 ? ad::row_slice(seq_out, layout_.ocr0, n_ocr) : nullptr;
  ad::NodePtr logits = pointer_logits(ptr_, decode_rows, ocr_out);

  ad::Mat targets = ad::Mat::Zero(n, cfg_.vocab_size + n_ocr);
  for (int t = 0; t < n; ++t)
    for (int idx : steps[static_cast<std::size_t>(t)].positives)
      targets(t, idx) = 1.f;
  const ad::Mat weight = ad::Mat::Ones(n, cfg_.vocab_size + n_ocr);
  return ad::bce_with_logits(logits, targets, weight);
}

ad::NodePtr MtxNet::mask_logits(const PreparedSample& ps, const ad::NodePtr& seq_out) const {
  ad::NodePtr packed = pack_embedding_channels(seq_out, cfg_.seg_input_size);
  return seg_forward(ps.image_planes, packed, *seg_, cfg_.seg_input_size);
}

TaskLosses MtxNet::forward_losses(const PreparedSample& ps, Ordering ordering,
                                  int text_ref) const {
  const bool text = cfg_.text_expl_enabled;
  const bool vis = cfg_.vis_expl_enabled;
  if (text && (text_ref < 0 || text_ref >= static_cast<int>(ps.expl_steps.size())))
    throw std::out_of_range("forward_losses: reference " + std::to_string(text_ref) + " of " +
                            std::to_string(ps.expl_steps.size()));

  Encoded enc = encode(ps);
  ad::NodePtr ans_in = teacher_rows(ps.answer_steps, enc.ocr_input, Role::ans_slot);
  ad::NodePtr expl_in =
      text ? teacher_rows(ps.expl_steps[static_cast<std::size_t>(text_ref)], enc.ocr_input,
                          Role::expl_slot)
           : nullptr;

  TaskLosses out;
  auto answer_pass = [&](StreamMode expl_mode) {
    ad::NodePtr seq = run_transformer(enc, expl_mode == StreamMode::context ? expl_in : nullptr,
                                      ans_in, expl_mode, StreamMode::decoding);
    out.answer = decode_loss(seq, layout_.ans0, ps.answer_steps, enc.n_ocr);
    if (vis) out.vis = dice_loss_node(ad::sigmoid(mask_logits(ps, seq)), ps.vis_gt);
  };
  auto text_pass = [&](StreamMode ans_mode) {
    ad::NodePtr seq = run_transformer(enc, expl_in,
                                      ans_mode == StreamMode::context ? ans_in : nullptr,
                                      StreamMode::decoding, ans_mode);
    out.text = decode_loss(seq, layout_.expl0, ps.expl_steps[static_cast<std::size_t>(text_ref)],
                           enc.n_ocr);
  };

  if (!text) {
    answer_pass(StreamMode::padded);
    return out;
  }
  switch (ordering) {
    case Ordering::answer_first:
      answer_pass(StreamMode::padded);
      text_pass(StreamMode::context);
      break;
    case Ordering::text_first:
      text_pass(StreamMode::padded);
      answer_pass(StreamMode::context);
      break;
    case Ordering::independent:
      answer_pass(StreamMode::padded);
      text_pass(StreamMode::padded);
      break;
  }
  return out;
}

Prediction MtxNet::predict(const PreparedSample& ps) const {
  Prediction pred;
  Encoded enc = encode(ps);

  auto token_strings = [&](const std::vector<Emitted>& picks) {
    std::vector<std::string> out;
    for (const Emitted& e : picks) {
      if (e.source == TokenSource::vocab && e.index == Vocabulary::kEnd) break;
      out.push_back(e.source == TokenSource::vocab
                        ? vocab_.token(e.index)
                        : ps.ocr_texts[static_cast<std::size_t>(e.index)]);
    }
    return out;
  };

  DecodingState ans_st;
  ans_st.cap = cfg_.max_answer_len;
  ad::NodePtr last_seq, ans_ctx;
  while (!ans_st.finished) {
    ad::NodePtr in =
        embedder_->embed_decode(feedback_rows(ans_st.emitted, enc.ocr_input), Role::ans_slot)
            .rows;
    const int n_in = static_cast<int>(in->rows());
    ad::NodePtr seq = run_transformer(enc, nullptr, in, StreamMode::padded,
                                      StreamMode::decoding);
    ad::NodePtr row = ad::row_slice(seq, layout_.ans0 + n_in - 1, 1);
    ad::NodePtr ocr_out = enc.n_ocr > 0 ? ad::row_slice(seq, layout_.ocr0, enc.n_ocr) : nullptr;
    decode_step(ans_st, pointer_scores(ptr_, row, ocr_out, cfg_.max_ocr));
    last_seq = seq;
    ans_ctx = in;
  }
  pred.answer_tokens = token_strings(ans_st.emitted);
  pred.answer_text = join_tokens(pred.answer_tokens);

  if (cfg_.vis_expl_enabled) {
    pred.mask = mask_from_logits(mask_logits(ps, last_seq), cfg_.seg_input_size);
    pred.has_mask = true;
  }

  if (cfg_.text_expl_enabled) {
    DecodingState expl_st;
    expl_st.cap = cfg_.max_expl_len;
    while (!expl_st.finished) {
      ad::NodePtr in =
          embedder_->embed_decode(feedback_rows(expl_st.emitted, enc.ocr_input), Role::expl_slot)
              .rows;
      const int n_in = static_cast<int>(in->rows());
      ad::NodePtr seq = run_transformer(enc, in, ans_ctx, StreamMode::decoding,
                                        StreamMode::context);
      ad::NodePtr row = ad::row_slice(seq, layout_.expl0 + n_in - 1, 1);
      ad::NodePtr ocr_out = enc.n_ocr > 0 ? ad::row_slice(seq, layout_.ocr0, enc.n_ocr) : nullptr;
      decode_step(expl_st, pointer_scores(ptr_, row, ocr_out, cfg_.max_ocr));
    }
    pred.explanation_tokens = token_strings(expl_st.emitted);
    pred.explanation_text = join_tokens(pred.explanation_tokens);
  }
  return pred;
}

}  // namespace mtx
