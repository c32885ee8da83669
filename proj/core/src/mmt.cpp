#include "mtx/mmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mtx/text.hpp"

namespace mtx {

SequenceLayout SequenceLayout::from_config(const ModelConfig& cfg) {
  SequenceLayout l;
  l.q0 = 0;
  l.nq = cfg.max_question_len;
  l.obj0 = l.q0 + l.nq;
  l.nobj = cfg.max_objects;
  l.ocr0 = l.obj0 + l.nobj;
  l.nocr = cfg.max_ocr;
  l.expl0 = l.ocr0 + l.nocr;
  l.nexpl = cfg.max_expl_len;
  l.ans0 = l.expl0 + l.nexpl;
  l.nans = cfg.max_answer_len;
  l.total = l.ans0 + l.nans;
  return l;
}

ad::Mat build_attention_mask(const SequenceLayout& layout, const std::vector<char>& present,
                             StreamMode expl_mode, StreamMode ans_mode) {
  const int T = layout.total;
  if (static_cast<int>(present.size()) != T)
    throw std::invalid_argument("build_attention_mask: presence size mismatch");
  ad::Mat m = ad::Mat::Zero(T, T);

  auto in_range = [](int i, int lo, int n) { return i >= lo && i < lo + n; };
  auto stream_of = [&](int i) {  // 0 encoder, 1 expl, 2 ans
    if (in_range(i, layout.expl0, layout.nexpl)) return 1;
    if (in_range(i, layout.ans0, layout.nans)) return 2;
    return 0;
  };
  auto mode_of = [&](int i) {
    const int s = stream_of(i);
    return s == 1 ? expl_mode : s == 2 ? ans_mode : StreamMode::padded;
  };

  for (int i = 0; i < T; ++i) {
    if (!present[static_cast<std::size_t>(i)]) continue;
    const int si = stream_of(i);
    const StreamMode mi = mode_of(i);
    if (si != 0 && mi == StreamMode::padded) continue;
    for (int j = 0; j < T; ++j) {
      if (!present[static_cast<std::size_t>(j)]) continue;
      const int sj = stream_of(j);
      bool ok = false;
      if (si == 0) {
        ok = sj == 0;
      } else if (sj == 0) {
        ok = true;
      } else if (sj == si) {
        ok = j <= i;  // causal inside a decode-region stream
      } else {
        ok = mi == StreamMode::decoding && mode_of(j) == StreamMode::context;
      }
      if (ok) m(i, j) = 1.f;
    }
  }
  return m;
}

namespace {

// rows of x placed at slot offset inside a total x d zero matrix
ad::NodePtr place_rows(const ad::NodePtr& x, int offset, int total, int d) {
  if (!x || x->rows() == 0) return nullptr;
  if (x->cols() != d) throw std::invalid_argument("assemble_sequence: stream width != d_model");
  std::vector<ad::NodePtr> parts;
  if (offset > 0) parts.push_back(ad::constant(ad::Mat::Zero(offset, d)));
  parts.push_back(x);
  const int below = total - offset - static_cast<int>(x->rows());
  if (below > 0) parts.push_back(ad::constant(ad::Mat::Zero(below, d)));
  return ad::concat_rows(parts);
}

}  // namespace

MultimodalSequence assemble_sequence(const SequenceLayout& layout, const ad::NodePtr& question,
                                     const ad::NodePtr& objects, const ad::NodePtr& ocr,
                                     const ad::NodePtr& expl, const ad::NodePtr& ans,
                                     StreamMode expl_mode, StreamMode ans_mode) {
  int d = 0;
  for (const ad::NodePtr& s : {question, objects, ocr, expl, ans})
    if (s && s->rows() > 0) d = static_cast<int>(s->cols());
  if (d == 0) throw std::invalid_argument("assemble_sequence: all streams empty");

  struct Placement {
    const ad::NodePtr& stream;
    int offset;
    int cap;
  };
  const Placement places[] = {{question, layout.q0, layout.nq},
                              {objects, layout.obj0, layout.nobj},
                              {ocr, layout.ocr0, layout.nocr},
                              {expl, layout.expl0, layout.nexpl},
                              {ans, layout.ans0, layout.nans}};

  MultimodalSequence seq;
  seq.layout = layout;
  seq.present.assign(static_cast<std::size_t>(layout.total), 0);

  ad::NodePtr sum;
  for (const auto& p : places) {
    const int n = p.stream ? static_cast<int>(p.stream->rows()) : 0;
    if (n > p.cap)
      throw std::invalid_argument("assemble_sequence: stream exceeds its slot cap");
    for (int i = 0; i < n; ++i) seq.present[static_cast<std::size_t>(p.offset + i)] = 1;
    ad::NodePtr placed = place_rows(p.stream, p.offset, layout.total, d);
    if (placed) sum = sum ? ad::add(sum, placed) : placed;
  }
  seq.embeddings = sum;

  // a padded stream carries no slots regardless of rows handed in
  if (expl_mode == StreamMode::padded)
    for (int i = 0; i < layout.nexpl; ++i) seq.present[static_cast<std::size_t>(layout.expl0 + i)] = 0;
  if (ans_mode == StreamMode::padded)
    for (int i = 0; i < layout.nans; ++i) seq.present[static_cast<std::size_t>(layout.ans0 + i)] = 0;

  seq.attention = build_attention_mask(layout, seq.present, expl_mode, ans_mode);
  return seq;
}

TransformerParams make_transformer_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                                          const std::string& prefix) {
  if (cfg.d_model % cfg.n_heads != 0)
    throw std::invalid_argument("transformer: d_model must divide evenly across heads");
  TransformerParams p;
  p.n_heads = cfg.n_heads;
  const int d = cfg.d_model;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l) + ".";
    TransformerLayerParams lp;
    lp.wq = store.add(base + "attn.wq", ad::xavier_init(d, d, rng));
    lp.bq = store.add(base + "attn.bq", ad::Mat::Zero(1, d));
    lp.wk = store.add(base + "attn.wk", ad::xavier_init(d, d, rng));
    lp.bk = store.add(base + "attn.bk", ad::Mat::Zero(1, d));
    lp.wv = store.add(base + "attn.wv", ad::xavier_init(d, d, rng));
    lp.bv = store.add(base + "attn.bv", ad::Mat::Zero(1, d));
    lp.wo = store.add(base + "attn.wo", ad::xavier_init(d, d, rng));
    lp.bo = store.add(base + "attn.bo", ad::Mat::Zero(1, d));
    lp.ln1_g = store.add(base + "ln1.g", ad::Mat::Ones(1, d));
    lp.ln1_b = store.add(base + "ln1.b", ad::Mat::Zero(1, d));
    lp.ffn_w1 = store.add(base + "ffn.w1", ad::xavier_init(d, 4 * d, rng));
    lp.ffn_b1 = store.add(base + "ffn.b1", ad::Mat::Zero(1, 4 * d));
    lp.ffn_w2 = store.add(base + "ffn.w2", ad::xavier_init(4 * d, d, rng));
    lp.ffn_b2 = store.add(base + "ffn.b2", ad::Mat::Zero(1, d));
    lp.ln2_g = store.add(base + "ln2.g", ad::Mat::Ones(1, d));
    lp.ln2_b = store.add(base + "ln2.b", ad::Mat::Zero(1, d));
    p.layers.push_back(std::move(lp));
  }
  return p;
}

ad::NodePtr transformer_forward(const MultimodalSequence& seq, const TransformerParams& p) {
  ad::NodePtr x = seq.embeddings;
  const int d = static_cast<int>(x->cols());
  if (d % p.n_heads != 0) throw std::invalid_argument("transformer_forward: head split");
  const int dh = d / p.n_heads;
  const float inv_sqrt = 1.f / std::sqrt(static_cast<float>(dh));

  for (const auto& lp : p.layers) {
    ad::NodePtr q = ad::add_rowvec(ad::matmul(x, lp.wq), lp.bq);
    ad::NodePtr k = ad::add_rowvec(ad::matmul(x, lp.wk), lp.bk);
    ad::NodePtr v = ad::add_rowvec(ad::matmul(x, lp.wv), lp.bv);
    std::vector<ad::NodePtr> heads;
    for (int h = 0; h < p.n_heads; ++h) {
      ad::NodePtr qh = ad::col_slice(q, h * dh, dh);
      ad::NodePtr kh = ad::col_slice(k, h * dh, dh);
      ad::NodePtr vh = ad::col_slice(v, h * dh, dh);
      ad::NodePtr scores = ad::scale(ad::matmul_nt(qh, kh), inv_sqrt);
      ad::NodePtr alpha = ad::softmax_masked(scores, seq.attention);
      heads.push_back(ad::matmul(alpha, vh));
    }
    ad::NodePtr attn = ad::add_rowvec(ad::matmul(ad::concat_cols(heads), lp.wo), lp.bo);
    x = ad::layer_norm(ad::add(x, attn), lp.ln1_g, lp.ln1_b);
    ad::NodePtr hidden = ad::gelu(ad::add_rowvec(ad::matmul(x, lp.ffn_w1), lp.ffn_b1));
    ad::NodePtr ffn = ad::add_rowvec(ad::matmul(hidden, lp.ffn_w2), lp.ffn_b2);
    x = ad::layer_norm(ad::add(x, ffn), lp.ln2_g, lp.ln2_b);
  }
  return x;
}

PointerParams make_pointer_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                                  const std::string& prefix) {
  PointerParams p;
  const int d = cfg.d_model;
  p.w_v = store.add(prefix + ".w_v", ad::xavier_init(d, cfg.vocab_size, rng));
  p.b_v = store.add(prefix + ".b_v", ad::Mat::Zero(1, cfg.vocab_size));
  p.w_q = store.add(prefix + ".w_q", ad::xavier_init(d, d, rng));
  p.b_q = store.add(prefix + ".b_q", ad::Mat::Zero(1, d));
  p.w_o = store.add(prefix + ".w_o", ad::xavier_init(d, d, rng));
  p.b_o = store.add(prefix + ".b_o", ad::Mat::Zero(1, d));
  return p;
}

ad::NodePtr pointer_logits(const PointerParams& p, const ad::NodePtr& decode_rows,
                           const ad::NodePtr& ocr_rows) {
  ad::NodePtr vocab = ad::add_rowvec(ad::matmul(decode_rows, p.w_v), p.b_v);
  if (!ocr_rows || ocr_rows->rows() == 0) return vocab;
  ad::NodePtr zq = ad::add_rowvec(ad::matmul(decode_rows, p.w_q), p.b_q);
  ad::NodePtr yo = ad::add_rowvec(ad::matmul(ocr_rows, p.w_o), p.b_o);
  ad::NodePtr copy = ad::matmul_nt(zq, yo);
  return ad::concat_cols({vocab, copy});
}

PointerScores pointer_scores(const PointerParams& p, const ad::NodePtr& decode_row,
                             const ad::NodePtr& ocr_rows, int max_ocr) {
  ad::NodePtr logits = pointer_logits(p, decode_row, ocr_rows);
  const int vocab = static_cast<int>(p.w_v->cols());
  const int n_ocr = ocr_rows ? static_cast<int>(ocr_rows->rows()) : 0;
  PointerScores s;
  s.vocab_scores.resize(static_cast<std::size_t>(vocab));
  for (int i = 0; i < vocab; ++i) s.vocab_scores[static_cast<std::size_t>(i)] = logits->val(0, i);
  s.ocr_scores.assign(static_cast<std::size_t>(max_ocr),
                      -std::numeric_limits<float>::infinity());
  for (int i = 0; i < n_ocr; ++i)
    s.ocr_scores[static_cast<std::size_t>(i)] = logits->val(0, vocab + i);
  return s;
}

Emitted decode_step(DecodingState& state, const PointerScores& scores,
                    const std::optional<Emitted>& ground_truth) {
  if (state.finished || state.step() >= state.cap)
    throw std::logic_error("decode_step: stream already finished");

  Emitted pick;
  if (state.teacher_forcing && ground_truth.has_value()) {
    pick = *ground_truth;
  } else {
    float best = -std::numeric_limits<float>::infinity();
    pick = {TokenSource::vocab, 0};
    for (std::size_t i = 0; i < scores.vocab_scores.size(); ++i)
      if (scores.vocab_scores[i] > best) {
        best = scores.vocab_scores[i];
        pick = {TokenSource::vocab, static_cast<int>(i)};
      }
    for (std::size_t i = 0; i < scores.ocr_scores.size(); ++i)
      if (scores.ocr_scores[i] > best) {
        best = scores.ocr_scores[i];
        pick = {TokenSource::ocr, static_cast<int>(i)};
      }
  }
  state.emitted.push_back(pick);
  if ((pick.source == TokenSource::vocab && pick.index == Vocabulary::kEnd) ||
      state.step() >= state.cap)
    state.finished = true;
  return pick;
}

}  // namespace mtx
