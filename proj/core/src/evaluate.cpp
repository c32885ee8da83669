#include "mtx/evaluate.hpp"

#include "mtx/seghead.hpp"
#include "mtx/text.hpp"

namespace mtx {

namespace {

BinaryMask gt_mask_from_planes(const ad::Mat& vis_gt, int s) {
  BinaryMask gt = BinaryMask::zeros(s, s);
  for (int p = 0; p < s * s; ++p) gt.values[static_cast<std::size_t>(p)] = vis_gt(0, p) > 0.5f ? 1 : 0;
  return gt;
}

}  // namespace

EvalOutputs evaluate(const MtxNet& model, const std::vector<Sample>& samples,
                     MultiRefPolicy policy,
                     const std::function<void(std::size_t, std::size_t)>& progress) {
  const bool text_on = model.config().text_expl_enabled;
  const bool vis_on = model.config().vis_expl_enabled;
  const int s = model.config().seg_input_size;

  EvalOutputs out;
  out.predictions.reserve(samples.size());
  std::vector<PerSampleScores> rows;
  rows.reserve(samples.size());
  CiderScorer cider;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PreparedSample ps = model.prepare(samples[i]);
    Prediction pred = model.predict(ps);

    PerSampleScores row;
    row.question_id = ps.question_id;
    row.vqa_accuracy = vqa_accuracy(pred.answer_text, samples[i].answers);

    if (text_on) {
      std::vector<Tokens> refs;
      refs.reserve(ps.expl_texts.size());
      for (const auto& r : ps.expl_texts) refs.push_back(normalize_text(r));
      const Tokens& hyp = pred.explanation_tokens;
      if (policy == MultiRefPolicy::average) {
        row.bleu4 = multi_ref_average(
            [](const Tokens& h, const std::vector<Tokens>& rs) { return bleu4(h, rs); }, hyp, refs);
        row.rouge_l = multi_ref_average(
            [](const Tokens& h, const std::vector<Tokens>& rs) { return rouge_l(h, rs[0]); }, hyp,
            refs);
        row.meteor = multi_ref_average(
            [](const Tokens& h, const std::vector<Tokens>& rs) { return meteor(h, rs[0]); }, hyp,
            refs);
      } else {
        row.bleu4 = bleu4(hyp, refs);
        row.rouge_l = rouge_l_multi(hyp, refs);
        row.meteor = meteor_multi(hyp, refs);
      }
      cider.add(hyp, std::move(refs));
    }

    if (vis_on && pred.has_mask)
      row.iou = iou(binarize(pred.mask), gt_mask_from_planes(ps.vis_gt, s));

    rows.push_back(std::move(row));
    out.predictions.push_back(std::move(pred));
    if (progress) progress(i + 1, samples.size());
  }

  if (text_on && cider.size() > 0) {
    const std::vector<double> scores = cider.compute();
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].cider = scores[i];
  }

  out.report = ScoreReport::from_rows(std::move(rows));
  return out;
}

}  // namespace mtx
