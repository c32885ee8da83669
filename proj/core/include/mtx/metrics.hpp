#pragma once

#include <map>
#include <string>
#include <vector>

#include "mtx/types.hpp"

namespace mtx {

using Tokens = std::vector<std::string>;

// Porter (1980), the original published rule set. Lowercase a-z input;
// anything else is returned unchanged.
std::string porter_stem(const std::string& word);

// Geometric mean of clipped n-gram precisions n=1..4, brevity penalty against
// the closest-length reference (ties -> shorter). No smoothing: any zero
// precision zeroes the score.
double bleu4(const Tokens& hyp, const std::vector<Tokens>& refs);

// LCS F-measure with beta = 1.2.
double rouge_l(const Tokens& hyp, const Tokens& ref);
double rouge_l_multi(const Tokens& hyp, const std::vector<Tokens>& refs);  // max over refs

// Unigram alignment, exact stage then Porter-stemmed stage; optional synonym
// groups participate in a third stage. F = 10PR/(R+9P), fragmentation
// penalty 0.5*(chunks/matches)^3.
using SynonymTable = std::map<std::string, std::vector<std::string>>;
double meteor(const Tokens& hyp, const Tokens& ref, const SynonymTable& synonyms = {});
double meteor_multi(const Tokens& hyp, const std::vector<Tokens>& refs,
                    const SynonymTable& synonyms = {});  // max over refs

// Corpus-level scorer: idf needs the whole reference corpus, so scoring is
// two-pass. Raw scores land in [0, 10].
class CiderScorer {
 public:
  void add(Tokens hyp, std::vector<Tokens> refs);
  std::size_t size() const { return hyps_.size(); }
  // per-sample raw scores, in insertion order
  std::vector<double> compute() const;

 private:
  std::vector<Tokens> hyps_;
  std::vector<std::vector<Tokens>> refs_;
};

// Mean over refs of metric(hyp, [single ref]).
template <typename F>
double multi_ref_average(F&& metric, const Tokens& hyp, const std::vector<Tokens>& refs) {
  double acc = 0.0;
  for (const auto& r : refs) acc += metric(hyp, std::vector<Tokens>{r});
  return refs.empty() ? 0.0 : acc / static_cast<double>(refs.size());
}

// How a sentence metric is lifted over multiple references at the corpus
// layer: per-reference averaging (the default) or each metric's native
// convention (clip-over-all for BLEU).
enum class MultiRefPolicy { average, native };

// Every sentence scored against all others; needs at least 2 sentences.
double self_bleu4(const std::vector<Tokens>& sentences);

// Intersection over union of thresholded masks. Both empty -> 1, exactly one
// empty -> 0. Shapes must match.
double iou(const BinaryMask& pred, const BinaryMask& gt);

// Soft voting: min(matches/3, 1) over the 10 reference answers, compared
// after normalization.
double vqa_accuracy(const std::string& pred, const std::vector<std::string>& answers);

struct PerSampleScores {
  std::string question_id;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  double cider = 0.0;  // raw [0,10]
  double iou = 0.0;
  double vqa_accuracy = 0.0;
};

struct ScoreReport {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  double cider = 0.0;  // raw [0,10]; multiply by 100 for tabulated form
  double iou = 0.0;
  double vqa_accuracy = 0.0;
  std::vector<PerSampleScores> rows;

  // corpus means from rows
  static ScoreReport from_rows(std::vector<PerSampleScores> rows);
  std::string to_csv() const;
  std::string summary_text() const;
};

}  // namespace mtx
