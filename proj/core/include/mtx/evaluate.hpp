#pragma once

#include <functional>
#include <vector>

#include "mtx/metrics.hpp"
#include "mtx/model.hpp"
#include "mtx/types.hpp"

namespace mtx {

struct EvalOutputs {
  ScoreReport report;
  std::vector<Prediction> predictions;  // aligned with the input samples
};

// Greedy decoding over every sample, then corpus scoring. Text metrics are 0
// when the model generates no explanations, IoU is 0 when it predicts no
// masks. The policy picks how BLEU/ROUGE/METEOR treat multiple references;
// CIDEr always averages internally.
EvalOutputs evaluate(const MtxNet& model, const std::vector<Sample>& samples,
                     MultiRefPolicy policy = MultiRefPolicy::average,
                     const std::function<void(std::size_t, std::size_t)>& progress = {});

}  // namespace mtx
