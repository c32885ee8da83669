#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/model.hpp"
#include "mtx/rng.hpp"
#include "mtx/types.hpp"

namespace mtx {

struct TrainConfig {
  int batch_size = 8;
  int max_steps = 2000;
  float learning_rate = 1e-4f;
  float weight_decay = 0.f;
  int log_every = 100;
  int checkpoint_every = 500;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: no checkpoints, no metrics file
};

// Combined objective over the active tasks: sum of L_i * exp(-w_i) + w_i.
// The learned w_i are log-variances, so each task's gradient is rescaled by
// exp(-w_i) while the +w_i term keeps the weights from running away.
double multitask_total(const TaskLosses& losses, const TaskWeights& weights);
ad::NodePtr multitask_total_node(const TaskLosses& losses, const TaskWeights& weights);

// Which reference explanation supervises this sample. Stable within an
// epoch, resampled across epochs; always 0 when multi-reference training is
// off or there is nothing to choose from.
int sample_reference(const std::string& question_id, int epoch, std::uint64_t seed, int n_refs,
                     bool multiref);

// Uniform draw over the three pass orderings.
Ordering sample_ordering(Rng& rng);

// Batch means at one logged step. Inactive tasks report 0.
struct StepLog {
  int step = 0;
  double loss_answer = 0.0;
  double loss_text = 0.0;
  double loss_vis = 0.0;
  double w_answer = 0.0;
  double w_text = 0.0;
  double w_vis = 0.0;
  double total = 0.0;
};

struct TrainResult {
  int steps_run = 0;
  double best_loss = 0.0;  // lowest logged training total
  int best_step = 0;
  std::string best_checkpoint;
  std::string last_checkpoint;
};

// Runs steps start_step+1 .. max_steps. Batches are drawn with replacement
// from a per-step generator keyed on (seed, step), so a resumed run replays
// exactly the schedule the uninterrupted run would have used. Restores the
// optimizer from resume_state when it is non-empty, appends to an existing
// metrics log instead of truncating, and writes last.ckpt / best.ckpt under
// out_dir. Throws when the objective turns non-finite, naming the step and
// the batch's question ids.
TrainResult train(MtxNet& model, const std::vector<Sample>& data, const TrainConfig& tc,
                  int start_step = 0, const ad::Adam::State& resume_state = {},
                  const std::function<void(const StepLog&)>& on_log = {});

}  // namespace mtx
