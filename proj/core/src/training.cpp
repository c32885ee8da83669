#include "mtx/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "mtx/checkpoint.hpp"

namespace mtx {

namespace {

ad::NodePtr weighted_term(const ad::NodePtr& loss, const ad::NodePtr& w) {
  return ad::add(ad::mul(loss, ad::exp_n(ad::scale(w, -1.f))), w);
}

void check_pair(const ad::NodePtr& loss, const ad::NodePtr& w, const char* task) {
  if (static_cast<bool>(loss) != static_cast<bool>(w))
    throw std::logic_error(std::string("multitask objective: ") + task +
                           " loss/weight presence mismatch");
}

int env_workers() {
  const char* v = std::getenv("MTX_NUM_WORKERS");
  if (!v) return 1;
  int n = std::atoi(v);
  if (n < 1) n = 1;
  if (n > 16) n = 16;
  return n;
}

double scalar_or_zero(const ad::NodePtr& n) { return n ? static_cast<double>(n->scalar()) : 0.0; }

}  // namespace

double multitask_total(const TaskLosses& losses, const TaskWeights& weights) {
  check_pair(losses.answer, weights.answer, "answer");
  check_pair(losses.text, weights.text, "text");
  check_pair(losses.vis, weights.vis, "vis");
  double total = 0.0;
  bool any = false;
  auto acc = [&](const ad::NodePtr& l, const ad::NodePtr& w) {
    if (!l) return;
    const double lv = l->scalar(), wv = w->scalar();
    total += lv * std::exp(-wv) + wv;
    any = true;
  };
  acc(losses.answer, weights.answer);
  acc(losses.text, weights.text);
  acc(losses.vis, weights.vis);
  if (!any) throw std::invalid_argument("multitask objective: no active task");
  return total;
}

ad::NodePtr multitask_total_node(const TaskLosses& losses, const TaskWeights& weights) {
  check_pair(losses.answer, weights.answer, "answer");
  check_pair(losses.text, weights.text, "text");
  check_pair(losses.vis, weights.vis, "vis");
  ad::NodePtr total;
  auto acc = [&](const ad::NodePtr& l, const ad::NodePtr& w) {
    if (!l) return;
    ad::NodePtr term = weighted_term(l, w);
    total = total ? ad::add(total, term) : term;
  };
  acc(losses.answer, weights.answer);
  acc(losses.text, weights.text);
  acc(losses.vis, weights.vis);
  if (!total) throw std::invalid_argument("multitask objective: no active task");
  return total;
}

int sample_reference(const std::string& question_id, int epoch, std::uint64_t seed, int n_refs,
                     bool multiref) {
  if (!multiref || n_refs <= 1) return 0;
  std::uint64_t h = hash_combine(fnv1a(question_id), static_cast<std::uint64_t>(epoch));
  h = hash_combine(h, seed);
  return static_cast<int>(h % static_cast<std::uint64_t>(n_refs));
}

Ordering sample_ordering(Rng& rng) {
  switch (rng.next_below(3)) {
    case 0: return Ordering::answer_first;
    case 1: return Ordering::text_first;
    default: return Ordering::independent;
  }
}

TrainResult train(MtxNet& model, const std::vector<Sample>& data, const TrainConfig& tc,
                  int start_step, const ad::Adam::State& resume_state,
                  const std::function<void(const StepLog&)>& on_log) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (tc.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (start_step < 0 || start_step > tc.max_steps)
    throw std::invalid_argument("train: start_step out of range");

  const std::size_t n = data.size();
  std::vector<PreparedSample> prepared(n);
  {
    const int workers = std::min<int>(env_workers(), static_cast<int>(n));
    if (workers <= 1) {
      for (std::size_t i = 0; i < n; ++i) prepared[i] = model.prepare(data[i]);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (n + workers - 1) / static_cast<std::size_t>(workers);
      for (int w = 0; w < workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
          for (std::size_t i = lo; i < hi; ++i) prepared[i] = model.prepare(data[i]);
        });
      }
      for (auto& t : pool) t.join();
    }
  }

  ad::Adam adam(tc.learning_rate, tc.weight_decay);
  if (!resume_state.m.empty() || resume_state.t > 0) adam.state() = resume_state;

  const bool persist = !tc.out_dir.empty();
  std::ofstream metrics;
  std::string last_path, best_path;
  if (persist) {
    std::filesystem::create_directories(tc.out_dir);
    const auto mode = start_step > 0 ? std::ios::app : std::ios::trunc;
    metrics.open(tc.out_dir + "/metrics.jsonl", mode);
    if (!metrics) throw std::runtime_error("train: cannot open metrics log in " + tc.out_dir);
    last_path = tc.out_dir + "/last.ckpt";
    best_path = tc.out_dir + "/best.ckpt";
  }

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  const TaskWeights& w = model.task_weights();
  const bool text_on = model.config().text_expl_enabled;
  const bool multiref = model.config().multiref_enabled;

  for (int step = start_step + 1; step <= tc.max_steps; ++step) {
    Rng rng(hash_combine(hash_combine(fnv1a("train"), tc.seed), static_cast<std::uint64_t>(step)));
    const int epoch =
        static_cast<int>((static_cast<std::int64_t>(step - 1) * tc.batch_size) / static_cast<std::int64_t>(n));

    std::vector<std::size_t> batch(static_cast<std::size_t>(tc.batch_size));
    for (auto& idx : batch) idx = static_cast<std::size_t>(rng.next_below(n));

    std::vector<ad::NodePtr> l_ans, l_text, l_vis;
    for (std::size_t idx : batch) {
      const PreparedSample& ps = prepared[idx];
      const Ordering ordering = sample_ordering(rng);
      const int ref = text_on ? sample_reference(ps.question_id, epoch, tc.seed,
                                                 static_cast<int>(ps.expl_texts.size()), multiref)
                              : 0;
      TaskLosses tl = model.forward_losses(ps, ordering, ref);
      if (tl.answer) l_ans.push_back(tl.answer);
      if (tl.text) l_text.push_back(tl.text);
      if (tl.vis) l_vis.push_back(tl.vis);
    }

    auto batch_mean = [&](const std::vector<ad::NodePtr>& parts) -> ad::NodePtr {
      if (parts.empty()) return nullptr;
      if (parts.size() == 1) return parts[0];
      return ad::mean_all(ad::concat_rows(parts));
    };
    TaskLosses batch_losses{batch_mean(l_ans), batch_mean(l_text), batch_mean(l_vis)};
    ad::NodePtr total = multitask_total_node(batch_losses, w);

    if (!std::isfinite(total->scalar())) {
      std::ostringstream ids;
      for (std::size_t idx : batch) ids << ' ' << prepared[idx].question_id;
      throw std::runtime_error("train: non-finite objective at step " + std::to_string(step) +
                               ", batch question ids:" + ids.str());
    }

    model.params().zero_grads();
    ad::backward(total);
    adam.step(model.params());
    ++result.steps_run;

    const bool is_last = step == tc.max_steps;
    const bool should_log = step == start_step + 1 || step % tc.log_every == 0 || is_last;
    if (should_log) {
      StepLog log;
      log.step = step;
      log.loss_answer = scalar_or_zero(batch_losses.answer);
      log.loss_text = scalar_or_zero(batch_losses.text);
      log.loss_vis = scalar_or_zero(batch_losses.vis);
      log.w_answer = scalar_or_zero(w.answer);
      log.w_text = scalar_or_zero(w.text);
      log.w_vis = scalar_or_zero(w.vis);
      log.total = total->scalar();
      if (persist) {
        nlohmann::json j{{"step", log.step},         {"total", log.total},
                         {"loss_answer", log.loss_answer}, {"loss_text", log.loss_text},
                         {"loss_vis", log.loss_vis}, {"w_answer", log.w_answer},
                         {"w_text", log.w_text},     {"w_vis", log.w_vis}};
        metrics << j.dump() << '\n';
        metrics.flush();
      }
      if (log.total < result.best_loss) {
        result.best_loss = log.total;
        result.best_step = step;
        if (persist) {
          save_checkpoint(best_path, model.config(), model.vocabulary(), model.params(),
                          adam.state(), step);
          result.best_checkpoint = best_path;
        }
      }
      if (on_log) on_log(log);
    }
    if (persist && (step % tc.checkpoint_every == 0 || is_last)) {
      save_checkpoint(last_path, model.config(), model.vocabulary(), model.params(), adam.state(),
                      step);
      result.last_checkpoint = last_path;
    }
  }

  if (result.steps_run == 0) result.best_loss = 0.0;
  return result;
}

}  // namespace mtx
