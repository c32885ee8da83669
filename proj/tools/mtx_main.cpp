#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "mtx/checkpoint.hpp"
#include "mtx/config.hpp"
#include "mtx/dataset.hpp"
#include "mtx/evaluate.hpp"
#include "mtx/graph.hpp"
#include "mtx/image.hpp"
#include "mtx/metrics.hpp"
#include "mtx/model.hpp"
#include "mtx/seghead.hpp"
#include "mtx/training.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mtx;

// Config-level problems are usage errors (exit 2); everything else that
// throws during a run is a runtime failure (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ModelConfig load_config(const std::string& path, const std::string& ablation) {
  ModelConfig cfg;
  try {
    cfg = path.empty() ? ModelConfig::synthetic_preset() : ModelConfig::load(path);
    if (!ablation.empty()) cfg = apply_ablation(cfg, ablation_from_name(ablation));
    cfg.validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string component_flags(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "gat=" << (cfg.gat_enabled ? "on" : "off")
     << " multiref=" << (cfg.multiref_enabled ? "on" : "off")
     << " text=" << (cfg.text_expl_enabled ? "on" : "off")
     << " vis=" << (cfg.vis_expl_enabled ? "on" : "off");
  return os.str();
}

double average_edges_per_image(const std::vector<Sample>& samples) {
  std::unordered_set<std::string> seen;
  std::size_t edges = 0, images = 0;
  for (const Sample& s : samples) {
    if (!seen.insert(s.image_id).second) continue;
    ++images;
    if (s.objects.empty() && s.ocr.empty()) continue;
    edges += build_containment_graph(s.objects, s.ocr).edges.size();
  }
  return images ? static_cast<double>(edges) / static_cast<double>(images) : 0.0;
}

void print_step(const StepLog& log) {
  std::cout << "step " << std::setw(6) << log.step << "  total " << std::fixed
            << std::setprecision(4) << log.total << "  ans " << log.loss_answer << "  text "
            << log.loss_text << "  vis " << log.loss_vis << "  w [" << log.w_answer << ' '
            << log.w_text << ' ' << log.w_vis << "]\n"
            << std::defaultfloat;
}

// Pulls model identity (config + vocabulary) out of a checkpoint, rebuilds
// the network and restores its tensors plus the optimizer state.
struct LoadedModel {
  MtxNet model;
  ad::Adam::State adam;
  int step = 0;
};

LoadedModel model_from_checkpoint(const std::string& path) {
  CheckpointInfo info = read_checkpoint_info(path);
  LoadedModel lm{MtxNet(info.config, info.vocab, 0), {}, 0};
  lm.step = load_checkpoint(path, lm.model.params(), lm.adam).step;
  return lm;
}

void write_mask_files(const SegmentationMask& mask, const std::string& stem) {
  ImageF img = ImageF::zeros(mask.height, mask.width, 1);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) img.at(0, y, x) = mask.at(y, x);
  write_png(img, stem + ".png");
  std::ofstream side(stem + ".txt");
  side << "threshold " << mask.threshold << "\n";
}

// Alpha-blends a highlight color into the image wherever the mask is hot;
// blend strength follows the mask value, so an all-zero mask leaves the
// image untouched.
ImageF overlay_mask(const ImageF& image, const SegmentationMask& mask, float r, float g, float b,
                    float strength) {
  ImageF out = image;
  SegmentationMask scaled = resize_mask_nearest(mask, image.height, image.width);
  const float color[3] = {r, g, b};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const float a = strength * scaled.at(y, x);
      if (a <= 0.f) continue;
      for (int c = 0; c < std::min(3, image.channels); ++c)
        out.at(c, y, x) = (1.f - a) * out.at(c, y, x) + a * color[c];
    }
  return out;
}

int run_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::string& ablation,
              const std::string& resume_path, std::uint64_t seed, int steps, int batch) {
  ModelConfig cfg = load_config(config_path, ablation);

  std::optional<LoadedModel> resumed;
  if (!resume_path.empty()) {
    CheckpointInfo info = read_checkpoint_info(resume_path);
    if (!config_path.empty() && info.config.hash() != cfg.hash())
      throw UsageError("checkpoint configuration does not match --config");
    cfg = info.config;
    resumed = model_from_checkpoint(resume_path);
  }

  std::vector<Sample> data = load_dataset(data_path, cfg);
  std::cout << "loaded " << data.size() << " samples, avg containment edges per image "
            << std::fixed << std::setprecision(2) << average_edges_per_image(data)
            << std::defaultfloat << "\n";

  MtxNet model = resumed ? std::move(resumed->model)
                         : MtxNet(cfg, build_decoder_vocabulary(data, cfg.vocab_size), seed);
  std::cout << "config " << hash_hex(model.config().hash()) << "  components "
            << component_flags(model.config()) << "  vocab " << model.vocabulary().size()
            << "  params " << model.params().total_size() << "\n";

  TrainConfig tc;
  tc.max_steps = steps;
  tc.batch_size = batch;
  tc.seed = seed;
  tc.out_dir = out_dir;
  TrainResult res = train(model, data, tc, resumed ? resumed->step : 0,
                          resumed ? resumed->adam : ad::Adam::State{}, print_step);
  std::cout << "ran " << res.steps_run << " steps; best total " << res.best_loss << " at step "
            << res.best_step << "\n";
  if (!res.last_checkpoint.empty()) std::cout << "last checkpoint " << res.last_checkpoint << "\n";
  if (!res.best_checkpoint.empty()) std::cout << "best checkpoint " << res.best_checkpoint << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& out_dir, const std::string& config_path) {
  LoadedModel lm = model_from_checkpoint(checkpoint_path);
  if (!config_path.empty()) {
    ModelConfig given = load_config(config_path, "");
    if (given.hash() != lm.model.config().hash())
      throw UsageError("checkpoint configuration does not match --config");
  }
  std::vector<Sample> data = load_dataset(data_path, lm.model.config());

  EvalOutputs out = evaluate(lm.model, data);
  std::cout << "checkpoint " << checkpoint_path << " (step " << lm.step << ")\n"
            << "config " << hash_hex(lm.model.config().hash()) << "  components "
            << component_flags(lm.model.config()) << "\n"
            << out.report.summary_text();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "per_sample.csv");
    csv << out.report.to_csv();
    if (lm.model.config().vis_expl_enabled) {
      fs::create_directories(fs::path(out_dir) / "masks");
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!out.predictions[i].has_mask) continue;
        write_mask_files(out.predictions[i].mask,
                         (fs::path(out_dir) / "masks" / data[i].question_id).string());
      }
    }
    std::cout << "wrote per-sample scores and masks under " << out_dir << "\n";
  }
  return 0;
}

int run_stats(const std::string& data_path, const std::string& config_path) {
  ModelConfig cfg = config_path.empty() ? ModelConfig{} : load_config(config_path, "");
  std::vector<Sample> data = load_dataset(data_path, cfg);
  DatasetStats st = dataset_stats(data);
  std::cout << st.summary_text();
  std::cout << "avg edges per image    " << std::fixed << std::setprecision(2)
            << average_edges_per_image(data) << std::defaultfloat << "\n";
  return 0;
}

int run_synth(int count, const std::string& out_dir, std::uint64_t seed) {
  std::vector<Sample> samples = generate_synthetic(count, seed);
  const std::string records = save_dataset(samples, out_dir);
  std::cout << "wrote " << samples.size() << " samples to " << records << "\n";
  std::cout << "avg edges per image    " << std::fixed << std::setprecision(2)
            << average_edges_per_image(samples) << std::defaultfloat << "\n";
  return 0;
}

int run_render(const std::string& checkpoint_path, const std::string& data_path,
               const std::string& sample_id, const std::string& out_dir) {
  LoadedModel lm = model_from_checkpoint(checkpoint_path);
  std::vector<Sample> data = load_dataset(data_path, lm.model.config());

  const Sample* sample = nullptr;
  for (const Sample& s : data)
    if (s.question_id == sample_id || s.image_id == sample_id) {
      sample = &s;
      break;
    }
  if (!sample) throw std::runtime_error("sample '" + sample_id + "' not found in " + data_path);

  PreparedSample ps = lm.model.prepare(*sample);
  Prediction pred = lm.model.predict(ps);

  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / sample->image_id;

  if (pred.has_mask)
    write_png(overlay_mask(sample->image, pred.mask, 1.f, 0.15f, 0.15f, 0.55f),
              base.string() + "_pred.png");
  else
    write_png(sample->image, base.string() + "_pred.png");
  write_png(overlay_mask(sample->image, sample->visual_explanation, 0.15f, 1.f, 0.15f, 0.55f),
            base.string() + "_gt.png");

  std::ofstream txt(base.string() + ".txt");
  txt << "question: " << sample->question << "\n";
  txt << "predicted answer: " << pred.answer_text << "\n";
  txt << "generated explanation: " << pred.explanation_text << "\n";
  for (const auto& r : sample->text_explanations) txt << "reference: " << r << "\n";

  if (ps.has_graph) {
    std::ofstream edges(base.string() + "_edges.txt");
    edges << dump_edges(ps.graph);
  }
  std::cout << "wrote overlays for " << sample->image_id << " under " << out_dir << "\n";
  return 0;
}

int run_ablate(const std::string& config_path, const std::string& data_path,
               const std::string& out_dir, std::uint64_t seed, int steps, int batch) {
  const ModelConfig base = load_config(config_path, "");
  std::vector<Sample> data = load_dataset(data_path, base);
  auto [train_split, test_split] = split_dataset(data, 0.8, seed);
  if (train_split.empty() || test_split.empty())
    throw std::runtime_error("ablate: split produced an empty side");
  std::cout << "split " << train_split.size() << " train / " << test_split.size() << " test\n";

  struct Row {
    std::string name, hash;
    ScoreReport report;
    bool text = false, vis = false;
  };
  std::vector<Row> rows;

  for (Ablation a : {Ablation::full, Ablation::no_ve, Ablation::no_te, Ablation::no_gat,
                     Ablation::no_mr}) {
    const ModelConfig cfg = apply_ablation(base, a);
    const std::string name = ablation_name(a);
    std::cout << "== " << name << " (" << component_flags(cfg) << ")\n";

    MtxNet model(cfg, build_decoder_vocabulary(train_split, cfg.vocab_size), seed);
    TrainConfig tc;
    tc.max_steps = steps;
    tc.batch_size = batch;
    tc.seed = seed;
    tc.out_dir = (fs::path(out_dir) / name).string();
    train(model, train_split, tc, 0, {}, print_step);

    EvalOutputs out = evaluate(model, test_split);
    rows.push_back({name, hash_hex(cfg.hash()), out.report, cfg.text_expl_enabled,
                    cfg.vis_expl_enabled});
  }

  std::ostringstream table;
  table << std::left << std::setw(8) << "config" << std::setw(18) << "hash" << std::right
        << std::setw(8) << "VQA" << std::setw(8) << "B" << std::setw(8) << "R" << std::setw(8)
        << "M" << std::setw(8) << "C" << std::setw(8) << "IoU" << "\n";
  table << std::fixed << std::setprecision(2);
  auto cell = [&](bool active, double v) {
    if (active)
      table << std::setw(8) << v * 100.0;
    else
      table << std::setw(8) << "-";
  };
  for (const Row& r : rows) {
    table << std::left << std::setw(8) << r.name << std::setw(18) << r.hash << std::right;
    cell(true, r.report.vqa_accuracy);
    cell(r.text, r.report.bleu4);
    cell(r.text, r.report.rouge_l);
    cell(r.text, r.report.meteor);
    cell(r.text, r.report.cider);
    cell(r.vis, r.report.iou);
    table << "\n";
  }
  std::cout << table.str();
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "ablation_table.txt") << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtx: multimodal-explanation VQA toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir, checkpoint_path, sample_id, ablation;
  std::uint64_t seed = 0;
  int steps = 2000, batch = 8, count = 0;
  int rc = 0;

  CLI::App* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--config", config_path, "Model configuration file (defaults to the synthetic preset)");
  train->add_option("--data", data_path, "Dataset records file")->required();
  train->add_option("--out", out_dir, "Output directory for checkpoints and logs")->required();
  train->add_option("--seed", seed, "Run seed");
  train->add_option("--steps", steps, "Training steps");
  train->add_option("--batch", batch, "Batch size");
  train->add_option("--checkpoint", checkpoint_path, "Resume from this checkpoint");
  train->add_option("--ablation", ablation, "Component switch preset")
      ->check(CLI::IsMember({"full", "no-ve", "no-te", "no-gat", "no-mr"}));
  train->callback([&] {
    rc = run_train(config_path, data_path, out_dir, ablation, checkpoint_path, seed, steps, batch);
  });

  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint to evaluate")->required();
  eval->add_option("--data", data_path, "Dataset records file")->required();
  eval->add_option("--out", out_dir, "Directory for per-sample scores and predicted masks");
  eval->add_option("--config", config_path, "Cross-check against this configuration file");
  eval->callback([&] { rc = run_eval(checkpoint_path, data_path, out_dir, config_path); });

  CLI::App* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("--data", data_path, "Dataset records file")->required();
  stats->add_option("--config", config_path, "Configuration controlling load-time caps");
  stats->callback([&] { rc = run_stats(data_path, config_path); });

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("count", count, "Number of samples")->required()->check(CLI::PositiveNumber);
  synth->add_option("--out", out_dir, "Output dataset directory")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->callback([&] { rc = run_synth(count, out_dir, seed); });

  CLI::App* render = app.add_subcommand("render", "Render explanation overlays for one sample");
  render->add_option("--checkpoint", checkpoint_path, "Checkpoint to run")->required();
  render->add_option("--data", data_path, "Dataset records file")->required();
  render->add_option("--sample-id", sample_id, "Question or image id")->required();
  render->add_option("--out", out_dir, "Output directory")->required();
  render->callback([&] { rc = run_render(checkpoint_path, data_path, sample_id, out_dir); });

  CLI::App* ablate = app.add_subcommand("ablate", "Train and score every component switch");
  ablate->add_option("--config", config_path, "Base configuration file");
  ablate->add_option("--data", data_path, "Dataset records file")->required();
  ablate->add_option("--out", out_dir, "Output directory")->required();
  ablate->add_option("--seed", seed, "Run seed");
  ablate->add_option("--steps", steps, "Training steps per configuration");
  ablate->add_option("--batch", batch, "Batch size");
  ablate->callback([&] { rc = run_ablate(config_path, data_path, out_dir, seed, steps, batch); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
