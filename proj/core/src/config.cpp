#include "mtx/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mtx/rng.hpp"
#include <json.hpp>

namespace mtx {

using nlohmann::json;

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("ModelConfig: ") + name + " must be > 0");
  };
  positive(d_model, "d_model");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(max_question_len, "max_question_len");
  positive(max_objects, "max_objects");
  positive(max_ocr, "max_ocr");
  positive(max_expl_len, "max_expl_len");
  positive(max_answer_len, "max_answer_len");
  positive(vocab_size, "vocab_size");
  positive(seg_input_size, "seg_input_size");
  positive(phoc_dim, "phoc_dim");
  positive(fasttext_dim, "fasttext_dim");
  positive(d_app, "d_app");
  positive(gat_heads, "gat_heads");
  positive(seg_base_channels, "seg_base_channels");
  if (gat_layers < 0) throw std::invalid_argument("ModelConfig: gat_layers must be >= 0");
  if (d_model % n_heads != 0)
    throw std::invalid_argument("ModelConfig: d_model must be divisible by n_heads");
  if (vocab_size < 4) throw std::invalid_argument("ModelConfig: vocab_size must be >= 4");
}

ModelConfig ModelConfig::synthetic_preset() {
  ModelConfig c;
  c.d_model = 64;
  c.n_layers = 2;
  c.n_heads = 4;
  c.max_question_len = 8;
  c.max_objects = 6;
  c.max_ocr = 4;
  c.max_expl_len = 10;
  c.max_answer_len = 3;
  c.vocab_size = 40;
  c.seg_input_size = 64;
  c.fasttext_dim = 48;
  c.d_app = 32;
  c.gat_layers = 2;
  c.gat_heads = 4;
  c.seg_base_channels = 8;
  return c;
}

namespace {

json to_json_obj(const ModelConfig& c) {
  return json{{"d_model", c.d_model},
              {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},
              {"max_question_len", c.max_question_len},
              {"max_objects", c.max_objects},
              {"max_ocr", c.max_ocr},
              {"max_expl_len", c.max_expl_len},
              {"max_answer_len", c.max_answer_len},
              {"vocab_size", c.vocab_size},
              {"seg_input_size", c.seg_input_size},
              {"phoc_dim", c.phoc_dim},
              {"fasttext_dim", c.fasttext_dim},
              {"d_app", c.d_app},
              {"gat_layers", c.gat_layers},
              {"gat_heads", c.gat_heads},
              {"seg_base_channels", c.seg_base_channels},
              {"fasttext_table_path", c.fasttext_table_path},
              {"gat_enabled", c.gat_enabled},
              {"multiref_enabled", c.multiref_enabled},
              {"text_expl_enabled", c.text_expl_enabled},
              {"vis_expl_enabled", c.vis_expl_enabled}};
}

}  // namespace

std::string ModelConfig::to_json() const { return to_json_obj(*this).dump(2); }

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("ModelConfig: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("ModelConfig: top level must be an object");

  ModelConfig c;
  const json defaults = to_json_obj(c);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!defaults.contains(it.key()))
      throw std::invalid_argument("ModelConfig: unknown key '" + it.key() + "'");
  }
  auto get_int = [&](const char* k, int& dst) {
    if (j.contains(k)) dst = j.at(k).get<int>();
  };
  auto get_bool = [&](const char* k, bool& dst) {
    if (j.contains(k)) dst = j.at(k).get<bool>();
  };
  get_int("d_model", c.d_model);
  get_int("n_layers", c.n_layers);
  get_int("n_heads", c.n_heads);
  get_int("max_question_len", c.max_question_len);
  get_int("max_objects", c.max_objects);
  get_int("max_ocr", c.max_ocr);
  get_int("max_expl_len", c.max_expl_len);
  get_int("max_answer_len", c.max_answer_len);
  get_int("vocab_size", c.vocab_size);
  get_int("seg_input_size", c.seg_input_size);
  get_int("phoc_dim", c.phoc_dim);
  get_int("fasttext_dim", c.fasttext_dim);
  get_int("d_app", c.d_app);
  get_int("gat_layers", c.gat_layers);
  get_int("gat_heads", c.gat_heads);
  get_int("seg_base_channels", c.seg_base_channels);
  if (j.contains("fasttext_table_path")) c.fasttext_table_path = j.at("fasttext_table_path").get<std::string>();
  get_bool("gat_enabled", c.gat_enabled);
  get_bool("multiref_enabled", c.multiref_enabled);
  get_bool("text_expl_enabled", c.text_expl_enabled);
  get_bool("vis_expl_enabled", c.vis_expl_enabled);
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ModelConfig: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ModelConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("ModelConfig: cannot write '" + path + "'");
  out << to_json() << "\n";
}

std::uint64_t ModelConfig::hash() const { return fnv1a(to_json_obj(*this).dump()); }

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_ve: return "no-ve";
    case Ablation::no_te: return "no-te";
    case Ablation::no_gat: return "no-gat";
    case Ablation::no_mr: return "no-mr";
  }
  return "full";
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "full") return Ablation::full;
  if (name == "no-ve") return Ablation::no_ve;
  if (name == "no-te") return Ablation::no_te;
  if (name == "no-gat") return Ablation::no_gat;
  if (name == "no-mr") return Ablation::no_mr;
  throw std::invalid_argument("unknown ablation '" + name + "'");
}

ModelConfig apply_ablation(ModelConfig cfg, Ablation a) {
  switch (a) {
    case Ablation::full: break;
    case Ablation::no_ve: cfg.vis_expl_enabled = false; break;
    case Ablation::no_te: cfg.text_expl_enabled = false; break;
    case Ablation::no_gat: cfg.gat_enabled = false; break;
    case Ablation::no_mr: cfg.multiref_enabled = false; break;
  }
  return cfg;
}

}  // namespace mtx
