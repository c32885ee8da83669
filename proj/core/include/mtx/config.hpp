#pragma once

#include <cstdint>
#include <string>

namespace mtx {

// Every knob of the network in one place. Defaults follow the reference
// setting (d=768, 184-slot joint sequence, 320x320x5 segmentation input);
// the synthetic preset shrinks everything to single-core scale.
struct ModelConfig {
  int d_model = 768;
  int n_layers = 4;
  int n_heads = 12;
  // Maximum question length is nowhere stated upstream; 20 is inferred as
  // the only value that closes the 184-slot budget (20+36+100+16+12).
  int max_question_len = 20;
  int max_objects = 36;
  int max_ocr = 100;
  int max_expl_len = 16;
  int max_answer_len = 12;
  int vocab_size = 5000;
  int seg_input_size = 320;
  int phoc_dim = 604;
  int fasttext_dim = 300;
  int d_app = 2048;
  int gat_layers = 2;
  int gat_heads = 4;
  int seg_base_channels = 8;
  std::string fasttext_table_path;  // optional pretrained-vector table

  // ablation switches
  bool gat_enabled = true;
  bool multiref_enabled = true;
  bool text_expl_enabled = true;
  bool vis_expl_enabled = true;

  int total_sequence_len() const {
    return max_question_len + max_objects + max_ocr + max_expl_len + max_answer_len;
  }

  void validate() const;

  // Small configuration sized for the synthetic task on one CPU core.
  static ModelConfig synthetic_preset();

  std::string to_json() const;
  // Rejects unknown keys; missing keys keep their defaults.
  static ModelConfig from_json(const std::string& text);
  static ModelConfig load(const std::string& path);
  void save(const std::string& path) const;

  std::uint64_t hash() const;
};

enum class Ablation { full, no_ve, no_te, no_gat, no_mr };

const char* ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);
// Returns cfg with the corresponding switch turned off.
ModelConfig apply_ablation(ModelConfig cfg, Ablation a);

}  // namespace mtx
