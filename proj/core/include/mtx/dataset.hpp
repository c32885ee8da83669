#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtx/config.hpp"
#include "mtx/text.hpp"
#include "mtx/types.hpp"

namespace mtx {

// Raw per-annotator material for one question, before aggregation.
struct AnnotationBundle {
  std::string question_id;
  std::vector<BinaryMask> masks;          // 1..5, all same shape
  std::vector<std::string> explanations;  // same count as masks
};

struct DatasetStats {
  std::size_t n_images = 0;
  std::size_t n_questions = 0;
  std::size_t n_unique_questions = 0;
  std::size_t n_text_expl = 0;
  std::size_t n_unique_text_expl = 0;
  double avg_expl_per_q = 0.0;
  double avg_words_per_expl = 0.0;
  double avg_chars_per_expl = 0.0;
  std::size_t vocab_size = 0;

  std::string summary_text() const;
};

// Per-pixel mean over annotator masks, binarized at >= 0.5 (inclusive, so a
// 1-of-2 tie keeps the pixel). Throws when masks are missing or a mask's
// shape disagrees with mask 0; the message names the offending index.
SegmentationMask aggregate_masks(const AnnotationBundle& bundle);

// Drops an annotator's explanation when it shares no 4-gram credit with the
// co-annotators (BLEU-4 of it against all others is 0) AND it is shorter
// than 3 tokens. Never empties the list: if every entry would go, the
// longest one (first on ties) stays.
std::vector<std::string> filter_annotations(const std::vector<std::string>& explanations);

// One record per line; see docs/data-format notes in README. Truncates OCR
// to cfg.max_ocr, objects to cfg.max_objects, explanations to 5; pads
// answers to 10 by repeating the most frequent. Schema violations throw
// with the field name and record id.
std::vector<Sample> load_dataset(const std::string& path, const ModelConfig& cfg);

// Writes images/, masks/ and a records file under dir; returns the records
// file path. Appearance paths are written as null (re-derived on load).
std::string save_dataset(const std::vector<Sample>& samples, const std::string& dir);

// Deterministic appearance stand-in used when a record carries no feature
// file: channel statistics of the box crop followed by a crop-content-hash
// pseudo-random tail, so identical crops map to identical vectors.
std::vector<float> derive_appearance(const ImageF& image, const BoundingBox& box, int d_app);

// Image-grouped split: no image_id spans both sides. Group order is shuffled
// by seed, then whole groups go to train until it holds at least
// round(ratio * n) questions. Relative sample order is preserved.
std::pair<std::vector<Sample>, std::vector<Sample>> split_dataset(
    const std::vector<Sample>& samples, double ratio, std::uint64_t seed);

DatasetStats dataset_stats(const std::vector<Sample>& samples);

// Decoder vocabulary for a training split: the most frequent tokens across
// all answers and textual explanations, capped at `size` including the
// specials.
Vocabulary build_decoder_vocabulary(const std::vector<Sample>& samples, int size);

// Desk-scale scenes: colored card/sign/label rectangles with short glyph
// tokens printed on them; the question asks what is written on one of them.
// Deterministic per (seed, index) so prefixes agree across different n.
std::vector<Sample> generate_synthetic(int n, std::uint64_t seed, int image_size = 64,
                                       int d_app = 32);

}  // namespace mtx
