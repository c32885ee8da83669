#include "mtx/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mtx/image.hpp"
#include "mtx/metrics.hpp"
#include "mtx/rng.hpp"
#include "mtx/text.hpp"

namespace mtx {

using nlohmann::json;

SegmentationMask aggregate_masks(const AnnotationBundle& bundle) {
  if (bundle.masks.empty())
    throw std::invalid_argument("aggregate_masks: no masks for question " + bundle.question_id);
  const int h = bundle.masks[0].height, w = bundle.masks[0].width;
  for (std::size_t i = 1; i < bundle.masks.size(); ++i)
    if (bundle.masks[i].height != h || bundle.masks[i].width != w)
      throw std::invalid_argument("aggregate_masks: mask " + std::to_string(i) + " of question " +
                                  bundle.question_id + " has mismatched shape");
  SegmentationMask out = SegmentationMask::zeros(h, w, SegmentationMask::Provenance::ground_truth);
  const double n = static_cast<double>(bundle.masks.size());
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    double sum = 0;
    for (const auto& m : bundle.masks) sum += m.values[p] != 0 ? 1.0 : 0.0;
    out.values[p] = (sum / n >= 0.5) ? 1.f : 0.f;
  }
  return out;
}

std::vector<std::string> filter_annotations(const std::vector<std::string>& explanations) {
  if (explanations.size() < 2) return explanations;
  std::vector<std::vector<std::string>> toks;
  toks.reserve(explanations.size());
  for (const auto& e : explanations) toks.push_back(normalize_text(e));

  std::vector<std::string> kept;
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    std::vector<std::vector<std::string>> others;
    for (std::size_t j = 0; j < explanations.size(); ++j)
      if (j != i) others.push_back(toks[j]);
    const bool bad = toks[i].size() < 3 && bleu4(toks[i], others) == 0.0;
    if (!bad) kept.push_back(explanations[i]);
  }
  if (kept.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < toks.size(); ++i)
      if (toks[i].size() > toks[best].size()) best = i;
    kept.push_back(explanations[best]);
  }
  return kept;
}

std::vector<float> derive_appearance(const ImageF& image, const BoundingBox& box, int d_app) {
  if (d_app <= 0) throw std::invalid_argument("derive_appearance: d_app must be > 0");
  int x0 = std::max(0, static_cast<int>(std::floor(box.x_min)));
  int y0 = std::max(0, static_cast<int>(std::floor(box.y_min)));
  int x1 = std::min(image.width, static_cast<int>(std::ceil(box.x_max)));
  int y1 = std::min(image.height, static_cast<int>(std::ceil(box.y_max)));
  if (x1 <= x0) x1 = std::min(image.width, x0 + 1);
  if (y1 <= y0) y1 = std::min(image.height, y0 + 1);

  // channel mean and stddev of the crop, then a tail seeded by the crop's
  // quantized content so equal crops give equal vectors
  std::vector<float> stats;
  std::uint64_t h = fnv1a("appearance");
  for (int c = 0; c < image.channels; ++c) {
    double sum = 0, sum2 = 0;
    long long cnt = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double v = image.at(c, y, x);
        sum += v;
        sum2 += v * v;
        ++cnt;
        const auto q = static_cast<unsigned char>(std::lround(std::min(1.f, std::max(0.f, image.at(c, y, x))) * 255.f));
        h = (h ^ q) * 0x100000001b3ULL;
      }
    const double mean = sum / cnt;
    const double var = std::max(0.0, sum2 / cnt - mean * mean);
    stats.push_back(static_cast<float>(mean));
    stats.push_back(static_cast<float>(std::sqrt(var)));
  }
  std::vector<float> out(static_cast<std::size_t>(d_app), 0.f);
  for (std::size_t i = 0; i < out.size() && i < stats.size(); ++i) out[i] = stats[i];
  Rng rng(h);
  for (std::size_t i = stats.size(); i < out.size(); ++i)
    out[i] = 0.05f * static_cast<float>(rng.next_normal());
  return out;
}

namespace {

std::string record_label(const json& rec, std::size_t line_no) {
  if (rec.is_object() && rec.contains("image_id") && rec["image_id"].is_string())
    return rec["image_id"].get<std::string>() + " (line " + std::to_string(line_no) + ")";
  return "line " + std::to_string(line_no);
}

[[noreturn]] void schema_error(const std::string& field, const std::string& rec_id,
                               const std::string& detail) {
  throw std::runtime_error("dataset: field '" + field + "' of record " + rec_id + ": " + detail);
}

BoundingBox parse_box(const json& v, const std::string& field, const std::string& rec_id) {
  if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), [](const json& e) {
        return e.is_number();
      }))
    schema_error(field, rec_id, "expected [x0,y0,x1,y1]");
  BoundingBox b;
  b.x_min = v[0].get<double>();
  b.y_min = v[1].get<double>();
  b.x_max = v[2].get<double>();
  b.y_max = v[3].get<double>();
  try {
    b.validate();
  } catch (const std::exception& e) {
    schema_error(field, rec_id, e.what());
  }
  return b;
}

std::vector<float> load_appearance(const json& path_field, const ImageF& image,
                                   const BoundingBox& box, int d_app, const std::string& field,
                                   const std::string& rec_id, const std::string& base_dir) {
  if (path_field.is_null()) return derive_appearance(image, box, d_app);
  if (!path_field.is_string()) schema_error(field, rec_id, "expected path string or null");
  std::filesystem::path p = path_field.get<std::string>();
  if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
  std::vector<float> v;
  try {
    v = read_float_file(p.string());
  } catch (const std::exception& e) {
    schema_error(field, rec_id, e.what());
  }
  if (static_cast<int>(v.size()) != d_app)
    schema_error(field, rec_id,
                 "feature length " + std::to_string(v.size()) + " != configured " +
                     std::to_string(d_app));
  return v;
}

std::string most_frequent(const std::vector<std::string>& answers) {
  std::map<std::string, int> freq;
  for (const auto& a : answers) ++freq[a];
  auto best = freq.begin();
  for (auto it = freq.begin(); it != freq.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

}  // namespace

std::vector<Sample> load_dataset(const std::string& path, const ModelConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  const std::string base_dir = std::filesystem::path(path).parent_path().string();

  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset: line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string rec_id = record_label(rec, line_no);
    auto require = [&](const char* field) -> const json& {
      if (!rec.contains(field)) schema_error(field, rec_id, "missing");
      return rec[field];
    };

    Sample s;
    if (!require("image_id").is_string()) schema_error("image_id", rec_id, "expected string");
    s.image_id = rec["image_id"].get<std::string>();
    s.question_id = s.image_id + "#" + std::to_string(out.size());

    if (!require("image_path").is_string()) schema_error("image_path", rec_id, "expected string");
    std::filesystem::path img_path = rec["image_path"].get<std::string>();
    if (img_path.is_relative()) img_path = std::filesystem::path(base_dir) / img_path;
    try {
      s.image = read_png(img_path.string());
    } catch (const std::exception& e) {
      schema_error("image_path", rec_id, e.what());
    }
    if (s.image.channels == 1) {
      ImageF rgb = ImageF::zeros(s.image.height, s.image.width, 3);
      for (int c = 0; c < 3; ++c)
        std::copy(s.image.data.begin(), s.image.data.end(),
                  rgb.data.begin() + static_cast<std::size_t>(c) * s.image.height * s.image.width);
      s.image = std::move(rgb);
    }

    if (!require("question").is_string()) schema_error("question", rec_id, "expected string");
    s.question = rec["question"].get<std::string>();

    const json& ans = require("answers");
    if (!ans.is_array() || ans.empty()) schema_error("answers", rec_id, "expected nonempty array");
    for (const auto& a : ans) {
      if (!a.is_string()) schema_error("answers", rec_id, "expected strings");
      s.answers.push_back(a.get<std::string>());
    }
    if (static_cast<int>(s.answers.size()) > kAnswersPerQuestion)
      schema_error("answers", rec_id, "more than 10 entries");
    const std::string pad = most_frequent(s.answers);
    while (static_cast<int>(s.answers.size()) < kAnswersPerQuestion) s.answers.push_back(pad);

    const json& ocr = require("ocr");
    if (!ocr.is_array()) schema_error("ocr", rec_id, "expected array");
    for (const auto& t : ocr) {
      if (static_cast<int>(s.ocr.size()) >= cfg.max_ocr) break;
      if (!t.is_object() || !t.contains("text") || !t["text"].is_string() || !t.contains("box") ||
          !t.contains("confidence") || !t["confidence"].is_number())
        schema_error("ocr", rec_id, "expected {text, box, appearance_path|null, confidence}");
      OcrToken tok;
      tok.text = t["text"].get<std::string>();
      if (tok.text.empty()) schema_error("ocr.text", rec_id, "empty token");
      tok.box = parse_box(t["box"], "ocr.box", rec_id);
      tok.confidence = t["confidence"].get<double>();
      if (tok.confidence < 0 || tok.confidence > 1)
        schema_error("ocr.confidence", rec_id, "outside [0,1]");
      tok.appearance = load_appearance(t.contains("appearance_path") ? t["appearance_path"] : json(),
                                       s.image, tok.box, cfg.d_app, "ocr.appearance_path", rec_id,
                                       base_dir);
      s.ocr.push_back(std::move(tok));
    }

    const json& objs = require("objects");
    if (!objs.is_array()) schema_error("objects", rec_id, "expected array");
    for (const auto& o : objs) {
      if (static_cast<int>(s.objects.size()) >= cfg.max_objects) break;
      if (!o.is_object() || !o.contains("box") || !o.contains("score") || !o["score"].is_number())
        schema_error("objects", rec_id, "expected {box, appearance_path|null, score}");
      ObjectRegion r;
      r.box = parse_box(o["box"], "objects.box", rec_id);
      r.score = o["score"].get<double>();
      if (r.score < 0 || r.score > 1) schema_error("objects.score", rec_id, "outside [0,1]");
      r.appearance = load_appearance(o.contains("appearance_path") ? o["appearance_path"] : json(),
                                     s.image, r.box, cfg.d_app, "objects.appearance_path", rec_id,
                                     base_dir);
      s.objects.push_back(std::move(r));
    }

    const json& expl = require("explanations");
    if (!expl.is_array()) schema_error("explanations", rec_id, "expected array");
    std::vector<std::string> raw_expl;
    for (const auto& e : expl) {
      if (!e.is_string()) schema_error("explanations", rec_id, "expected strings");
      raw_expl.push_back(e.get<std::string>());
    }
    if (raw_expl.empty()) schema_error("explanations", rec_id, "at least one required");
    raw_expl = filter_annotations(raw_expl);
    if (raw_expl.size() > 5) raw_expl.resize(5);
    s.text_explanations = std::move(raw_expl);

    if (!require("mask_path").is_string()) schema_error("mask_path", rec_id, "expected string");
    std::filesystem::path mask_path = rec["mask_path"].get<std::string>();
    if (mask_path.is_relative()) mask_path = std::filesystem::path(base_dir) / mask_path;
    ImageF m;
    try {
      m = read_png(mask_path.string());
    } catch (const std::exception& e) {
      schema_error("mask_path", rec_id, e.what());
    }
    if (m.channels != 1) schema_error("mask_path", rec_id, "mask must be single-channel");
    if (m.height != s.image.height || m.width != s.image.width)
      schema_error("mask_path", rec_id, "mask shape differs from image shape");
    s.visual_explanation =
        SegmentationMask::zeros(m.height, m.width, SegmentationMask::Provenance::ground_truth);
    for (std::size_t p = 0; p < m.data.size(); ++p)
      s.visual_explanation.values[p] = m.data[p] >= 0.5f ? 1.f : 0.f;

    out.push_back(std::move(s));
  }
  return out;
}

std::string save_dataset(const std::vector<Sample>& samples, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "masks");
  const std::string records = (fs::path(dir) / "data.jsonl").string();
  std::ofstream out(records);
  if (!out) throw std::runtime_error("save_dataset: cannot write " + records);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const std::string stem = s.question_id.empty() ? "sample-" + std::to_string(i) : s.question_id;
    std::string safe;
    for (char c : stem) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    const std::string img_rel = "images/" + safe + ".png";
    const std::string mask_rel = "masks/" + safe + ".png";
    write_png(s.image, (fs::path(dir) / img_rel).string());
    ImageF m = ImageF::zeros(s.visual_explanation.height, s.visual_explanation.width, 1);
    for (std::size_t p = 0; p < m.data.size(); ++p)
      m.data[p] = s.visual_explanation.values[p] >= s.visual_explanation.threshold ? 1.f : 0.f;
    write_png(m, (fs::path(dir) / mask_rel).string());

    json rec;
    rec["image_id"] = s.image_id;
    rec["image_path"] = img_rel;
    rec["question"] = s.question;
    rec["answers"] = s.answers;
    rec["ocr"] = json::array();
    for (const auto& t : s.ocr) {
      json j;
      j["text"] = t.text;
      j["box"] = {t.box.x_min, t.box.y_min, t.box.x_max, t.box.y_max};
      j["appearance_path"] = nullptr;
      j["confidence"] = t.confidence;
      rec["ocr"].push_back(j);
    }
    rec["objects"] = json::array();
    for (const auto& o : s.objects) {
      json j;
      j["box"] = {o.box.x_min, o.box.y_min, o.box.x_max, o.box.y_max};
      j["appearance_path"] = nullptr;
      j["score"] = o.score;
      rec["objects"].push_back(j);
    }
    rec["explanations"] = s.text_explanations;
    rec["mask_path"] = mask_rel;
    out << rec.dump() << "\n";
  }
  return records;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_dataset(
    const std::vector<Sample>& samples, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split_dataset: ratio must be in (0,1)");

  std::vector<std::string> group_order;
  std::unordered_map<std::string, std::size_t> group_size;
  for (const auto& s : samples) {
    if (group_size.find(s.image_id) == group_size.end()) group_order.push_back(s.image_id);
    ++group_size[s.image_id];
  }
  Rng rng(hash_combine(fnv1a("split"), seed));
  rng.shuffle(group_order);

  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(samples.size())));
  std::unordered_set<std::string> train_ids;
  std::size_t train_count = 0;
  for (const auto& g : group_order) {
    if (train_count >= target) break;
    train_ids.insert(g);
    train_count += group_size[g];
  }

  std::pair<std::vector<Sample>, std::vector<Sample>> out;
  for (const auto& s : samples)
    (train_ids.count(s.image_id) ? out.first : out.second).push_back(s);
  return out;
}

DatasetStats dataset_stats(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("dataset_stats: empty sample list");
  DatasetStats st;
  std::set<std::string> images, questions, expl;
  std::vector<std::vector<std::string>> corpus;
  std::size_t total_words = 0, total_chars = 0;
  for (const auto& s : samples) {
    images.insert(s.image_id);
    questions.insert(s.question);
    for (const auto& e : s.text_explanations) {
      expl.insert(e);
      ++st.n_text_expl;
      corpus.push_back(normalize_text(e));
      total_words += corpus.back().size();
      total_chars += e.size();
    }
  }
  st.n_images = images.size();
  st.n_questions = samples.size();
  st.n_unique_questions = questions.size();
  st.n_unique_text_expl = expl.size();
  st.avg_expl_per_q = static_cast<double>(st.n_text_expl) / static_cast<double>(st.n_questions);
  st.avg_words_per_expl =
      st.n_text_expl ? static_cast<double>(total_words) / static_cast<double>(st.n_text_expl) : 0.0;
  st.avg_chars_per_expl =
      st.n_text_expl ? static_cast<double>(total_chars) / static_cast<double>(st.n_text_expl) : 0.0;
  st.vocab_size = count_distinct_tokens(corpus);
  return st;
}

Vocabulary build_decoder_vocabulary(const std::vector<Sample>& samples, int size) {
  std::vector<std::vector<std::string>> corpus;
  for (const Sample& s : samples) {
    for (const auto& a : s.answers) corpus.push_back(normalize_text(a));
    for (const auto& e : s.text_explanations) corpus.push_back(normalize_text(e));
  }
  return build_vocabulary(corpus, size);
}

std::string DatasetStats::summary_text() const {
  std::ostringstream os;
  os << "images                 " << n_images << "\n"
     << "questions              " << n_questions << "\n"
     << "unique questions       " << n_unique_questions << "\n"
     << "text explanations      " << n_text_expl << "\n"
     << "unique explanations    " << n_unique_text_expl << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", avg_expl_per_q);
  os << "expl per question      " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.2f", avg_words_per_expl);
  os << "words per explanation  " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.2f", avg_chars_per_expl);
  os << "chars per explanation  " << buf << "\n";
  os << "explanation vocab      " << vocab_size << "\n";
  return os.str();
}

}  // namespace mtx
