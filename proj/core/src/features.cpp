#include "mtx/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mtx/log.hpp"

namespace mtx {

const char* role_name(Role r) {
  switch (r) {
    case Role::question: return "question";
    case Role::object: return "object";
    case Role::ocr: return "ocr";
    case Role::expl_slot: return "expl_slot";
    case Role::ans_slot: return "ans_slot";
  }
  return "?";
}

std::array<float, 4> relative_location(const BoundingBox& box, double image_w, double image_h) {
  if (image_w <= 0 || image_h <= 0)
    throw std::invalid_argument("relative_location: non-positive image dimensions");
  BoundingBox b = box;
  if (b.x_min < 0 || b.y_min < 0 || b.x_max > image_w || b.y_max > image_h) {
    log_warning("relative_location: box exceeds image bounds, clamping");
    b.x_min = std::clamp(b.x_min, 0.0, image_w);
    b.x_max = std::clamp(b.x_max, 0.0, image_w);
    b.y_min = std::clamp(b.y_min, 0.0, image_h);
    b.y_max = std::clamp(b.y_max, 0.0, image_h);
  }
  return {static_cast<float>(b.x_min / image_w), static_cast<float>(b.y_min / image_h),
          static_cast<float>(b.x_max / image_w), static_cast<float>(b.y_max / image_h)};
}

std::vector<float> subword_embed(const std::string& word, int dim) {
  if (dim <= 0) throw std::invalid_argument("subword_embed: dim must be positive");
  std::vector<float> acc(static_cast<std::size_t>(dim), 0.f);
  if (word.empty()) return acc;
  const std::string marked = "<" + word + ">";
  int grams = 0;
  for (int n = 3; n <= 5; ++n) {
    const int len = static_cast<int>(marked.size());
    for (int i = 0; i + n <= len; ++i) {
      const std::string gram = marked.substr(static_cast<std::size_t>(i), static_cast<std::size_t>(n));
      Rng rng(fnv1a(gram));
      std::vector<float> v(static_cast<std::size_t>(dim));
      double norm = 0.0;
      for (auto& x : v) {
        x = static_cast<float>(rng.next_normal());
        norm += static_cast<double>(x) * x;
      }
      const float inv = norm > 0 ? static_cast<float>(1.0 / std::sqrt(norm)) : 0.f;
      for (int d = 0; d < dim; ++d) acc[static_cast<std::size_t>(d)] += v[static_cast<std::size_t>(d)] * inv;
      ++grams;
    }
  }
  if (grams > 0)
    for (auto& x : acc) x /= static_cast<float>(grams);
  return acc;
}

VectorTable VectorTable::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("VectorTable: cannot open '" + path + "'");
  VectorTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tok;
    is >> tok;
    std::vector<float> v;
    float x;
    while (is >> x) v.push_back(x);
    if (v.empty())
      throw std::runtime_error("VectorTable: no values at " + path + ":" +
                               std::to_string(line_no));
    if (t.dim_ == 0)
      t.dim_ = static_cast<int>(v.size());
    else if (static_cast<int>(v.size()) != t.dim_)
      throw std::runtime_error("VectorTable: inconsistent dimension at " + path + ":" +
                               std::to_string(line_no));
    t.table_[tok] = std::move(v);
  }
  return t;
}

const std::vector<float>* VectorTable::find(const std::string& word) const {
  auto it = table_.find(word);
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<float> word_vector(const std::string& word, int dim, const VectorTable* table) {
  if (table && table->size() > 0) {
    if (table->dim() != dim)
      throw std::invalid_argument("word_vector: table dimension " +
                                  std::to_string(table->dim()) + " != requested " +
                                  std::to_string(dim));
    if (const auto* v = table->find(word)) return *v;
  }
  return subword_embed(word, dim);
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXf rows_from(const std::vector<std::vector<float>>& rows, int cols) {
  Eigen::MatrixXf m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != cols)
      throw std::invalid_argument("feature row " + std::to_string(i) + " has length " +
                                  std::to_string(rows[i].size()) + ", expected " +
                                  std::to_string(cols));
    for (int j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace

Embedder::Embedder(const ModelConfig& cfg, ad::ParamStore& params, Rng& rng,
                   const VectorTable* table)
    : cfg_(cfg), table_(table) {
  using ad::Mat;
  const int d = cfg.d_model;
  auto xv = [&](const std::string& name, int r, int c) {
    return params.add(name, ad::xavier_init(r, c, rng));
  };
  w_ocr_ft_ = xv("embed.ocr.w_ft", cfg.fasttext_dim, d);
  w_ocr_app_ = xv("embed.ocr.w_app", cfg.d_app, d);
  w_ocr_phoc_ = xv("embed.ocr.w_phoc", cfg.phoc_dim, d);
  w_ocr_loc_ = xv("embed.ocr.w_loc", 4, d);
  ln1_g_ = params.add("embed.ocr.ln1.g", Mat::Ones(1, d));
  ln1_b_ = params.add("embed.ocr.ln1.b", Mat::Zero(1, d));
  ln2_g_ = params.add("embed.ocr.ln2.g", Mat::Ones(1, d));
  ln2_b_ = params.add("embed.ocr.ln2.b", Mat::Zero(1, d));
  w_obj_app_ = xv("embed.obj.w_app", cfg.d_app, d);
  w_obj_loc_ = xv("embed.obj.w_loc", 4, d);
  obj_ln1_g_ = params.add("embed.obj.ln1.g", Mat::Ones(1, d));
  obj_ln1_b_ = params.add("embed.obj.ln1.b", Mat::Zero(1, d));
  obj_ln2_g_ = params.add("embed.obj.ln2.g", Mat::Ones(1, d));
  obj_ln2_b_ = params.add("embed.obj.ln2.b", Mat::Zero(1, d));
  w_txt_ = xv("embed.txt.w", cfg.fasttext_dim, d);
  role_vecs_ = params.add("embed.role", ad::normal_init(5, d, 0.02f, rng));
  pos_question_ = params.add("embed.pos.question",
                             ad::normal_init(cfg.max_question_len, d, 0.02f, rng));
  if (cfg.text_expl_enabled)
    pos_expl_ = params.add("embed.pos.expl", ad::normal_init(cfg.max_expl_len, d, 0.02f, rng));
  pos_ans_ = params.add("embed.pos.ans", ad::normal_init(cfg.max_answer_len, d, 0.02f, rng));
}

int Embedder::role_cap(Role r) const {
  switch (r) {
    case Role::question: return cfg_.max_question_len;
    case Role::object: return cfg_.max_objects;
    case Role::ocr: return cfg_.max_ocr;
    case Role::expl_slot: return cfg_.max_expl_len;
    case Role::ans_slot: return cfg_.max_answer_len;
  }
  return 0;
}

Embedder::OcrFeatures Embedder::ocr_features(const std::vector<OcrToken>& tokens,
                                             double image_w, double image_h) const {
  std::vector<std::vector<float>> ft, app, ph, loc;
  for (const auto& t : tokens) {
    if (static_cast<int>(t.appearance.size()) != cfg_.d_app)
      throw std::invalid_argument("ocr token '" + t.text + "' appearance length " +
                                  std::to_string(t.appearance.size()) + " != d_app " +
                                  std::to_string(cfg_.d_app));
    ft.push_back(word_vector(t.text, cfg_.fasttext_dim, table_));
    app.push_back(t.appearance);
    ph.push_back(phoc_encode(t.text));
    const auto rl = relative_location(t.box, image_w, image_h);
    loc.push_back({rl[0], rl[1], rl[2], rl[3]});
  }
  OcrFeatures f;
  f.fasttext = rows_from(ft, cfg_.fasttext_dim);
  f.appearance = rows_from(app, cfg_.d_app);
  f.phoc = rows_from(ph, cfg_.phoc_dim);
  f.location = rows_from(loc, 4);
  return f;
}

Embedder::ObjectFeatures Embedder::object_features(const std::vector<ObjectRegion>& regions,
                                                   double image_w, double image_h) const {
  std::vector<std::vector<float>> app, loc;
  for (const auto& r : regions) {
    if (static_cast<int>(r.appearance.size()) != cfg_.d_app)
      throw std::invalid_argument("object appearance length " +
                                  std::to_string(r.appearance.size()) + " != d_app " +
                                  std::to_string(cfg_.d_app));
    app.push_back(r.appearance);
    const auto rl = relative_location(r.box, image_w, image_h);
    loc.push_back({rl[0], rl[1], rl[2], rl[3]});
  }
  ObjectFeatures f;
  f.appearance = rows_from(app, cfg_.d_app);
  f.location = rows_from(loc, 4);
  return f;
}

Eigen::MatrixXf Embedder::text_features(const std::vector<std::string>& tokens) const {
  std::vector<std::vector<float>> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(word_vector(t, cfg_.fasttext_dim, table_));
  return rows_from(rows, cfg_.fasttext_dim);
}

namespace {

mtx::ad::NodePtr role_row(const mtx::ad::NodePtr& roles, Role r) {
  return mtx::ad::row_slice(roles, static_cast<int>(r), 1);
}

}  // namespace

EmbeddedStream Embedder::embed_ocr(const OcrFeatures& f) const {
  using namespace ad;
  const int n = static_cast<int>(f.fasttext.rows());
  EmbeddedStream s;
  s.role = Role::ocr;
  s.count = n;
  if (n == 0) {
    s.rows = make_leaf(Mat::Zero(0, cfg_.d_model), false);
    return s;
  }
  auto g1 = layer_norm(add(matmul(make_leaf(f.fasttext, false), w_ocr_ft_),
                           matmul(make_leaf(f.appearance, false), w_ocr_app_)),
                       ln1_g_, ln1_b_);
  auto g2 = layer_norm(add(matmul(make_leaf(f.phoc, false), w_ocr_phoc_),
                           matmul(make_leaf(f.location, false), w_ocr_loc_)),
                       ln2_g_, ln2_b_);
  s.rows = add_rowvec(add(g1, g2), role_row(role_vecs_, Role::ocr));
  return s;
}

EmbeddedStream Embedder::embed_objects(const ObjectFeatures& f) const {
  using namespace ad;
  const int n = static_cast<int>(f.appearance.rows());
  EmbeddedStream s;
  s.role = Role::object;
  s.count = n;
  if (n == 0) {
    s.rows = make_leaf(Mat::Zero(0, cfg_.d_model), false);
    return s;
  }
  auto g1 = layer_norm(matmul(make_leaf(f.appearance, false), w_obj_app_), obj_ln1_g_,
                       obj_ln1_b_);
  auto g2 = layer_norm(matmul(make_leaf(f.location, false), w_obj_loc_), obj_ln2_g_,
                       obj_ln2_b_);
  s.rows = add_rowvec(add(g1, g2), role_row(role_vecs_, Role::object));
  return s;
}

EmbeddedStream Embedder::embed_text(const Eigen::MatrixXf& subword, Role role) const {
  using namespace ad;
  if (role == Role::object || role == Role::ocr)
    throw std::invalid_argument("embed_text: role must be a text stream");
  const int cap = role_cap(role);
  Eigen::MatrixXf feats = subword;
  if (static_cast<int>(feats.rows()) > cap) {
    log_warning(std::string("embed_text: ") + role_name(role) + " stream of " +
                std::to_string(feats.rows()) + " tokens truncated to " + std::to_string(cap));
    feats = feats.topRows(cap);
  }
  const int n = static_cast<int>(feats.rows());
  EmbeddedStream s;
  s.role = role;
  s.count = n;
  if (n == 0) {
    s.rows = make_leaf(Mat::Zero(0, cfg_.d_model), false);
    return s;
  }
  const NodePtr& pos = role == Role::question ? pos_question_
                       : role == Role::expl_slot ? pos_expl_
                                                 : pos_ans_;
  if (!pos) throw std::logic_error("embed_text: stream disabled by configuration");
  auto projected = matmul(make_leaf(feats, false), w_txt_);
  auto with_pos = add(projected, row_slice(pos, 0, n));
  s.rows = add_rowvec(with_pos, role_row(role_vecs_, role));
  return s;
}

EmbeddedStream Embedder::embed_decode(const ad::NodePtr& rows, Role role) const {
  using namespace ad;
  if (role != Role::expl_slot && role != Role::ans_slot)
    throw std::invalid_argument("embed_decode: role must be a decode stream");
  const NodePtr& pos = role == Role::expl_slot ? pos_expl_ : pos_ans_;
  if (!pos) throw std::logic_error("embed_decode: stream disabled by configuration");
  const int n = static_cast<int>(rows->rows());
  if (n > role_cap(role))
    throw std::invalid_argument("embed_decode: " + std::to_string(n) + " steps exceed the " +
                                role_name(role) + " cap of " + std::to_string(role_cap(role)));
  EmbeddedStream s;
  s.role = role;
  s.count = n;
  s.rows = add_rowvec(add(rows, row_slice(pos, 0, n)), role_row(role_vecs_, role));
  return s;
}

}  // namespace mtx
