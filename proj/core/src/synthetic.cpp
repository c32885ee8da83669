#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mtx/dataset.hpp"
#include "mtx/rng.hpp"

namespace mtx {

namespace {

// 3x5 glyph bitmaps, row-major, one char per pixel. All 26 are distinct so
// tokens stay visually decodable at 1px per cell.
constexpr std::array<const char*, 26> kGlyphs = {
    "010101111101101",  // a
    "110101110101110",  // b
    "011100100100011",  // c
    "110101101101110",  // d
    "111100110100111",  // e
    "111100110100100",  // f
    "011100101101011",  // g
    "101101111101101",  // h
    "111010010010111",  // i
    "001001001101010",  // j
    "101110100110101",  // k
    "100100100100111",  // l
    "101111101101101",  // m
    "110101101101101",  // n
    "010101101101010",  // o
    "110101110100100",  // p
    "010101101110011",  // q
    "110101110110101",  // r
    "011100010001110",  // s
    "111010010010010",  // t
    "101101101101111",  // u
    "101101101101010",  // v
    "101101101111101",  // w
    "101101010101101",  // x
    "101101010010010",  // y
    "111001010100111",  // z
};

struct Rgb {
  int r, g, b;
};

constexpr std::array<const char*, 6> kColorNames = {"red", "green", "blue",
                                                    "yellow", "white", "purple"};
constexpr std::array<Rgb, 6> kColorValues = {{{220, 60, 60},
                                              {60, 190, 80},
                                              {70, 90, 220},
                                              {230, 210, 60},
                                              {235, 235, 235},
                                              {160, 70, 200}}};
constexpr std::array<const char*, 3> kShapeNames = {"card", "sign", "label"};
constexpr Rgb kBackground = {28, 30, 34};
constexpr Rgb kInk = {15, 15, 15};

void put_pixel(ImageF& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  img.at(0, y, x) = static_cast<float>(c.r) / 255.f;
  img.at(1, y, x) = static_cast<float>(c.g) / 255.f;
  img.at(2, y, x) = static_cast<float>(c.b) / 255.f;
}

void fill_rect(ImageF& img, int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) put_pixel(img, x, y, c);
}

Rgb scale(Rgb c, double f) {
  return {static_cast<int>(std::lround(c.r * f)), static_cast<int>(std::lround(c.g * f)),
          static_cast<int>(std::lround(c.b * f))};
}

// card: solid; sign: solid with a darker 1px border; label: solid with
// darker stripes every third row.
void draw_object(ImageF& img, int x0, int y0, int x1, int y1, int color, int shape) {
  const Rgb c = kColorValues[static_cast<std::size_t>(color)];
  fill_rect(img, x0, y0, x1, y1, c);
  if (shape == 1) {
    const Rgb edge = scale(c, 0.45);
    for (int x = x0; x < x1; ++x) {
      put_pixel(img, x, y0, edge);
      put_pixel(img, x, y1 - 1, edge);
    }
    for (int y = y0; y < y1; ++y) {
      put_pixel(img, x0, y, edge);
      put_pixel(img, x1 - 1, y, edge);
    }
  } else if (shape == 2) {
    const Rgb stripe = scale(c, 0.6);
    for (int y = y0; y < y1; ++y)
      if ((y - y0) % 3 == 2)
        for (int x = x0; x < x1; ++x) put_pixel(img, x, y, stripe);
  }
}

void draw_token(ImageF& img, const std::string& text, int x0, int y0) {
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char* bits = kGlyphs[static_cast<std::size_t>(text[k] - 'a')];
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 3; ++c)
        if (bits[r * 3 + c] == '1')
          put_pixel(img, x0 + static_cast<int>(k) * 4 + c, y0 + r, kInk);
  }
}

int token_width(const std::string& t) { return 4 * static_cast<int>(t.size()) - 1; }

std::string random_token(Rng& rng) {
  const int len = rng.next_int(2, 4);
  std::string t;
  for (int i = 0; i < len; ++i) t += static_cast<char>('a' + rng.next_int(0, 25));
  return t;
}

bool intersects(int ax0, int ay0, int ax1, int ay1, int bx0, int by0, int bx1, int by1) {
  return ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1;
}

Sample make_sample(std::uint64_t seed, int index, int image_size, int d_app) {
  Rng rng(hash_combine(hash_combine(fnv1a("synthetic"), seed), static_cast<std::uint64_t>(index)));
  const int S = image_size;

  Sample s;
  s.image_id = "synth-img-" + std::to_string(index);
  s.question_id = "synth-" + std::to_string(index);
  s.image = ImageF::zeros(S, S, 3);
  fill_rect(s.image, 0, 0, S, S, kBackground);

  const int n_objects = rng.next_int(2, 6);
  const int n_tokens = rng.next_int(1, 3);
  const int answer_color = index % 6;
  const int answer_shape = rng.next_int(0, 2);

  // distinct (color, shape) identities, the asked-about one first
  std::vector<std::pair<int, int>> combos;
  for (int c = 0; c < 6; ++c)
    for (int sh = 0; sh < 3; ++sh)
      if (!(c == answer_color && sh == answer_shape)) combos.emplace_back(c, sh);
  rng.shuffle(combos);
  combos.insert(combos.begin(), {answer_color, answer_shape});
  combos.resize(static_cast<std::size_t>(n_objects));

  const std::string answer = random_token(rng);
  const int tok_w = token_width(answer);

  // asked-about object, large enough to carry the printed token
  const int pad_x = rng.next_int(2, 5), pad_y = rng.next_int(2, 5);
  const int w0 = std::min(tok_w + 2 * pad_x, S - 2);
  const int h0 = std::min(5 + 2 * pad_y, S - 2);
  const int ox0 = rng.next_int(1, S - 1 - w0), oy0 = rng.next_int(1, S - 1 - h0);
  const int ox1 = ox0 + w0, oy1 = oy0 + h0;

  struct Placed {
    int x0, y0, x1, y1;
  };
  std::vector<Placed> obj_boxes;
  std::vector<std::pair<int, int>> obj_ids;

  // clutter objects first so the asked-about one stays on top
  for (int j = 1; j < n_objects; ++j) {
    const int w = rng.next_int(8, std::max(9, std::min(20, S / 2)));
    const int h = rng.next_int(6, std::max(7, std::min(16, S / 2)));
    int x0 = 1, y0 = 1;
    for (int attempt = 0; attempt < 20; ++attempt) {
      x0 = rng.next_int(1, S - 1 - w);
      y0 = rng.next_int(1, S - 1 - h);
      if (!intersects(x0, y0, x0 + w, y0 + h, ox0, oy0, ox1, oy1)) break;
    }
    draw_object(s.image, x0, y0, x0 + w, y0 + h, combos[static_cast<std::size_t>(j)].first,
                combos[static_cast<std::size_t>(j)].second);
    obj_boxes.push_back({x0, y0, x0 + w, y0 + h});
    obj_ids.push_back(combos[static_cast<std::size_t>(j)]);
  }
  draw_object(s.image, ox0, oy0, ox1, oy1, answer_color, answer_shape);
  obj_boxes.push_back({ox0, oy0, ox1, oy1});
  obj_ids.push_back({answer_color, answer_shape});

  // printed tokens: the answer on its object, distractors elsewhere
  struct Token {
    std::string text;
    int x0, y0, x1, y1;
  };
  std::vector<Token> tokens;
  const int tx = ox0 + (w0 - tok_w) / 2, ty = oy0 + (h0 - 5) / 2;
  tokens.push_back({answer, tx, ty, tx + tok_w, ty + 5});

  for (int j = 1; j < n_tokens; ++j) {
    std::string text = random_token(rng);
    for (int attempt = 0; attempt < 10; ++attempt) {
      bool dup = false;
      for (const auto& t : tokens) dup = dup || t.text == text;
      if (!dup) break;
      text = random_token(rng);
    }
    const int w = token_width(text);
    bool placed = false;
    int x0 = 0, y0 = 0;
    for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
      x0 = rng.next_int(1, std::max(1, S - 1 - w));
      y0 = rng.next_int(1, S - 1 - 5);
      if (x0 + w > S - 1) continue;
      bool clash = intersects(x0, y0, x0 + w, y0 + 5, ox0, oy0, ox1, oy1);
      for (const auto& t : tokens)
        clash = clash || intersects(x0, y0, x0 + w, y0 + 5, t.x0, t.y0, t.x1, t.y1);
      placed = !clash;
    }
    if (placed) tokens.push_back({text, x0, y0, x0 + w, y0 + 5});
  }
  for (const auto& t : tokens) draw_token(s.image, t.text, t.x0, t.y0);

  // index shortcuts would trivialize grounding; shuffle both streams
  std::vector<std::size_t> obj_order(obj_boxes.size());
  for (std::size_t i = 0; i < obj_order.size(); ++i) obj_order[i] = i;
  rng.shuffle(obj_order);
  for (std::size_t i : obj_order) {
    ObjectRegion r;
    r.box = {static_cast<double>(obj_boxes[i].x0), static_cast<double>(obj_boxes[i].y0),
             static_cast<double>(obj_boxes[i].x1), static_cast<double>(obj_boxes[i].y1)};
    r.score = 0.7 + 0.3 * rng.next_real();
    r.appearance = derive_appearance(s.image, r.box, d_app);
    s.objects.push_back(std::move(r));
  }
  std::vector<std::size_t> tok_order(tokens.size());
  for (std::size_t i = 0; i < tok_order.size(); ++i) tok_order[i] = i;
  rng.shuffle(tok_order);
  for (std::size_t i : tok_order) {
    OcrToken t;
    t.text = tokens[i].text;
    t.box = {static_cast<double>(tokens[i].x0), static_cast<double>(tokens[i].y0),
             static_cast<double>(tokens[i].x1), static_cast<double>(tokens[i].y1)};
    t.confidence = 0.8 + 0.2 * rng.next_real();
    t.appearance = derive_appearance(s.image, t.box, d_app);
    s.ocr.push_back(std::move(t));
  }

  const std::string color_name = kColorNames[static_cast<std::size_t>(answer_color)];
  const std::string shape_name = kShapeNames[static_cast<std::size_t>(answer_shape)];
  s.question = "what is written on the " + color_name + " " + shape_name + "?";
  s.answers.assign(kAnswersPerQuestion, answer);
  s.text_explanations = {
      "the " + color_name + " " + shape_name + " has the word " + answer + " on it",
      "it says " + answer + " on the " + color_name + " " + shape_name,
      "the text " + answer + " appears on the " + color_name + " " + shape_name,
  };

  s.visual_explanation =
      SegmentationMask::zeros(S, S, SegmentationMask::Provenance::ground_truth);
  for (int y = ty; y < ty + 5; ++y)
    for (int x = tx; x < tx + tok_w; ++x) s.visual_explanation.at(y, x) = 1.f;
  return s;
}

}  // namespace

std::vector<Sample> generate_synthetic(int n, std::uint64_t seed, int image_size, int d_app) {
  if (n < 1) throw std::invalid_argument("generate_synthetic: n must be >= 1");
  if (image_size < 32) throw std::invalid_argument("generate_synthetic: image_size must be >= 32");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(make_sample(seed, i, image_size, d_app));
  return out;
}

}  // namespace mtx
