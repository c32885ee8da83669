#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtx {

// Absolute pixel coordinates, image frame, x right / y down.
struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max))
      throw std::invalid_argument("BoundingBox: degenerate box");
    if (x_min < 0 || y_min < 0 || !std::isfinite(x_max) || !std::isfinite(y_max))
      throw std::invalid_argument("BoundingBox: coordinates must be finite and >= 0");
  }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
};

struct OcrToken {
  std::string text;
  BoundingBox box;
  std::vector<float> appearance;  // length d_app
  double confidence = 1.0;
};

struct ObjectRegion {
  BoundingBox box;
  std::vector<float> appearance;  // length d_app
  double score = 1.0;
};

// Planar float image, values in [0,1], channel-major (c*h*w + y*w + x).
struct ImageF {
  int height = 0, width = 0, channels = 0;
  std::vector<float> data;

  float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  static ImageF zeros(int h, int w, int c) {
    ImageF im;
    im.height = h;
    im.width = w;
    im.channels = c;
    im.data.assign(static_cast<std::size_t>(h) * w * c, 0.f);
    return im;
  }
};

// Continuous relevance map plus binarization metadata. Ground-truth masks
// hold only 0/1 values.
struct SegmentationMask {
  enum class Provenance { predicted, ground_truth };
  int height = 0, width = 0;
  std::vector<float> values;  // row-major, each in [0,1]
  float threshold = 0.5f;
  Provenance provenance = Provenance::ground_truth;

  float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  static SegmentationMask zeros(int h, int w, Provenance p = Provenance::ground_truth) {
    SegmentationMask m;
    m.height = h;
    m.width = w;
    m.values.assign(static_cast<std::size_t>(h) * w, 0.f);
    m.provenance = p;
    return m;
  }
};

// Binary H×W mask as produced by binarization / consumed by IoU.
struct BinaryMask {
  int height = 0, width = 0;
  std::vector<std::uint8_t> values;  // 0 or 1, row-major

  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  static BinaryMask zeros(int h, int w) {
    BinaryMask m;
    m.height = h;
    m.width = w;
    m.values.assign(static_cast<std::size_t>(h) * w, 0);
    return m;
  }
};

constexpr int kAnswersPerQuestion = 10;

// One question+image instance.
struct Sample {
  std::string image_id;
  std::string question_id;  // unique per question; image_id when absent
  ImageF image;             // H×W×3, values in [0,1]
  std::string question;
  std::vector<std::string> answers;            // exactly 10 after load
  std::vector<OcrToken> ocr;                   // <= max_ocr used
  std::vector<ObjectRegion> objects;           // <= max_objects used
  std::vector<std::string> text_explanations;  // 1..5
  SegmentationMask visual_explanation;         // binary, H×W
};

}  // namespace mtx
