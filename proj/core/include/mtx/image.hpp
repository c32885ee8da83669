#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtx/types.hpp"

namespace mtx {

// PNG in, channel-major float planes in [0,1] out. Grayscale files come back
// with 1 channel, everything else as RGB. Throws std::runtime_error on
// malformed files, naming the path.
ImageF read_png(const std::string& path);

// Values are clamped to [0,1] and quantized to 8 bits. 1 channel writes
// grayscale, 3 writes RGB.
void write_png(const ImageF& img, const std::string& path);

ImageF resize_bilinear(const ImageF& img, int out_h, int out_w);

// Nearest-neighbour resample; masks must not grow soft edges.
SegmentationMask resize_mask_nearest(const SegmentationMask& m, int out_h, int out_w);

// Little-endian float32 blobs, used for appearance-feature files.
std::vector<float> read_float_file(const std::string& path);
void write_float_file(const std::vector<float>& v, const std::string& path);

}  // namespace mtx
