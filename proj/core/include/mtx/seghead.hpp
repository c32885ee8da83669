#pragma once

#include <string>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/config.hpp"
#include "mtx/types.hpp"

namespace mtx {

// Flattens the transformer output slot-major (slot, then feature), zero-pads
// to 2*S*S and reflows into 2 channel planes of S*S pixels each (row-major
// pixels, matching the conv layout). Rejects sizes that do not fit.
ad::NodePtr pack_embedding_channels(const ad::NodePtr& mmt_output, int seg_input_size);

// Converts an image to the conv input layout: channels x (H*W) pixels.
ad::Mat image_to_planes(const ImageF& img);

struct SegParams {
  struct Conv {
    ad::NodePtr w, b;
    int k = 0, stride = 0, pad = 0;
  };
  std::vector<Conv> stages;    // stride-2 encoder
  std::vector<Conv> laterals;  // 1x1 to the shared pyramid width
  std::vector<Conv> smooths;   // 3x3 after each top-down merge
  Conv head1, head2;           // 3x3 + 1x1 logit conv
};

SegParams make_seg_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                          const std::string& prefix = "seg");

// 5-channel input (3 image + 2 packed embedding planes) -> S*S logits
// (1 x S*S node). Pyramid encoder, top-down decoder, logit head.
ad::NodePtr seg_forward(const ad::Mat& image_planes, const ad::NodePtr& packed,
                        const SegParams& params, int seg_input_size);

// Continuous mask from logits (sigmoid), marked as predicted.
SegmentationMask mask_from_logits(const ad::NodePtr& logits, int seg_input_size);

// Soft dice: 1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps), eps = 1.
double dice_loss(const SegmentationMask& pred, const SegmentationMask& gt);

// Same value as dice_loss, differentiable w.r.t. the probability node.
// probs and gt are 1 x (S*S); gt binary.
ad::NodePtr dice_loss_node(const ad::NodePtr& probs, const ad::Mat& gt);

// 1 where value >= threshold.
BinaryMask binarize(const SegmentationMask& mask);

}  // namespace mtx
