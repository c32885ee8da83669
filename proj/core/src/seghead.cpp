#include "mtx/seghead.hpp"

#include <cmath>
#include <stdexcept>

namespace mtx {

ad::NodePtr pack_embedding_channels(const ad::NodePtr& mmt_output, int seg_input_size) {
  const long long need = static_cast<long long>(mmt_output->rows()) * mmt_output->cols();
  const long long room = 2LL * seg_input_size * seg_input_size;
  if (need > room)
    throw std::invalid_argument(
        "pack_embedding_channels: " + std::to_string(mmt_output->rows()) + "x" +
        std::to_string(mmt_output->cols()) + " = " + std::to_string(need) +
        " values exceed 2x" + std::to_string(seg_input_size) + "x" +
        std::to_string(seg_input_size) + " = " + std::to_string(room));
  return ad::reshape_rowmajor(mmt_output, 2, seg_input_size * seg_input_size);
}

ad::Mat image_to_planes(const ImageF& img) {
  ad::Mat planes(img.channels, static_cast<Eigen::Index>(img.height) * img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        planes(c, static_cast<Eigen::Index>(y) * img.width + x) = img.at(c, y, x);
  return planes;
}

namespace {

SegParams::Conv make_conv(ad::ParamStore& store, Rng& rng, const std::string& name, int cin,
                          int cout, int k, int stride, int pad) {
  SegParams::Conv c;
  c.w = store.add(name + ".w", ad::xavier_init(cout, cin * k * k, rng));
  c.b = store.add(name + ".b", ad::Mat::Zero(cout, 1));
  c.k = k;
  c.stride = stride;
  c.pad = pad;
  return c;
}

ad::NodePtr run_conv(const SegParams::Conv& c, const ad::NodePtr& x, int h, int w) {
  return ad::conv2d(x, c.w, c.b, h, w, c.k, c.stride, c.pad);
}

}  // namespace

SegParams make_seg_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                          const std::string& prefix) {
  if (cfg.seg_input_size % 16 != 0)
    throw std::invalid_argument("seg: input size must be divisible by 16");
  const int base = cfg.seg_base_channels;
  const int stage_ch[4] = {base, 2 * base, 4 * base, 4 * base};
  const int pyr = 2 * base;

  SegParams p;
  int cin = 5;
  for (int s = 0; s < 4; ++s) {
    p.stages.push_back(
        make_conv(store, rng, prefix + ".enc" + std::to_string(s), cin, stage_ch[s], 3, 2, 1));
    cin = stage_ch[s];
  }
  for (int s = 0; s < 4; ++s)
    p.laterals.push_back(
        make_conv(store, rng, prefix + ".lat" + std::to_string(s), stage_ch[s], pyr, 1, 1, 0));
  for (int s = 0; s < 3; ++s)
    p.smooths.push_back(
        make_conv(store, rng, prefix + ".smooth" + std::to_string(s), pyr, pyr, 3, 1, 1));
  p.head1 = make_conv(store, rng, prefix + ".head1", pyr, base, 3, 1, 1);
  p.head2 = make_conv(store, rng, prefix + ".head2", base, 1, 1, 1, 0);
  return p;
}

ad::NodePtr seg_forward(const ad::Mat& image_planes, const ad::NodePtr& packed,
                        const SegParams& params, int seg_input_size) {
  const int S = seg_input_size;
  if (image_planes.rows() != 3 || image_planes.cols() != static_cast<Eigen::Index>(S) * S)
    throw std::invalid_argument("seg_forward: image planes must be 3 x S*S");
  if (packed->rows() != 2 || packed->cols() != static_cast<Eigen::Index>(S) * S)
    throw std::invalid_argument("seg_forward: packed planes must be 2 x S*S");

  ad::NodePtr x = ad::concat_rows({ad::constant(image_planes), packed});

  // stride-2 encoder with kept pyramid taps
  std::vector<ad::NodePtr> taps;
  std::vector<int> sizes;
  int h = S;
  for (const auto& st : params.stages) {
    x = ad::relu(run_conv(st, x, h, h));
    h /= 2;
    taps.push_back(x);
    sizes.push_back(h);
  }

  // top-down: lateral + upsample, smoothed after each merge
  ad::NodePtr p = run_conv(params.laterals[3], taps[3], sizes[3], sizes[3]);
  for (int s = 2; s >= 0; --s) {
    ad::NodePtr lat = run_conv(params.laterals[static_cast<std::size_t>(s)],
                               taps[static_cast<std::size_t>(s)], sizes[static_cast<std::size_t>(s)],
                               sizes[static_cast<std::size_t>(s)]);
    p = ad::add(lat, ad::upsample2x(p, sizes[static_cast<std::size_t>(s + 1)],
                                    sizes[static_cast<std::size_t>(s + 1)]));
    p = ad::relu(run_conv(params.smooths[static_cast<std::size_t>(s)], p,
                          sizes[static_cast<std::size_t>(s)], sizes[static_cast<std::size_t>(s)]));
  }

  ad::NodePtr head = ad::relu(run_conv(params.head1, p, sizes[0], sizes[0]));
  ad::NodePtr logits = run_conv(params.head2, head, sizes[0], sizes[0]);
  return ad::upsample2x(logits, sizes[0], sizes[0]);  // 1 x S*S
}

SegmentationMask mask_from_logits(const ad::NodePtr& logits, int seg_input_size) {
  const int S = seg_input_size;
  if (logits->rows() != 1 || logits->cols() != static_cast<Eigen::Index>(S) * S)
    throw std::invalid_argument("mask_from_logits: logits must be 1 x S*S");
  SegmentationMask m = SegmentationMask::zeros(S, S, SegmentationMask::Provenance::predicted);
  for (Eigen::Index i = 0; i < logits->cols(); ++i)
    m.values[static_cast<std::size_t>(i)] = 1.f / (1.f + std::exp(-logits->val(0, i)));
  return m;
}

namespace {

double dice_from_sums(double inter, double psum, double gsum) {
  constexpr double kEps = 1.0;
  return 1.0 - (2.0 * inter + kEps) / (psum + gsum + kEps);
}

}  // namespace

double dice_loss(const SegmentationMask& pred, const SegmentationMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("dice_loss: shape mismatch");
  double inter = 0, psum = 0, gsum = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    inter += static_cast<double>(pred.values[i]) * gt.values[i];
    psum += pred.values[i];
    gsum += gt.values[i];
  }
  return dice_from_sums(inter, psum, gsum);
}

ad::NodePtr dice_loss_node(const ad::NodePtr& probs, const ad::Mat& gt) {
  if (probs->rows() != gt.rows() || probs->cols() != gt.cols())
    throw std::invalid_argument("dice_loss_node: shape mismatch");
  double inter = 0, psum = 0, gsum = 0;
  for (Eigen::Index i = 0; i < probs->cols(); ++i) {
    inter += static_cast<double>(probs->val(0, i)) * gt(0, i);
    psum += probs->val(0, i);
    gsum += gt(0, i);
  }
  const double loss = dice_from_sums(inter, psum, gsum);

  auto out = std::make_shared<ad::Node>();
  out->val = ad::Mat::Constant(1, 1, static_cast<float>(loss));
  out->needs_grad = probs->needs_grad;
  out->parents = {probs};
  if (out->needs_grad) {
    const double a = 2.0 * inter + 1.0;  // numerator with smoothing
    const double b = psum + gsum + 1.0;  // denominator with smoothing
    ad::Mat gt_copy = gt;
    out->backprop = [probs, a, b, gt_copy](ad::Node& n) {
      // d/dp_i [1 - a/b] = (a - 2*g_i*b) / b^2
      const double go = static_cast<double>(n.grad(0, 0));
      ad::Mat& g = probs->g();
      for (Eigen::Index i = 0; i < g.cols(); ++i)
        g(0, i) += static_cast<float>(go * (a - 2.0 * gt_copy(0, i) * b) / (b * b));
    };
  }
  return out;
}

BinaryMask binarize(const SegmentationMask& mask) {
  BinaryMask out = BinaryMask::zeros(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.values.size(); ++i)
    out.values[i] = mask.values[i] >= mask.threshold ? 1 : 0;
  return out;
}

}  // namespace mtx
