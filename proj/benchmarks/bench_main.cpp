#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/features.hpp"
#include "mtx/graph.hpp"
#include "mtx/metrics.hpp"
#include "mtx/mmt.hpp"
#include "mtx/rng.hpp"
#include "mtx/seghead.hpp"
#include "mtx/types.hpp"

namespace {

using namespace mtx;

static void BM_MatmulBackward(benchmark::State& state) {
  using namespace mtx::ad;
  const int n = static_cast<int>(state.range(0));
  mtx::Rng rng(1);
  auto a = make_leaf(xavier_init(n, n, rng), true);
  auto b = make_leaf(xavier_init(n, n, rng), true);
  for (auto _ : state) {
    a->zero_grad();
    b->zero_grad();
    auto y = sum_all(matmul(a, b));
    backward(y);
    benchmark::DoNotOptimize(a->g().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(192);

static void BM_TransformerForward(benchmark::State& state) {
  ModelConfig cfg = ModelConfig::synthetic_preset();
  cfg.n_layers = static_cast<int>(state.range(0));
  const SequenceLayout layout = SequenceLayout::from_config(cfg);
  Rng rng(2);
  ad::ParamStore store;
  const TransformerParams params = make_transformer_params(cfg, store, rng);
  ad::Mat rows(layout.total, cfg.d_model);
  for (int r = 0; r < rows.rows(); ++r)
    for (int c = 0; c < rows.cols(); ++c) rows(r, c) = static_cast<float>(rng.next_real(-1, 1));
  auto slice = [&](int r0, int n) { return ad::constant(ad::Mat(rows.middleRows(r0, n))); };
  for (auto _ : state) {
    MultimodalSequence seq = assemble_sequence(
        layout, slice(layout.q0, layout.nq), slice(layout.obj0, layout.nobj),
        slice(layout.ocr0, layout.nocr), slice(layout.expl0, layout.nexpl),
        slice(layout.ans0, layout.nans), StreamMode::decoding, StreamMode::context);
    benchmark::DoNotOptimize(transformer_forward(seq, params)->val.data());
  }
}
BENCHMARK(BM_TransformerForward)->Arg(2)->Arg(4);

static void BM_SegForward(benchmark::State& state) {
  ModelConfig cfg = ModelConfig::synthetic_preset();
  Rng rng(3);
  ad::ParamStore store;
  const SegParams params = make_seg_params(cfg, store, rng);
  const int s = cfg.seg_input_size;
  ImageF img{s, s, 3, std::vector<float>(static_cast<std::size_t>(3 * s * s), 0.25f)};
  const ad::Mat planes = image_to_planes(img);
  ad::Mat emb(SequenceLayout::from_config(cfg).total, cfg.d_model);
  emb.setConstant(0.1f);
  for (auto _ : state) {
    ad::NodePtr packed = pack_embedding_channels(ad::constant(emb), s);
    benchmark::DoNotOptimize(seg_forward(planes, packed, params, s)->val.data());
  }
}
BENCHMARK(BM_SegForward);

static void BM_PhocEncode(benchmark::State& state) {
  const std::vector<std::string> words = {"stop", "grandstand", "a", "telephone",
                                          "42",   "mixed42case"};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(phoc_encode(words[i++ % words.size()]));
  }
}
BENCHMARK(BM_PhocEncode);

static void BM_ContainmentGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(4);
  std::vector<ObjectRegion> objects;
  std::vector<OcrToken> ocr;
  for (int i = 0; i < n; ++i) {
    const double x0 = rng.next_real(0, 90), y0 = rng.next_real(0, 90);
    BoundingBox b{x0, y0, x0 + rng.next_real(1, 40), y0 + rng.next_real(1, 40)};
    if (i % 2)
      objects.push_back({b, {}, 1.0});
    else
      ocr.push_back({"t", b, {}, 1.0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_containment_graph(objects, ocr).edges.size());
  }
}
BENCHMARK(BM_ContainmentGraph)->Arg(50)->Arg(136);

static void BM_SentenceScoring(benchmark::State& state) {
  Rng rng(5);
  const std::vector<std::string> vocab = {"the",  "sign", "says", "stop", "on",
                                          "red",  "a",    "pole", "near", "street"};
  auto sentence = [&](int len) {
    Tokens t;
    for (int i = 0; i < len; ++i) t.push_back(vocab[rng.next_below(vocab.size())]);
    return t;
  };
  std::vector<Tokens> cands;
  std::vector<std::vector<Tokens>> refsets;
  for (int i = 0; i < 100; ++i) {
    cands.push_back(sentence(8));
    refsets.push_back({sentence(8), sentence(9), sentence(7)});
  }
  for (auto _ : state) {
    double acc = 0.0;
    CiderScorer scorer;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      acc += bleu4(cands[i], refsets[i]);
      scorer.add(cands[i], refsets[i]);
    }
    for (double v : scorer.compute()) acc += v;
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_SentenceScoring);

}  // namespace

BENCHMARK_MAIN();
