#include "mtx/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mtx {

namespace {

bool inside(const BoundingBox& inner, const BoundingBox& outer) {
  return inner.x_min >= outer.x_min && inner.y_min >= outer.y_min &&
         inner.x_max <= outer.x_max && inner.y_max <= outer.y_max;
}

}  // namespace

SceneGraph build_containment_graph(const std::vector<ObjectRegion>& objects,
                                   const std::vector<OcrToken>& ocr) {
  SceneGraph g;
  for (const auto& o : objects) g.nodes.push_back({NodeKind::object, o.box});
  for (const auto& t : ocr) g.nodes.push_back({NodeKind::ocr, t.box});
  if (g.nodes.empty())
    throw std::invalid_argument("build_containment_graph: at least one node required");

  // scan candidates largest-first: a container is never smaller than what
  // it holds, so the inner loop can stop early
  const int n = g.size();
  std::vector<int> by_area(static_cast<std::size_t>(n));
  std::iota(by_area.begin(), by_area.end(), 0);
  std::stable_sort(by_area.begin(), by_area.end(), [&](int a, int b) {
    return g.nodes[static_cast<std::size_t>(a)].box.area() >
           g.nodes[static_cast<std::size_t>(b)].box.area();
  });
  for (int i = 0; i < n; ++i) {
    const auto& inner = g.nodes[static_cast<std::size_t>(i)].box;
    for (int j : by_area) {
      const auto& outer = g.nodes[static_cast<std::size_t>(j)].box;
      if (outer.area() < inner.area()) break;
      if (j != i && inside(inner, outer)) g.edges.emplace_back(j, i);
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

std::string dump_edges(const SceneGraph& g) {
  int n_objects = 0;
  for (const auto& node : g.nodes)
    if (node.kind == NodeKind::object) ++n_objects;
  auto label = [&](int i) {
    const bool obj = g.nodes[static_cast<std::size_t>(i)].kind == NodeKind::object;
    return std::string(obj ? "object:" : "ocr:") + std::to_string(obj ? i : i - n_objects);
  };
  std::ostringstream os;
  for (const auto& [src, dst] : g.edges) os << label(src) << " -> " << label(dst) << "\n";
  return os.str();
}

GatParams make_gat_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                          const std::string& prefix) {
  if (cfg.d_model % cfg.gat_heads != 0)
    throw std::invalid_argument("gat: d_model must divide evenly across heads");
  GatParams p;
  for (int l = 0; l < cfg.gat_layers; ++l) {
    const bool last = l == cfg.gat_layers - 1;
    const int d_head = last ? cfg.d_model : cfg.d_model / cfg.gat_heads;
    std::vector<GatHeadParams> heads;
    for (int h = 0; h < cfg.gat_heads; ++h) {
      const std::string base =
          prefix + ".l" + std::to_string(l) + ".h" + std::to_string(h) + ".";
      GatHeadParams hp;
      hp.w = store.add(base + "w", ad::xavier_init(cfg.d_model, d_head, rng));
      hp.a_src = store.add(base + "a_src", ad::xavier_init(1, d_head, rng));
      hp.a_dst = store.add(base + "a_dst", ad::xavier_init(1, d_head, rng));
      heads.push_back(std::move(hp));
    }
    p.layers.push_back(std::move(heads));
  }
  return p;
}

ad::NodePtr gat_layer(const SceneGraph& g, const ad::NodePtr& feats,
                      const std::vector<GatHeadParams>& heads, bool average_heads) {
  const int n = g.size();
  if (feats->rows() != n)
    throw std::invalid_argument("gat_layer: feature rows must match node count");

  // keep(i, j) = 1 when j may feed i: containment edge j->i, or self
  ad::Mat keep = ad::Mat::Identity(n, n);
  for (const auto& [src, dst] : g.edges) keep(dst, src) = 1.f;

  std::vector<ad::NodePtr> outs;
  for (const auto& hp : heads) {
    ad::NodePtr wh = ad::matmul(feats, hp.w);                     // n x d_head
    ad::NodePtr s_src = ad::matmul_nt(wh, hp.a_src);              // n x 1
    ad::NodePtr s_dst = ad::matmul_nt(hp.a_dst, wh);              // 1 x n
    ad::NodePtr logits = ad::add_colvec(
        ad::add_rowvec(ad::constant(ad::Mat::Zero(n, n)), s_dst), s_src);
    logits = ad::leaky_relu(logits, 0.2f);
    ad::NodePtr alpha = ad::softmax_masked(logits, keep);
    outs.push_back(ad::matmul(alpha, wh));
  }

  ad::NodePtr combined;
  if (average_heads) {
    combined = outs[0];
    for (std::size_t i = 1; i < outs.size(); ++i) combined = ad::add(combined, outs[i]);
    combined = ad::scale(combined, 1.f / static_cast<float>(outs.size()));
  } else {
    combined = ad::concat_cols(outs);
  }
  return ad::elu(combined);
}

ad::NodePtr gat_forward(const SceneGraph& g, const ad::NodePtr& feats, const GatParams& params) {
  ad::NodePtr h = feats;
  for (std::size_t l = 0; l < params.layers.size(); ++l)
    h = gat_layer(g, h, params.layers[l], l + 1 == params.layers.size());
  return h;
}

}  // namespace mtx
