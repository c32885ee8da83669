#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mtx/autodiff.hpp"
#include "mtx/config.hpp"
#include "mtx/types.hpp"

namespace mtx {

enum class NodeKind { object, ocr };

struct GraphNode {
  NodeKind kind;
  BoundingBox box;
};

// Containment structure over the visual nodes of one scene. Features flow
// separately (as an autodiff matrix, one row per node in node order).
struct SceneGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;  // (container src, contained dst), sorted

  int size() const { return static_cast<int>(nodes.size()); }
};

// Edge j -> i whenever box i lies inside box j (inclusive on all four
// coordinates, so identical boxes link both ways). Node order: objects in
// input order, then OCR tokens in input order.
SceneGraph build_containment_graph(const std::vector<ObjectRegion>& objects,
                                   const std::vector<OcrToken>& ocr);

// One "object:3 -> ocr:1" line per edge, indices local to each kind.
std::string dump_edges(const SceneGraph& g);

struct GatHeadParams {
  ad::NodePtr w;      // d_in x d_head
  ad::NodePtr a_src;  // 1 x d_head
  ad::NodePtr a_dst;  // 1 x d_head
};

struct GatParams {
  std::vector<std::vector<GatHeadParams>> layers;
};

// Hidden layers concatenate cfg.gat_heads heads of d_model/heads each; the
// last layer averages full-width heads. Registered under prefix.
GatParams make_gat_params(const ModelConfig& cfg, ad::ParamStore& store, Rng& rng,
                          const std::string& prefix = "gat");

// Attention over in-neighbors plus self, LeakyReLU(0.2) logits, ELU output.
ad::NodePtr gat_layer(const SceneGraph& g, const ad::NodePtr& feats,
                      const std::vector<GatHeadParams>& heads, bool average_heads);

// Stacked layers; empty params mean identity.
ad::NodePtr gat_forward(const SceneGraph& g, const ad::NodePtr& feats, const GatParams& params);

}  // namespace mtx
