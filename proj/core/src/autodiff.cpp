#include "mtx/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mtx::ad {

namespace {

void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(std::string("autodiff: ") + msg);
}

NodePtr make_op(Mat val, std::vector<NodePtr> parents, std::function<void(Node&)> bp) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->needs_grad) n->needs_grad = true;
  if (n->needs_grad) n->backprop = std::move(bp);
  return n;
}

}  // namespace

NodePtr make_leaf(Mat v, bool needs_grad) {
  auto n = std::make_shared<Node>();
  n->val = std::move(v);
  n->needs_grad = needs_grad;
  return n;
}

NodePtr scalar_const(float v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return make_leaf(std::move(m), false);
}

void backward(const NodePtr& root) {
  check(root->rows() == 1 && root->cols() == 1, "backward: root must be 1x1");
  if (!root->needs_grad) return;

  // post-order DFS, skipping subgraphs that need no gradient
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->needs_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  if (root->grad.size() == 0) root->g();
  root->grad(0, 0) += 1.f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() != 0) n->backprop(*n);
  }
}

// ---- arithmetic ----

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check(a->rows() == b->rows() && a->cols() == b->cols(), "add: shape mismatch");
  return make_op(a->val + b->val, {a, b}, [a, b](Node& n) {
    if (a->needs_grad) a->g() += n.grad;
    if (b->needs_grad) b->g() += n.grad;
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check(a->rows() == b->rows() && a->cols() == b->cols(), "sub: shape mismatch");
  return make_op(a->val - b->val, {a, b}, [a, b](Node& n) {
    if (a->needs_grad) a->g() += n.grad;
    if (b->needs_grad) b->g() -= n.grad;
  });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  check(a->rows() == b->rows() && a->cols() == b->cols(), "mul: shape mismatch");
  return make_op(a->val.cwiseProduct(b->val), {a, b}, [a, b](Node& n) {
    if (a->needs_grad) a->g() += n.grad.cwiseProduct(b->val);
    if (b->needs_grad) b->g() += n.grad.cwiseProduct(a->val);
  });
}

NodePtr scale(const NodePtr& a, float c) {
  return make_op(a->val * c, {a}, [a, c](Node& n) {
    if (a->needs_grad) a->g() += n.grad * c;
  });
}

NodePtr add_rowvec(const NodePtr& x, const NodePtr& r) {
  check(r->rows() == 1 && r->cols() == x->cols(), "add_rowvec: r must be 1 x cols(x)");
  Mat out = x->val;
  out.rowwise() += r->val.row(0);
  return make_op(std::move(out), {x, r}, [x, r](Node& n) {
    if (x->needs_grad) x->g() += n.grad;
    if (r->needs_grad) r->g() += n.grad.colwise().sum();
  });
}

NodePtr add_colvec(const NodePtr& x, const NodePtr& c) {
  check(c->cols() == 1 && c->rows() == x->rows(), "add_colvec: c must be rows(x) x 1");
  Mat out = x->val;
  out.colwise() += c->val.col(0);
  return make_op(std::move(out), {x, c}, [x, c](Node& n) {
    if (x->needs_grad) x->g() += n.grad;
    if (c->needs_grad) c->g() += n.grad.rowwise().sum();
  });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  check(a->cols() == b->rows(), "matmul: inner dims");
  return make_op(a->val * b->val, {a, b}, [a, b](Node& n) {
    if (a->needs_grad) a->g().noalias() += n.grad * b->val.transpose();
    if (b->needs_grad) b->g().noalias() += a->val.transpose() * n.grad;
  });
}

NodePtr matmul_nt(const NodePtr& a, const NodePtr& b) {
  check(a->cols() == b->cols(), "matmul_nt: inner dims");
  return make_op(a->val * b->val.transpose(), {a, b}, [a, b](Node& n) {
    if (a->needs_grad) a->g().noalias() += n.grad * b->val;
    if (b->needs_grad) b->g().noalias() += n.grad.transpose() * a->val;
  });
}

NodePtr matmul_tn(const NodePtr& a, const NodePtr& b) {
  check(a->rows() == b->rows(), "matmul_tn: inner dims");
  return make_op(a->val.transpose() * b->val, {a, b}, [a, b](Node& n) {
    if (a->needs_grad) a->g().noalias() += b->val * n.grad.transpose();
    if (b->needs_grad) b->g().noalias() += a->val * n.grad;
  });
}

// ---- shape ----

NodePtr row_slice(const NodePtr& x, int r0, int nr) {
  check(r0 >= 0 && nr >= 0 && r0 + nr <= x->rows(), "row_slice: out of range");
  return make_op(x->val.middleRows(r0, nr), {x}, [x, r0, nr](Node& n) {
    if (x->needs_grad) x->g().middleRows(r0, nr) += n.grad;
  });
}

NodePtr col_slice(const NodePtr& x, int c0, int nc) {
  check(c0 >= 0 && nc >= 0 && c0 + nc <= x->cols(), "col_slice: out of range");
  return make_op(x->val.middleCols(c0, nc), {x}, [x, c0, nc](Node& n) {
    if (x->needs_grad) x->g().middleCols(c0, nc) += n.grad;
  });
}

NodePtr reshape_rowmajor(const NodePtr& x, int rows, int cols) {
  const auto in_r = x->rows(), in_c = x->cols();
  check(static_cast<Eigen::Index>(rows) * cols >= in_r * in_c,
        "reshape_rowmajor: target smaller than input");
  Mat out = Mat::Zero(rows, cols);
  for (Eigen::Index r = 0; r < in_r; ++r)
    for (Eigen::Index c = 0; c < in_c; ++c) {
      const Eigen::Index flat = r * in_c + c;
      out(flat / cols, flat % cols) = x->val(r, c);
    }
  return make_op(std::move(out), {x}, [x, cols](Node& n) {
    if (!x->needs_grad) return;
    Mat& gx = x->g();
    const Eigen::Index in_c = x->cols();
    for (Eigen::Index r = 0; r < x->rows(); ++r)
      for (Eigen::Index c = 0; c < in_c; ++c) {
        const Eigen::Index flat = r * in_c + c;
        gx(r, c) += n.grad(flat / cols, flat % cols);
      }
  });
}

NodePtr concat_rows(const std::vector<NodePtr>& xs) {
  check(!xs.empty(), "concat_rows: empty");
  Eigen::Index cols = xs[0]->cols(), rows = 0;
  for (const auto& x : xs) {
    check(x->cols() == cols, "concat_rows: col mismatch");
    rows += x->rows();
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& x : xs) {
    out.middleRows(r, x->rows()) = x->val;
    r += x->rows();
  }
  return make_op(std::move(out), xs, [xs](Node& n) {
    Eigen::Index r = 0;
    for (const auto& x : xs) {
      if (x->needs_grad) x->g() += n.grad.middleRows(r, x->rows());
      r += x->rows();
    }
  });
}

NodePtr concat_cols(const std::vector<NodePtr>& xs) {
  check(!xs.empty(), "concat_cols: empty");
  Eigen::Index rows = xs[0]->rows(), cols = 0;
  for (const auto& x : xs) {
    check(x->rows() == rows, "concat_cols: row mismatch");
    cols += x->cols();
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& x : xs) {
    out.middleCols(c, x->cols()) = x->val;
    c += x->cols();
  }
  return make_op(std::move(out), xs, [xs](Node& n) {
    Eigen::Index c = 0;
    for (const auto& x : xs) {
      if (x->needs_grad) x->g() += n.grad.middleCols(c, x->cols());
      c += x->cols();
    }
  });
}

NodePtr gather_rows(const NodePtr& table, std::vector<int> idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), table->cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    check(idx[i] >= 0 && idx[i] < table->rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = table->val.row(idx[i]);
  }
  return make_op(std::move(out), {table}, [table, idx = std::move(idx)](Node& n) {
    if (!table->needs_grad) return;
    Mat& g = table->g();
    for (std::size_t i = 0; i < idx.size(); ++i)
      g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
  });
}

// ---- nonlinearities ----

NodePtr relu(const NodePtr& x) {
  return make_op(x->val.cwiseMax(0.f), {x}, [x](Node& n) {
    if (x->needs_grad)
      x->g().array() += n.grad.array() * (x->val.array() > 0.f).cast<float>();
  });
}

NodePtr leaky_relu(const NodePtr& x, float slope) {
  Mat out = x->val.unaryExpr([slope](float v) { return v > 0.f ? v : slope * v; });
  return make_op(std::move(out), {x}, [x, slope](Node& n) {
    if (x->needs_grad)
      x->g().array() +=
          n.grad.array() * (x->val.array() > 0.f).select(Mat::Ones(x->rows(), x->cols()),
                                                         Mat::Constant(x->rows(), x->cols(), slope))
                               .array();
  });
}

NodePtr elu(const NodePtr& x) {
  Mat out = x->val.unaryExpr([](float v) { return v > 0.f ? v : std::expm1(v); });
  auto saved = std::make_shared<Mat>(out);
  return make_op(std::move(out), {x}, [x, saved](Node& n) {
    if (x->needs_grad)
      x->g().array() += n.grad.array() * (x->val.array() > 0.f)
                                             .select(Mat::Ones(x->rows(), x->cols()),
                                                     (saved->array() + 1.f).matrix())
                                             .array();
  });
}

NodePtr gelu(const NodePtr& x) {
  Mat out = x->val.unaryExpr(
      [](float v) { return 0.5f * v * (1.f + std::erf(v * 0.70710678f)); });
  return make_op(std::move(out), {x}, [x](Node& n) {
    if (!x->needs_grad) return;
    x->g().array() += n.grad.array() * x->val.unaryExpr([](float v) {
                                            float phi = 0.5f * (1.f + std::erf(v * 0.70710678f));
                                            float pdf = 0.39894228f * std::exp(-0.5f * v * v);
                                            return phi + v * pdf;
                                          }).array();
  });
}

NodePtr sigmoid(const NodePtr& x) {
  Mat out = x->val.unaryExpr([](float v) {
    return v >= 0.f ? 1.f / (1.f + std::exp(-v)) : std::exp(v) / (1.f + std::exp(v));
  });
  auto saved = std::make_shared<Mat>(out);
  return make_op(std::move(out), {x}, [x, saved](Node& n) {
    if (x->needs_grad)
      x->g().array() += n.grad.array() * saved->array() * (1.f - saved->array());
  });
}

NodePtr tanh_n(const NodePtr& x) {
  Mat out = x->val.array().tanh();
  auto saved = std::make_shared<Mat>(out);
  return make_op(std::move(out), {x}, [x, saved](Node& n) {
    if (x->needs_grad)
      x->g().array() += n.grad.array() * (1.f - saved->array().square());
  });
}

NodePtr exp_n(const NodePtr& x) {
  Mat out = x->val.array().exp();
  auto saved = std::make_shared<Mat>(out);
  return make_op(std::move(out), {x}, [x, saved](Node& n) {
    if (x->needs_grad) x->g().array() += n.grad.array() * saved->array();
  });
}

// ---- normalization / attention ----

NodePtr layer_norm(const NodePtr& x, const NodePtr& gain, const NodePtr& bias, float eps) {
  const Eigen::Index rows = x->rows(), cols = x->cols();
  check(gain->rows() == 1 && gain->cols() == cols, "layer_norm: gain shape");
  check(bias->rows() == 1 && bias->cols() == cols, "layer_norm: bias shape");

  auto xhat = std::make_shared<Mat>(rows, cols);
  auto inv_std = std::make_shared<Eigen::VectorXf>(rows);
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const float mu = x->val.row(i).mean();
    const float var = (x->val.row(i).array() - mu).square().mean();
    const float is = 1.f / std::sqrt(var + eps);
    (*inv_std)(i) = is;
    xhat->row(i) = (x->val.row(i).array() - mu) * is;
    out.row(i) = xhat->row(i).cwiseProduct(gain->val.row(0)) + bias->val.row(0);
  }
  return make_op(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std](Node& n) {
    const Eigen::Index rows = n.rows(), cols = n.cols();
    if (gain->needs_grad)
      gain->g() += n.grad.cwiseProduct(*xhat).colwise().sum();
    if (bias->needs_grad) bias->g() += n.grad.colwise().sum();
    if (!x->needs_grad) return;
    Mat& gx = x->g();
    const float inv_n = 1.f / static_cast<float>(cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::RowVectorXf dxhat = n.grad.row(i).cwiseProduct(gain->val.row(0));
      const float m1 = dxhat.mean();
      const float m2 = dxhat.cwiseProduct(xhat->row(i)).mean();
      gx.row(i).array() +=
          (*inv_std)(i) * (dxhat.array() - m1 - xhat->row(i).array() * m2);
      (void)inv_n;
    }
  });
}

NodePtr softmax_masked(const NodePtr& x, const Mat& keep) {
  const Eigen::Index rows = x->rows(), cols = x->cols();
  check(keep.rows() == rows && keep.cols() == cols, "softmax_masked: mask shape");
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    float mx = -std::numeric_limits<float>::infinity();
    for (Eigen::Index j = 0; j < cols; ++j)
      if (keep(i, j) != 0.f) mx = std::max(mx, x->val(i, j));
    if (!std::isfinite(mx)) {
      out.row(i).setZero();
      continue;
    }
    double s = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const float e = keep(i, j) != 0.f ? std::exp(x->val(i, j) - mx) : 0.f;
      out(i, j) = e;
      s += e;
    }
    out.row(i) /= static_cast<float>(s);
  }
  auto probs = std::make_shared<Mat>(out);
  return make_op(std::move(out), {x}, [x, probs](Node& n) {
    if (!x->needs_grad) return;
    Mat& gx = x->g();
    for (Eigen::Index i = 0; i < n.rows(); ++i) {
      const float dot = n.grad.row(i).dot(probs->row(i));
      gx.row(i).array() += (n.grad.row(i).array() - dot) * probs->row(i).array();
    }
  });
}

NodePtr mask_mul(const NodePtr& x, const Mat& m) {
  check(m.rows() == x->rows() && m.cols() == x->cols(), "mask_mul: shape");
  auto mask = std::make_shared<Mat>(m);
  return make_op(x->val.cwiseProduct(m), {x}, [x, mask](Node& n) {
    if (x->needs_grad) x->g() += n.grad.cwiseProduct(*mask);
  });
}

// ---- reductions / losses ----

NodePtr sum_all(const NodePtr& x) {
  Mat out(1, 1);
  out(0, 0) = static_cast<float>(x->val.cast<double>().sum());
  return make_op(std::move(out), {x}, [x](Node& n) {
    if (x->needs_grad) x->g().array() += n.grad(0, 0);
  });
}

NodePtr mean_all(const NodePtr& x) {
  const float inv = 1.f / static_cast<float>(x->val.size());
  return scale(sum_all(x), inv);
}

NodePtr bce_with_logits(const NodePtr& logits, const Mat& target, const Mat& weight) {
  check(target.rows() == logits->rows() && target.cols() == logits->cols(),
        "bce_with_logits: target shape");
  check(weight.rows() == logits->rows() && weight.cols() == logits->cols(),
        "bce_with_logits: weight shape");
  double wsum = 0.0, acc = 0.0;
  for (Eigen::Index j = 0; j < logits->cols(); ++j) {
    for (Eigen::Index i = 0; i < logits->rows(); ++i) {
      const double w = weight(i, j);
      if (w == 0.0) continue;
      const double z = logits->val(i, j);
      const double t = target(i, j);
      acc += w * (std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z))));
      wsum += w;
    }
  }
  Mat out(1, 1);
  out(0, 0) = wsum > 0.0 ? static_cast<float>(acc / wsum) : 0.f;
  auto tgt = std::make_shared<Mat>(target);
  auto wgt = std::make_shared<Mat>(weight);
  return make_op(std::move(out), {logits}, [logits, tgt, wgt, wsum](Node& n) {
    if (!logits->needs_grad || wsum <= 0.0) return;
    const float go = n.grad(0, 0) / static_cast<float>(wsum);
    Mat& g = logits->g();
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const float w = (*wgt)(i, j);
        if (w == 0.f) continue;
        const float z = logits->val(i, j);
        const float s = z >= 0.f ? 1.f / (1.f + std::exp(-z)) : std::exp(z) / (1.f + std::exp(z));
        g(i, j) += go * w * (s - (*tgt)(i, j));
      }
    }
  });
}

// ---- conv ----

namespace {

struct ConvDims {
  int cin, h, w, k, stride, pad, oh, ow;
};

ConvDims conv_dims(const NodePtr& x, const NodePtr& w, int h, int w_px, int k, int stride,
                   int pad) {
  ConvDims d;
  d.cin = static_cast<int>(x->rows());
  d.h = h;
  d.w = w_px;
  d.k = k;
  d.stride = stride;
  d.pad = pad;
  check(static_cast<int>(x->cols()) == h * w_px, "conv2d: x cols != H*W");
  check(static_cast<int>(w->cols()) == d.cin * k * k, "conv2d: weight cols != Cin*k*k");
  d.oh = (h + 2 * pad - k) / stride + 1;
  d.ow = (w_px + 2 * pad - k) / stride + 1;
  return d;
}

// column q of the result holds the unrolled k*k*Cin patch for output pixel q
Mat im2col(const Mat& x, const ConvDims& d) {
  Mat cols = Mat::Zero(static_cast<Eigen::Index>(d.cin) * d.k * d.k,
                       static_cast<Eigen::Index>(d.oh) * d.ow);
  for (int oy = 0; oy < d.oh; ++oy) {
    for (int ox = 0; ox < d.ow; ++ox) {
      const Eigen::Index q = static_cast<Eigen::Index>(oy) * d.ow + ox;
      for (int dy = 0; dy < d.k; ++dy) {
        const int iy = oy * d.stride - d.pad + dy;
        if (iy < 0 || iy >= d.h) continue;
        for (int dx = 0; dx < d.k; ++dx) {
          const int ix = ox * d.stride - d.pad + dx;
          if (ix < 0 || ix >= d.w) continue;
          cols.block((static_cast<Eigen::Index>(dy) * d.k + dx) * d.cin, q, d.cin, 1) =
              x.col(static_cast<Eigen::Index>(iy) * d.w + ix);
        }
      }
    }
  }
  return cols;
}

void col2im_add(Mat& gx, const Mat& gcols, const ConvDims& d) {
  for (int oy = 0; oy < d.oh; ++oy) {
    for (int ox = 0; ox < d.ow; ++ox) {
      const Eigen::Index q = static_cast<Eigen::Index>(oy) * d.ow + ox;
      for (int dy = 0; dy < d.k; ++dy) {
        const int iy = oy * d.stride - d.pad + dy;
        if (iy < 0 || iy >= d.h) continue;
        for (int dx = 0; dx < d.k; ++dx) {
          const int ix = ox * d.stride - d.pad + dx;
          if (ix < 0 || ix >= d.w) continue;
          gx.col(static_cast<Eigen::Index>(iy) * d.w + ix) +=
              gcols.block((static_cast<Eigen::Index>(dy) * d.k + dx) * d.cin, q, d.cin, 1);
        }
      }
    }
  }
}

}  // namespace

NodePtr conv2d(const NodePtr& x, const NodePtr& w, const NodePtr& b, int h, int w_px, int k,
               int stride, int pad) {
  const ConvDims d = conv_dims(x, w, h, w_px, k, stride, pad);
  check(b->rows() == w->rows() && b->cols() == 1, "conv2d: bias shape");
  auto cols = std::make_shared<Mat>(im2col(x->val, d));
  Mat out = w->val * (*cols);
  out.colwise() += b->val.col(0);
  return make_op(std::move(out), {x, w, b}, [x, w, b, cols, d](Node& n) {
    if (b->needs_grad) b->g() += n.grad.rowwise().sum();
    if (w->needs_grad) w->g().noalias() += n.grad * cols->transpose();
    if (x->needs_grad) {
      Mat gcols = w->val.transpose() * n.grad;
      col2im_add(x->g(), gcols, d);
    }
  });
}

NodePtr upsample2x(const NodePtr& x, int h, int w_px) {
  const int cin = static_cast<int>(x->rows());
  check(static_cast<int>(x->cols()) == h * w_px, "upsample2x: x cols != H*W");
  Mat out(cin, static_cast<Eigen::Index>(h) * w_px * 4);
  const int oh = h * 2, ow = w_px * 2;
  for (int y = 0; y < oh; ++y)
    for (int xx = 0; xx < ow; ++xx)
      out.col(static_cast<Eigen::Index>(y) * ow + xx) =
          x->val.col(static_cast<Eigen::Index>(y / 2) * w_px + xx / 2);
  return make_op(std::move(out), {x}, [x, h, w_px](Node& n) {
    if (!x->needs_grad) return;
    Mat& g = x->g();
    const int oh = h * 2, ow = w_px * 2;
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx)
        g.col(static_cast<Eigen::Index>(y / 2) * w_px + xx / 2) +=
            n.grad.col(static_cast<Eigen::Index>(y) * ow + xx);
  });
}

// ---- parameters ----

NodePtr ParamStore::add(const std::string& name, Mat init) {
  if (find(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  auto n = make_leaf(std::move(init), true);
  items.emplace_back(name, n);
  return n;
}

NodePtr ParamStore::find(const std::string& name) const {
  for (const auto& [k, v] : items)
    if (k == name) return v;
  return nullptr;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& [k, v] : items) out.push_back(k);
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [k, v] : items) n += static_cast<std::size_t>(v->val.size());
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [k, v] : items) v->zero_grad();
}

Mat xavier_init(int rows, int cols, Rng& rng) {
  const float lim = std::sqrt(6.f / static_cast<float>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      m(i, j) = static_cast<float>(rng.next_real(-lim, lim));
  return m;
}

Mat normal_init(int rows, int cols, float stddev, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      m(i, j) = static_cast<float>(rng.next_normal() * stddev);
  return m;
}

Adam::Adam(float lr, float weight_decay, float beta1, float beta2, float eps)
    : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::step(ParamStore& params) {
  if (st_.m.size() != params.items.size()) {
    st_.m.clear();
    st_.v.clear();
    for (const auto& [k, p] : params.items) {
      st_.m.push_back(Mat::Zero(p->val.rows(), p->val.cols()));
      st_.v.push_back(Mat::Zero(p->val.rows(), p->val.cols()));
    }
  }
  t_ = ++st_.t;  // st_ survives checkpoint round trips, so it is the counter
  const float bc1 = 1.f - std::pow(b1_, static_cast<float>(t_));
  const float bc2 = 1.f - std::pow(b2_, static_cast<float>(t_));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    auto& p = params.items[i].second;
    if (p->grad.size() == 0) p->g();
    Mat g = p->grad;
    if (wd_ != 0.f) g += wd_ * p->val;
    st_.m[i] = b1_ * st_.m[i] + (1.f - b1_) * g;
    st_.v[i] = b2_ * st_.v[i].array().matrix() + (1.f - b2_) * g.cwiseProduct(g);
    const Mat mhat = st_.m[i] / bc1;
    const Mat vhat = st_.v[i] / bc2;
    p->val.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

}  // namespace mtx::ad
