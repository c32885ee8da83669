#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mtx/rng.hpp"

// Small reverse-mode autodiff over Eigen matrices. Graphs are built fresh
// per forward pass; backward() walks the DAG once in reverse topological
// order. Float storage, double accumulation where losses need it.
namespace mtx::ad {

using Mat = Eigen::MatrixXf;

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Mat val;
  Mat grad;  // sized on first use
  bool needs_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // pulls this->grad into parents

  Eigen::Index rows() const { return val.rows(); }
  Eigen::Index cols() const { return val.cols(); }
  Mat& g() {
    if (grad.size() == 0) grad = Mat::Zero(val.rows(), val.cols());
    return grad;
  }
  void zero_grad() {
    if (grad.size() != 0) grad.setZero();
  }
  float scalar() const { return val(0, 0); }
};

NodePtr make_leaf(Mat v, bool needs_grad);
inline NodePtr constant(Mat v) { return make_leaf(std::move(v), false); }
NodePtr scalar_const(float v);

// Runs reverse-mode accumulation from a 1x1 root with seed gradient 1.
void backward(const NodePtr& root);

// ---- arithmetic ----
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);  // elementwise
NodePtr scale(const NodePtr& a, float c);
NodePtr add_rowvec(const NodePtr& x, const NodePtr& r);  // r is 1 x n, broadcast over rows
NodePtr add_colvec(const NodePtr& x, const NodePtr& c);  // c is m x 1, broadcast over cols
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr matmul_nt(const NodePtr& a, const NodePtr& b);  // a * b^T
NodePtr matmul_tn(const NodePtr& a, const NodePtr& b);  // a^T * b

// ---- shape ----
NodePtr row_slice(const NodePtr& x, int r0, int n);
NodePtr col_slice(const NodePtr& x, int c0, int n);
// Row-major reflow into rows x cols, zero-padding the tail. Needs
// rows*cols >= x.size().
NodePtr reshape_rowmajor(const NodePtr& x, int rows, int cols);
NodePtr concat_rows(const std::vector<NodePtr>& xs);
NodePtr concat_cols(const std::vector<NodePtr>& xs);
NodePtr gather_rows(const NodePtr& table, std::vector<int> idx);

// ---- nonlinearities ----
NodePtr relu(const NodePtr& x);
NodePtr leaky_relu(const NodePtr& x, float slope);
NodePtr elu(const NodePtr& x);
NodePtr gelu(const NodePtr& x);
NodePtr sigmoid(const NodePtr& x);
NodePtr tanh_n(const NodePtr& x);
NodePtr exp_n(const NodePtr& x);

// Rowwise layer norm with learned gain/bias (both 1 x n).
NodePtr layer_norm(const NodePtr& x, const NodePtr& gain, const NodePtr& bias, float eps = 1e-5f);

// Rowwise softmax restricted to entries where keep != 0; fully-masked rows
// yield all-zero probability rows (no NaN).
NodePtr softmax_masked(const NodePtr& x, const Mat& keep);

// Elementwise multiply by a constant mask.
NodePtr mask_mul(const NodePtr& x, const Mat& m);

// ---- reductions / losses ----
NodePtr sum_all(const NodePtr& x);
NodePtr mean_all(const NodePtr& x);
// Weighted-mean binary cross entropy on logits: sum(w*bce)/sum(w).
// Stable form, accumulated in double.
NodePtr bce_with_logits(const NodePtr& logits, const Mat& target, const Mat& weight);

// ---- conv stack (x is Cin x H*W, column p = pixel y*W+x) ----
NodePtr conv2d(const NodePtr& x, const NodePtr& w, const NodePtr& b, int h, int w_px,
               int k, int stride, int pad);
NodePtr upsample2x(const NodePtr& x, int h, int w_px);

// ---- parameters ----
struct ParamStore {
  std::vector<std::pair<std::string, NodePtr>> items;

  NodePtr add(const std::string& name, Mat init);
  NodePtr find(const std::string& name) const;  // nullptr when absent
  std::vector<std::string> names() const;
  std::size_t total_size() const;
  void zero_grads();
};

Mat xavier_init(int rows, int cols, Rng& rng);
Mat normal_init(int rows, int cols, float stddev, Rng& rng);

class Adam {
 public:
  Adam(float lr, float weight_decay = 0.f, float beta1 = 0.9f, float beta2 = 0.999f,
       float eps = 1e-8f);
  void step(ParamStore& params);
  int t() const { return t_; }

  // checkpoint support: state in the order of params.items
  struct State {
    int t = 0;
    std::vector<Mat> m, v;
  };
  State& state() { return st_; }
  const State& state() const { return st_; }

 private:
  float lr_, wd_, b1_, b2_, eps_;
  int t_ = 0;
  State st_;
};

}  // namespace mtx::ad
