#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "attrinf/common.hpp"

// Reverse-mode tape over dense Eigen matrices. Ops append backward closures
// to the graph; Graph::backward replays them in reverse. Gradients are
// allocated lazily so forward-only use pays nothing.
namespace attrinf::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct Node {
  Mat<S> value;
  Mat<S> grad;  // empty until touched
  bool needs_grad = false;

  Mat<S>& g() {
    if (grad.size() == 0) grad = Mat<S>::Zero(value.rows(), value.cols());
    return grad;
  }
};

template <typename S>
using NodeRef = std::shared_ptr<Node<S>>;

template <typename S>
class Graph {
 public:
  NodeRef<S> make(Mat<S> value, bool needs_grad) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    n->needs_grad = needs_grad;
    return n;
  }

  NodeRef<S> leaf(Mat<S> value, bool needs_grad = false) {
    return make(std::move(value), needs_grad);
  }

  void tape(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape.
  void backward(const NodeRef<S>& loss) {
    if (loss->value.size() != 1)
      throw NumericalError("backward expects a scalar loss node");
    loss->g()(0, 0) = S(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  }

 private:
  std::vector<std::function<void()>> tape_;
};

// ---------------------------------------------------------------------------
// Elementwise and linear ops
// ---------------------------------------------------------------------------

template <typename S>
NodeRef<S> matmul(Graph<S>& g, NodeRef<S> a, NodeRef<S> b) {
  auto out = g.make(a->value * b->value, a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    g.tape([a, b, out] {
      if (a->needs_grad) a->g().noalias() += out->g() * b->value.transpose();
      if (b->needs_grad) b->g().noalias() += a->value.transpose() * out->g();
    });
  return out;
}

template <typename S>
NodeRef<S> add(Graph<S>& g, NodeRef<S> a, NodeRef<S> b) {
  auto out = g.make(a->value + b->value, a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    g.tape([a, b, out] {
      if (a->needs_grad) a->g() += out->g();
      if (b->needs_grad) b->g() += out->g();
    });
  return out;
}

// b is a 1 x C row vector broadcast over the rows of a.
template <typename S>
NodeRef<S> add_rowvec(Graph<S>& g, NodeRef<S> a, NodeRef<S> b) {
  Mat<S> v = a->value.rowwise() + b->value.row(0);
  auto out = g.make(std::move(v), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    g.tape([a, b, out] {
      if (a->needs_grad) a->g() += out->g();
      if (b->needs_grad) b->g().row(0) += out->g().colwise().sum();
    });
  return out;
}

template <typename S>
NodeRef<S> cwise_mul(Graph<S>& g, NodeRef<S> a, NodeRef<S> b) {
  auto out = g.make(a->value.cwiseProduct(b->value),
                    a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    g.tape([a, b, out] {
      if (a->needs_grad) a->g() += out->g().cwiseProduct(b->value);
      if (b->needs_grad) b->g() += out->g().cwiseProduct(a->value);
    });
  return out;
}

template <typename S>
NodeRef<S> relu(Graph<S>& g, NodeRef<S> a) {
  auto out = g.make(a->value.cwiseMax(S(0)), a->needs_grad);
  if (out->needs_grad)
    g.tape([a, out] {
      a->g() += (a->value.array() > S(0))
                    .select(out->g().array(), S(0))
                    .matrix();
    });
  return out;
}

// Zeroes padding rows: mask has one entry per row (1 keep, 0 zero).
template <typename S>
NodeRef<S> mask_rows(Graph<S>& g, NodeRef<S> a,
                     std::shared_ptr<const Vec<S>> mask) {
  Mat<S> v = a->value;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    if ((*mask)(i) == S(0)) v.row(i).setZero();
  auto out = g.make(std::move(v), a->needs_grad);
  if (out->needs_grad)
    g.tape([a, out, mask] {
      Mat<S> dg = out->g();
      for (Eigen::Index i = 0; i < dg.rows(); ++i)
        if ((*mask)(i) == S(0)) dg.row(i).setZero();
      a->g() += dg;
    });
  return out;
}

// Inverted dropout with a precomputed 0/scale mask.
template <typename S>
NodeRef<S> dropout(Graph<S>& g, NodeRef<S> a, std::shared_ptr<Mat<S>> mask) {
  auto out = g.make(a->value.cwiseProduct(*mask), a->needs_grad);
  if (out->needs_grad)
    g.tape([a, out, mask] { a->g() += out->g().cwiseProduct(*mask); });
  return out;
}

// Row-wise layer normalization with learned gain/bias (1 x C each).
template <typename S>
NodeRef<S> layer_norm(Graph<S>& g, NodeRef<S> x, NodeRef<S> gain,
                      NodeRef<S> bias, S eps = S(1e-5)) {
  const Eigen::Index rows = x->value.rows(), cols = x->value.cols();
  auto normed = std::make_shared<Mat<S>>(rows, cols);
  auto rstd = std::make_shared<Vec<S>>(rows);
  Mat<S> v(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    S mean = x->value.row(i).mean();
    auto centered = (x->value.row(i).array() - mean).eval();
    S var = centered.square().mean();
    S r = S(1) / std::sqrt(var + eps);
    (*rstd)(i) = r;
    normed->row(i) = (centered * r).matrix();
    v.row(i) =
        (normed->row(i).array() * gain->value.row(0).array()).matrix() +
        bias->value.row(0);
  }
  auto out = g.make(std::move(v),
                    x->needs_grad || gain->needs_grad || bias->needs_grad);
  if (out->needs_grad)
    g.tape([x, gain, bias, out, normed, rstd] {
      const Eigen::Index rows = x->value.rows(), cols = x->value.cols();
      const Mat<S>& dy = out->g();
      if (bias->needs_grad) bias->g().row(0) += dy.colwise().sum();
      if (gain->needs_grad)
        gain->g().row(0) += dy.cwiseProduct(*normed).colwise().sum();
      if (x->needs_grad) {
        const S n = static_cast<S>(cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
          auto dn =
              (dy.row(i).array() * gain->value.row(0).array()).eval();
          S sum_dn = dn.sum();
          S sum_dn_h = (dn * normed->row(i).array()).sum();
          x->g().row(i).array() +=
              (*rstd)(i) *
              (dn - sum_dn / n - normed->row(i).array() * (sum_dn_h / n));
        }
      }
    });
  return out;
}

// Mean of the valid rows of each sample; samples with no valid rows pool to
// zero. x is (batch*seq) x width, sample-major.
template <typename S>
NodeRef<S> masked_mean_pool(Graph<S>& g, NodeRef<S> x,
                            std::shared_ptr<const Vec<S>> mask, int batch,
                            int seq) {
  Mat<S> v = Mat<S>::Zero(batch, x->value.cols());
  auto counts = std::make_shared<Vec<S>>(batch);
  for (int b = 0; b < batch; ++b) {
    S cnt = S(0);
    for (int t = 0; t < seq; ++t) {
      if ((*mask)(b * seq + t) != S(0)) {
        v.row(b) += x->value.row(b * seq + t);
        cnt += S(1);
      }
    }
    (*counts)(b) = cnt;
    if (cnt > S(0)) v.row(b) /= cnt;
  }
  auto out = g.make(std::move(v), x->needs_grad);
  if (out->needs_grad)
    g.tape([x, out, mask, counts, batch, seq] {
      for (int b = 0; b < batch; ++b) {
        if ((*counts)(b) == S(0)) continue;
        auto scaled = (out->g().row(b) / (*counts)(b)).eval();
        for (int t = 0; t < seq; ++t)
          if ((*mask)(b * seq + t) != S(0)) x->g().row(b * seq + t) += scaled;
      }
    });
  return out;
}

// Adds a learned positional table (seq x width) to every sample.
template <typename S>
NodeRef<S> add_positional(Graph<S>& g, NodeRef<S> x, NodeRef<S> pos, int batch,
                          int seq) {
  Mat<S> v = x->value;
  for (int b = 0; b < batch; ++b)
    v.middleRows(b * seq, seq) += pos->value;
  auto out = g.make(std::move(v), x->needs_grad || pos->needs_grad);
  if (out->needs_grad)
    g.tape([x, pos, out, batch, seq] {
      if (x->needs_grad) x->g() += out->g();
      if (pos->needs_grad)
        for (int b = 0; b < batch; ++b)
          pos->g() += out->g().middleRows(b * seq, seq);
    });
  return out;
}

// ---------------------------------------------------------------------------
// Input assembly: embedding lookup + frequency channel, masked
// ---------------------------------------------------------------------------

// indices: rows x 3 dense indices (mini-app, category, button); freq holds
// the already-normalized frequency channel. Index 0 rows of each table are
// frozen at zero (sentinel embedding). Padding rows (mask 0) produce zero
// token vectors.
template <typename S>
NodeRef<S> embed_concat(Graph<S>& g, NodeRef<S> mini_table,
                        NodeRef<S> cat_table, NodeRef<S> btn_table,
                        std::shared_ptr<const Eigen::MatrixXi> indices,
                        std::shared_ptr<const Vec<S>> freq,
                        std::shared_ptr<const Vec<S>> mask) {
  const Eigen::Index rows = indices->rows();
  const Eigen::Index dm = mini_table->value.cols();
  const Eigen::Index dc = cat_table->value.cols();
  const Eigen::Index db = btn_table->value.cols();
  Mat<S> v = Mat<S>::Zero(rows, dm + dc + db + 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if ((*mask)(i) == S(0)) continue;
    // Index 0 is the sentinel: a structural zero segment, never a table row.
    if (int im = (*indices)(i, 0); im != 0)
      v.block(i, 0, 1, dm) = mini_table->value.row(im);
    if (int ic = (*indices)(i, 1); ic != 0)
      v.block(i, dm, 1, dc) = cat_table->value.row(ic);
    if (int ib = (*indices)(i, 2); ib != 0)
      v.block(i, dm + dc, 1, db) = btn_table->value.row(ib);
    v(i, dm + dc + db) = (*freq)(i);
  }
  bool needs = mini_table->needs_grad || cat_table->needs_grad ||
               btn_table->needs_grad;
  auto out = g.make(std::move(v), needs);
  if (out->needs_grad)
    g.tape([mini_table, cat_table, btn_table, indices, mask, out, dm, dc, db] {
      const Eigen::Index rows = indices->rows();
      for (Eigen::Index i = 0; i < rows; ++i) {
        if ((*mask)(i) == S(0)) continue;
        int im = (*indices)(i, 0), ic = (*indices)(i, 1), ib = (*indices)(i, 2);
        if (mini_table->needs_grad && im != 0)
          mini_table->g().row(im) += out->g().block(i, 0, 1, dm);
        if (cat_table->needs_grad && ic != 0)
          cat_table->g().row(ic) += out->g().block(i, dm, 1, dc);
        if (btn_table->needs_grad && ib != 0)
          btn_table->g().row(ib) += out->g().block(i, dm + dc, 1, db);
      }
    });
  return out;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// Mean cross-entropy over the batch, computed via a stable log-sum-exp.
// Returns the scalar loss; *probs_out (optional) receives softmax rows.
template <typename S>
NodeRef<S> softmax_cross_entropy(Graph<S>& g, NodeRef<S> logits,
                                 std::shared_ptr<const std::vector<int>> labels,
                                 Mat<S>* probs_out = nullptr) {
  const Eigen::Index batch = logits->value.rows();
  if (static_cast<Eigen::Index>(labels->size()) != batch)
    throw NumericalError("cross-entropy label count mismatch");
  auto probs = std::make_shared<Mat<S>>(batch, logits->value.cols());
  S loss = S(0);
  for (Eigen::Index i = 0; i < batch; ++i) {
    S m = logits->value.row(i).maxCoeff();
    auto shifted = (logits->value.row(i).array() - m).eval();
    auto ex = shifted.exp().eval();
    S sum = ex.sum();
    probs->row(i) = (ex / sum).matrix();
    S lse = m + std::log(sum);
    loss += lse - logits->value(i, (*labels)[i]);
  }
  loss /= static_cast<S>(batch);
  if (probs_out) *probs_out = *probs;
  Mat<S> lv(1, 1);
  lv(0, 0) = loss;
  auto out = g.make(std::move(lv), logits->needs_grad);
  if (out->needs_grad)
    g.tape([logits, labels, probs, out, batch] {
      S scale = out->g()(0, 0) / static_cast<S>(batch);
      Mat<S> d = *probs;
      for (Eigen::Index i = 0; i < batch; ++i) d(i, (*labels)[i]) -= S(1);
      logits->g() += d * scale;
    });
  return out;
}

}  // namespace attrinf::nn
