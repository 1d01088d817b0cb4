#pragma once

#include <memory>
#include <vector>

#include "attrinf/nn/graph.hpp"

namespace attrinf::nn {

// Scaled-dot-product attention over already-projected q/k/v, sample-major
// (batch*seq) x width with `heads` equal column slices. Padding rows are
// excluded as keys; samples with no valid rows produce zero output rows.
template <typename S>
NodeRef<S> attention_core(Graph<S>& g, NodeRef<S> q, NodeRef<S> k,
                          NodeRef<S> v, int heads,
                          std::shared_ptr<const Vec<S>> mask, int batch,
                          int seq) {
  const Eigen::Index width = q->value.cols();
  if (width % heads != 0)
    throw NumericalError("attention width must be divisible by head count");
  const Eigen::Index dk = width / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dk));

  auto probs = std::make_shared<std::vector<Mat<S>>>();
  probs->reserve(static_cast<std::size_t>(batch) * heads);
  auto valid = std::make_shared<std::vector<std::vector<int>>>(batch);
  for (int b = 0; b < batch; ++b) {
    auto& idx = (*valid)[b];
    for (int t = 0; t < seq; ++t)
      if ((*mask)(b * seq + t) != S(0)) idx.push_back(t);
  }

  Mat<S> out_v = Mat<S>::Zero(batch * seq, width);
  for (int b = 0; b < batch; ++b) {
    const auto& idx = (*valid)[b];
    for (int h = 0; h < heads; ++h) {
      if (idx.empty()) {
        probs->emplace_back();
        continue;
      }
      auto qb = q->value.block(b * seq, h * dk, seq, dk);
      // Gather valid keys/values into compact matrices.
      Mat<S> kb(idx.size(), dk), vb(idx.size(), dk);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        kb.row(j) = k->value.row(b * seq + idx[j]).segment(h * dk, dk);
        vb.row(j) = v->value.row(b * seq + idx[j]).segment(h * dk, dk);
      }
      Mat<S> scores = qb * kb.transpose() * scale;
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        S m = scores.row(r).maxCoeff();
        auto ex = (scores.row(r).array() - m).exp().eval();
        scores.row(r) = (ex / ex.sum()).matrix();
      }
      out_v.block(b * seq, h * dk, seq, dk).noalias() = scores * vb;
      probs->push_back(std::move(scores));
    }
  }

  bool needs = q->needs_grad || k->needs_grad || v->needs_grad;
  auto out = g.make(std::move(out_v), needs);
  if (out->needs_grad)
    g.tape([q, k, v, out, probs, valid, heads, dk, scale, batch, seq] {
      for (int b = 0; b < batch; ++b) {
        const auto& idx = (*valid)[b];
        if (idx.empty()) continue;
        for (int h = 0; h < heads; ++h) {
          const Mat<S>& p = (*probs)[static_cast<std::size_t>(b) * heads + h];
          auto dout = out->g().block(b * seq, h * dk, seq, dk);
          Mat<S> kb(idx.size(), dk), vb(idx.size(), dk);
          for (std::size_t j = 0; j < idx.size(); ++j) {
            kb.row(j) = k->value.row(b * seq + idx[j]).segment(h * dk, dk);
            vb.row(j) = v->value.row(b * seq + idx[j]).segment(h * dk, dk);
          }
          if (v->needs_grad) {
            Mat<S> dvb = p.transpose() * dout;
            for (std::size_t j = 0; j < idx.size(); ++j)
              v->g().row(b * seq + idx[j]).segment(h * dk, dk) += dvb.row(j);
          }
          Mat<S> dp = dout * vb.transpose();
          // Softmax backward: ds = p .* (dp - rowsum(dp .* p)).
          Mat<S> ds = p;
          for (Eigen::Index r = 0; r < ds.rows(); ++r) {
            S dot = dp.row(r).cwiseProduct(p.row(r)).sum();
            ds.row(r) =
                p.row(r).cwiseProduct(dp.row(r).array().matrix() -
                                      Mat<S>::Constant(1, dp.cols(), dot));
          }
          if (q->needs_grad)
            q->g().block(b * seq, h * dk, seq, dk).noalias() +=
                ds * kb * scale;
          if (k->needs_grad) {
            auto qb = q->value.block(b * seq, h * dk, seq, dk);
            Mat<S> dkb = ds.transpose() * qb * scale;
            for (std::size_t j = 0; j < idx.size(); ++j)
              k->g().row(b * seq + idx[j]).segment(h * dk, dk) += dkb.row(j);
          }
        }
      }
    });
  return out;
}

// Same-padded 1-D convolution along each sample's sequence, via im2col.
// x is (batch*seq) x in_width, kernel is (taps*in_width) x out_width.
template <typename S>
NodeRef<S> conv1d(Graph<S>& g, NodeRef<S> x, NodeRef<S> kernel, int taps,
                  int batch, int seq) {
  const Eigen::Index cin = x->value.cols();
  if (kernel->value.rows() != taps * cin)
    throw NumericalError("conv1d kernel shape mismatch");
  const int pad = taps / 2;

  auto cols = std::make_shared<Mat<S>>(
      Mat<S>::Zero(static_cast<Eigen::Index>(batch) * seq, taps * cin));
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < seq; ++t)
      for (int o = 0; o < taps; ++o) {
        int src = t + o - pad;
        if (src < 0 || src >= seq) continue;
        cols->block(b * seq + t, o * cin, 1, cin) =
            x->value.row(b * seq + src);
      }

  auto out = g.make((*cols) * kernel->value,
                    x->needs_grad || kernel->needs_grad);
  if (out->needs_grad)
    g.tape([x, kernel, out, cols, taps, batch, seq, cin] {
      if (kernel->needs_grad)
        kernel->g().noalias() += cols->transpose() * out->g();
      if (x->needs_grad) {
        Mat<S> dcols = out->g() * kernel->value.transpose();
        const int pad = taps / 2;
        for (int b = 0; b < batch; ++b)
          for (int t = 0; t < seq; ++t)
            for (int o = 0; o < taps; ++o) {
              int src = t + o - pad;
              if (src < 0 || src >= seq) continue;
              x->g().row(b * seq + src) +=
                  dcols.block(b * seq + t, o * cin, 1, cin);
            }
      }
    });
  return out;
}

// One LSTM layer over sample-major (batch*seq) x in_width input. Gate
// weights: wx (in_width x 4H), wh (H x 4H), bias (1 x 4H), gate order
// [input, forget, cell, output]. Padding steps pass hidden and cell state
// through unchanged.
template <typename S>
NodeRef<S> lstm_layer(Graph<S>& g, NodeRef<S> x, NodeRef<S> wx, NodeRef<S> wh,
                      NodeRef<S> bias, std::shared_ptr<const Vec<S>> mask,
                      int batch, int seq) {
  const Eigen::Index cin = x->value.cols();
  const Eigen::Index hidden = wh->value.rows();
  if (wx->value.cols() != 4 * hidden || wh->value.cols() != 4 * hidden)
    throw NumericalError("lstm weight shape mismatch");

  struct StepState {
    Mat<S> xt, h_prev, c_prev, i, f, c_hat, o, c, tanh_c;
  };
  auto steps = std::make_shared<std::vector<StepState>>();
  steps->reserve(seq);

  auto sigmoid = [](const Mat<S>& m) {
    return ((S(1) / (S(1) + (-m.array()).exp())).matrix()).eval();
  };

  Mat<S> h = Mat<S>::Zero(batch, hidden), c = Mat<S>::Zero(batch, hidden);
  Mat<S> out_v(static_cast<Eigen::Index>(batch) * seq, hidden);
  for (int t = 0; t < seq; ++t) {
    StepState st;
    st.xt.resize(batch, cin);
    for (int b = 0; b < batch; ++b) st.xt.row(b) = x->value.row(b * seq + t);
    st.h_prev = h;
    st.c_prev = c;
    Mat<S> gates = st.xt * wx->value + h * wh->value;
    gates.rowwise() += bias->value.row(0);
    st.i = sigmoid(gates.leftCols(hidden));
    st.f = sigmoid(gates.middleCols(hidden, hidden));
    st.c_hat = gates.middleCols(2 * hidden, hidden).array().tanh().matrix();
    st.o = sigmoid(gates.rightCols(hidden));
    Mat<S> c_new =
        st.i.cwiseProduct(st.c_hat) + st.f.cwiseProduct(st.c_prev);
    Mat<S> tanh_c = c_new.array().tanh().matrix();
    Mat<S> h_new = st.o.cwiseProduct(tanh_c);
    for (int b = 0; b < batch; ++b) {
      if ((*mask)(b * seq + t) == S(0)) {
        c_new.row(b) = st.c_prev.row(b);
        h_new.row(b) = st.h_prev.row(b);
        tanh_c.row(b).setZero();
      }
    }
    st.c = c_new;
    st.tanh_c = tanh_c;
    h = h_new;
    c = c_new;
    for (int b = 0; b < batch; ++b) out_v.row(b * seq + t) = h.row(b);
    steps->push_back(std::move(st));
  }

  bool needs = x->needs_grad || wx->needs_grad || wh->needs_grad ||
               bias->needs_grad;
  auto out = g.make(std::move(out_v), needs);
  if (out->needs_grad)
    g.tape([x, wx, wh, bias, out, steps, mask, batch, seq, cin, hidden] {
      Mat<S> dh = Mat<S>::Zero(batch, hidden);
      Mat<S> dc = Mat<S>::Zero(batch, hidden);
      for (int t = seq - 1; t >= 0; --t) {
        const StepState& st = (*steps)[t];
        for (int b = 0; b < batch; ++b)
          dh.row(b) += out->g().row(b * seq + t);

        // Split flow at the pass-through mask.
        Mat<S> dh_cand = dh, dc_cand = dc;
        Mat<S> dh_prev_pass = Mat<S>::Zero(batch, hidden);
        Mat<S> dc_prev_pass = Mat<S>::Zero(batch, hidden);
        for (int b = 0; b < batch; ++b) {
          if ((*mask)(b * seq + t) == S(0)) {
            dh_prev_pass.row(b) = dh.row(b);
            dc_prev_pass.row(b) = dc.row(b);
            dh_cand.row(b).setZero();
            dc_cand.row(b).setZero();
          }
        }

        Mat<S> d_o = dh_cand.cwiseProduct(st.tanh_c);
        Mat<S> d_tanh = dh_cand.cwiseProduct(st.o);
        Mat<S> one_minus_t2 =
            (S(1) - st.tanh_c.array().square()).matrix();
        Mat<S> dc_total = dc_cand + d_tanh.cwiseProduct(one_minus_t2);

        Mat<S> d_i = dc_total.cwiseProduct(st.c_hat);
        Mat<S> d_chat = dc_total.cwiseProduct(st.i);
        Mat<S> d_f = dc_total.cwiseProduct(st.c_prev);
        Mat<S> dc_prev = dc_total.cwiseProduct(st.f) + dc_prev_pass;

        Mat<S> dgates(batch, 4 * hidden);
        dgates.leftCols(hidden) =
            d_i.cwiseProduct(st.i.cwiseProduct((S(1) - st.i.array()).matrix()));
        dgates.middleCols(hidden, hidden) =
            d_f.cwiseProduct(st.f.cwiseProduct((S(1) - st.f.array()).matrix()));
        dgates.middleCols(2 * hidden, hidden) = d_chat.cwiseProduct(
            (S(1) - st.c_hat.array().square()).matrix());
        dgates.rightCols(hidden) =
            d_o.cwiseProduct(st.o.cwiseProduct((S(1) - st.o.array()).matrix()));

        if (wx->needs_grad)
          wx->g().noalias() += st.xt.transpose() * dgates;
        if (wh->needs_grad)
          wh->g().noalias() += st.h_prev.transpose() * dgates;
        if (bias->needs_grad) bias->g().row(0) += dgates.colwise().sum();
        if (x->needs_grad) {
          Mat<S> dxt = dgates * wx->value.transpose();
          for (int b = 0; b < batch; ++b)
            x->g().row(b * seq + t) += dxt.row(b);
        }
        dh = dgates * wh->value.transpose() + dh_prev_pass;
        dc = dc_prev;
      }
    });
  return out;
}

}  // namespace attrinf::nn
