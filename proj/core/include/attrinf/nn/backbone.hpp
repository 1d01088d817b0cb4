#pragma once

#include <memory>
#include <string>
#include <vector>

#include "attrinf/model.hpp"
#include "attrinf/nn/graph.hpp"
#include "attrinf/nn/ops_seq.hpp"
#include "attrinf/rng.hpp"

// Parameter construction and forward-graph assembly shared by training
// (float), inference (float), and the finite-difference harness (double).
namespace attrinf::nn {

template <typename S>
struct BatchInput {
  std::shared_ptr<const Eigen::MatrixXi> indices;  // (batch*seq) x 3
  std::shared_ptr<const Vec<S>> freq;  // normalized frequency channel
  std::shared_ptr<const Vec<S>> mask;  // 1 real row, 0 padding
  int batch = 0;
  int seq = 0;
};

template <typename S>
BatchInput<S> assemble_batch(const std::vector<const EncodedSample*>& samples,
                             const NormalizationStats& norm) {
  if (samples.empty()) throw ValidationError("empty batch");
  const int seq = static_cast<int>(samples[0]->mask.size());
  const int batch = static_cast<int>(samples.size());
  auto indices = std::make_shared<Eigen::MatrixXi>(batch * seq, 3);
  auto freq = std::make_shared<Vec<S>>(batch * seq);
  auto mask = std::make_shared<Vec<S>>(batch * seq);
  const double inv_std = 1.0 / norm.stddev;
  for (int b = 0; b < batch; ++b) {
    const EncodedSample& s = *samples[b];
    if (static_cast<int>(s.mask.size()) != seq)
      throw ValidationError("batch mixes sequence lengths");
    indices->middleRows(b * seq, seq) = s.indices;
    for (int t = 0; t < seq; ++t) {
      (*mask)(b * seq + t) = static_cast<S>(s.mask(t));
      (*freq)(b * seq + t) = static_cast<S>(
          (static_cast<double>(s.frequency(t)) - norm.mean) * inv_std);
    }
  }
  BatchInput<S> in;
  in.batch = batch;
  in.seq = seq;
  in.indices = std::move(indices);
  in.freq = std::move(freq);
  in.mask = std::move(mask);
  return in;
}

// Xavier-uniform initialization, drawn in double for scalar-type parity.
template <typename S>
Mat<S> xavier_init(Rng& rng, int rows, int cols, double gain = 1.0) {
  double limit = gain * std::sqrt(6.0 / (rows + cols));
  Mat<S> m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      m(r, c) = static_cast<S>((rng.uniform() * 2.0 - 1.0) * limit);
  return m;
}

struct VocabSizes {
  int miniapp = 0;
  int category = 0;
  int button = 0;
};

template <typename S>
ParamSet<S> init_params(const ArchitectureSpec& arch, const VocabSizes& vocab,
                        std::uint64_t seed) {
  arch.validate();
  Rng rng = substream(seed, "init");
  ParamSet<S> p;
  const EmbeddingDims& e = arch.embedding_dims;
  const int w = arch.width;
  const int token = e.token();

  auto embed = [&](int rows, int cols) {
    Mat<S> m = xavier_init<S>(rng, rows, cols);
    m.row(0).setZero();  // sentinel row stays zero
    return m;
  };
  p.add("embed.miniapp", embed(vocab.miniapp, e.miniapp));
  p.add("embed.category", embed(vocab.category, e.category));
  p.add("embed.button", embed(vocab.button, e.button));

  if (arch.family == ModelFamily::Linear) {
    p.add("head.w", xavier_init<S>(rng, token, arch.output_classes));
    p.add("head.b", Mat<S>::Zero(1, arch.output_classes));
    return p;
  }

  p.add("input.w", xavier_init<S>(rng, token, w));
  p.add("input.b", Mat<S>::Zero(1, w));

  auto layer_name = [](int i, const char* suffix) {
    return "L" + std::to_string(i) + "." + suffix;
  };

  switch (arch.family) {
    case ModelFamily::Transformer: {
      Mat<S> pos(arch.sequence_length, w);
      for (int c = 0; c < w; ++c)
        for (int r = 0; r < arch.sequence_length; ++r)
          pos(r, c) = static_cast<S>((rng.uniform() * 2.0 - 1.0) * 0.02);
      p.add("pos", std::move(pos));
      for (int i = 0; i < arch.depth; ++i) {
        for (const char* proj : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
          p.add(layer_name(i, proj), xavier_init<S>(rng, w, w));
        for (const char* bias : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
          p.add(layer_name(i, bias), Mat<S>::Zero(1, w));
        p.add(layer_name(i, "ln1.g"), Mat<S>::Ones(1, w));
        p.add(layer_name(i, "ln1.b"), Mat<S>::Zero(1, w));
        int f = w * arch.ffn_multiplier;
        p.add(layer_name(i, "ffn.w1"), xavier_init<S>(rng, w, f));
        p.add(layer_name(i, "ffn.b1"), Mat<S>::Zero(1, f));
        p.add(layer_name(i, "ffn.w2"), xavier_init<S>(rng, f, w));
        p.add(layer_name(i, "ffn.b2"), Mat<S>::Zero(1, w));
        p.add(layer_name(i, "ln2.g"), Mat<S>::Ones(1, w));
        p.add(layer_name(i, "ln2.b"), Mat<S>::Zero(1, w));
      }
      break;
    }
    case ModelFamily::Cnn: {
      for (int i = 0; i < arch.depth; ++i) {
        p.add(layer_name(i, "conv1.k"),
              xavier_init<S>(rng, arch.conv_taps * w, w));
        p.add(layer_name(i, "conv1.b"), Mat<S>::Zero(1, w));
        p.add(layer_name(i, "conv2.k"),
              xavier_init<S>(rng, arch.conv_taps * w, w));
        p.add(layer_name(i, "conv2.b"), Mat<S>::Zero(1, w));
      }
      break;
    }
    case ModelFamily::Rnn: {
      for (int i = 0; i < arch.depth; ++i) {
        int cin = w;
        p.add(layer_name(i, "lstm.wx"), xavier_init<S>(rng, cin, 4 * w));
        p.add(layer_name(i, "lstm.wh"), xavier_init<S>(rng, w, 4 * w));
        p.add(layer_name(i, "lstm.b"), Mat<S>::Zero(1, 4 * w));
      }
      break;
    }
    case ModelFamily::Linear:
      break;
  }

  p.add("head.w", xavier_init<S>(rng, w, arch.output_classes));
  p.add("head.b", Mat<S>::Zero(1, arch.output_classes));
  return p;
}

// Per-batch dropout masks; null rng disables dropout (inference and the
// gradient harness).
struct DropoutCtx {
  double rate = 0.0;
  Rng* rng = nullptr;

  bool active() const { return rate > 0.0 && rng != nullptr; }
};

template <typename S>
NodeRef<S> maybe_dropout(Graph<S>& g, NodeRef<S> x, const DropoutCtx& ctx) {
  if (!ctx.active()) return x;
  auto mask = std::make_shared<Mat<S>>(x->value.rows(), x->value.cols());
  const S scale = static_cast<S>(1.0 / (1.0 - ctx.rate));
  for (Eigen::Index c = 0; c < mask->cols(); ++c)
    for (Eigen::Index r = 0; r < mask->rows(); ++r)
      (*mask)(r, c) = ctx.rng->uniform() < ctx.rate ? S(0) : scale;
  return dropout(g, x, mask);
}

// Builds the forward graph; returns (batch x classes) logits. `leaves`
// receives the parameter leaf nodes in ParamSet order so the trainer can
// read gradients back.
template <typename S>
NodeRef<S> build_forward(Graph<S>& g, const ParamSet<S>& params,
                         const ArchitectureSpec& arch,
                         const BatchInput<S>& in, bool needs_grad,
                         std::vector<NodeRef<S>>* leaves = nullptr,
                         const DropoutCtx& dropout_ctx = {}) {
  std::vector<NodeRef<S>> nodes;
  nodes.reserve(params.values.size());
  for (const auto& v : params.values) nodes.push_back(g.leaf(v, needs_grad));
  if (leaves) *leaves = nodes;
  auto P = [&](const std::string& name) {
    return nodes[params.index_of(name)];
  };

  auto x = embed_concat(g, P("embed.miniapp"), P("embed.category"),
                        P("embed.button"), in.indices, in.freq, in.mask);

  if (arch.family == ModelFamily::Linear) {
    auto pooled = masked_mean_pool(g, x, in.mask, in.batch, in.seq);
    return add_rowvec(g, matmul(g, pooled, P("head.w")), P("head.b"));
  }

  x = add_rowvec(g, matmul(g, x, P("input.w")), P("input.b"));

  auto layer_name = [](int i, const char* suffix) {
    return "L" + std::to_string(i) + "." + suffix;
  };

  switch (arch.family) {
    case ModelFamily::Transformer: {
      x = add_positional(g, x, P("pos"), in.batch, in.seq);
      for (int i = 0; i < arch.depth; ++i) {
        auto q = add_rowvec(g, matmul(g, x, P(layer_name(i, "attn.wq"))),
                            P(layer_name(i, "attn.bq")));
        auto k = add_rowvec(g, matmul(g, x, P(layer_name(i, "attn.wk"))),
                            P(layer_name(i, "attn.bk")));
        auto v = add_rowvec(g, matmul(g, x, P(layer_name(i, "attn.wv"))),
                            P(layer_name(i, "attn.bv")));
        auto a = attention_core(g, q, k, v, arch.heads, in.mask, in.batch,
                                in.seq);
        a = add_rowvec(g, matmul(g, a, P(layer_name(i, "attn.wo"))),
                       P(layer_name(i, "attn.bo")));
        a = maybe_dropout(g, a, dropout_ctx);
        x = layer_norm(g, add(g, x, a), P(layer_name(i, "ln1.g")),
                       P(layer_name(i, "ln1.b")));
        auto f = relu(g, add_rowvec(g, matmul(g, x, P(layer_name(i, "ffn.w1"))),
                                    P(layer_name(i, "ffn.b1"))));
        f = add_rowvec(g, matmul(g, f, P(layer_name(i, "ffn.w2"))),
                       P(layer_name(i, "ffn.b2")));
        f = maybe_dropout(g, f, dropout_ctx);
        x = layer_norm(g, add(g, x, f), P(layer_name(i, "ln2.g")),
                       P(layer_name(i, "ln2.b")));
      }
      break;
    }
    case ModelFamily::Cnn: {
      x = mask_rows(g, x, in.mask);
      for (int i = 0; i < arch.depth; ++i) {
        auto y = relu(
            g, add_rowvec(g,
                          conv1d(g, x, P(layer_name(i, "conv1.k")),
                                 arch.conv_taps, in.batch, in.seq),
                          P(layer_name(i, "conv1.b"))));
        y = mask_rows(g, y, in.mask);
        y = add_rowvec(g,
                       conv1d(g, y, P(layer_name(i, "conv2.k")),
                              arch.conv_taps, in.batch, in.seq),
                       P(layer_name(i, "conv2.b")));
        y = maybe_dropout(g, y, dropout_ctx);
        x = relu(g, add(g, x, y));
        x = mask_rows(g, x, in.mask);
      }
      break;
    }
    case ModelFamily::Rnn: {
      x = mask_rows(g, x, in.mask);
      for (int i = 0; i < arch.depth; ++i) {
        x = lstm_layer(g, x, P(layer_name(i, "lstm.wx")),
                       P(layer_name(i, "lstm.wh")), P(layer_name(i, "lstm.b")),
                       in.mask, in.batch, in.seq);
        x = maybe_dropout(g, x, dropout_ctx);
      }
      break;
    }
    case ModelFamily::Linear:
      break;
  }

  auto pooled = masked_mean_pool(g, x, in.mask, in.batch, in.seq);
  return add_rowvec(g, matmul(g, pooled, P("head.w")), P("head.b"));
}

}  // namespace attrinf::nn
