#include "attrinf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "attrinf/nn/backbone.hpp"
#include "attrinf/rng.hpp"

namespace attrinf {

using json = nlohmann::ordered_json;

std::string_view family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::Transformer:
      return "transformer";
    case ModelFamily::Cnn:
      return "cnn";
    case ModelFamily::Rnn:
      return "rnn";
    case ModelFamily::Linear:
      return "linear";
  }
  throw ValidationError("invalid model family");
}

ModelFamily family_from_name(std::string_view name) {
  if (name == "transformer") return ModelFamily::Transformer;
  if (name == "cnn") return ModelFamily::Cnn;
  if (name == "rnn") return ModelFamily::Rnn;
  if (name == "linear") return ModelFamily::Linear;
  throw ValidationError("unknown model family '" + std::string(name) + "'");
}

void ArchitectureSpec::validate() const {
  if (depth < 1) throw ValidationError("architecture depth must be >= 1");
  if (width < 1) throw ValidationError("architecture width must be >= 1");
  if (output_classes < 2)
    throw ValidationError("output_classes must be >= 2");
  if (sequence_length < 1)
    throw ValidationError("sequence_length must be >= 1");
  if (family == ModelFamily::Transformer) {
    if (heads < 1 || width % heads != 0)
      throw ValidationError("transformer heads must divide width (" +
                            std::to_string(heads) + " vs " +
                            std::to_string(width) + ")");
  }
  if (family == ModelFamily::Cnn && conv_taps % 2 == 0)
    throw ValidationError("conv_taps must be odd");
}

namespace {

nn::VocabSizes vocab_sizes(const FeatureEncoding& enc) {
  return nn::VocabSizes{enc.miniapp_vocab_size(), enc.category_vocab_size(),
                        enc.button_vocab_size()};
}

NormalizationStats fit_norm_stats(const std::vector<EncodedSample>& samples) {
  double sum = 0.0, sum2 = 0.0;
  std::int64_t n = 0;
  for (const EncodedSample& s : samples) {
    for (int i = 0; i < s.indices.rows(); ++i) {
      if (s.indices(i, 0) == 0) continue;  // only real usage rows
      double f = s.frequency(i);
      sum += f;
      sum2 += f * f;
      ++n;
    }
  }
  if (n == 0) return NormalizationStats{0.0, 1.0};
  double mean = sum / n;
  double var = std::max(0.0, sum2 / n - mean * mean);
  return NormalizationStats{mean, std::max(std::sqrt(var), 1e-6)};
}

double batch_loss(const ArchitectureSpec& arch,
                  const nn::ParamSet<float>& params,
                  const NormalizationStats& norm,
                  const std::vector<const EncodedSample*>& batch,
                  const std::vector<int>& labels) {
  nn::Graph<float> g;
  auto in = nn::assemble_batch<float>(batch, norm);
  auto logits = nn::build_forward(g, params, arch, in, /*needs_grad=*/false);
  auto lbl = std::make_shared<const std::vector<int>>(labels);
  auto loss = nn::softmax_cross_entropy(g, logits, lbl);
  return static_cast<double>(loss->value(0, 0));
}

}  // namespace

Eigen::MatrixXd TrainedModel::forward(
    const std::vector<const EncodedSample*>& batch) const {
  if (batch.empty()) throw ValidationError("forward needs a non-empty batch");
  for (const EncodedSample* s : batch) {
    if (s->mask.size() != arch.sequence_length)
      throw ValidationError(
          "sample length " + std::to_string(s->mask.size()) +
          " does not match model sequence length " +
          std::to_string(arch.sequence_length));
  }
  nn::Graph<float> g;
  auto in = nn::assemble_batch<float>(batch, norm);
  auto logits = nn::build_forward(g, params, arch, in, /*needs_grad=*/false);
  Eigen::MatrixXd out = logits->value.cast<double>();
  if (!out.allFinite()) throw NumericalError("forward produced non-finite logits");
  return out;
}

Eigen::MatrixXd TrainedModel::forward_samples(
    const std::vector<const InteractionSample*>& samples) const {
  std::vector<EncodedSample> encoded;
  encoded.reserve(samples.size());
  std::vector<const EncodedSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const InteractionSample* s : samples) {
    encoded.push_back(encode_sample(*s, encoding, input_mode));
    ptrs.push_back(&encoded.back());
  }
  return forward(ptrs);
}

TrainedModel train(const ArchitectureSpec& arch, const DatasetSplit& split,
                   AttributeKind attribute, const FeatureEncoding& encoding,
                   InputMode input_mode, const TrainHyper& hyper) {
  arch.validate();
  if (hyper.optimizer != "adam")
    throw ValidationError("unsupported optimizer '" + hyper.optimizer + "'");
  if (split.train.empty()) throw ValidationError("training split is empty");
  if (split.validation.empty())
    throw ValidationError("validation split is empty");
  if (arch.output_classes != class_count(attribute))
    throw ValidationError(
        "output_classes (" + std::to_string(arch.output_classes) +
        ") must equal the class count of attribute '" +
        std::string(attribute_name(attribute)) + "'");

  auto encode_all = [&](const std::vector<LabeledSample>& rows,
                        std::vector<EncodedSample>& enc,
                        std::vector<int>& labels) {
    enc.reserve(rows.size());
    labels.reserve(rows.size());
    for (const LabeledSample& r : rows) {
      enc.push_back(encode_sample(r.sample, encoding, input_mode));
      labels.push_back(r.labels.at(attribute));
    }
  };
  std::vector<EncodedSample> train_enc, val_enc;
  std::vector<int> train_labels, val_labels;
  encode_all(split.train, train_enc, train_labels);
  encode_all(split.validation, val_enc, val_labels);

  TrainedModel model;
  model.arch = arch;
  model.attribute = attribute;
  model.input_mode = input_mode;
  model.encoding = encoding;
  model.norm = fit_norm_stats(train_enc);
  model.seed = hyper.seed;
  model.params = nn::init_params<float>(arch, vocab_sizes(encoding), hyper.seed);

  nn::Adam<float> adam(hyper.learning_rate);
  const int n = static_cast<int>(train_enc.size());
  const int bs = std::max(1, hyper.batch_size);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  double best_val = std::numeric_limits<double>::infinity();
  nn::ParamSet<float> best_params = model.params;

  auto eval_loss = [&](const std::vector<EncodedSample>& enc,
                       const std::vector<int>& labels) {
    double total = 0.0;
    int count = 0;
    const int eval_bs = 256;
    for (int start = 0; start < static_cast<int>(enc.size());
         start += eval_bs) {
      int end = std::min<int>(start + eval_bs, static_cast<int>(enc.size()));
      std::vector<const EncodedSample*> batch;
      std::vector<int> lbl;
      for (int i = start; i < end; ++i) {
        batch.push_back(&enc[i]);
        lbl.push_back(labels[i]);
      }
      total += batch_loss(arch, model.params, model.norm, batch, lbl) *
               (end - start);
      count += end - start;
    }
    return total / count;
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng shuffle_rng = substream(hyper.seed, "shuffle", epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    Rng dropout_rng = substream(hyper.seed, "dropout", epoch);
    nn::DropoutCtx dropout_ctx{hyper.dropout,
                               hyper.dropout > 0.0 ? &dropout_rng : nullptr};

    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += bs) {
      int end = std::min(start + bs, n);
      std::vector<const EncodedSample*> batch;
      std::vector<int> labels;
      batch.reserve(end - start);
      for (int i = start; i < end; ++i) {
        batch.push_back(&train_enc[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }

      nn::Graph<float> g;
      auto in = nn::assemble_batch<float>(batch, model.norm);
      std::vector<nn::NodeRef<float>> leaves;
      auto logits = nn::build_forward(g, model.params, arch, in,
                                      /*needs_grad=*/true, &leaves,
                                      dropout_ctx);
      auto lbl = std::make_shared<const std::vector<int>>(labels);
      auto loss = nn::softmax_cross_entropy(g, logits, lbl);
      double loss_v = loss->value(0, 0);
      if (!std::isfinite(loss_v))
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch));
      g.backward(loss);

      std::vector<nn::Mat<float>> grads;
      grads.reserve(leaves.size());
      for (auto& leaf : leaves) grads.push_back(std::move(leaf->grad));
      adam.step(model.params, grads);
      epoch_loss += loss_v * (end - start);
    }
    epoch_loss /= n;

    double val_loss = eval_loss(val_enc, val_labels);
    if (!std::isfinite(val_loss))
      throw NumericalError("training diverged: non-finite validation loss");
    model.training_log.push_back(TrainingLogEntry{epoch_loss, val_loss});
    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = model.params;
    }
  }

  model.params = std::move(best_params);
  return model;
}

// ---------------------------------------------------------------------------
// Gradient harness
// ---------------------------------------------------------------------------

namespace {

struct CheckSetup {
  ArchitectureSpec arch;
  nn::ParamSet<double> params;
  nn::BatchInput<double> input;
  std::shared_ptr<const std::vector<int>> labels;
};

CheckSetup make_check_setup(const ArchitectureSpec& base, std::uint64_t seed) {
  ArchitectureSpec arch = base;
  arch.sequence_length = std::min(arch.sequence_length, 6);
  arch.embedding_dims = EmbeddingDims{4, 3, 4};

  nn::VocabSizes vocab{6, 5, 5};
  CheckSetup setup;
  setup.arch = arch;
  setup.params = nn::init_params<double>(arch, vocab, seed);

  Rng rng = substream(seed, "gradcheck.data");
  const int batch = 2, seq = arch.sequence_length;
  auto indices = std::make_shared<Eigen::MatrixXi>(batch * seq, 3);
  auto freq = std::make_shared<nn::Vec<double>>(batch * seq);
  auto mask = std::make_shared<nn::Vec<double>>(batch * seq);
  for (int i = 0; i < batch * seq; ++i) {
    bool padding = rng.uniform() < 0.2;
    if (padding) {
      indices->row(i).setZero();
      (*freq)(i) = 0.0;
      (*mask)(i) = 0.0;
    } else {
      (*indices)(i, 0) = 1 + static_cast<int>(rng.below(vocab.miniapp - 1));
      (*indices)(i, 1) = 1 + static_cast<int>(rng.below(vocab.category - 1));
      (*indices)(i, 2) = 1 + static_cast<int>(rng.below(vocab.button - 1));
      (*freq)(i) = rng.normal();
      (*mask)(i) = 1.0;
    }
  }
  // Keep at least the first row of each sample valid.
  for (int b = 0; b < batch; ++b) {
    int i = b * seq;
    if ((*mask)(i) == 0.0) {
      indices->row(i).setConstant(1);
      (*freq)(i) = 0.5;
      (*mask)(i) = 1.0;
    }
  }
  setup.input.batch = batch;
  setup.input.seq = seq;
  setup.input.indices = std::move(indices);
  setup.input.freq = std::move(freq);
  setup.input.mask = std::move(mask);

  auto labels = std::make_shared<std::vector<int>>();
  for (int b = 0; b < batch; ++b)
    labels->push_back(static_cast<int>(rng.below(arch.output_classes)));
  setup.labels = std::move(labels);
  return setup;
}

double loss_at(CheckSetup& setup) {
  nn::Graph<double> g;
  auto logits = nn::build_forward(g, setup.params, setup.arch, setup.input,
                                  /*needs_grad=*/false);
  auto loss = nn::softmax_cross_entropy(g, logits, setup.labels);
  return loss->value(0, 0);
}

double run_gradient_check(const ArchitectureSpec& arch, std::uint64_t seed) {
  CheckSetup setup = make_check_setup(arch, seed);

  nn::Graph<double> g;
  std::vector<nn::NodeRef<double>> leaves;
  auto logits = nn::build_forward(g, setup.params, setup.arch, setup.input,
                                  /*needs_grad=*/true, &leaves);
  auto loss = nn::softmax_cross_entropy(g, logits, setup.labels);
  g.backward(loss);

  // Candidate coordinates with non-negligible analytic gradient, excluding
  // the frozen sentinel rows.
  struct Coord {
    int param;
    Eigen::Index r, c;
    double analytic;
  };
  std::vector<Coord> coords;
  for (std::size_t pi = 0; pi < leaves.size(); ++pi) {
    const auto& grad = leaves[pi]->grad;
    if (grad.size() == 0) continue;
    bool is_embedding = setup.params.names[pi].rfind("embed.", 0) == 0;
    for (Eigen::Index c = 0; c < grad.cols(); ++c)
      for (Eigen::Index r = 0; r < grad.rows(); ++r) {
        if (is_embedding && r == 0) continue;
        if (std::abs(grad(r, c)) < 1e-8) continue;
        coords.push_back(Coord{static_cast<int>(pi), r, c, grad(r, c)});
      }
  }
  Rng pick = substream(seed, "gradcheck.pick");
  std::shuffle(coords.begin(), coords.end(), pick.engine());
  if (coords.size() > 48) coords.resize(48);

  const double h = 1e-4;
  double max_rel = 0.0;
  for (const Coord& co : coords) {
    double& slot = setup.params.values[co.param](co.r, co.c);
    double saved = slot;
    slot = saved + h;
    double up = loss_at(setup);
    slot = saved - h;
    double down = loss_at(setup);
    slot = saved;
    double fd = (up - down) / (2.0 * h);
    double rel = std::abs(co.analytic - fd) /
                 std::max({std::abs(co.analytic), std::abs(fd), 1e-6});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace

double gradient_check(const ArchitectureSpec& arch, std::uint64_t seed) {
  if (arch.width > 16 || arch.depth > 2)
    throw ValidationError(
        "gradient_check expects a tiny model (width <= 16, depth <= 2)");
  return run_gradient_check(arch, seed);
}

double gradient_check_linear(std::uint64_t seed) {
  ArchitectureSpec arch;
  arch.family = ModelFamily::Linear;
  arch.depth = 1;
  arch.width = 8;
  arch.heads = 1;
  arch.output_classes = 3;
  arch.sequence_length = 6;
  return run_gradient_check(arch, seed);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'T', 'T', 'R', 'C', 'K', 'P', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const TrainedModel& model,
                     const std::filesystem::path& path) {
  json header;
  header["version"] = 1;
  header["family"] = std::string(family_name(model.arch.family));
  header["depth"] = model.arch.depth;
  header["width"] = model.arch.width;
  header["heads"] = model.arch.heads;
  header["ffn_multiplier"] = model.arch.ffn_multiplier;
  header["conv_taps"] = model.arch.conv_taps;
  header["output_classes"] = model.arch.output_classes;
  header["sequence_length"] = model.arch.sequence_length;
  header["embedding_dims"] = {model.arch.embedding_dims.miniapp,
                              model.arch.embedding_dims.category,
                              model.arch.embedding_dims.button};
  header["attribute"] = std::string(attribute_name(model.attribute));
  header["input_mode"] = std::string(input_mode_name(model.input_mode));
  header["norm_mean"] = model.norm.mean;
  header["norm_stddev"] = model.norm.stddev;
  header["miniapp_ids"] = model.encoding.miniapp_ids;
  header["button_ids"] = model.encoding.button_ids;
  header["seed"] = model.seed;
  header["config_hash"] = model.config_hash;
  json log = json::array();
  for (const auto& e : model.training_log)
    log.push_back({e.train_loss, e.validation_loss});
  header["training_log"] = std::move(log);
  json shapes = json::array();
  for (std::size_t i = 0; i < model.params.values.size(); ++i)
    shapes.push_back({model.params.names[i],
                      model.params.values[i].rows(),
                      model.params.values[i].cols()});
  header["params"] = std::move(shapes);

  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw ValidationError("cannot open checkpoint for writing: " +
                          path.string());
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::string hs = header.dump();
  write_raw<std::uint64_t>(os, hs.size());
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& v : model.params.values)
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(sizeof(float) * v.size()));
  if (!os) throw ValidationError("failed writing checkpoint: " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw MissingArtifactError("checkpoint not found: " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ValidationError("not a checkpoint file: " + path.string());
  auto header_len = read_raw<std::uint64_t>(is);
  std::string hs(header_len, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(header_len));
  json header = json::parse(hs);

  TrainedModel model;
  model.arch.family = family_from_name(header.at("family").get<std::string>());
  model.arch.depth = header.at("depth").get<int>();
  model.arch.width = header.at("width").get<int>();
  model.arch.heads = header.at("heads").get<int>();
  model.arch.ffn_multiplier = header.at("ffn_multiplier").get<int>();
  model.arch.conv_taps = header.at("conv_taps").get<int>();
  model.arch.output_classes = header.at("output_classes").get<int>();
  model.arch.sequence_length = header.at("sequence_length").get<int>();
  auto dims = header.at("embedding_dims");
  model.arch.embedding_dims =
      EmbeddingDims{dims.at(0).get<int>(), dims.at(1).get<int>(),
                    dims.at(2).get<int>()};
  model.attribute =
      attribute_from_name(header.at("attribute").get<std::string>());
  model.input_mode =
      input_mode_from_name(header.at("input_mode").get<std::string>());
  model.norm.mean = header.at("norm_mean").get<double>();
  model.norm.stddev = header.at("norm_stddev").get<double>();
  model.encoding.miniapp_ids =
      header.at("miniapp_ids").get<std::vector<int>>();
  model.encoding.button_ids = header.at("button_ids").get<std::vector<int>>();
  model.encoding.dims = model.arch.embedding_dims;
  model.encoding.rebuild_maps();
  model.seed = header.at("seed").get<std::uint64_t>();
  model.config_hash = header.at("config_hash").get<std::string>();
  for (const auto& e : header.at("training_log"))
    model.training_log.push_back(
        TrainingLogEntry{e.at(0).get<double>(), e.at(1).get<double>()});

  for (const auto& p : header.at("params")) {
    std::string name = p.at(0).get<std::string>();
    auto rows = p.at(1).get<Eigen::Index>();
    auto cols = p.at(2).get<Eigen::Index>();
    nn::Mat<float> m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * m.size()));
    model.params.add(std::move(name), std::move(m));
  }
  if (!is) throw ValidationError("truncated checkpoint: " + path.string());
  return model;
}

}  // namespace attrinf
