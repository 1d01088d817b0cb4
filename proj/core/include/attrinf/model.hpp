#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "attrinf/domain.hpp"
#include "attrinf/encoder.hpp"
#include "attrinf/nn/params.hpp"

namespace attrinf {

enum class ModelFamily : int {
  Transformer = 0,
  Cnn,
  Rnn,
  // Embeddings -> masked mean pool -> linear head; used by the gradient
  // harness as the exactly-differentiable baseline.
  Linear,
};

std::string_view family_name(ModelFamily family);
ModelFamily family_from_name(std::string_view name);

struct ArchitectureSpec {
  ModelFamily family = ModelFamily::Transformer;
  int depth = 2;   // encoder layers / residual blocks / recurrent layers
  int width = 64;  // hidden size
  int heads = 4;   // transformer only; must divide width
  int ffn_multiplier = 2;
  int conv_taps = 3;
  int output_classes = 2;
  int sequence_length = 200;
  EmbeddingDims embedding_dims{};

  void validate() const;
};

// Frequency-channel standardization fitted on the training split and stored
// with the model.
struct NormalizationStats {
  double mean = 0.0;
  double stddev = 1.0;
};

struct TrainHyper {
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 32;
  double dropout = 0.0;
  std::uint64_t seed = 0;
};

struct TrainingLogEntry {
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

class TrainedModel {
 public:
  ArchitectureSpec arch;
  AttributeKind attribute = AttributeKind::Gender;
  InputMode input_mode = InputMode::Fused;
  FeatureEncoding encoding;
  NormalizationStats norm;
  nn::ParamSet<float> params;
  std::vector<TrainingLogEntry> training_log;
  std::uint64_t seed = 0;
  std::string config_hash;

  // Logits for a batch of encoded samples (rows match batch order).
  Eigen::MatrixXd forward(
      const std::vector<const EncodedSample*>& batch) const;
  Eigen::MatrixXd forward_samples(
      const std::vector<const InteractionSample*>& samples) const;
};

inline Eigen::MatrixXd forward(const TrainedModel& model,
                               const std::vector<const EncodedSample*>& batch) {
  return model.forward(batch);
}

// Trains one per-attribute classifier on the split's train set, monitoring
// validation loss each epoch and returning the parameters of the best
// validation epoch. Deterministic for a fixed hyper.seed. Throws
// NumericalError if the loss stops being finite.
TrainedModel train(const ArchitectureSpec& arch, const DatasetSplit& split,
                   AttributeKind attribute, const FeatureEncoding& encoding,
                   InputMode input_mode, const TrainHyper& hyper);

// Max relative disagreement between backprop gradients and central finite
// differences (step 1e-4) on a random parameter subset of a tiny instance
// of the given family.
double gradient_check(const ArchitectureSpec& arch, std::uint64_t seed);

// Same harness on the embeddings->pool->head model.
double gradient_check_linear(std::uint64_t seed);

// Versioned binary checkpoint; parameters round-trip bit-exactly.
void save_checkpoint(const TrainedModel& model,
                     const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace attrinf
