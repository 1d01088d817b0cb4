#pragma once

#include <Eigen/Core>

#include <string_view>
#include <unordered_map>
#include <vector>

#include "attrinf/domain.hpp"

namespace attrinf {

// Which part of the fused grid feeds the model. MiniHOnly zeroes the button
// column; OpHOnly zeroes the mini-app/category/frequency columns. Shapes
// stay identical across modes.
enum class InputMode : int {
  Fused = 0,
  MiniHOnly,
  OpHOnly,
};

std::string_view input_mode_name(InputMode mode);
InputMode input_mode_from_name(std::string_view name);

struct EmbeddingDims {
  int miniapp = 16;
  int category = 8;
  int button = 16;

  // Token width: three embedded columns plus the scalar frequency channel.
  int token() const { return miniapp + category + button + 1; }
};

// Dense index maps from catalog ids. Index 0 is reserved for the padding /
// no-click sentinel in both vocabularies; real ids are assigned 1.. in
// ascending id order, so the encoding is a pure function of the catalog.
struct FeatureEncoding {
  std::vector<int> miniapp_ids;  // ascending; dense index = position + 1
  std::vector<int> button_ids;
  EmbeddingDims dims;

  std::unordered_map<int, int> miniapp_index;
  std::unordered_map<int, int> button_index;

  int miniapp_vocab_size() const {
    return static_cast<int>(miniapp_ids.size()) + 1;
  }
  int button_vocab_size() const {
    return static_cast<int>(button_ids.size()) + 1;
  }
  // Category codes are already dense (1..28); 0 is the sentinel.
  int category_vocab_size() const { return kNumCategories + 1; }

  void rebuild_maps();
};

FeatureEncoding build_encoding(const MiniAppCatalog& catalog,
                               EmbeddingDims dims = {});

// One encoded sample: per row the dense mini-app/category/button indices,
// the log1p-transformed access count, and the padding mask (1 = real row).
// A row is padding exactly when both the mini-app and button indices are 0
// after the input mode is applied.
struct EncodedSample {
  Eigen::Matrix<int, Eigen::Dynamic, 3> indices;  // S x (miniapp, cat, button)
  Eigen::VectorXf frequency;                      // log1p(access_count)
  Eigen::VectorXf mask;                           // 1.0 real, 0.0 padding
};

EncodedSample encode_sample(const InteractionSample& sample,
                            const FeatureEncoding& enc,
                            InputMode mode = InputMode::Fused);

}  // namespace attrinf
