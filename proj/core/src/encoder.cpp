#include "attrinf/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrinf/common.hpp"

namespace attrinf {

std::string_view input_mode_name(InputMode mode) {
  switch (mode) {
    case InputMode::Fused:
      return "fused";
    case InputMode::MiniHOnly:
      return "mini_h_only";
    case InputMode::OpHOnly:
      return "op_h_only";
  }
  throw ValidationError("invalid input mode");
}

InputMode input_mode_from_name(std::string_view name) {
  if (name == "fused") return InputMode::Fused;
  if (name == "mini_h_only") return InputMode::MiniHOnly;
  if (name == "op_h_only") return InputMode::OpHOnly;
  throw ValidationError("unknown input mode '" + std::string(name) + "'");
}

void FeatureEncoding::rebuild_maps() {
  miniapp_index.clear();
  button_index.clear();
  miniapp_index.reserve(miniapp_ids.size() + 1);
  button_index.reserve(button_ids.size() + 1);
  miniapp_index.emplace(0, 0);
  button_index.emplace(0, 0);
  for (std::size_t i = 0; i < miniapp_ids.size(); ++i)
    miniapp_index.emplace(miniapp_ids[i], static_cast<int>(i) + 1);
  for (std::size_t i = 0; i < button_ids.size(); ++i)
    button_index.emplace(button_ids[i], static_cast<int>(i) + 1);
}

FeatureEncoding build_encoding(const MiniAppCatalog& catalog,
                               EmbeddingDims dims) {
  FeatureEncoding enc;
  enc.dims = dims;
  enc.miniapp_ids.reserve(catalog.miniapps().size());
  for (const MiniAppEntry& m : catalog.miniapps())
    enc.miniapp_ids.push_back(m.miniapp_id);
  std::sort(enc.miniapp_ids.begin(), enc.miniapp_ids.end());
  enc.button_ids.reserve(catalog.buttons().size());
  for (const ButtonEntry& b : catalog.buttons())
    enc.button_ids.push_back(b.button_id);
  std::sort(enc.button_ids.begin(), enc.button_ids.end());
  enc.rebuild_maps();
  return enc;
}

EncodedSample encode_sample(const InteractionSample& sample,
                            const FeatureEncoding& enc, InputMode mode) {
  const int rows = sample.rows();
  EncodedSample out;
  out.indices.resize(rows, 3);
  out.frequency.resize(rows);
  out.mask.resize(rows);

  for (int i = 0; i < rows; ++i) {
    auto row = sample.fused_row(i);
    if (mode == InputMode::OpHOnly) {
      row.miniapp_id = 0;
      row.category_code = 0;
      row.access_count = 0;
    }
    if (mode == InputMode::MiniHOnly) row.button_id = 0;

    auto mit = enc.miniapp_index.find(row.miniapp_id);
    if (mit == enc.miniapp_index.end())
      throw ValidationError("unknown mini-app id " +
                            std::to_string(row.miniapp_id) +
                            " in column 0 at row " + std::to_string(i));
    auto bit = enc.button_index.find(row.button_id);
    if (bit == enc.button_index.end())
      throw ValidationError("unknown button id " +
                            std::to_string(row.button_id) +
                            " in column 3 at row " + std::to_string(i));
    if (row.category_code < 0 || row.category_code > kNumCategories)
      throw ValidationError("unknown category code " +
                            std::to_string(row.category_code) +
                            " in column 1 at row " + std::to_string(i));
    if (row.access_count < 0)
      throw ValidationError("negative access count in column 2 at row " +
                            std::to_string(i));

    out.indices(i, 0) = mit->second;
    out.indices(i, 1) = row.category_code;
    out.indices(i, 2) = bit->second;
    out.frequency(i) = static_cast<float>(
        std::log1p(static_cast<double>(row.access_count)));
    out.mask(i) =
        (mit->second == 0 && bit->second == 0) ? 0.0f : 1.0f;
  }
  return out;
}

}  // namespace attrinf
