#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attrinf/calibration.hpp"
#include "attrinf/domain.hpp"
#include "attrinf/encoder.hpp"
#include "attrinf/model.hpp"
#include "attrinf/personas.hpp"

namespace attrinf {

struct CatalogConfig {
  int num_miniapps = 300;
  int num_buttons = 60;
};

struct PopulationConfig {
  int train_users = 200;
  int validation_users = 200;
  int test_users = 1000;
  int samples_per_user = 5;
  double signal_strength = 1.0;
  std::array<std::vector<double>, kNumAttributes> marginals =
      default_marginals();
  bool shared_mini_h = true;
  double background_category_rate = 0.0;
};

struct ModelConfig {
  ModelFamily family = ModelFamily::Transformer;
  int depth = 2;
  int width = 64;
  int heads = 4;
  int ffn_multiplier = 2;
  int conv_taps = 3;
  EmbeddingDims embedding_dims{};
};

struct TrainingConfig {
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 32;
  double dropout = 0.0;
};

struct AblationConfig {
  std::vector<double> thresholds = {0.7, 0.8, 0.9};
  std::vector<InputMode> input_modes = {InputMode::Fused, InputMode::MiniHOnly,
                                        InputMode::OpHOnly};
  std::vector<int> sequence_lengths = {100, 200, 400};
  // Attributes swept; empty means the run's attribute list.
  std::vector<AttributeKind> attributes;
  // Cheaper per-cell overrides; <= 0 means inherit the base value.
  int epochs = -1;
  int test_users = -1;
  int workers = 2;
};

// The resolved run description. Every stage derives its inputs from this
// struct; the resolved JSON (with every default made explicit) and its hash
// are embedded in all artifacts.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";
  CatalogConfig catalog;
  PopulationConfig population;
  int sequence_length = 200;
  int slot_duration_ms = 500;
  InputMode input_mode = InputMode::Fused;
  std::vector<AttributeKind> attributes{kAllAttributes.begin(),
                                        kAllAttributes.end()};
  ModelConfig model;
  TrainingConfig training;
  CalibratorVariant calibrator = CalibratorVariant::Temperature;
  double threshold = 0.9;
  AblationConfig ablation;
  // Optional persona overrides; absent entries keep the defaults.
  PersonaSet personas = default_personas();

  void validate() const;

  // Fully resolved JSON text (every field explicit, stable key order).
  std::string to_json_string(int indent = 2) const;
  static RunConfig from_json_string(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // FNV-1a 64 of the resolved JSON, as 16 hex digits.
  std::string hash() const;

  // Derived views.
  PopulationSpec population_spec(int num_users) const;
  GenOptions gen_options() const;
  ArchitectureSpec architecture(AttributeKind kind) const;
  TrainHyper train_hyper(AttributeKind kind) const;
};

}  // namespace attrinf
