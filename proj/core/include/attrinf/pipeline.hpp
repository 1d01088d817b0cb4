#pragma once

#include <filesystem>
#include <optional>

#include "attrinf/config.hpp"

namespace attrinf {

// Artifact locations inside a run directory.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path resolved_config() const {
    return root / "config.resolved.json";
  }
  std::filesystem::path dataset(const std::string& split) const {
    return root / "dataset" / (split + ".jsonl");
  }
  std::filesystem::path marginals_summary() const {
    return root / "dataset" / "marginals.json";
  }
  std::filesystem::path checkpoint(AttributeKind kind) const {
    return root / "models" /
           (std::string(attribute_name(kind)) + ".ckpt");
  }
  std::filesystem::path calibrator(AttributeKind kind) const {
    return root / "calibrators" /
           (std::string(attribute_name(kind)) + ".cal.json");
  }
  std::filesystem::path decisions(AttributeKind kind) const {
    return root / "decisions" /
           (std::string(attribute_name(kind)) + ".jsonl");
  }
  std::filesystem::path eval_report() const {
    return root / "reports" / "eval.json";
  }
  std::filesystem::path bins_csv() const {
    return root / "reports" / "bins.csv";
  }
  std::filesystem::path plots() const {
    return root / "reports" / "plots.json";
  }
  std::filesystem::path ablation_report() const {
    return root / "reports" / "ablation.json";
  }
  std::filesystem::path cells_csv() const {
    return root / "reports" / "cells.csv";
  }
};

RunPaths run_paths(const RunConfig& config);

// Attribute filter: empty means every attribute in the config.
using AttributeFilter = std::optional<AttributeKind>;

// Pipeline stages. Each stage validates the config, reads only declared
// upstream artifacts (raising MissingArtifactError naming the stage to run
// first), and writes its artifacts with the config hash embedded. Stages
// are deterministic: rerunning one with unchanged inputs rewrites
// byte-identical outputs.
void run_generate(const RunConfig& config);
void run_train(const RunConfig& config, AttributeFilter filter = {});
void run_calibrate(const RunConfig& config, AttributeFilter filter = {});
void run_infer(const RunConfig& config, AttributeFilter filter = {});
void run_eval(const RunConfig& config, AttributeFilter filter = {});
void run_ablate(const RunConfig& config);
// Renders reports/eval.json as text (returned) and refreshes the derived
// table/plot files.
std::string run_report(const RunConfig& config);

// Calibrator bundle persistence (JSON; exact double round-trip).
void save_calibrator(const Calibrator& cal, AttributeKind kind,
                     const std::string& config_hash, std::uint64_t seed,
                     const std::filesystem::path& path);
Calibrator load_calibrator(const std::filesystem::path& path,
                           AttributeKind* kind_out = nullptr);

}  // namespace attrinf
