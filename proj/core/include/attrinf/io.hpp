#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attrinf/domain.hpp"
#include "attrinf/eval.hpp"
#include "attrinf/inference.hpp"

namespace attrinf {

// Every artifact starts with a header record embedding the resolved config
// hash and seed, so artifacts from different runs cannot be mixed silently.
struct ArtifactHeader {
  std::string kind;  // "dataset" | "decisions"
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string split;          // datasets
  std::string attribute;      // decision streams
  double threshold = 0.0;     // decision streams
  int sequence_length = 0;    // datasets
  int slot_duration_ms = 0;   // datasets
};

// Line-delimited dataset: one header line, then one sample per line with
// user id, the seven labels, the usage-history triples, and the dense click
// slot array. Writing requires complete label maps; reading tolerates
// absent labels (attack-target data) and leaves the map incomplete.
void write_dataset(const std::filesystem::path& path,
                   const ArtifactHeader& header,
                   const std::vector<LabeledSample>& samples);

std::vector<LabeledSample> read_dataset(const std::filesystem::path& path,
                                        ArtifactHeader* header_out = nullptr);

struct DecisionRecord {
  std::string user_id;
  int sample_index = 0;
  bool unknown = true;
  int class_index = -1;  // emitted label; -1 when unknown
  int argmax = 0;        // raw argmax, always present
  double confidence = 0.0;
};

void write_decisions(const std::filesystem::path& path,
                     const ArtifactHeader& header,
                     const std::vector<DecisionRecord>& records);

std::vector<DecisionRecord> read_decisions(
    const std::filesystem::path& path, ArtifactHeader* header_out = nullptr);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalReportFile {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<AttributeReport> attributes;
  double average_accuracy = 0.0;
  double average_phc = 0.0;
};

void write_eval_report(const std::filesystem::path& path,
                       const EvalReportFile& report);
EvalReportFile read_eval_report(const std::filesystem::path& path);

// One row per (attribute, bin): machine-readable bin table.
void write_bins_csv(const std::filesystem::path& path,
                    const EvalReportFile& report);

// Plot description: per attribute the bin centers, the two bar series
// (p_int, p_conf) and the accuracy line, consumable by any plotting tool.
void write_plot_description(const std::filesystem::path& path,
                            const EvalReportFile& report);

void write_ablation_report(const std::filesystem::path& path,
                           const std::string& config_hash, std::uint64_t seed,
                           const AblationGrid& grid);
AblationGrid read_ablation_report(const std::filesystem::path& path);

void write_cells_csv(const std::filesystem::path& path,
                     const AblationGrid& grid);

// Human-readable rendering of an evaluation report.
std::string format_eval_report(const EvalReportFile& report);

}  // namespace attrinf
