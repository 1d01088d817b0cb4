#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attrinf/domain.hpp"
#include "attrinf/encoder.hpp"
#include "attrinf/stats.hpp"

namespace attrinf {

struct RunConfig;

// One scored prediction against ground truth.
struct DecisionWithTruth {
  double confidence = 0.0;
  int predicted = 0;
  int true_class = 0;
};

// One 10%-wide confidence interval. p_int is the fraction of all samples
// landing in the bin, p_conf the fraction of all samples in the bin that
// are also correct, acc_int their ratio (absent for empty bins, never
// zero-filled).
struct BinRow {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t count = 0;
  double p_int = 0.0;
  double p_conf = 0.0;
  std::optional<double> acc_int;
  std::optional<double> mean_confidence;
};

inline constexpr int kNumBins = 10;

// Splits confidences into ten bins [0,0.1) .. [0.9,1.0]; a confidence on a
// bin edge goes to the upper bin and the top bin is closed at 1.
std::vector<BinRow> bin_analysis(const std::vector<DecisionWithTruth>& rows);

// Metrics over the subset with confidence >= threshold, macro-averaged over
// the classes for which they are defined. All optionals are absent when the
// subset is empty.
struct SubsetMetrics {
  double phc = 0.0;  // fraction of all samples clearing the threshold
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

SubsetMetrics subset_metrics(const std::vector<DecisionWithTruth>& rows,
                             double threshold, int classes);

// Pearson r between bin mean confidence and bin accuracy over non-empty
// bins; absent with fewer than two usable bins or zero variance.
std::optional<double> confidence_accuracy_correlation(
    const std::vector<BinRow>& bins);

// Chi-square test of the observed correct/incorrect split against the
// accuracy of always guessing the largest prior class.
ChiSquareResult chi_square_vs_random(const std::vector<DecisionWithTruth>& rows,
                                     const std::vector<double>& prior);

struct AttributeReport {
  std::string attribute;
  std::int64_t num_samples = 0;
  double threshold = 0.9;
  double overall_accuracy = 0.0;
  std::vector<BinRow> bins;
  SubsetMetrics subset;
  std::optional<double> pearson_r;
  double baseline_accuracy = 0.0;
  ChiSquareResult chi_square_vs_baseline;
};

AttributeReport evaluate_attribute(AttributeKind kind,
                                   const std::vector<DecisionWithTruth>& rows,
                                   const std::vector<double>& prior,
                                   double threshold);

// ---------------------------------------------------------------------------
// Ablation grids
// ---------------------------------------------------------------------------

struct AblationCell {
  std::string dimension;  // "threshold" | "input_mode" | "sequence_length"
  double threshold = 0.9;
  InputMode input_mode = InputMode::Fused;
  int sequence_length = 200;
  std::string attribute;
  bool failed = false;
  std::string error;
  AttributeReport report;  // valid when !failed
};

struct AblationGrid {
  std::vector<AblationCell> cells;
};

// Runs the three one-dimensional sweeps (decision threshold, input
// ablation, sequence length) around the base configuration. Each cell
// carries a full report; cells that fail are marked and do not abort the
// grid. Deterministic for a fixed config seed.
AblationGrid run_ablations(const RunConfig& config);

}  // namespace attrinf
