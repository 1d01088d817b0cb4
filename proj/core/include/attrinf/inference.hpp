#pragma once

#include <optional>
#include <vector>

#include "attrinf/calibration.hpp"
#include "attrinf/domain.hpp"
#include "attrinf/model.hpp"

namespace attrinf {

// The deployable object: trained backbone, fitted calibrator, and decision
// threshold.
struct CalibratedClassifier {
  TrainedModel model;
  Calibrator calibrator;
  double threshold = 0.9;  // in (0, 1)

  void validate() const;
};

// Either "unknown" or a label with its calibrated confidence. A label is
// emitted exactly when confidence >= threshold, so `label` implies
// confidence >= t_d. The raw argmax and confidence are always recorded.
struct SelectiveDecision {
  std::optional<AttributeLabel> label;
  double confidence = 0.0;
  int argmax = 0;

  bool unknown() const { return !label.has_value(); }
};

SelectiveDecision decide(const CalibratedClassifier& clf,
                         const InteractionSample& sample);

struct BatchDecisions {
  std::vector<SelectiveDecision> decisions;  // order-preserving
  double coverage = 0.0;  // fraction of non-unknown decisions
};

BatchDecisions decide_batch(const CalibratedClassifier& clf,
                            const std::vector<const InteractionSample*>& samples);

// Decision rule applied to already-calibrated output; shared by decide()
// and replay paths.
SelectiveDecision decide_from_calibrated(const CalibrationResult& calibrated,
                                         AttributeKind attribute,
                                         double threshold);

}  // namespace attrinf
