#include "attrinf/inference.hpp"

#include <string>

#include "attrinf/common.hpp"

namespace attrinf {

void CalibratedClassifier::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ValidationError("decision threshold must lie in (0, 1), got " +
                          std::to_string(threshold));
  int k = calibrator.classes();
  if (k >= 0 && k != model.arch.output_classes)
    throw ValidationError("calibrator and model class counts differ");
}

SelectiveDecision decide_from_calibrated(const CalibrationResult& calibrated,
                                         AttributeKind attribute,
                                         double threshold) {
  SelectiveDecision d;
  d.confidence = calibrated.confidence;
  d.argmax = calibrated.argmax;
  if (calibrated.confidence >= threshold)
    d.label = AttributeLabel{attribute, calibrated.argmax};
  return d;
}

SelectiveDecision decide(const CalibratedClassifier& clf,
                         const InteractionSample& sample) {
  clf.validate();
  Eigen::MatrixXd logits = clf.model.forward_samples({&sample});
  CalibrationResult cal = clf.calibrator.apply(logits.row(0).transpose());
  return decide_from_calibrated(cal, clf.model.attribute, clf.threshold);
}

BatchDecisions decide_batch(
    const CalibratedClassifier& clf,
    const std::vector<const InteractionSample*>& samples) {
  clf.validate();
  BatchDecisions out;
  out.decisions.reserve(samples.size());
  if (samples.empty()) return out;

  const int kBatch = 256;
  int labeled = 0;
  for (std::size_t start = 0; start < samples.size(); start += kBatch) {
    std::size_t end = std::min(samples.size(), start + kBatch);
    std::vector<const InteractionSample*> chunk(samples.begin() + start,
                                                samples.begin() + end);
    Eigen::MatrixXd logits = clf.model.forward_samples(chunk);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      CalibrationResult cal = clf.calibrator.apply(logits.row(i).transpose());
      SelectiveDecision d =
          decide_from_calibrated(cal, clf.model.attribute, clf.threshold);
      if (!d.unknown()) ++labeled;
      out.decisions.push_back(std::move(d));
    }
  }
  out.coverage = static_cast<double>(labeled) /
                 static_cast<double>(samples.size());
  return out;
}

}  // namespace attrinf
