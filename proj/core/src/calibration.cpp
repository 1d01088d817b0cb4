#include "attrinf/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "attrinf/common.hpp"

namespace attrinf {

std::string_view calibrator_variant_name(CalibratorVariant v) {
  switch (v) {
    case CalibratorVariant::Temperature:
      return "temperature";
    case CalibratorVariant::Vector:
      return "vector";
    case CalibratorVariant::Matrix:
      return "matrix";
  }
  throw ValidationError("invalid calibrator variant");
}

CalibratorVariant calibrator_variant_from_name(std::string_view name) {
  if (name == "temperature") return CalibratorVariant::Temperature;
  if (name == "vector") return CalibratorVariant::Vector;
  if (name == "matrix") return CalibratorVariant::Matrix;
  throw ValidationError("unknown calibrator variant '" + std::string(name) +
                        "'");
}

Calibrator Calibrator::temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw ValidationError("temperature must be positive and finite");
  Calibrator c;
  c.variant_ = CalibratorVariant::Temperature;
  c.t_ = t;
  return c;
}

Calibrator Calibrator::vector(Eigen::VectorXd w, Eigen::VectorXd b) {
  if (w.size() != b.size() || w.size() < 2)
    throw ValidationError("vector calibrator needs matching w/b of size >= 2");
  Calibrator c;
  c.variant_ = CalibratorVariant::Vector;
  c.w_vec_ = std::move(w);
  c.b_ = std::move(b);
  return c;
}

Calibrator Calibrator::matrix(Eigen::MatrixXd w, Eigen::VectorXd b) {
  if (w.rows() != w.cols() || w.rows() != b.size() || w.rows() < 2)
    throw ValidationError("matrix calibrator needs square W matching b");
  Calibrator c;
  c.variant_ = CalibratorVariant::Matrix;
  c.w_mat_ = std::move(w);
  c.b_ = std::move(b);
  return c;
}

Calibrator Calibrator::identity(CalibratorVariant variant, int classes) {
  switch (variant) {
    case CalibratorVariant::Temperature:
      return temperature(1.0);
    case CalibratorVariant::Vector:
      return vector(Eigen::VectorXd::Ones(classes),
                    Eigen::VectorXd::Zero(classes));
    case CalibratorVariant::Matrix:
      return matrix(Eigen::MatrixXd::Identity(classes, classes),
                    Eigen::VectorXd::Zero(classes));
  }
  throw ValidationError("invalid calibrator variant");
}

double Calibrator::temperature_value() const {
  if (variant_ != CalibratorVariant::Temperature)
    throw ValidationError("not a temperature calibrator");
  return t_;
}

int Calibrator::classes() const {
  switch (variant_) {
    case CalibratorVariant::Temperature:
      return -1;  // any
    case CalibratorVariant::Vector:
      return static_cast<int>(w_vec_.size());
    case CalibratorVariant::Matrix:
      return static_cast<int>(w_mat_.rows());
  }
  return -1;
}

namespace {

Eigen::VectorXd transform_logits(const Calibrator& cal,
                                 const Eigen::VectorXd& logits) {
  switch (cal.variant()) {
    case CalibratorVariant::Temperature:
      return logits / cal.temperature_value();
    case CalibratorVariant::Vector:
      if (cal.vector_scale().size() != logits.size())
        throw ValidationError("vector calibrator class count mismatch");
      return cal.vector_scale().cwiseProduct(logits) + cal.bias();
    case CalibratorVariant::Matrix:
      if (cal.matrix_weights().rows() != logits.size())
        throw ValidationError("matrix calibrator class count mismatch");
      return cal.matrix_weights() * logits + cal.bias();
  }
  throw ValidationError("invalid calibrator variant");
}

// Stable log-softmax.
Eigen::VectorXd log_softmax(const Eigen::VectorXd& z) {
  double m = z.maxCoeff();
  double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

}  // namespace

CalibrationResult Calibrator::apply(const Eigen::VectorXd& logits) const {
  if (logits.size() < 2)
    throw ValidationError("apply needs at least two logits");
  if (!logits.allFinite())
    throw NumericalError("apply requires finite logits");
  Eigen::VectorXd z = transform_logits(*this, logits);
  Eigen::VectorXd logp = log_softmax(z);
  CalibrationResult res;
  res.probabilities = logp.array().exp();
  res.confidence = 0.0;
  res.argmax = 0;
  for (int i = 0; i < res.probabilities.size(); ++i) {
    if (res.probabilities(i) > res.confidence) {
      res.confidence = res.probabilities(i);
      res.argmax = i;
    }
  }
  return res;
}

double calibrated_nll(const Calibrator& cal, const Eigen::MatrixXd& logits,
                      const std::vector<int>& labels) {
  if (logits.rows() != static_cast<Eigen::Index>(labels.size()) ||
      logits.rows() == 0)
    throw ValidationError("nll needs one label per logit row");
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::VectorXd z = transform_logits(cal, logits.row(i).transpose());
    total -= log_softmax(z)(labels[i]);
  }
  return total / static_cast<double>(logits.rows());
}

namespace {

// NLL as a function of temperature, for the golden-section search.
double temperature_nll(const Eigen::MatrixXd& logits,
                       const std::vector<int>& labels, double t) {
  return calibrated_nll(Calibrator::temperature(t), logits, labels);
}

Calibrator fit_temperature(const Eigen::MatrixXd& logits,
                           const std::vector<int>& labels,
                           std::vector<double>& log) {
  const double lo = std::log(0.05), hi = std::log(20.0);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = temperature_nll(logits, labels, std::exp(c));
  double fd = temperature_nll(logits, labels, std::exp(d));
  log.push_back(fc);
  while (b - a > 1e-4) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = temperature_nll(logits, labels, std::exp(c));
      log.push_back(fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = temperature_nll(logits, labels, std::exp(d));
      log.push_back(fd);
    }
  }
  double t = std::exp((a + b) / 2.0);
  // Never regress past the uncalibrated baseline.
  if (temperature_nll(logits, labels, t) >
      temperature_nll(logits, labels, 1.0))
    t = 1.0;
  return Calibrator::temperature(t);
}

constexpr double kMatrixOffDiagL2 = 1e-3;
constexpr int kAffineSteps = 500;
constexpr double kAffineLr = 1e-2;

// Full-batch gradient descent on NLL (+ off-diagonal L2 for the matrix
// variant), initialized at the identity. The best iterate by penalized
// objective is returned; since the identity has zero penalty, its plain NLL
// bounds the result from above.
Calibrator fit_affine(CalibratorVariant variant, const Eigen::MatrixXd& logits,
                      const std::vector<int>& labels,
                      std::vector<double>& log) {
  const int k = static_cast<int>(logits.cols());
  const Eigen::Index n = logits.rows();
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);

  auto objective = [&](const Eigen::MatrixXd& wm, const Eigen::VectorXd& bv,
                       double* nll_out) {
    Calibrator cal = variant == CalibratorVariant::Vector
                         ? Calibrator::vector(wm.diagonal(), bv)
                         : Calibrator::matrix(wm, bv);
    double nll = calibrated_nll(cal, logits, labels);
    if (nll_out) *nll_out = nll;
    double penalty = 0.0;
    if (variant == CalibratorVariant::Matrix) {
      Eigen::MatrixXd off = wm;
      off.diagonal().setZero();
      penalty = kMatrixOffDiagL2 * off.squaredNorm();
    }
    return nll + penalty;
  };

  Eigen::MatrixXd best_w = w;
  Eigen::VectorXd best_b = b;
  double best_obj = objective(w, b, nullptr);
  log.push_back(best_obj);

  for (int step = 0; step < kAffineSteps; ++step) {
    Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd o = logits.row(i).transpose();
      Eigen::VectorXd z = variant == CalibratorVariant::Vector
                              ? (w.diagonal().cwiseProduct(o) + b).eval()
                              : (w * o + b).eval();
      Eigen::VectorXd p = log_softmax(z).array().exp();
      p(labels[i]) -= 1.0;
      grad_b += p;
      if (variant == CalibratorVariant::Vector)
        grad_w.diagonal() += p.cwiseProduct(o);
      else
        grad_w += p * o.transpose();
    }
    grad_w /= static_cast<double>(n);
    grad_b /= static_cast<double>(n);
    if (variant == CalibratorVariant::Matrix) {
      Eigen::MatrixXd off = w;
      off.diagonal().setZero();
      grad_w += 2.0 * kMatrixOffDiagL2 * off;
    }
    w -= kAffineLr * grad_w;
    b -= kAffineLr * grad_b;

    double obj = objective(w, b, nullptr);
    log.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }
  return variant == CalibratorVariant::Vector
             ? Calibrator::vector(best_w.diagonal(), best_b)
             : Calibrator::matrix(best_w, best_b);
}

}  // namespace

Calibrator fit_on_logits(CalibratorVariant variant,
                         const Eigen::MatrixXd& logits,
                         const std::vector<int>& labels) {
  if (logits.rows() == 0) throw ValidationError("cannot fit on an empty set");
  if (logits.rows() != static_cast<Eigen::Index>(labels.size()))
    throw ValidationError("fit needs one label per logit row");
  if (!logits.allFinite())
    throw NumericalError("fit requires finite logits");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= logits.cols())
      throw ValidationError("fit label out of range at row " +
                            std::to_string(i));

  std::vector<double> log;
  Calibrator cal = variant == CalibratorVariant::Temperature
                       ? fit_temperature(logits, labels, log)
                       : fit_affine(variant, logits, labels, log);
  cal.fit_log_ = std::move(log);
  return cal;
}

Calibrator fit(CalibratorVariant variant, const TrainedModel& model,
               const std::vector<LabeledSample>& validation) {
  if (validation.empty())
    throw ValidationError("cannot fit a calibrator on an empty validation set");
  std::vector<const InteractionSample*> samples;
  std::vector<int> labels;
  samples.reserve(validation.size());
  for (const LabeledSample& s : validation) {
    samples.push_back(&s.sample);
    labels.push_back(s.labels.at(model.attribute));
  }
  Eigen::MatrixXd logits = model.forward_samples(samples);
  return fit_on_logits(variant, logits, labels);
}

double ece(const std::vector<std::pair<double, bool>>& confidence_correct,
           int bins) {
  if (bins < 1) throw ValidationError("ece needs bins >= 1");
  if (confidence_correct.empty()) throw ValidationError("ece needs samples");
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<std::int64_t> count(bins, 0);
  for (const auto& [conf, correct] : confidence_correct) {
    int b = std::min(static_cast<int>(conf * bins), bins - 1);
    b = std::max(b, 0);
    conf_sum[b] += conf;
    acc_sum[b] += correct ? 1.0 : 0.0;
    count[b] += 1;
  }
  const double total = static_cast<double>(confidence_correct.size());
  double e = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    double weight = count[b] / total;
    e += weight * std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
  }
  return e;
}

}  // namespace attrinf
