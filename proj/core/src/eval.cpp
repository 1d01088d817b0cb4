#include "attrinf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrinf/common.hpp"
#include "attrinf/config.hpp"
#include "attrinf/inference.hpp"
#include "attrinf/parallel.hpp"
#include "attrinf/rng.hpp"
#include "attrinf/simulator.hpp"

namespace attrinf {

std::vector<BinRow> bin_analysis(const std::vector<DecisionWithTruth>& rows) {
  if (rows.empty()) throw ValidationError("bin_analysis needs samples");
  for (const DecisionWithTruth& r : rows)
    if (!(r.confidence > 0.0 && r.confidence <= 1.0))
      throw ValidationError("confidence must lie in (0, 1], got " +
                            std::to_string(r.confidence));

  std::vector<BinRow> bins(kNumBins);
  std::vector<double> conf_sum(kNumBins, 0.0);
  std::vector<std::int64_t> correct(kNumBins, 0);
  for (int b = 0; b < kNumBins; ++b) {
    bins[b].lo = b / static_cast<double>(kNumBins);
    bins[b].hi = (b + 1) / static_cast<double>(kNumBins);
  }
  for (const DecisionWithTruth& r : rows) {
    // A confidence on a bin edge belongs to the upper bin; the top bin is
    // closed at 1.
    int b = std::min(static_cast<int>(r.confidence * kNumBins), kNumBins - 1);
    bins[b].count += 1;
    conf_sum[b] += r.confidence;
    if (r.predicted == r.true_class) correct[b] += 1;
  }
  const double total = static_cast<double>(rows.size());
  for (int b = 0; b < kNumBins; ++b) {
    bins[b].p_int = bins[b].count / total;
    bins[b].p_conf = correct[b] / total;
    if (bins[b].count > 0) {
      bins[b].acc_int = bins[b].p_conf / bins[b].p_int;
      bins[b].mean_confidence = conf_sum[b] / bins[b].count;
    }
  }
  return bins;
}

SubsetMetrics subset_metrics(const std::vector<DecisionWithTruth>& rows,
                             double threshold, int classes) {
  if (rows.empty()) throw ValidationError("subset_metrics needs samples");
  if (classes < 2) throw ValidationError("subset_metrics needs >= 2 classes");

  SubsetMetrics out;
  std::vector<std::int64_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  std::int64_t selected = 0, correct = 0;
  for (const DecisionWithTruth& r : rows) {
    if (r.confidence < threshold) continue;
    ++selected;
    if (r.predicted == r.true_class) {
      ++correct;
      ++tp[r.predicted];
    } else {
      ++fp[r.predicted];
      ++fn[r.true_class];
    }
  }
  out.phc = static_cast<double>(selected) / static_cast<double>(rows.size());
  if (selected == 0) return out;  // metrics undefined on an empty subset

  out.accuracy = static_cast<double>(correct) / static_cast<double>(selected);
  // Macro averages over the classes where the quantity is defined.
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  int pdef = 0, rdef = 0, fdef = 0;
  for (int c = 0; c < classes; ++c) {
    std::optional<double> prec, rec;
    if (tp[c] + fp[c] > 0)
      prec = static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    if (tp[c] + fn[c] > 0)
      rec = static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
    if (prec) {
      psum += *prec;
      ++pdef;
    }
    if (rec) {
      rsum += *rec;
      ++rdef;
    }
    if (prec && rec) {
      fsum += (*prec + *rec) > 0.0 ? 2.0 * *prec * *rec / (*prec + *rec) : 0.0;
      ++fdef;
    }
  }
  if (pdef > 0) out.precision = psum / pdef;
  if (rdef > 0) out.recall = rsum / rdef;
  if (fdef > 0) out.f1 = fsum / fdef;
  return out;
}

std::optional<double> confidence_accuracy_correlation(
    const std::vector<BinRow>& bins) {
  std::vector<double> x, y;
  for (const BinRow& b : bins) {
    if (!b.acc_int || !b.mean_confidence) continue;
    x.push_back(*b.mean_confidence);
    y.push_back(*b.acc_int);
  }
  if (x.size() < 2) return std::nullopt;
  return pearson_r(x, y);
}

ChiSquareResult chi_square_vs_random(const std::vector<DecisionWithTruth>& rows,
                                     const std::vector<double>& prior) {
  if (rows.empty()) throw ValidationError("chi_square_vs_random needs samples");
  if (prior.empty()) throw ValidationError("prior must not be empty");
  double baseline = *std::max_element(prior.begin(), prior.end());
  double n = static_cast<double>(rows.size());
  double observed_correct = 0.0;
  for (const DecisionWithTruth& r : rows)
    if (r.predicted == r.true_class) observed_correct += 1.0;
  return chi_square_gof({observed_correct, n - observed_correct},
                        {n * baseline, n * (1.0 - baseline)});
}

AttributeReport evaluate_attribute(AttributeKind kind,
                                   const std::vector<DecisionWithTruth>& rows,
                                   const std::vector<double>& prior,
                                   double threshold) {
  AttributeReport r;
  r.attribute = std::string(attribute_name(kind));
  r.num_samples = static_cast<std::int64_t>(rows.size());
  r.threshold = threshold;
  std::int64_t correct = 0;
  for (const DecisionWithTruth& d : rows)
    if (d.predicted == d.true_class) ++correct;
  r.overall_accuracy = static_cast<double>(correct) / rows.size();
  r.bins = bin_analysis(rows);
  r.subset = subset_metrics(rows, threshold, class_count(kind));
  r.pearson_r = confidence_accuracy_correlation(r.bins);
  r.baseline_accuracy = *std::max_element(prior.begin(), prior.end());
  r.chi_square_vs_baseline = chi_square_vs_random(rows, prior);
  return r;
}

// ---------------------------------------------------------------------------
// Ablation sweeps
// ---------------------------------------------------------------------------

namespace {

// One training unit of the grid: a (dimension, input mode, N, attribute)
// combination evaluated at one or more thresholds. The threshold sweep
// shares a single trained model across its thresholds.
struct UnitJob {
  std::string dimension;
  InputMode input_mode;
  int sequence_length;
  AttributeKind attribute;
  std::vector<double> thresholds;
};

std::vector<AttributeReport> run_unit(const RunConfig& config,
                                      const UnitJob& job) {
  RunConfig cell = config;
  cell.input_mode = job.input_mode;
  cell.sequence_length = job.sequence_length;
  if (config.ablation.epochs > 0) cell.training.epochs = config.ablation.epochs;
  if (config.ablation.test_users > 0)
    cell.population.test_users = config.ablation.test_users;

  MiniAppCatalog catalog = build_catalog(
      cell.catalog.num_miniapps, cell.catalog.num_buttons, cell.seed);
  FeatureEncoding encoding = build_encoding(catalog, cell.model.embedding_dims);

  int total_users = cell.population.train_users +
                    cell.population.validation_users +
                    cell.population.test_users;
  std::vector<LabeledSample> all = generate_population(
      cell.population_spec(total_users), cell.personas, catalog,
      cell.gen_options());

  DatasetSplit split;
  split.seed = cell.seed;
  for (LabeledSample& s : all) {
    int user = std::stoi(s.user_id.substr(1));
    if (user < cell.population.train_users)
      split.train.push_back(std::move(s));
    else if (user <
             cell.population.train_users + cell.population.validation_users)
      split.validation.push_back(std::move(s));
    else
      split.test.push_back(std::move(s));
  }

  TrainHyper hyper = cell.train_hyper(job.attribute);
  hyper.seed = substream_seed(cell.seed, "ablate", job.sequence_length,
                              static_cast<int>(job.input_mode),
                              static_cast<int>(job.attribute));
  TrainedModel model = train(cell.architecture(job.attribute), split,
                             job.attribute, encoding, cell.input_mode, hyper);
  Calibrator calibrator = fit(cell.calibrator, model, split.validation);

  std::vector<const InteractionSample*> test_samples;
  std::vector<int> truth;
  test_samples.reserve(split.test.size());
  for (const LabeledSample& s : split.test) {
    test_samples.push_back(&s.sample);
    truth.push_back(s.labels.at(job.attribute));
  }
  // Confidences do not depend on the threshold; decide once, score per t_d.
  CalibratedClassifier clf{std::move(model), std::move(calibrator),
                           job.thresholds.front()};
  BatchDecisions decisions = decide_batch(clf, test_samples);
  std::vector<DecisionWithTruth> rows;
  rows.reserve(decisions.decisions.size());
  for (std::size_t i = 0; i < decisions.decisions.size(); ++i)
    rows.push_back(DecisionWithTruth{decisions.decisions[i].confidence,
                                     decisions.decisions[i].argmax, truth[i]});

  std::vector<AttributeReport> reports;
  reports.reserve(job.thresholds.size());
  for (double t : job.thresholds)
    reports.push_back(evaluate_attribute(
        job.attribute, rows,
        cell.population.marginals[static_cast<int>(job.attribute)], t));
  return reports;
}

}  // namespace

AblationGrid run_ablations(const RunConfig& config) {
  config.validate();
  const std::vector<AttributeKind>& attrs = config.ablation.attributes.empty()
                                                ? config.attributes
                                                : config.ablation.attributes;

  std::vector<UnitJob> jobs;
  for (AttributeKind kind : attrs) {
    jobs.push_back(UnitJob{"threshold", config.input_mode,
                           config.sequence_length, kind,
                           config.ablation.thresholds});
    for (InputMode mode : config.ablation.input_modes)
      jobs.push_back(UnitJob{"input_mode", mode, config.sequence_length, kind,
                             {config.threshold}});
    for (int n : config.ablation.sequence_lengths)
      jobs.push_back(UnitJob{"sequence_length", config.input_mode, n, kind,
                             {config.threshold}});
  }

  std::vector<std::vector<AblationCell>> unit_cells(jobs.size());
  parallel_for(jobs.size(), config.ablation.workers, [&](std::size_t i) {
    const UnitJob& job = jobs[i];
    auto make_cell = [&](double threshold) {
      AblationCell cell;
      cell.dimension = job.dimension;
      cell.threshold = threshold;
      cell.input_mode = job.input_mode;
      cell.sequence_length = job.sequence_length;
      cell.attribute = std::string(attribute_name(job.attribute));
      return cell;
    };
    try {
      std::vector<AttributeReport> reports = run_unit(config, jobs[i]);
      for (std::size_t t = 0; t < job.thresholds.size(); ++t) {
        AblationCell cell = make_cell(job.thresholds[t]);
        cell.report = std::move(reports[t]);
        unit_cells[i].push_back(std::move(cell));
      }
    } catch (const std::exception& e) {
      for (double t : job.thresholds) {
        AblationCell cell = make_cell(t);
        cell.failed = true;
        cell.error = e.what();
        unit_cells[i].push_back(std::move(cell));
      }
    }
  });

  AblationGrid grid;
  for (auto& cells : unit_cells)
    for (auto& cell : cells) grid.cells.push_back(std::move(cell));
  return grid;
}

}  // namespace attrinf
