#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "attrinf/domain.hpp"
#include "attrinf/personas.hpp"
#include "attrinf/stats.hpp"

namespace attrinf {

// Fully blended generative rates for one user (signal strength applied).
// Counts are Poisson around these means; breadths are the distinct-app
// targets per category.
struct BehaviorRates {
  std::array<double, kNumCategories + 1> category_rate{};   // index 1..28
  std::array<int, kNumCategories + 1> category_breadth{};   // index 1..28
  std::array<double, kNumSpecialRoles> special_rate{};      // per-100s window
  double generic_rate = 0.0;                                 // per-100s window
};

// Precomputed blend tables for one (personas, marginals, catalog, signal)
// configuration. Shared by the generator and the posterior oracle so both
// sides see the identical model.
class PopulationModel {
 public:
  PopulationModel(const PersonaSet& personas,
                  const std::array<std::vector<double>, kNumAttributes>&
                      marginals,
                  const MiniAppCatalog& catalog, const GenOptions& options,
                  double signal_strength);

  BehaviorRates rates_for(const LabelMap& labels) const;

  struct Combo {
    LabelMap labels;
    double prior;
    BehaviorRates rates;
  };
  const std::vector<Combo>& combos() const { return combos_; }
  const MiniAppCatalog& catalog() const { return catalog_; }
  const GenOptions& options() const { return options_; }
  double signal_strength() const { return signal_strength_; }
  const std::array<std::vector<double>, kNumAttributes>& marginals() const {
    return marginals_;
  }

 private:
  BehaviorRates blend(const LabelMap& labels) const;

  PersonaSet personas_;
  std::array<std::vector<double>, kNumAttributes> marginals_;
  MiniAppCatalog catalog_;
  GenOptions options_;
  double signal_strength_;

  // Population means of the raw (signal-strength-1) rates, used as the
  // attribute-independent end of the blend.
  std::array<double, kNumCategories + 1> mean_category_rate_{};
  std::array<double, kNumCategories + 1> mean_breadth_{};
  std::array<double, kNumSpecialRoles> mean_special_{};
  double mean_total_click_ = 0.0;

  std::vector<Combo> combos_;
};

// Draws a labeled population: one label set per user from the marginals,
// one usage history per user (or per sample, see GenOptions), and
// samples_per_user click windows. Deterministic for a fixed seed.
std::vector<LabeledSample> generate_population(const PopulationSpec& pop,
                                               const PersonaSet& personas,
                                               const MiniAppCatalog& catalog,
                                               const GenOptions& options = {});

// Chi-square goodness-of-fit of empirical per-user label counts against the
// population marginals, one test per attribute.
std::array<ChiSquareResult, kNumAttributes> chi_square_marginals(
    const std::vector<LabeledSample>& samples, const PopulationSpec& pop);

// Exact posterior over one attribute's classes given a sample, computed by
// enumerating the full joint label space (384 combinations) with the same
// blended Poisson rates the generator uses. For observations impossible
// under the model the prior is returned.
class BayesOracle {
 public:
  BayesOracle(const PopulationSpec& pop, const PersonaSet& personas,
              const MiniAppCatalog& catalog, const GenOptions& options = {});

  std::vector<double> posterior(const InteractionSample& sample,
                                AttributeKind kind) const;

  // All seven posteriors from one likelihood sweep.
  std::array<std::vector<double>, kNumAttributes> joint_posterior(
      const InteractionSample& sample) const;

  const PopulationModel& model() const { return model_; }

 private:
  PopulationModel model_;
};

std::vector<double> bayes_posterior(const InteractionSample& sample,
                                    AttributeKind kind,
                                    const PopulationSpec& pop,
                                    const PersonaSet& personas,
                                    const MiniAppCatalog& catalog,
                                    const GenOptions& options = {});

}  // namespace attrinf
