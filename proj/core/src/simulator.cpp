#include "attrinf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "attrinf/common.hpp"
#include "attrinf/rng.hpp"

namespace attrinf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double raw_category_rate(const PersonaSet& personas, const LabelMap& labels,
                         int category) {
  double sum = 0.0;
  for (AttributeKind kind : kAllAttributes) {
    const auto& aff = personas.at(kind, labels.at(kind)).category_affinity;
    auto it = aff.find(category);
    if (it != aff.end()) sum += it->second;
  }
  return sum;
}

// Affinity-weighted mean of the breadths of the personas favoring this
// category; falls back to the default when nobody does.
double raw_breadth(const PersonaSet& personas, const LabelMap& labels,
                   int category, double default_breadth) {
  double num = 0.0, den = 0.0;
  for (AttributeKind kind : kAllAttributes) {
    const PersonaSpec& p = personas.at(kind, labels.at(kind));
    auto it = p.category_affinity.find(category);
    if (it != p.category_affinity.end() && it->second > 0.0) {
      num += it->second * p.miniapp_breadth;
      den += it->second;
    }
  }
  return den > 0.0 ? num / den : default_breadth;
}

double raw_special_rate(const PersonaSet& personas, const LabelMap& labels,
                        ButtonRole role) {
  double sum = 0.0;
  for (AttributeKind kind : kAllAttributes) {
    const auto& rates = personas.at(kind, labels.at(kind)).special_button_rates;
    auto it = rates.find(role);
    if (it != rates.end()) sum += it->second;
  }
  return sum;
}

double raw_total_click(const PersonaSet& personas, const LabelMap& labels) {
  double sum = 0.0;
  for (AttributeKind kind : kAllAttributes)
    sum += personas.at(kind, labels.at(kind)).click_rate;
  return sum;
}

std::vector<LabelMap> enumerate_combos() {
  std::vector<LabelMap> combos;
  combos.push_back(LabelMap{});
  for (AttributeKind kind : kAllAttributes) {
    std::vector<LabelMap> next;
    next.reserve(combos.size() * class_count(kind));
    for (const LabelMap& base : combos) {
      for (int c = 0; c < class_count(kind); ++c) {
        LabelMap m = base;
        m.set(AttributeLabel{kind, c});
        next.push_back(m);
      }
    }
    combos = std::move(next);
  }
  return combos;
}

// Sufficient statistics of one sample under the generative model.
struct SampleStats {
  std::array<std::int64_t, kNumCategories + 1> category_total{};
  std::array<int, kNumCategories + 1> category_distinct{};
  std::array<std::int64_t, kNumSpecialRoles> role_clicks{};
  std::int64_t generic_clicks = 0;
  double window_factor = 1.0;  // window length relative to 100 s
};

SampleStats collect_stats(const InteractionSample& sample,
                          const MiniAppCatalog& catalog) {
  SampleStats st;
  for (const MiniHRecord& r : sample.mini_h()) {
    if (r.miniapp_id == 0) continue;
    st.category_total[r.category_code] += r.access_count;
    if (r.access_count > 0) st.category_distinct[r.category_code] += 1;
  }
  for (int slot : sample.op_h().slots) {
    if (slot == 0) continue;
    ButtonRole role = catalog.role_of(slot);
    if (role == ButtonRole::Generic)
      st.generic_clicks += 1;
    else
      st.role_clicks[static_cast<int>(role)] += 1;
  }
  st.window_factor = sample.op_h().window_seconds() / 100.0;
  return st;
}

}  // namespace

PopulationModel::PopulationModel(
    const PersonaSet& personas,
    const std::array<std::vector<double>, kNumAttributes>& marginals,
    const MiniAppCatalog& catalog, const GenOptions& options,
    double signal_strength)
    : personas_(personas),
      marginals_(marginals),
      catalog_(catalog),
      options_(options),
      signal_strength_(signal_strength) {
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0))
    throw ValidationError("signal_strength must lie in [0, 1], got " +
                          std::to_string(signal_strength));
  personas_.validate();

  // Attribute-independent means: category rates and click rates are linear
  // in the labels, so the marginals suffice; breadths are ratios and are
  // averaged by enumerating the joint label space.
  for (AttributeKind kind : kAllAttributes) {
    const auto& m = marginals_[static_cast<int>(kind)];
    for (int c = 0; c < class_count(kind); ++c) {
      const PersonaSpec& p = personas_.at(kind, c);
      for (const auto& [code, mean] : p.category_affinity)
        mean_category_rate_[code] += m[c] * mean;
      for (const auto& [role, mean] : p.special_button_rates)
        mean_special_[static_cast<int>(role)] += m[c] * mean;
      mean_total_click_ += m[c] * p.click_rate;
    }
  }

  std::vector<LabelMap> label_combos = enumerate_combos();
  combos_.reserve(label_combos.size());
  for (const LabelMap& labels : label_combos) {
    double prior = 1.0;
    for (AttributeKind kind : kAllAttributes)
      prior *= marginals_[static_cast<int>(kind)][labels.at(kind)];
    combos_.push_back(Combo{labels, prior, BehaviorRates{}});
  }
  for (int code = 1; code <= kNumCategories; ++code) {
    double mean = 0.0;
    for (const Combo& combo : combos_)
      mean += combo.prior *
              raw_breadth(personas_, combo.labels, code, options_.default_breadth);
    mean_breadth_[code] = mean;
  }
  for (Combo& combo : combos_) combo.rates = blend(combo.labels);
}

BehaviorRates PopulationModel::blend(const LabelMap& labels) const {
  const double s = signal_strength_;
  BehaviorRates r;
  for (int code = 1; code <= kNumCategories; ++code) {
    double raw = raw_category_rate(personas_, labels, code);
    r.category_rate[code] = options_.background_category_rate +
                            (1.0 - s) * mean_category_rate_[code] + s * raw;
    double braw = raw_breadth(personas_, labels, code, options_.default_breadth);
    double blended = (1.0 - s) * mean_breadth_[code] + s * braw;
    int napps = static_cast<int>(catalog_.apps_in_category(code).size());
    r.category_breadth[code] = std::clamp(
        static_cast<int>(std::lround(blended)), 1, std::max(1, napps));
  }
  double total =
      (1.0 - s) * mean_total_click_ + s * raw_total_click(personas_, labels);
  double special_sum = 0.0;
  for (int role = 0; role < kNumSpecialRoles; ++role) {
    double raw = raw_special_rate(personas_, labels, static_cast<ButtonRole>(role));
    r.special_rate[role] = (1.0 - s) * mean_special_[role] + s * raw;
    special_sum += r.special_rate[role];
  }
  r.generic_rate = std::max(0.0, total - special_sum);
  // Roles with no catalog buttons cannot be emitted; fold them into the
  // generic stream so the click volume is preserved.
  for (int role = 0; role < kNumSpecialRoles; ++role) {
    if (catalog_.buttons_with_role(static_cast<ButtonRole>(role)).empty()) {
      r.generic_rate += r.special_rate[role];
      r.special_rate[role] = 0.0;
    }
  }
  return r;
}

BehaviorRates PopulationModel::rates_for(const LabelMap& labels) const {
  return blend(labels);
}

namespace {

// First k entries of a seeded partial Fisher-Yates over 0..n-1.
std::vector<int> sample_without_replacement(Rng& rng, int n, int k) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, n);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::vector<MiniHRecord> draw_mini_history(Rng& rng, const BehaviorRates& rates,
                                           const MiniAppCatalog& catalog) {
  std::vector<MiniHRecord> records;
  for (int code = 1; code <= kNumCategories; ++code) {
    std::int64_t total = rng.poisson(rates.category_rate[code]);
    if (total == 0) continue;
    const std::vector<int>& apps = catalog.apps_in_category(code);
    int breadth = std::min<int>(rates.category_breadth[code],
                                static_cast<int>(apps.size()));
    std::vector<int> favored =
        sample_without_replacement(rng, static_cast<int>(apps.size()), breadth);
    std::vector<std::int64_t> counts(favored.size(), 0);
    for (std::int64_t i = 0; i < total; ++i)
      counts[rng.below(static_cast<std::int64_t>(favored.size()))] += 1;
    for (std::size_t i = 0; i < favored.size(); ++i) {
      if (counts[i] > 0)
        records.push_back(MiniHRecord{apps[favored[i]], code, counts[i]});
    }
  }
  return records;
}

OpHTimeline draw_op_history(Rng& rng, const BehaviorRates& rates,
                            const MiniAppCatalog& catalog, int slots,
                            int slot_duration_ms) {
  OpHTimeline timeline;
  timeline.slot_duration_ms = slot_duration_ms;
  timeline.slots.assign(slots, 0);
  const double window_factor = timeline.window_seconds() / 100.0;

  std::vector<int> clicks;
  for (int role = 0; role < kNumSpecialRoles; ++role) {
    const auto& ids =
        catalog.buttons_with_role(static_cast<ButtonRole>(role));
    if (ids.empty()) continue;
    std::int64_t n = rng.poisson(rates.special_rate[role] * window_factor);
    for (std::int64_t i = 0; i < n; ++i)
      clicks.push_back(ids[rng.below(static_cast<std::int64_t>(ids.size()))]);
  }
  const auto& generic = catalog.buttons_with_role(ButtonRole::Generic);
  std::int64_t n = rng.poisson(rates.generic_rate * window_factor);
  if (n > 0 && generic.empty())
    throw ValidationError(
        "catalog has no generic buttons; use at least 4 buttons");
  for (std::int64_t i = 0; i < n; ++i)
    clicks.push_back(generic[rng.below(static_cast<std::int64_t>(generic.size()))]);

  if (static_cast<int>(clicks.size()) > slots) {
    std::shuffle(clicks.begin(), clicks.end(), rng.engine());
    clicks.resize(slots);
  }
  std::vector<int> positions =
      sample_without_replacement(rng, slots, static_cast<int>(clicks.size()));
  for (std::size_t i = 0; i < clicks.size(); ++i)
    timeline.slots[positions[i]] = clicks[i];
  return timeline;
}

std::string format_user_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%06d", index);
  return buf;
}

}  // namespace

std::vector<LabeledSample> generate_population(const PopulationSpec& pop,
                                               const PersonaSet& personas,
                                               const MiniAppCatalog& catalog,
                                               const GenOptions& options) {
  pop.validate();
  PopulationModel model(personas, pop.marginals, catalog, options,
                        pop.signal_strength);

  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(pop.num_users) * pop.samples_per_user);
  for (int u = 0; u < pop.num_users; ++u) {
    Rng label_rng = substream(pop.seed, "labels", u);
    LabelMap labels;
    for (AttributeKind kind : kAllAttributes) {
      const auto& m = pop.marginals[static_cast<int>(kind)];
      labels.set(AttributeLabel{kind, static_cast<int>(label_rng.weighted(m))});
    }
    BehaviorRates rates = model.rates_for(labels);

    std::shared_ptr<const std::vector<MiniHRecord>> shared_records;
    if (options.shared_mini_h) {
      Rng mini_rng = substream(pop.seed, "mini_h", u, 0);
      auto records = draw_mini_history(mini_rng, rates, catalog);
      std::sort(records.begin(), records.end(),
                [](const MiniHRecord& a, const MiniHRecord& b) {
                  if (a.access_count != b.access_count)
                    return a.access_count > b.access_count;
                  return a.miniapp_id < b.miniapp_id;
                });
      if (static_cast<int>(records.size()) > options.sequence_length)
        records.resize(options.sequence_length);
      shared_records =
          std::make_shared<const std::vector<MiniHRecord>>(std::move(records));
    }

    std::string user_id = format_user_id(u);
    for (int j = 0; j < pop.samples_per_user; ++j) {
      Rng op_rng = substream(pop.seed, "op_h", u, j);
      OpHTimeline op = draw_op_history(op_rng, rates, catalog,
                                       options.sequence_length,
                                       options.slot_duration_ms);
      InteractionSample sample =
          options.shared_mini_h
              ? fuse_shared(shared_records, std::move(op),
                            options.sequence_length)
              : [&] {
                  Rng mini_rng = substream(pop.seed, "mini_h", u, j);
                  return fuse(draw_mini_history(mini_rng, rates, catalog),
                              std::move(op), options.sequence_length);
                }();
      out.push_back(LabeledSample{user_id, j, std::move(sample), labels});
    }
  }
  return out;
}

std::array<ChiSquareResult, kNumAttributes> chi_square_marginals(
    const std::vector<LabeledSample>& samples, const PopulationSpec& pop) {
  std::unordered_map<std::string, const LabelMap*> users;
  for (const LabeledSample& s : samples) users.emplace(s.user_id, &s.labels);
  double n = static_cast<double>(users.size());
  if (n == 0.0) throw ValidationError("chi-square test needs samples");

  std::array<ChiSquareResult, kNumAttributes> results;
  for (AttributeKind kind : kAllAttributes) {
    int k = static_cast<int>(kind);
    std::vector<double> observed(class_count(kind), 0.0);
    for (const auto& [id, labels] : users) observed[labels->at(kind)] += 1.0;
    std::vector<double> expected(class_count(kind));
    for (int c = 0; c < class_count(kind); ++c) {
      expected[c] = n * pop.marginals[k][c];
      if (expected[c] < 5.0)
        throw ValidationError(
            "chi-square not applicable for attribute '" +
            std::string(attribute_name(kind)) + "': expected count " +
            std::to_string(expected[c]) + " below 5");
    }
    results[k] = chi_square_gof(observed, expected);
  }
  return results;
}

BayesOracle::BayesOracle(const PopulationSpec& pop, const PersonaSet& personas,
                         const MiniAppCatalog& catalog,
                         const GenOptions& options)
    : model_(personas, pop.marginals, catalog, options, pop.signal_strength) {}

std::array<std::vector<double>, kNumAttributes> BayesOracle::joint_posterior(
    const InteractionSample& sample) const {
  SampleStats st = collect_stats(sample, model_.catalog());
  const auto& combos = model_.combos();

  std::vector<double> log_post(combos.size(), kNegInf);
  double best = kNegInf;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const auto& combo = combos[i];
    if (combo.prior <= 0.0) continue;
    double ll = std::log(combo.prior);
    for (int code = 1; code <= kNumCategories && ll > kNegInf; ++code) {
      std::int64_t x = st.category_total[code];
      ll += poisson_log_pmf(x, combo.rates.category_rate[code]);
      int d = st.category_distinct[code];
      if (d > 0) {
        int b = combo.rates.category_breadth[code];
        int napps =
            static_cast<int>(model_.catalog().apps_in_category(code).size());
        if (d > b) {
          ll = kNegInf;
        } else {
          ll += log_binomial(napps - d, b - d) - log_binomial(napps, b) -
                static_cast<double>(x) * std::log(static_cast<double>(b));
        }
      }
    }
    for (int role = 0; role < kNumSpecialRoles && ll > kNegInf; ++role)
      ll += poisson_log_pmf(st.role_clicks[role],
                            combo.rates.special_rate[role] * st.window_factor);
    if (ll > kNegInf)
      ll += poisson_log_pmf(st.generic_clicks,
                            combo.rates.generic_rate * st.window_factor);
    log_post[i] = ll;
    best = std::max(best, ll);
  }

  std::array<std::vector<double>, kNumAttributes> out;
  for (AttributeKind kind : kAllAttributes)
    out[static_cast<int>(kind)].assign(class_count(kind), 0.0);

  if (best == kNegInf) {
    // Observation impossible under this model; fall back to the priors.
    for (AttributeKind kind : kAllAttributes)
      out[static_cast<int>(kind)] = model_.marginals()[static_cast<int>(kind)];
    return out;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    if (log_post[i] == kNegInf) continue;
    double w = std::exp(log_post[i] - best);
    total += w;
    for (AttributeKind kind : kAllAttributes)
      out[static_cast<int>(kind)][combos[i].labels.at(kind)] += w;
  }
  for (AttributeKind kind : kAllAttributes)
    for (double& p : out[static_cast<int>(kind)]) p /= total;
  return out;
}

std::vector<double> BayesOracle::posterior(const InteractionSample& sample,
                                           AttributeKind kind) const {
  return joint_posterior(sample)[static_cast<int>(kind)];
}

std::vector<double> bayes_posterior(const InteractionSample& sample,
                                    AttributeKind kind,
                                    const PopulationSpec& pop,
                                    const PersonaSet& personas,
                                    const MiniAppCatalog& catalog,
                                    const GenOptions& options) {
  return BayesOracle(pop, personas, catalog, options).posterior(sample, kind);
}

}  // namespace attrinf
