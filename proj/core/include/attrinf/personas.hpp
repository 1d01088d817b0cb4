#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "attrinf/domain.hpp"

namespace attrinf {

// Generative parameters for one attribute value. User behavior is the sum of
// the seven personas matching the user's labels, so each field is a
// non-negative additive contribution:
//   - category_affinity: mean accesses per 30 days added to a category,
//   - miniapp_breadth: target number of distinct mini-apps used inside the
//     categories this persona favors,
//   - click_rate: mean button clicks added per 100-second window,
//   - special_button_rates: mean clicks per window on role-tagged buttons.
struct PersonaSpec {
  std::map<int, double> category_affinity;  // category code -> mean accesses
  double miniapp_breadth = 0.0;
  double click_rate = 0.0;
  std::map<ButtonRole, double> special_button_rates;

  void validate() const;
};

// One persona per (kind, class).
class PersonaSet {
 public:
  PersonaSet();

  PersonaSpec& at(AttributeKind kind, int class_index);
  const PersonaSpec& at(AttributeKind kind, int class_index) const;

  void validate() const;

 private:
  std::array<std::vector<PersonaSpec>, kNumAttributes> specs_;
};

// Personas encoding the observed per-attribute behavioral statistics:
// shopping/beauty vs news/sports for gender, basket size and password-free
// payments for city tier, click tempo and payment/back usage for age,
// bill-payment vs renting apps for property, fueling vs transit apps for
// vehicle, family vs dating/social categories for marital status, and
// education/parenting/books for parental status.
PersonaSet default_personas();

struct PopulationSpec {
  std::array<std::vector<double>, kNumAttributes> marginals;
  int num_users = 0;
  int samples_per_user = 1;
  double signal_strength = 1.0;  // 0 = attribute-independent behavior
  std::uint64_t seed = 0;

  void validate() const;
};

// Label marginals of the synthetic population (fractions of users).
std::array<std::vector<double>, kNumAttributes> default_marginals();

// Generator knobs that are not part of the population definition.
struct GenOptions {
  // One usage history per user, shared by all of the user's windows; when
  // false each sample redraws its own history.
  bool shared_mini_h = true;
  // Attribute-independent accesses added to every category mean. Kept at 0
  // by default so that planted zero means stay exactly zero.
  double background_category_rate = 0.0;
  // Distinct-app target for categories no persona favors.
  double default_breadth = 2.0;
  int sequence_length = 200;
  int slot_duration_ms = 500;
};

}  // namespace attrinf
