#include "attrinf/personas.hpp"

#include <cmath>
#include <string>

#include "attrinf/common.hpp"

namespace attrinf {

namespace {

// Table-3 category codes used by the personas.
enum Cat : int {
  kEducation = 1,
  kEntertainment = 2,
  kHouseAndHome = 3,
  kLifestyle = 4,
  kMapsNavTaxi = 5,
  kMusicAudio = 6,
  kParenting = 7,
  kShopping = 8,
  kAutoVehicles = 9,
  kBeauty = 10,
  kBusiness = 11,
  kDating = 12,
  kSocial = 13,
  kTravelLocal = 14,
  kFinance = 15,
  kFoodDrink = 16,
  kHealthFitness = 17,
  kArtDesign = 18,
  kBooks = 19,
  kComics = 20,
  kCommunication = 21,
  kMedical = 22,
  kNews = 23,
  kPhoto = 24,
  kProductivity = 25,
  kSports = 26,
  kWeather = 27,
  kEvent = 28,
};

}  // namespace

void PersonaSpec::validate() const {
  for (const auto& [code, mean] : category_affinity) {
    if (code < 1 || code > kNumCategories)
      throw ValidationError("persona references invalid category code " +
                            std::to_string(code));
    if (!(mean >= 0.0) || !std::isfinite(mean))
      throw ValidationError("persona category affinity must be a finite "
                            "non-negative mean");
  }
  if (!(miniapp_breadth >= 0.0) || !std::isfinite(miniapp_breadth))
    throw ValidationError("persona breadth must be a finite non-negative mean");
  if (!(click_rate >= 0.0) || !std::isfinite(click_rate))
    throw ValidationError("persona click rate must be a finite non-negative "
                          "mean");
  for (const auto& [role, mean] : special_button_rates) {
    (void)role;
    if (!(mean >= 0.0) || !std::isfinite(mean))
      throw ValidationError("persona button rate must be a finite "
                            "non-negative mean");
  }
}

PersonaSet::PersonaSet() {
  for (AttributeKind kind : kAllAttributes) {
    specs_[static_cast<int>(kind)].resize(class_count(kind));
  }
}

PersonaSpec& PersonaSet::at(AttributeKind kind, int class_index) {
  auto& v = specs_[static_cast<int>(kind)];
  if (class_index < 0 || class_index >= static_cast<int>(v.size()))
    throw ValidationError("persona class index out of range");
  return v[class_index];
}

const PersonaSpec& PersonaSet::at(AttributeKind kind, int class_index) const {
  return const_cast<PersonaSet*>(this)->at(kind, class_index);
}

void PersonaSet::validate() const {
  for (AttributeKind kind : kAllAttributes)
    for (int c = 0; c < class_count(kind); ++c) at(kind, c).validate();
}

PersonaSet default_personas() {
  PersonaSet set;

  // Gender. Women: shopping and beauty; men: news and sports. Background
  // everyday traffic (communication, productivity, ...) rides on the gender
  // personas with equal values for both classes so it carries no label
  // information for any attribute.
  const std::map<int, double> everyday = {{kCommunication, 1.2},
                                          {kProductivity, 0.8},
                                          {kBusiness, 0.5},
                                          {kEvent, 0.3},
                                          {kArtDesign, 0.2}};
  {
    PersonaSpec& male = set.at(AttributeKind::Gender, 0);
    male.category_affinity = everyday;
    male.category_affinity[kShopping] = 2.4;
    male.category_affinity[kBeauty] = 0.3;
    male.category_affinity[kNews] = 9.8;
    male.category_affinity[kSports] = 10.6;
    male.miniapp_breadth = 3.5;

    PersonaSpec& female = set.at(AttributeKind::Gender, 1);
    female.category_affinity = everyday;
    female.category_affinity[kShopping] = 14.2;
    female.category_affinity[kBeauty] = 10.9;
    female.category_affinity[kNews] = 0.2;
    female.category_affinity[kSports] = 0.2;
    female.miniapp_breadth = 6.4;
  }

  // Location tier: overall digital-service volume scales with city tier,
  // and password-free payment usage drops sharply toward tier 3.
  {
    PersonaSpec& tier1 = set.at(AttributeKind::Location, 0);
    tier1.category_affinity = {{kFoodDrink, 5.0},
                               {kFinance, 5.0},
                               {kEntertainment, 4.0},
                               {kTravelLocal, 4.0}};
    tier1.miniapp_breadth = 5.0;
    tier1.special_button_rates = {{ButtonRole::PasswordFreePayment, 1.1}};

    PersonaSpec& tier2 = set.at(AttributeKind::Location, 1);
    tier2.category_affinity = {{kFoodDrink, 2.5},
                               {kFinance, 2.5},
                               {kEntertainment, 1.5},
                               {kTravelLocal, 1.5}};
    tier2.miniapp_breadth = 3.5;
    tier2.special_button_rates = {{ButtonRole::PasswordFreePayment, 0.7}};

    PersonaSpec& tier3 = set.at(AttributeKind::Location, 2);
    tier3.category_affinity = {{kFoodDrink, 0.75},
                               {kFinance, 0.75},
                               {kEntertainment, 0.25},
                               {kTravelLocal, 0.25}};
    tier3.miniapp_breadth = 2.0;
    tier3.special_button_rates = {{ButtonRole::PasswordFreePayment, 0.1}};
  }

  // Age carries the click-tempo level: elderly users average 17.8 clicks per
  // window against 31.5 for everyone else, use the back button more, and
  // minors almost never touch payment (0.2 vs 1.4 clicks) or finance apps.
  {
    PersonaSpec& under18 = set.at(AttributeKind::Age, 0);
    under18.category_affinity = {{kEntertainment, 4.0},
                                 {kComics, 3.0},
                                 {kBooks, 1.0},
                                 {kFinance, 0.0}};
    under18.miniapp_breadth = 2.5;
    under18.click_rate = 31.5;
    under18.special_button_rates = {{ButtonRole::Payment, 0.2},
                                    {ButtonRole::Back, 2.3}};

    PersonaSpec& age18_39 = set.at(AttributeKind::Age, 1);
    age18_39.category_affinity = {{kEntertainment, 3.0},
                                  {kMusicAudio, 2.0},
                                  {kPhoto, 1.5},
                                  {kFinance, 1.5}};
    age18_39.miniapp_breadth = 4.5;
    age18_39.click_rate = 31.5;
    age18_39.special_button_rates = {{ButtonRole::Payment, 1.4},
                                     {ButtonRole::Back, 2.3}};

    PersonaSpec& age40_65 = set.at(AttributeKind::Age, 2);
    age40_65.category_affinity = {{kHealthFitness, 1.5},
                                  {kFinance, 2.0},
                                  {kWeather, 1.0}};
    age40_65.miniapp_breadth = 4.5;
    age40_65.click_rate = 31.5;
    age40_65.special_button_rates = {{ButtonRole::Payment, 1.4},
                                     {ButtonRole::Back, 2.3}};

    PersonaSpec& above65 = set.at(AttributeKind::Age, 3);
    above65.category_affinity = {{kHealthFitness, 3.0},
                                 {kWeather, 2.0},
                                 {kMedical, 1.5},
                                 {kDating, 0.0},
                                 {kComics, 0.0}};
    above65.miniapp_breadth = 3.0;
    above65.click_rate = 17.8;
    above65.special_button_rates = {{ButtonRole::Payment, 1.4},
                                    {ButtonRole::Back, 3.5}};
  }

  // Property: owners pay household bills (lifestyle utilities), non-owners
  // use renting apps (house-and-home).
  {
    PersonaSpec& without = set.at(AttributeKind::Property, 0);
    without.category_affinity = {{kLifestyle, 0.1}, {kHouseAndHome, 3.9}};
    without.miniapp_breadth = 3.0;

    PersonaSpec& with = set.at(AttributeKind::Property, 1);
    with.category_affinity = {{kLifestyle, 5.0}, {kHouseAndHome, 0.0}};
    with.miniapp_breadth = 3.0;
  }

  // Vehicle: owners fuel up (auto category, 2.5 vs 0.0) and barely use
  // transit (2.5 vs 11.5); they also click back / password-free payment more.
  {
    PersonaSpec& without = set.at(AttributeKind::Vehicle, 0);
    without.category_affinity = {{kAutoVehicles, 0.0}, {kMapsNavTaxi, 11.5}};
    without.miniapp_breadth = 4.0;

    PersonaSpec& with = set.at(AttributeKind::Vehicle, 1);
    with.category_affinity = {{kAutoVehicles, 2.5}, {kMapsNavTaxi, 2.5}};
    with.miniapp_breadth = 4.0;
    with.special_button_rates = {{ButtonRole::Back, 0.9},
                                 {ButtonRole::PasswordFreePayment, 0.4}};
  }

  // Marital: married users favor education/house/finance/medical (~6x the
  // unmarried access), unmarried users dominate dating and social (~82x).
  {
    PersonaSpec& unmarried = set.at(AttributeKind::Marital, 0);
    unmarried.category_affinity = {{kEducation, 0.5},
                                   {kHouseAndHome, 0.3},
                                   {kFinance, 0.4},
                                   {kMedical, 0.25},
                                   {kDating, 1.64},
                                   {kSocial, 16.4}};
    unmarried.miniapp_breadth = 4.0;

    PersonaSpec& married = set.at(AttributeKind::Marital, 1);
    married.category_affinity = {{kEducation, 3.0},
                                 {kHouseAndHome, 2.0},
                                 {kFinance, 2.5},
                                 {kMedical, 1.5},
                                 {kDating, 0.02},
                                 {kSocial, 0.2}};
    married.miniapp_breadth = 4.0;
  }

  // Parental: parents use education/parenting/books about 10x more.
  {
    PersonaSpec& childless = set.at(AttributeKind::Parental, 0);
    childless.category_affinity = {{kEducation, 0.4},
                                   {kParenting, 0.35},
                                   {kBooks, 0.25}};
    childless.miniapp_breadth = 3.0;

    PersonaSpec& parent = set.at(AttributeKind::Parental, 1);
    parent.category_affinity = {{kEducation, 4.0},
                                {kParenting, 3.5},
                                {kBooks, 2.5}};
    parent.miniapp_breadth = 3.0;
  }

  set.validate();
  return set;
}

std::array<std::vector<double>, kNumAttributes> default_marginals() {
  std::array<std::vector<double>, kNumAttributes> m;
  m[static_cast<int>(AttributeKind::Gender)] = {0.503, 0.497};
  m[static_cast<int>(AttributeKind::Location)] = {0.228, 0.434, 0.338};
  m[static_cast<int>(AttributeKind::Age)] = {0.175, 0.380, 0.309, 0.136};
  m[static_cast<int>(AttributeKind::Property)] = {0.514, 0.486};
  m[static_cast<int>(AttributeKind::Vehicle)] = {0.790, 0.210};
  m[static_cast<int>(AttributeKind::Marital)] = {0.303, 0.697};
  m[static_cast<int>(AttributeKind::Parental)] = {0.464, 0.536};
  return m;
}

void PopulationSpec::validate() const {
  for (AttributeKind kind : kAllAttributes) {
    const auto& m = marginals[static_cast<int>(kind)];
    if (static_cast<int>(m.size()) != class_count(kind))
      throw ValidationError("marginal vector for attribute '" +
                            std::string(attribute_name(kind)) + "' must have " +
                            std::to_string(class_count(kind)) + " entries");
    double sum = 0.0;
    for (double p : m) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ValidationError("marginals for attribute '" +
                              std::string(attribute_name(kind)) +
                              "' must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("marginals for attribute '" +
                            std::string(attribute_name(kind)) +
                            "' sum to " + std::to_string(sum) +
                            ", expected 1");
  }
  if (num_users <= 0) throw ValidationError("num_users must be positive");
  if (samples_per_user <= 0)
    throw ValidationError("samples_per_user must be positive");
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0))
    throw ValidationError("signal_strength must lie in [0, 1], got " +
                          std::to_string(signal_strength));
}

}  // namespace attrinf
