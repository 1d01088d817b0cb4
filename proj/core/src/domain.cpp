#include "attrinf/domain.hpp"

#include <algorithm>

#include "attrinf/rng.hpp"

namespace attrinf {

namespace {

constexpr std::array<int, kNumAttributes> kClassCounts = {2, 3, 4, 2, 2, 2, 2};

constexpr std::array<std::string_view, kNumAttributes> kAttributeNames = {
    "gender", "location", "age", "property", "vehicle", "marital", "parental",
};

const std::array<std::vector<std::string_view>, kNumAttributes> kClassNames = {{
    {"male", "female"},
    {"tier1", "tier2", "tier3"},
    {"under18", "age18_39", "age40_65", "above65"},
    {"no", "yes"},
    {"no", "yes"},
    {"no", "yes"},
    {"no", "yes"},
}};

constexpr std::array<std::string_view, kNumCategories + 1> kCategoryNames = {
    "",  // code 0 is the padding sentinel
    "Education",
    "Entertainment",
    "House and Home",
    "Lifestyle",
    "Maps, Navigation, and Taxi",
    "Music and Audio",
    "Parenting",
    "Shopping",
    "Auto and Vehicles",
    "Beauty",
    "Business",
    "Dating",
    "Social",
    "Travel and Local",
    "Finance",
    "Food and Drink",
    "Health and Fitness",
    "Art and Design",
    "Books",
    "Comics",
    "Communication",
    "Medical",
    "News",
    "Photo",
    "Productivity",
    "Sports",
    "Weather",
    "Event",
};

}  // namespace

int class_count(AttributeKind kind) {
  return kClassCounts[static_cast<int>(kind)];
}

std::string_view attribute_name(AttributeKind kind) {
  return kAttributeNames[static_cast<int>(kind)];
}

AttributeKind attribute_from_name(std::string_view name) {
  for (int i = 0; i < kNumAttributes; ++i) {
    if (kAttributeNames[i] == name) return static_cast<AttributeKind>(i);
  }
  throw ValidationError("unknown attribute '" + std::string(name) + "'");
}

std::string_view class_name(AttributeKind kind, int class_index) {
  const auto& names = kClassNames[static_cast<int>(kind)];
  if (class_index < 0 || class_index >= static_cast<int>(names.size())) {
    throw ValidationError("class index out of range for attribute '" +
                          std::string(attribute_name(kind)) + "'");
  }
  return names[class_index];
}

int class_from_name(AttributeKind kind, std::string_view name) {
  const auto& names = kClassNames[static_cast<int>(kind)];
  for (int i = 0; i < static_cast<int>(names.size()); ++i) {
    if (names[i] == name) return i;
  }
  throw ValidationError("unknown class '" + std::string(name) +
                        "' for attribute '" +
                        std::string(attribute_name(kind)) + "'");
}

std::string_view category_name(int code) {
  if (code < 1 || code > kNumCategories) {
    throw ValidationError("category code must be in 1..28, got " +
                          std::to_string(code));
  }
  return kCategoryNames[code];
}

std::string_view button_role_name(ButtonRole role) {
  switch (role) {
    case ButtonRole::Payment:
      return "payment";
    case ButtonRole::Back:
      return "back";
    case ButtonRole::PasswordFreePayment:
      return "password_free_payment";
    case ButtonRole::Generic:
      return "generic";
  }
  throw ValidationError("invalid button role");
}

MiniAppCatalog::MiniAppCatalog(std::vector<MiniAppEntry> miniapps,
                               std::vector<ButtonEntry> buttons)
    : miniapps_(std::move(miniapps)), buttons_(std::move(buttons)) {
  for (const auto& m : miniapps_) {
    if (m.miniapp_id <= 0)
      throw ValidationError("mini-app ids must be positive");
    if (m.category_code < 1 || m.category_code > kNumCategories)
      throw ValidationError("mini-app " + std::to_string(m.miniapp_id) +
                            " references invalid category " +
                            std::to_string(m.category_code));
    if (!category_by_app_.emplace(m.miniapp_id, m.category_code).second)
      throw ValidationError("duplicate mini-app id " +
                            std::to_string(m.miniapp_id));
    apps_by_category_[m.category_code].push_back(m.miniapp_id);
  }
  for (auto& apps : apps_by_category_) std::sort(apps.begin(), apps.end());
  for (const auto& b : buttons_) {
    if (b.button_id <= 0) throw ValidationError("button ids must be positive");
    if (!role_by_button_.emplace(b.button_id, b.role).second)
      throw ValidationError("duplicate button id " +
                            std::to_string(b.button_id));
    buttons_by_role_[static_cast<int>(b.role)].push_back(b.button_id);
  }
  for (auto& ids : buttons_by_role_) std::sort(ids.begin(), ids.end());
}

int MiniAppCatalog::category_of(int miniapp_id) const {
  auto it = category_by_app_.find(miniapp_id);
  if (it == category_by_app_.end())
    throw ValidationError("unknown mini-app id " + std::to_string(miniapp_id));
  return it->second;
}

ButtonRole MiniAppCatalog::role_of(int button_id) const {
  auto it = role_by_button_.find(button_id);
  if (it == role_by_button_.end())
    throw ValidationError("unknown button id " + std::to_string(button_id));
  return it->second;
}

bool MiniAppCatalog::has_button(int button_id) const {
  return role_by_button_.count(button_id) > 0;
}

const std::vector<int>& MiniAppCatalog::apps_in_category(
    int category_code) const {
  if (category_code < 1 || category_code > kNumCategories)
    throw ValidationError("category code must be in 1..28, got " +
                          std::to_string(category_code));
  return apps_by_category_[category_code];
}

const std::vector<int>& MiniAppCatalog::buttons_with_role(
    ButtonRole role) const {
  return buttons_by_role_[static_cast<int>(role)];
}

MiniAppCatalog build_catalog(int num_miniapps, int num_buttons,
                             std::uint64_t seed) {
  if (num_miniapps < kNumCategories)
    throw ValidationError(
        "catalog needs at least one mini-app per category: num_miniapps must "
        "be >= 28, got " +
        std::to_string(num_miniapps));
  if (num_buttons < 1)
    throw ValidationError("catalog needs at least one button");

  Rng rng = substream(seed, "catalog");
  std::vector<MiniAppEntry> apps;
  apps.reserve(num_miniapps);
  for (int i = 0; i < num_miniapps; ++i) {
    int category = i < kNumCategories
                       ? i + 1
                       : static_cast<int>(rng.below(kNumCategories)) + 1;
    apps.push_back(MiniAppEntry{i + 1, category});
  }

  constexpr ButtonRole kSpecials[] = {ButtonRole::Payment, ButtonRole::Back,
                                      ButtonRole::PasswordFreePayment};
  std::vector<ButtonEntry> buttons;
  buttons.reserve(num_buttons);
  for (int i = 0; i < num_buttons; ++i) {
    ButtonEntry b;
    b.button_id = i + 1;
    if (i < kNumSpecialRoles) {
      b.role = kSpecials[i];
      b.function_name = std::string(button_role_name(b.role));
    } else {
      b.role = ButtonRole::Generic;
      b.function_name = "generic_" + std::to_string(i + 1);
    }
    buttons.push_back(std::move(b));
  }
  return MiniAppCatalog(std::move(apps), std::move(buttons));
}

InteractionSample::InteractionSample(std::vector<MiniHRecord> sorted_records,
                                     OpHTimeline op_h)
    : records_(std::make_shared<std::vector<MiniHRecord>>(
          std::move(sorted_records))),
      op_h_(std::move(op_h)) {}

std::vector<InteractionSample::FusedRow> InteractionSample::fused() const {
  std::vector<FusedRow> grid;
  grid.reserve(rows());
  for (int i = 0; i < rows(); ++i) grid.push_back(fused_row(i));
  return grid;
}

namespace {

void sort_and_truncate(std::vector<MiniHRecord>& records, int n) {
  std::sort(records.begin(), records.end(),
            [](const MiniHRecord& a, const MiniHRecord& b) {
              if (a.access_count != b.access_count)
                return a.access_count > b.access_count;
              return a.miniapp_id < b.miniapp_id;
            });
  if (static_cast<int>(records.size()) > n) records.resize(n);
}

}  // namespace

InteractionSample fuse(std::vector<MiniHRecord> mini_h, OpHTimeline op_h,
                       int n) {
  if (n <= 0) throw ValidationError("fuse: n must be positive");
  if (static_cast<int>(op_h.slots.size()) != n)
    throw ValidationError("fuse: timeline has " +
                          std::to_string(op_h.slots.size()) +
                          " slots, expected " + std::to_string(n));
  sort_and_truncate(mini_h, n);
  return InteractionSample(std::move(mini_h), std::move(op_h));
}

InteractionSample fuse_shared(
    std::shared_ptr<const std::vector<MiniHRecord>> records, OpHTimeline op_h,
    int n) {
  if (n <= 0) throw ValidationError("fuse: n must be positive");
  if (static_cast<int>(op_h.slots.size()) != n)
    throw ValidationError("fuse: timeline has " +
                          std::to_string(op_h.slots.size()) +
                          " slots, expected " + std::to_string(n));
  if (static_cast<int>(records->size()) > n) {
    auto copy = std::make_shared<std::vector<MiniHRecord>>(*records);
    sort_and_truncate(*copy, n);
    records = std::move(copy);
  }
  InteractionSample out({}, std::move(op_h));
  out.records_ = std::move(records);
  return out;
}

}  // namespace attrinf
