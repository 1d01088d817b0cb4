#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "attrinf/common.hpp"

namespace attrinf {

// ---------------------------------------------------------------------------
// Attributes and labels
// ---------------------------------------------------------------------------

enum class AttributeKind : int {
  Gender = 0,
  Location,
  Age,
  Property,
  Vehicle,
  Marital,
  Parental,
};

inline constexpr int kNumAttributes = 7;

inline constexpr std::array<AttributeKind, kNumAttributes> kAllAttributes = {
    AttributeKind::Gender,   AttributeKind::Location, AttributeKind::Age,
    AttributeKind::Property, AttributeKind::Vehicle,  AttributeKind::Marital,
    AttributeKind::Parental,
};

// Fixed class count per kind: 2, 3, 4, 2, 2, 2, 2.
int class_count(AttributeKind kind);
std::string_view attribute_name(AttributeKind kind);
AttributeKind attribute_from_name(std::string_view name);
std::string_view class_name(AttributeKind kind, int class_index);
int class_from_name(AttributeKind kind, std::string_view name);

struct AttributeLabel {
  AttributeKind kind;
  int class_index;

  bool operator==(const AttributeLabel&) const = default;
};

inline AttributeLabel make_label(AttributeKind kind, int class_index) {
  if (class_index < 0 || class_index >= class_count(kind)) {
    throw ValidationError("class index out of range for attribute '" +
                          std::string(attribute_name(kind)) + "'");
  }
  return AttributeLabel{kind, class_index};
}

// Complete label assignment: exactly one class per attribute kind.
class LabelMap {
 public:
  LabelMap() { classes_.fill(-1); }

  void set(AttributeLabel label) {
    classes_[static_cast<int>(label.kind)] = label.class_index;
  }
  int at(AttributeKind kind) const {
    int c = classes_[static_cast<int>(kind)];
    if (c < 0)
      throw ValidationError("label map missing attribute '" +
                            std::string(attribute_name(kind)) + "'");
    return c;
  }
  bool complete() const {
    for (int c : classes_)
      if (c < 0) return false;
    return true;
  }

  bool operator==(const LabelMap&) const = default;

 private:
  std::array<int, kNumAttributes> classes_;
};

// ---------------------------------------------------------------------------
// Catalog: mini-app categories, mini-apps, and buttons
// ---------------------------------------------------------------------------

inline constexpr int kNumCategories = 28;

// Category code is 1-based; code 0 is the padding sentinel.
std::string_view category_name(int code);

enum class ButtonRole : int {
  Payment = 0,
  Back,
  PasswordFreePayment,
  Generic,
};

inline constexpr int kNumSpecialRoles = 3;  // all roles except Generic

std::string_view button_role_name(ButtonRole role);

struct MiniAppEntry {
  int miniapp_id = 0;  // > 0; 0 reserved
  int category_code = 0;
};

struct ButtonEntry {
  int button_id = 0;  // > 0; 0 is the no-click sentinel
  ButtonRole role = ButtonRole::Generic;
  std::string function_name;
};

class MiniAppCatalog {
 public:
  MiniAppCatalog(std::vector<MiniAppEntry> miniapps,
                 std::vector<ButtonEntry> buttons);

  const std::vector<MiniAppEntry>& miniapps() const { return miniapps_; }
  const std::vector<ButtonEntry>& buttons() const { return buttons_; }

  // Category code for a mini-app id; throws for unknown ids.
  int category_of(int miniapp_id) const;
  ButtonRole role_of(int button_id) const;
  bool has_button(int button_id) const;

  // Mini-app ids belonging to one category (ascending).
  const std::vector<int>& apps_in_category(int category_code) const;
  // Button ids carrying one role (ascending).
  const std::vector<int>& buttons_with_role(ButtonRole role) const;

 private:
  std::vector<MiniAppEntry> miniapps_;
  std::vector<ButtonEntry> buttons_;
  std::map<int, int> category_by_app_;
  std::map<int, ButtonRole> role_by_button_;
  std::array<std::vector<int>, kNumCategories + 1> apps_by_category_;
  std::array<std::vector<int>, 4> buttons_by_role_;
};

// Deterministically builds a catalog: every category receives at least one
// mini-app, the first mini-apps cover the 28 categories in order, and any
// remainder is assigned seeded-uniformly. The first three buttons carry the
// special roles (payment, back, password-free payment) when present.
MiniAppCatalog build_catalog(int num_miniapps, int num_buttons,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Interaction samples
// ---------------------------------------------------------------------------

struct MiniHRecord {
  int miniapp_id = 0;
  int category_code = 0;
  std::int64_t access_count = 0;  // accesses in the trailing 30 days
};

struct OpHTimeline {
  std::vector<int> slots;  // button id per slot; 0 = no click
  int slot_duration_ms = 500;

  double window_seconds() const {
    return static_cast<double>(slots.size()) * slot_duration_ms / 1000.0;
  }
};

// One fused sample: n rows, each (miniapp_id, category_code, access_count,
// button_id). Mini-H rows are sorted by access count descending (ties by id
// ascending) and truncated/padded to n; rows beyond the stored records read
// as zeros.
class InteractionSample {
 public:
  InteractionSample(std::vector<MiniHRecord> sorted_records,
                    OpHTimeline op_h);

  int rows() const { return static_cast<int>(op_h_.slots.size()); }
  const std::vector<MiniHRecord>& mini_h() const { return *records_; }
  const OpHTimeline& op_h() const { return op_h_; }

  MiniHRecord mini_row(int i) const {
    return i < static_cast<int>(records_->size()) ? (*records_)[i]
                                                  : MiniHRecord{};
  }
  int button_at(int i) const { return op_h_.slots[i]; }

  struct FusedRow {
    int miniapp_id;
    int category_code;
    std::int64_t access_count;
    int button_id;
  };
  FusedRow fused_row(int i) const {
    MiniHRecord r = mini_row(i);
    return {r.miniapp_id, r.category_code, r.access_count, button_at(i)};
  }
  std::vector<FusedRow> fused() const;

 private:
  // Shared so that many samples of one user can alias one usage history.
  std::shared_ptr<const std::vector<MiniHRecord>> records_;
  OpHTimeline op_h_;

  friend InteractionSample fuse_shared(
      std::shared_ptr<const std::vector<MiniHRecord>> records, OpHTimeline op_h,
      int n);
};

// Fuses usage history with a click timeline into an n-row sample. Records
// are ordered by access count descending (ties by mini-app id ascending);
// if there are more than n they are truncated to the n most accessed.
// The timeline must have exactly n slots.
InteractionSample fuse(std::vector<MiniHRecord> mini_h, OpHTimeline op_h,
                       int n);

// Same contract, but the record list is already sorted/truncated and can be
// shared across samples without copying.
InteractionSample fuse_shared(
    std::shared_ptr<const std::vector<MiniHRecord>> records, OpHTimeline op_h,
    int n);

struct LabeledSample {
  std::string user_id;
  int sample_index = 0;
  InteractionSample sample;
  LabelMap labels;
};

struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
  std::vector<LabeledSample> test;
  std::uint64_t seed = 0;
};

}  // namespace attrinf
