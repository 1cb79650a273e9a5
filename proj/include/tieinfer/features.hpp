#pragma once

// The 48-column dyad descriptor: 16 base features in three role variants.
//
// Column order is variant-major: columns 0..15 are the total variant, 16..31
// in-role, 32..47 extra-role. Within a block the base features follow
// BaseFeature's declaration order.

#include <algorithm>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tieinfer/context.hpp"
#include "tieinfer/core.hpp"
#include "tieinfer/ingest.hpp"

namespace tieinfer {

enum class Variant : std::uint8_t { Total = 0, InRole = 1, ExtraRole = 2 };
inline constexpr Variant kAllVariants[] = {Variant::Total, Variant::InRole, Variant::ExtraRole};

inline bool variant_includes(Variant v, Role r) {
  return v == Variant::Total || (v == Variant::InRole) == (r == Role::InRole);
}

enum BaseFeature : int {
  kTotalTime = 0,
  kTimeOnCampus,
  kTimeOffCampus,
  kTimeAtHome,
  kTimeWeightedPeople,
  kTimeWeightedAps,
  kEntropyHourOfDay,
  kEntropyDayOfWeek,
  kEntropyHourOfWeek,
  kMeanInterMeeting,
  kMedianInterMeeting,
  kEntropyLocations,
  kJaccardTop5,
  kJaccardTop15,
  kJaccardTop25,
  kJaccardTop50,
};

inline constexpr int kBaseFeatureCount = 16;
inline constexpr int kFeatureCount = 48;
inline constexpr int kTopContactSizes[] = {5, 15, 25, 50};

using FeatureVector = std::array<double, kFeatureCount>;

constexpr int feature_column(BaseFeature f, Variant v) {
  return static_cast<int>(v) * kBaseFeatureCount + static_cast<int>(f);
}

std::string_view base_feature_name(BaseFeature f);
std::string_view variant_name(Variant v);
// "<base>_<variant>", e.g. "time_weighted_people_extra_role".
std::string feature_name(int column);
const std::vector<std::string>& feature_names();

struct FeatureConfig {
  RoleConfig roles;
  int gap_tolerance = 10;  // minutes
  int threads = 1;
};

struct TimeFeatures {
  double total = 0, on_campus = 0, off_campus = 0, at_home = 0;
  double weighted_people = 0;  // sum of 1 / (1 + group_size)
  double weighted_aps = 0;     // sum of 1 / max(1, ap_count)
};

TimeFeatures time_features(std::span<const MinuteCell> minutes, Variant variant);

// Entropy in bits of a histogram; 0 for empty or single-bin mass.
double shannon_entropy(std::span<const std::uint64_t> counts);

struct RegularityFeatures {
  double entropy_hour_of_day = 0;
  double entropy_day_of_week = 0;
  double entropy_hour_of_week = 0;
  double mean_inter_meeting = 0;    // end-to-start gaps, minutes
  double median_inter_meeting = 0;
  double entropy_locations = 0;
};

// `meetings` are the dyad's meetings over all minutes and are used for the
// total variant; role variants re-segment their filtered minutes with the
// same tolerance. With fewer than two meetings both gap statistics equal
// month_length_minutes.
RegularityFeatures regularity_features(std::span<const Meeting> meetings,
                                       std::span<const MinuteCell> minutes, Variant variant,
                                       const FeatureConfig& cfg,
                                       std::int64_t month_length_minutes);

// |A ∩ B| / |A ∪ B|; 0 when both are empty. Inputs need not be sorted.
template <class T>
double jaccard(std::vector<T> a, std::vector<T> b);

// Per-user contact lists ranked by co-presence minutes (descending), ties by
// user id. Built once per month grid.
class ContactIndex {
 public:
  static ContactIndex build(const MinuteGrid& grid);

  // Up to k contacts of `user` under the variant, skipping `exclude`.
  std::vector<UserIndex> top_contacts(UserIndex user, int k, Variant variant,
                                      std::optional<UserIndex> exclude = std::nullopt) const;

  struct Contact {
    UserIndex partner;
    std::uint32_t minutes;
  };
  std::span<const Contact> contacts(UserIndex user, Variant variant) const;

 private:
  std::size_t users_ = 0;
  std::array<std::vector<std::size_t>, 3> offsets_;
  std::array<std::vector<Contact>, 3> lists_;
};

struct FeatureMatrix {
  YearMonth month;
  std::string candidate_set = "copresence_minutes>=1";
  std::vector<Dyad> dyads;     // ascending
  std::vector<double> values;  // row-major, rows() x kFeatureCount

  std::size_t rows() const noexcept { return dyads.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * kFeatureCount, kFeatureCount);
  }
  double at(std::size_t i, int column) const { return values[i * kFeatureCount + column]; }
  std::optional<std::size_t> find(const Dyad& d) const;
};

// One row per grid dyad. The grid and meetings must cover `month` only.
FeatureMatrix build_feature_matrix(const EventLog& log, const MinuteGrid& grid,
                                   const MeetingTable& meetings, const MonthWindow& month,
                                   const FeatureConfig& cfg);

// Month pipeline: restrict events to the month, build the grid with the given
// homes, segment meetings, and compute the matrix.
FeatureMatrix compute_month_features(const EventLog& log, const HomeMap& homes,
                                     const MonthWindow& month, const FeatureConfig& cfg);

void write_features_csv(std::ostream& out, const FeatureMatrix& m);
// Reads a single-month features.csv. Throws ParseError on malformed input or
// mixed months.
FeatureMatrix read_features_csv(std::istream& in);
FeatureMatrix read_features_file(const std::string& path);

template <class T>
double jaccard(std::vector<T> a, std::vector<T> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace tieinfer
