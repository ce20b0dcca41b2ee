#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "factcheck/fingerprint_store.hpp"
#include "factcheck/pipeline.hpp"
#include "factcheck/timeutil.hpp"

/// Share-log measurements: shares of debunked images before and after their
/// first fact-check.
namespace factcheck::analysis {

struct ShareEvent {
  std::uint64_t image_id = 0;
  std::string group_id;
  UnixSeconds timestamp = 0;

  friend bool operator==(const ShareEvent&, const ShareEvent&) = default;
};

/// image id -> first check date.
using CheckDates = std::map<std::uint64_t, UnixSeconds>;

/// Inserts or lowers the check date of `image_id`.
void add_check(CheckDates& checks, std::uint64_t image_id, UnixSeconds check_date);

struct ImageShareSummary {
  std::uint64_t image_id = 0;
  std::uint64_t shares_before = 0;
  std::uint64_t shares_after = 0;
  UnixSeconds first_check_date = 0;

  [[nodiscard]] std::uint64_t total() const { return shares_before + shares_after; }
  friend bool operator==(const ImageShareSummary&, const ImageShareSummary&) = default;
};

/// Inclusive [begin, end] bounds on event timestamps.
struct StudyWindow {
  UnixSeconds begin = 0;
  UnixSeconds end = 0;
};

struct EventError {
  std::size_t index = 0;  // position in the input
  std::uint64_t image_id = 0;
  std::string message;
};

struct SummarizeResult {
  std::vector<ImageShareSummary> summaries;  // ascending image id
  std::vector<EventError> errors;
};

/// An event at or after the image's check date counts as "after". Events for
/// unknown images, or outside `window` when given, are reported and skipped.
SummarizeResult summarize(std::span<const ShareEvent> events, const CheckDates& checks,
                          const std::optional<StudyWindow>& window = std::nullopt);

struct AggregateReport {
  std::uint64_t images_found = 0;
  std::uint64_t total_shares = 0;
  std::uint64_t shares_after = 0;
  std::uint64_t max_shares_after = 0;
  /// Percentage of shares after checking, in tenths of a percent.
  std::uint64_t pct_after_tenths = 0;

  [[nodiscard]] double pct_after() const { return static_cast<double>(pct_after_tenths) / 10.0; }
  /// One decimal, e.g. "40.7".
  [[nodiscard]] std::string pct_after_text() const;
  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

/// round_half_up(1000 * numerator / denominator); 0 when denominator is 0.
std::uint64_t percent_tenths(std::uint64_t numerator, std::uint64_t denominator);

AggregateReport aggregate(std::span<const ImageShareSummary> summaries);

struct OutlierExclusion {
  std::vector<ImageShareSummary> kept;
  std::vector<std::uint64_t> removed;  // image ids
  AggregateReport report;
};

/// Drops images whose total shares exceed `max_total_shares` (must be >= 1).
OutlierExclusion exclude_outliers(std::span<const ImageShareSummary> summaries,
                                  std::uint64_t max_total_shares);

struct CdfPoint {
  std::uint64_t x = 0;
  double y = 0.0;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// One point per distinct count: y = fraction of images with count <= x.
struct CdfSeries {
  std::vector<CdfPoint> before;
  std::vector<CdfPoint> after;
};

CdfSeries cdf_series(std::span<const ImageShareSummary> summaries);

/// Two-column TSV with a header row.
std::string cdf_tsv(std::span<const CdfPoint> series);

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CrossCheck {
  bool consistent = false;
  std::uint64_t prevented_total = 0;
  std::uint64_t shares_after = 0;
  std::vector<std::uint64_t> differing_images;
};

/// Compares per-image Blocked sends in `report` with shares_after. Throws
/// ConfigurationError when the report blocks a record absent from
/// `summaries`.
CrossCheck cross_check_simulation(const sim::SimReport& report,
                                  std::span<const ImageShareSummary> summaries);

// --- I/O -------------------------------------------------------------------

/// CSV `image_id,group_id,timestamp`; throws CsvError naming the line.
std::vector<ShareEvent> load_share_log(std::istream& in);
/// CSV `image_id,check_date,agency,url`; repeated ids keep the earliest date.
CheckDates load_checks(std::istream& in);

/// Key-sorted, pretty-printed JSON.
std::string report_json(const AggregateReport& report);
std::string report_json(const AggregateReport& report, const OutlierExclusion& exclusion,
                        std::uint64_t threshold);

// --- scenario generation ---------------------------------------------------

/// A simulator script replaying `events` as group sends, with one bundle per
/// image applied to every device at its check date.
struct ReplayScenario {
  std::string script_jsonl;
  sim::MemoryAssets assets;
};

/// Each image id gets a distinct synthetic picture derived from `seed`.
/// Every event's image must have a check date.
ReplayScenario make_replay_scenario(std::span<const ShareEvent> events, const CheckDates& checks,
                                    const store::MacKey& key, std::uint64_t seed);

}  // namespace factcheck::analysis
