#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/crypto.hpp"
#include "factcheck/hash256.hpp"
#include "factcheck/match_index.hpp"
#include "factcheck/raster.hpp"
#include "factcheck/timeutil.hpp"

namespace factcheck::store {

inline constexpr int kDefaultRadius = 31;
inline constexpr UnixSeconds kEarliestCheckDate = 946684800;  // 2000-01-01T00:00:00Z

enum class Verdict { kMisinformation, kTrue, kUnverified };

std::string_view to_string(Verdict v);
/// "misinformation" / "fake" / "false" / "true" / "unverified", any case.
Verdict parse_verdict(std::string_view text);

struct FingerprintRecord {
  std::uint64_t id = 0;
  Hash256 hash;
  Verdict verdict = Verdict::kUnverified;
  UnixSeconds check_date = 0;
  std::string agency;
  std::string url;

  friend bool operator==(const FingerprintRecord&, const FingerprintRecord&) = default;
};

class InvalidRecord : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidRecord when a published verdict lacks a url or check_date
/// falls outside [2000-01-01, now + 1 day].
void validate(const FingerprintRecord& rec, UnixSeconds now);

// --- ingestion -------------------------------------------------------------

struct IngestError {
  std::size_t line = 0;  // 1-based line in the CSV
  std::string message;
};

struct IngestResult {
  std::vector<FingerprintRecord> records;
  std::vector<IngestError> errors;
};

using ImageLoader = std::function<RasterImage(const std::filesystem::path&)>;

/// CSV with header `id,image_path,verdict,check_date,agency,url`. Relative
/// image paths resolve against `base_dir`. Bad rows are reported and skipped.
IngestResult ingest_factchecks(std::istream& csv, const std::filesystem::path& base_dir,
                               UnixSeconds now, const ImageLoader& loader = read_image);

/// Records that belong on devices: the debunked ones.
std::vector<FingerprintRecord> eligible_for_bundle(std::span<const FingerprintRecord> records);

// --- bundles ---------------------------------------------------------------

class MacKey {
 public:
  explicit MacKey(crypto::Bytes key);
  static MacKey from_hex(std::string_view hex);
  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return key_; }

 private:
  crypto::Bytes key_;
};

struct UpdateBundle {
  std::uint64_t version = 0;
  UnixSeconds created_at = 0;
  std::vector<FingerprintRecord> records;  // ascending id
  crypto::Digest checksum{};               // SHA-256 of the canonical payload
  crypto::Digest mac{};                    // HMAC-SHA256(key, checksum)

  friend bool operator==(const UpdateBundle&, const UpdateBundle&) = default;
};

struct BundleOptions {
  /// Defaults to the latest check_date among the records (0 when empty).
  std::optional<UnixSeconds> created_at;
  bool allow_empty = false;
  /// Ship True/Unverified records as well.
  bool include_all_verdicts = false;
};

class BundleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

UpdateBundle build_bundle(std::vector<FingerprintRecord> records, std::uint64_t version,
                          const MacKey& key, const BundleOptions& options = {});

/// Compact, key-sorted JSON of {version, created_at, records}.
std::string canonical_payload(std::uint64_t version, UnixSeconds created_at,
                              std::span<const FingerprintRecord> records);

/// Compact key-sorted JSON document followed by a newline.
std::string serialize_bundle(const UpdateBundle& bundle);
/// Throws BundleError on malformed input. Does not authenticate.
UpdateBundle parse_bundle(std::string_view text);

enum class BundleStatus { kOk, kMalformed, kBadChecksum, kBadMac, kStale };
std::string_view to_string(BundleStatus s);

BundleStatus verify_bundle(const UpdateBundle& bundle, const MacKey& key);
/// Parses, requires the text to be the exact canonical encoding, then
/// verifies checksum and MAC.
BundleStatus verify_bundle_text(std::string_view text, const MacKey& key);

class BundleRejected : public std::runtime_error {
 public:
  BundleRejected(BundleStatus status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  [[nodiscard]] BundleStatus status() const { return status_; }

 private:
  BundleStatus status_;
};

// --- device set ------------------------------------------------------------

struct DeviceMatch {
  index::MatchResult match;
  FingerprintRecord record;
};

/// The fingerprint set on one device. Immutable: apply() returns a new set
/// and leaves this one untouched.
class DeviceFingerprintSet {
 public:
  DeviceFingerprintSet();

  [[nodiscard]] std::uint64_t version() const { return version_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] const std::map<std::uint64_t, FingerprintRecord>& records() const {
    return records_;
  }
  [[nodiscard]] const index::MihIndex& index() const { return *index_; }

  /// Throws BundleRejected (kBadChecksum, kBadMac or kStale). Same-id records
  /// in the bundle replace the stored ones.
  [[nodiscard]] DeviceFingerprintSet apply(const UpdateBundle& bundle, const MacKey& key) const;

  /// Closest Misinformation record within `radius`; ties go to the lower id.
  [[nodiscard]] std::optional<DeviceMatch> lookup(const Hash256& h,
                                                  int radius = kDefaultRadius) const;

  /// Device state file: {"version":..., "records":[...]} (same record schema
  /// as bundles).
  [[nodiscard]] std::string serialize() const;
  static DeviceFingerprintSet parse(std::string_view text);

 private:
  DeviceFingerprintSet(std::uint64_t version, std::map<std::uint64_t, FingerprintRecord> records);

  std::uint64_t version_ = 0;
  std::map<std::uint64_t, FingerprintRecord> records_;
  std::shared_ptr<const index::MihIndex> index_;
};

}  // namespace factcheck::store
