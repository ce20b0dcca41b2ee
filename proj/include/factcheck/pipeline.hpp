#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/crypto.hpp"
#include "factcheck/fingerprint_store.hpp"
#include "factcheck/raster.hpp"
#include "factcheck/timeutil.hpp"

/// Simulation of on-device fact-check matching inside an end-to-end
/// encrypted messenger: senders and receivers check images against their own
/// fingerprint snapshot before encryption / after decryption, and the relay
/// only ever handles ciphertext.
namespace factcheck::sim {

enum class FlagPolicy { kAllow, kWarnOnly, kBlockForward };
enum class Outcome { kClean, kWarned, kBlocked };
enum class Stage { kSend, kReceive };

std::string_view to_string(FlagPolicy p);
std::string_view to_string(Outcome o);
std::string_view to_string(Stage s);
/// "allow", "warn" / "warn-only", "block" / "block-forward" (any case).
FlagPolicy parse_policy(std::string_view text);
Outcome parse_outcome(std::string_view text);
Stage parse_stage(std::string_view text);

struct FlagDecision {
  Outcome outcome = Outcome::kClean;
  Stage stage = Stage::kSend;
  // Present whenever the image matched, including Clean under Allow.
  std::optional<std::uint64_t> record_id;
  std::optional<int> distance;
  std::optional<std::string> url;
  std::optional<std::string> agency;

  [[nodiscard]] bool matched() const { return record_id.has_value(); }
  friend bool operator==(const FlagDecision&, const FlagDecision&) = default;
};

/// What the relay transports: routing metadata plus ciphertext.
struct Envelope {
  std::string sender;
  std::string recipient;
  std::uint64_t sequence = 0;
  crypto::Bytes ciphertext;
  crypto::Tag tag{};
};

/// Aggregate match statistics: record id -> occurrences. Holds nothing that
/// identifies a user or the content itself.
class MatchCounter {
 public:
  void record(std::uint64_t record_id) { ++counts_[record_id]; }
  [[nodiscard]] std::uint64_t count(std::uint64_t record_id) const;
  [[nodiscard]] std::uint64_t total() const;
  [[nodiscard]] const std::map<std::uint64_t, std::uint64_t>& counts() const { return counts_; }

 private:
  std::map<std::uint64_t, std::uint64_t> counts_;
};

class SessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TamperError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CorruptPayload : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClientConfig {
  FlagPolicy policy = FlagPolicy::kWarnOnly;
  bool telemetry = false;
  int radius = store::kDefaultRadius;
};

class Client {
 public:
  struct SendOutcome {
    FlagDecision decision;
    std::vector<Envelope> envelopes;  // empty when blocked
  };
  struct ReceiveOutcome {
    RasterImage image;
    FlagDecision decision;
    bool forwardable = true;
  };

  Client(std::string id, ClientConfig config,
         std::shared_ptr<const crypto::CipherSuite> suite =
             std::make_shared<crypto::ChaChaPolySuite>());

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const ClientConfig& config() const { return config_; }
  void set_config(const ClientConfig& config) { config_ = config; }

  /// Pre-provisioned pairwise key; both peers must hold the same key.
  void establish_session(const std::string& peer, const crypto::SymmetricKey& pair_key);
  [[nodiscard]] bool has_session(const std::string& peer) const;

  /// Snapshot swap: later checks see the new set.
  void install(store::DeviceFingerprintSet snapshot);
  [[nodiscard]] const store::DeviceFingerprintSet& snapshot() const { return *snapshot_; }

  /// Hash + lookup + policy, without side effects.
  [[nodiscard]] FlagDecision check(const RasterImage& img, Stage stage) const;

  /// Checks once, then encrypts one envelope per recipient unless blocked.
  /// A send-side match is recorded into `telemetry` when telemetry is on.
  SendOutcome send_image(std::span<const std::string> recipients, const RasterImage& img,
                         MatchCounter* telemetry = nullptr);
  SendOutcome send_image(const std::string& recipient, const RasterImage& img,
                         MatchCounter* telemetry = nullptr);

  /// Throws SessionError, TamperError (authentication failure) or
  /// CorruptPayload (decrypted bytes are not an image).
  ReceiveOutcome receive_image(const Envelope& envelope);

  [[nodiscard]] const std::vector<std::string>& event_log() const { return log_; }

 private:
  [[nodiscard]] crypto::SymmetricKey direction_key(const std::string& from,
                                                   const std::string& to) const;

  std::string id_;
  ClientConfig config_;
  std::shared_ptr<const crypto::CipherSuite> suite_;
  std::shared_ptr<const store::DeviceFingerprintSet> snapshot_;
  std::map<std::string, crypto::SymmetricKey> sessions_;
  std::map<std::string, std::uint64_t> next_sequence_;
  std::vector<std::string> log_;
};

/// Metadata the relay keeps per delivered envelope.
struct TraceRow {
  std::string sender;
  std::string recipient;
  std::uint64_t sequence = 0;
  std::size_t ciphertext_length = 0;
  UnixSeconds timestamp = 0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

class Relay {
 public:
  void register_client(const std::string& id);
  /// Queues the envelope for its recipient and records a trace row. Unknown
  /// recipients are dropped and logged; returns false in that case.
  bool relay(Envelope envelope, UnixSeconds timestamp);
  std::optional<Envelope> pop(const std::string& recipient);
  [[nodiscard]] std::size_t queued(const std::string& recipient) const;

  [[nodiscard]] const std::vector<TraceRow>& trace() const { return trace_; }
  [[nodiscard]] const std::vector<std::string>& delivery_failures() const { return failures_; }

 private:
  std::map<std::string, std::deque<Envelope>> queues_;
  std::vector<TraceRow> trace_;
  std::vector<std::string> failures_;
};

// --- scenarios -------------------------------------------------------------

class ScriptError : public std::runtime_error {
 public:
  ScriptError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class EventKind { kApplyBundle, kSend, kJoin, kConfigure };

struct ScenarioEvent {
  std::size_t line = 0;
  UnixSeconds t = 0;
  EventKind kind = EventKind::kSend;
  std::string actor;  // "*" addresses every device for apply_bundle/configure
  std::optional<std::string> recipient;
  std::optional<std::string> group;
  std::optional<std::string> image_path;
  std::optional<std::string> bundle_path;
  std::optional<FlagPolicy> policy;
  std::optional<bool> telemetry;
};

/// JSON lines, one event per line, timestamps non-decreasing:
///   {"t":..., "kind":"apply_bundle", "actor":..., "bundle_path":...}
///   {"t":..., "kind":"send", "actor":..., "recipient"|"group":..., "image_path":...}
///   {"t":..., "kind":"join", "actor":..., "group":...}
///   {"t":..., "kind":"configure", "actor":..., "policy"?:..., "telemetry"?:...}
/// `t` is epoch seconds or ISO-8601.
struct SimScript {
  std::vector<ScenarioEvent> events;

  static SimScript parse(std::string_view text);
};

/// Resolves the image and bundle paths a script refers to.
class ScenarioAssets {
 public:
  virtual ~ScenarioAssets() = default;
  virtual const RasterImage& image(const std::string& path) = 0;
  virtual const store::UpdateBundle& bundle(const std::string& path) = 0;
};

/// Loads from disk relative to a base directory, caching by path.
class FileAssets final : public ScenarioAssets {
 public:
  explicit FileAssets(std::filesystem::path base_dir) : base_(std::move(base_dir)) {}
  const RasterImage& image(const std::string& path) override;
  const store::UpdateBundle& bundle(const std::string& path) override;

 private:
  std::filesystem::path resolve(const std::string& path) const;

  std::filesystem::path base_;
  std::map<std::string, RasterImage> images_;
  std::map<std::string, store::UpdateBundle> bundles_;
};

class MemoryAssets final : public ScenarioAssets {
 public:
  void add_image(std::string path, RasterImage img) { images_[std::move(path)] = std::move(img); }
  void add_bundle(std::string path, store::UpdateBundle b) { bundles_[std::move(path)] = std::move(b); }
  const RasterImage& image(const std::string& path) override;
  const store::UpdateBundle& bundle(const std::string& path) override;

 private:
  std::map<std::string, RasterImage> images_;
  std::map<std::string, store::UpdateBundle> bundles_;
};

struct SimConfig {
  std::uint64_t seed = 0;
  FlagPolicy default_policy = FlagPolicy::kWarnOnly;
  bool telemetry = false;
  int radius = store::kDefaultRadius;
  /// Needed by scripts that apply bundles.
  std::optional<store::MacKey> bundle_key;
};

struct DecisionRecord {
  std::size_t event = 0;  // index into the script
  UnixSeconds t = 0;
  std::string actor;  // deciding device
  std::string peer;   // recipient at send, sender at receive
  FlagDecision decision;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

struct BundleApplication {
  std::size_t event = 0;
  UnixSeconds t = 0;
  std::string actor;
  std::uint64_t version = 0;
  std::string status;  // "applied" or the rejection reason

  friend bool operator==(const BundleApplication&, const BundleApplication&) = default;
};

struct SimReport {
  std::uint64_t seed = 0;
  std::size_t event_count = 0;
  std::vector<DecisionRecord> decisions;
  std::vector<TraceRow> server_trace;
  std::map<std::uint64_t, std::uint64_t> counters;
  std::uint64_t prevented_total = 0;
  std::vector<BundleApplication> bundle_applications;
  std::vector<std::string> delivery_failures;

  /// Deterministic pretty-printed JSON with sorted keys.
  [[nodiscard]] std::string to_json() const;
  static SimReport from_json(std::string_view text);
  /// The server trace alone, as the relay would persist it.
  [[nodiscard]] std::string server_trace_json() const;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// Single-threaded event loop: every send is relayed and received
/// immediately. Clients appear on first mention with sessions to every other
/// client, keyed from `config.seed`.
SimReport run_scenario(const SimScript& script, ScenarioAssets& assets, const SimConfig& config);

/// Pairwise session key derived from the seed; symmetric in (a, b).
crypto::SymmetricKey session_key(std::uint64_t seed, const std::string& a, const std::string& b);

}  // namespace factcheck::sim
