#include "factcheck/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "factcheck/pdq.hpp"

namespace factcheck::sim {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void append_u64(crypto::Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_str(crypto::Bytes& out, std::string_view s) {
  append_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

std::string_view to_string(FlagPolicy p) {
  switch (p) {
    case FlagPolicy::kAllow: return "allow";
    case FlagPolicy::kWarnOnly: return "warn-only";
    case FlagPolicy::kBlockForward: return "block-forward";
  }
  return "warn-only";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kClean: return "clean";
    case Outcome::kWarned: return "warned";
    case Outcome::kBlocked: return "blocked";
  }
  return "clean";
}

std::string_view to_string(Stage s) { return s == Stage::kSend ? "send" : "receive"; }

FlagPolicy parse_policy(std::string_view text) {
  const auto v = lower(text);
  if (v == "allow") return FlagPolicy::kAllow;
  if (v == "warn" || v == "warn-only" || v == "warnonly") return FlagPolicy::kWarnOnly;
  if (v == "block" || v == "block-forward" || v == "blockforward") return FlagPolicy::kBlockForward;
  throw std::invalid_argument("unknown policy '" + std::string(text) +
                              "' (expected allow, warn-only or block-forward)");
}

Outcome parse_outcome(std::string_view text) {
  const auto v = lower(text);
  if (v == "clean") return Outcome::kClean;
  if (v == "warned") return Outcome::kWarned;
  if (v == "blocked") return Outcome::kBlocked;
  throw std::invalid_argument("unknown outcome '" + std::string(text) + "'");
}

Stage parse_stage(std::string_view text) {
  const auto v = lower(text);
  if (v == "send") return Stage::kSend;
  if (v == "receive") return Stage::kReceive;
  throw std::invalid_argument("unknown stage '" + std::string(text) + "'");
}

std::uint64_t MatchCounter::count(std::uint64_t record_id) const {
  const auto it = counts_.find(record_id);
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t MatchCounter::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

crypto::SymmetricKey session_key(std::uint64_t seed, const std::string& a, const std::string& b) {
  const auto& lo = std::min(a, b);
  const auto& hi = std::max(a, b);
  crypto::Bytes material;
  append_str(material, "factcheck-sim-session");
  append_u64(material, seed);
  append_str(material, lo);
  append_str(material, hi);
  return crypto::sha256(material);
}

// --- Client ----------------------------------------------------------------

Client::Client(std::string id, ClientConfig config,
               std::shared_ptr<const crypto::CipherSuite> suite)
    : id_(std::move(id)),
      config_(config),
      suite_(std::move(suite)),
      snapshot_(std::make_shared<const store::DeviceFingerprintSet>()) {
  if (id_.empty()) throw std::invalid_argument("client id must not be empty");
  if (!suite_) throw std::invalid_argument("client needs a cipher suite");
}

void Client::establish_session(const std::string& peer, const crypto::SymmetricKey& pair_key) {
  sessions_[peer] = pair_key;
}

bool Client::has_session(const std::string& peer) const { return sessions_.contains(peer); }

void Client::install(store::DeviceFingerprintSet snapshot) {
  snapshot_ = std::make_shared<const store::DeviceFingerprintSet>(std::move(snapshot));
  log_.push_back("installed fingerprint set v" + std::to_string(snapshot_->version()));
}

crypto::SymmetricKey Client::direction_key(const std::string& from, const std::string& to) const {
  const auto peer = from == id_ ? to : from;
  const auto it = sessions_.find(peer);
  if (it == sessions_.end()) throw SessionError(id_ + " has no session with " + peer);
  crypto::Bytes label;
  append_str(label, from);
  append_str(label, to);
  return crypto::hmac_sha256(it->second, label);
}

FlagDecision Client::check(const RasterImage& img, Stage stage) const {
  FlagDecision d;
  d.stage = stage;
  const auto found = snapshot_->lookup(pdq::hash(img).bits, config_.radius);
  if (!found) return d;
  d.record_id = found->record.id;
  d.distance = found->match.distance;
  d.url = found->record.url;
  d.agency = found->record.agency;
  switch (config_.policy) {
    case FlagPolicy::kAllow: d.outcome = Outcome::kClean; break;
    case FlagPolicy::kWarnOnly: d.outcome = Outcome::kWarned; break;
    case FlagPolicy::kBlockForward: d.outcome = Outcome::kBlocked; break;
  }
  return d;
}

Client::SendOutcome Client::send_image(std::span<const std::string> recipients,
                                       const RasterImage& img, MatchCounter* telemetry) {
  for (const auto& r : recipients) {
    if (!has_session(r)) throw SessionError(id_ + " has no session with " + r);
  }
  SendOutcome out;
  out.decision = check(img, Stage::kSend);
  if (out.decision.matched() && config_.telemetry && telemetry != nullptr) {
    telemetry->record(*out.decision.record_id);
  }
  if (out.decision.outcome == Outcome::kBlocked) {
    log_.push_back("send blocked: record " + std::to_string(*out.decision.record_id));
    return out;
  }

  const auto plaintext = pack_image(img);
  std::vector<Envelope> envelopes;
  std::map<std::string, std::uint64_t> sequences = next_sequence_;
  try {
    for (const auto& r : recipients) {
      const auto seq = sequences[r]++;
      auto sealed = suite_->encrypt(direction_key(id_, r), seq, plaintext);
      envelopes.push_back({id_, r, seq, std::move(sealed.ciphertext), sealed.tag});
    }
  } catch (const crypto::CryptoError& e) {
    throw TransportError(std::string("encryption failed: ") + e.what());
  }
  next_sequence_ = std::move(sequences);
  out.envelopes = std::move(envelopes);
  log_.push_back("sent " + std::to_string(out.envelopes.size()) + " envelope(s), outcome " +
                 std::string(to_string(out.decision.outcome)));
  return out;
}

Client::SendOutcome Client::send_image(const std::string& recipient, const RasterImage& img,
                                       MatchCounter* telemetry) {
  return send_image(std::span<const std::string>(&recipient, 1), img, telemetry);
}

Client::ReceiveOutcome Client::receive_image(const Envelope& envelope) {
  if (envelope.recipient != id_) {
    throw SessionError("envelope for " + envelope.recipient + " delivered to " + id_);
  }
  const auto key = direction_key(envelope.sender, id_);
  const auto plaintext = suite_->decrypt(key, envelope.sequence, envelope.ciphertext, envelope.tag);
  if (!plaintext) {
    log_.push_back("rejected tampered envelope from " + envelope.sender);
    throw TamperError("authentication failed for envelope " + std::to_string(envelope.sequence) +
                      " from " + envelope.sender);
  }
  RasterImage img;
  try {
    img = unpack_image(*plaintext);
  } catch (const MalformedImage& e) {
    throw CorruptPayload(std::string("payload is not an image: ") + e.what());
  }
  ReceiveOutcome out{std::move(img), {}, true};
  out.decision = check(out.image, Stage::kReceive);
  out.forwardable = out.decision.outcome != Outcome::kBlocked;
  log_.push_back("received from " + envelope.sender + ", outcome " +
                 std::string(to_string(out.decision.outcome)));
  return out;
}

// --- Relay -----------------------------------------------------------------

void Relay::register_client(const std::string& id) { queues_.try_emplace(id); }

bool Relay::relay(Envelope envelope, UnixSeconds timestamp) {
  const auto it = queues_.find(envelope.recipient);
  if (it == queues_.end()) {
    failures_.push_back(format_iso8601(timestamp) + " unknown recipient '" + envelope.recipient +
                        "' (from " + envelope.sender + ", seq " +
                        std::to_string(envelope.sequence) + ")");
    return false;
  }
  trace_.push_back({envelope.sender, envelope.recipient, envelope.sequence,
                    envelope.ciphertext.size(), timestamp});
  it->second.push_back(std::move(envelope));
  return true;
}

std::optional<Envelope> Relay::pop(const std::string& recipient) {
  const auto it = queues_.find(recipient);
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  auto e = std::move(it->second.front());
  it->second.pop_front();
  return e;
}

std::size_t Relay::queued(const std::string& recipient) const {
  const auto it = queues_.find(recipient);
  return it == queues_.end() ? 0 : it->second.size();
}

}  // namespace factcheck::sim
