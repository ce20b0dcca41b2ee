#include "factcheck/fingerprint_store.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "factcheck/csv.hpp"
#include "factcheck/pdq.hpp"
#include "json.hpp"

namespace factcheck::store {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

json record_to_json(const FingerprintRecord& r) {
  return json{{"id", r.id},
              {"hash_hex", r.hash.to_hex()},
              {"verdict", std::string(to_string(r.verdict))},
              {"check_date", r.check_date},
              {"agency", r.agency},
              {"url", r.url}};
}

FingerprintRecord record_from_json(const json& j) {
  if (!j.is_object() || j.size() != 6) throw BundleError("record must have exactly six fields");
  FingerprintRecord r;
  r.id = j.at("id").get<std::uint64_t>();
  r.hash = Hash256::from_hex(j.at("hash_hex").get<std::string>());
  r.verdict = parse_verdict(j.at("verdict").get<std::string>());
  r.check_date = j.at("check_date").get<UnixSeconds>();
  r.agency = j.at("agency").get<std::string>();
  r.url = j.at("url").get<std::string>();
  return r;
}

json records_to_json(std::span<const FingerprintRecord> records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr;
}

std::vector<FingerprintRecord> records_from_json(const json& arr) {
  if (!arr.is_array()) throw BundleError("records must be an array");
  std::vector<FingerprintRecord> out;
  out.reserve(arr.size());
  for (const auto& item : arr) out.push_back(record_from_json(item));
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i - 1].id >= out[i].id) throw BundleError("records must be sorted by unique id");
  }
  return out;
}

crypto::Digest digest_from_hex(const std::string& hex) {
  const auto bytes = crypto::from_hex(hex);
  if (bytes.size() != 32) throw BundleError("digest must be 32 bytes");
  crypto::Digest d{};
  std::copy(bytes.begin(), bytes.end(), d.begin());
  return d;
}

crypto::Digest payload_checksum(const UpdateBundle& b) {
  return crypto::sha256(crypto::as_bytes(canonical_payload(b.version, b.created_at, b.records)));
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kMisinformation: return "misinformation";
    case Verdict::kTrue: return "true";
    case Verdict::kUnverified: return "unverified";
  }
  return "unverified";
}

Verdict parse_verdict(std::string_view text) {
  const auto v = lower(text);
  if (v == "misinformation" || v == "fake" || v == "false") return Verdict::kMisinformation;
  if (v == "true") return Verdict::kTrue;
  if (v == "unverified") return Verdict::kUnverified;
  throw std::invalid_argument("unknown verdict '" + std::string(text) + "'");
}

void validate(const FingerprintRecord& rec, UnixSeconds now) {
  if (rec.verdict != Verdict::kUnverified && rec.url.empty()) {
    throw InvalidRecord("record " + std::to_string(rec.id) + ": a published verdict needs a url");
  }
  if (rec.check_date < kEarliestCheckDate || rec.check_date > now + kSecondsPerDay) {
    throw InvalidRecord("record " + std::to_string(rec.id) + ": check_date " +
                        format_iso8601(rec.check_date) + " outside the accepted range");
  }
}

IngestResult ingest_factchecks(std::istream& csv, const std::filesystem::path& base_dir,
                               UnixSeconds now, const ImageLoader& loader) {
  CsvReader reader(csv, {"id", "image_path", "verdict", "check_date", "agency", "url"});
  IngestResult result;
  std::set<std::uint64_t> seen;
  while (auto row = reader.next()) {
    try {
      FingerprintRecord rec;
      rec.id = parse_u64(reader.field(*row, "id"));
      if (seen.contains(rec.id)) throw std::invalid_argument("duplicate id " + std::to_string(rec.id));
      rec.verdict = parse_verdict(reader.field(*row, "verdict"));
      rec.check_date = parse_timestamp(reader.field(*row, "check_date"));
      rec.agency = reader.field(*row, "agency");
      rec.url = reader.field(*row, "url");
      validate(rec, now);

      std::filesystem::path image_path = reader.field(*row, "image_path");
      if (image_path.is_relative()) image_path = base_dir / image_path;
      rec.hash = pdq::hash(loader(image_path)).bits;

      seen.insert(rec.id);
      result.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      result.errors.push_back({reader.line(), e.what()});
    }
  }
  return result;
}

std::vector<FingerprintRecord> eligible_for_bundle(std::span<const FingerprintRecord> records) {
  std::vector<FingerprintRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const FingerprintRecord& r) { return r.verdict == Verdict::kMisinformation; });
  return out;
}

MacKey::MacKey(crypto::Bytes key) : key_(std::move(key)) {
  if (key_.empty()) throw std::invalid_argument("MAC key must not be empty");
}

MacKey MacKey::from_hex(std::string_view hex) { return MacKey(crypto::from_hex(hex)); }

std::string canonical_payload(std::uint64_t version, UnixSeconds created_at,
                              std::span<const FingerprintRecord> records) {
  const json payload{{"version", version},
                     {"created_at", created_at},
                     {"records", records_to_json(records)}};
  return payload.dump();
}

UpdateBundle build_bundle(std::vector<FingerprintRecord> records, std::uint64_t version,
                          const MacKey& key, const BundleOptions& options) {
  if (version == 0) throw BundleError("bundle version must be positive");
  if (!options.include_all_verdicts) records = eligible_for_bundle(records);
  if (records.empty() && !options.allow_empty) {
    throw BundleError("bundle has no eligible records (set allow_empty to ship an empty bundle)");
  }
  std::sort(records.begin(), records.end(),
            [](const FingerprintRecord& a, const FingerprintRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i - 1].id == records[i].id) {
      throw BundleError("duplicate record id " + std::to_string(records[i].id));
    }
  }

  UpdateBundle b;
  b.version = version;
  b.created_at = options.created_at.value_or(0);
  if (!options.created_at) {
    for (const auto& r : records) b.created_at = std::max(b.created_at, r.check_date);
  }
  b.records = std::move(records);
  b.checksum = payload_checksum(b);
  b.mac = crypto::hmac_sha256(key.bytes(), b.checksum);
  return b;
}

std::string serialize_bundle(const UpdateBundle& bundle) {
  const json doc{{"version", bundle.version},
                 {"created_at", bundle.created_at},
                 {"records", records_to_json(bundle.records)},
                 {"checksum_hex", crypto::to_hex(bundle.checksum)},
                 {"mac_hex", crypto::to_hex(bundle.mac)}};
  return doc.dump() + "\n";
}

UpdateBundle parse_bundle(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    if (!doc.is_object() || doc.size() != 5) throw BundleError("bundle must have exactly five fields");
    UpdateBundle b;
    b.version = doc.at("version").get<std::uint64_t>();
    b.created_at = doc.at("created_at").get<UnixSeconds>();
    b.records = records_from_json(doc.at("records"));
    b.checksum = digest_from_hex(doc.at("checksum_hex").get<std::string>());
    b.mac = digest_from_hex(doc.at("mac_hex").get<std::string>());
    return b;
  } catch (const BundleError&) {
    throw;
  } catch (const std::exception& e) {
    throw BundleError(std::string("malformed bundle: ") + e.what());
  }
}

std::string_view to_string(BundleStatus s) {
  switch (s) {
    case BundleStatus::kOk: return "ok";
    case BundleStatus::kMalformed: return "malformed";
    case BundleStatus::kBadChecksum: return "checksum mismatch";
    case BundleStatus::kBadMac: return "authentication failed";
    case BundleStatus::kStale: return "stale version";
  }
  return "unknown";
}

BundleStatus verify_bundle(const UpdateBundle& bundle, const MacKey& key) {
  if (!crypto::equal_digests(payload_checksum(bundle), bundle.checksum)) {
    return BundleStatus::kBadChecksum;
  }
  if (!crypto::equal_digests(crypto::hmac_sha256(key.bytes(), bundle.checksum), bundle.mac)) {
    return BundleStatus::kBadMac;
  }
  return BundleStatus::kOk;
}

BundleStatus verify_bundle_text(std::string_view text, const MacKey& key) {
  UpdateBundle b;
  try {
    b = parse_bundle(text);
  } catch (const BundleError&) {
    return BundleStatus::kMalformed;
  }
  if (serialize_bundle(b) != text) return BundleStatus::kMalformed;
  return verify_bundle(b, key);
}

DeviceFingerprintSet::DeviceFingerprintSet()
    : index_(std::make_shared<const index::MihIndex>()) {}

DeviceFingerprintSet::DeviceFingerprintSet(std::uint64_t version,
                                           std::map<std::uint64_t, FingerprintRecord> records)
    : version_(version), records_(std::move(records)) {
  std::vector<index::IndexEntry> entries;
  entries.reserve(records_.size());
  for (const auto& [id, rec] : records_) entries.push_back({id, rec.hash});
  index_ = std::make_shared<const index::MihIndex>(std::move(entries));
}

DeviceFingerprintSet DeviceFingerprintSet::apply(const UpdateBundle& bundle,
                                                 const MacKey& key) const {
  if (const auto status = verify_bundle(bundle, key); status != BundleStatus::kOk) {
    throw BundleRejected(status, "bundle v" + std::to_string(bundle.version) + " rejected: " +
                                     std::string(to_string(status)));
  }
  if (bundle.version <= version_) {
    throw BundleRejected(BundleStatus::kStale,
                         "bundle v" + std::to_string(bundle.version) +
                             " rejected: device already at v" + std::to_string(version_));
  }
  auto merged = records_;
  for (const auto& r : bundle.records) merged.insert_or_assign(r.id, r);
  return DeviceFingerprintSet(bundle.version, std::move(merged));
}

std::optional<DeviceMatch> DeviceFingerprintSet::lookup(const Hash256& h, int radius) const {
  for (const auto& m : index_->query(h, radius)) {
    const auto& rec = records_.at(m.id);
    if (rec.verdict == Verdict::kMisinformation) return DeviceMatch{m, rec};
  }
  return std::nullopt;
}

std::string DeviceFingerprintSet::serialize() const {
  std::vector<FingerprintRecord> list;
  list.reserve(records_.size());
  for (const auto& [id, rec] : records_) list.push_back(rec);
  const json doc{{"version", version_}, {"records", records_to_json(list)}};
  return doc.dump() + "\n";
}

DeviceFingerprintSet DeviceFingerprintSet::parse(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    std::map<std::uint64_t, FingerprintRecord> records;
    for (auto& r : records_from_json(doc.at("records"))) records.emplace(r.id, std::move(r));
    return DeviceFingerprintSet(doc.at("version").get<std::uint64_t>(), std::move(records));
  } catch (const BundleError&) {
    throw;
  } catch (const std::exception& e) {
    throw BundleError(std::string("malformed device state: ") + e.what());
  }
}

}  // namespace factcheck::store
