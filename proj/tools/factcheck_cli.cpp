// factcheck: command-line front end for hashing, indexing, bundles,
// simulation and share-log analysis.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "factcheck/analysis.hpp"
#include "factcheck/fingerprint_store.hpp"
#include "factcheck/match_index.hpp"
#include "factcheck/pdq.hpp"
#include "factcheck/pipeline.hpp"

namespace fs = std::filesystem;
using namespace factcheck;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  const auto text = read_text(p);
  return {text.begin(), text.end()};
}

/// Writes through a temporary file so readers never see a partial file.
void write_atomically(const fs::path& p, std::span<const std::uint8_t> data) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

void write_atomically(const fs::path& p, std::string_view text) {
  write_atomically(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void emit(const std::optional<fs::path>& out, std::string_view text) {
  if (out) {
    write_atomically(*out, text);
  } else {
    std::cout << text;
  }
}

void check_radius(int radius) {
  if (radius < 0 || radius > index::MihIndex::kMaxRadius) {
    throw UsageError("--radius must be between 0 and " +
                     std::to_string(index::MihIndex::kMaxRadius));
  }
}

store::MacKey parse_key(const std::string& hex) {
  if (hex.empty()) throw UsageError("--key is required");
  try {
    return store::MacKey::from_hex(hex);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--key: ") + e.what());
  }
}

// --- hash ------------------------------------------------------------------

struct HashArgs {
  std::vector<std::string> paths;
  bool dihedral = false;
};

int run_hash(const HashArgs& a) {
  int status = kExitOk;
  for (const auto& path : a.paths) {
    try {
      const auto img = read_image(path);
      if (a.dihedral) {
        const auto hashes = pdq::dihedral_hashes(img);
        for (std::size_t i = 0; i < hashes.size(); ++i) {
          std::cout << hashes[i].bits.to_hex() << ' ' << hashes[i].quality << ' ' << path << ' '
                    << pdq::to_string(pdq::kAllDihedrals[i]) << '\n';
        }
      } else {
        const auto h = pdq::hash(img);
        std::cout << h.bits.to_hex() << ' ' << h.quality << ' ' << path << '\n';
      }
    } catch (const std::exception& e) {
      std::cerr << "factcheck hash: " << path << ": " << e.what() << '\n';
      status = kExitPartial;
    }
  }
  return status;
}

// --- index -----------------------------------------------------------------

struct IndexArgs {
  std::string hashes;
  std::string out;
  std::string bloom_out;
  double fpr = 1e-4;
  std::string index_path;
  std::string bloom_path;
  std::vector<std::string> queries;
  int radius = store::kDefaultRadius;
  bool linear = false;
};

/// Lines of `<id> <64-hex>`; blank lines and `#` comments are ignored.
std::vector<index::IndexEntry> read_hash_list(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::vector<index::IndexEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::uint64_t id = 0;
    std::string hex;
    if (!(fields >> id >> hex) || !Hash256::is_hex(hex)) {
      throw std::runtime_error(p.string() + ":" + std::to_string(line_no) +
                               ": expected '<id> <64-hex>'");
    }
    entries.push_back({id, Hash256::from_hex(hex)});
  }
  return entries;
}

int run_index_build(const IndexArgs& a) {
  const auto entries = read_hash_list(a.hashes);
  if (a.out.empty() && a.bloom_out.empty()) throw UsageError("give --out and/or --bloom-out");
  if (!a.out.empty()) {
    const index::MihIndex idx(entries);
    write_atomically(a.out, idx.serialize());
  }
  if (!a.bloom_out.empty()) {
    auto bloom = index::BloomFilter::create(std::max<std::size_t>(entries.size(), 1), a.fpr);
    for (const auto& e : entries) bloom.insert(e.hash);
    write_atomically(a.bloom_out, bloom.serialize());
  }
  return kExitOk;
}

Hash256 parse_query(const std::string& q) {
  if (Hash256::is_hex(q)) return Hash256::from_hex(q);
  return pdq::hash(read_image(q)).bits;
}

int run_index_query(const IndexArgs& a) {
  check_radius(a.radius);
  if (a.index_path.empty() == a.bloom_path.empty()) {
    throw UsageError("give exactly one of --index or --bloom");
  }
  if (!a.bloom_path.empty()) {
    const auto bloom = index::BloomFilter::deserialize(read_bytes(a.bloom_path));
    for (const auto& q : a.queries) {
      const auto h = parse_query(q);
      std::cout << (bloom.contains(h) ? "present " : "absent ") << h.to_hex() << '\n';
    }
    return kExitOk;
  }
  const auto idx = index::MihIndex::deserialize(read_bytes(a.index_path));
  for (const auto& q : a.queries) {
    const auto h = parse_query(q);
    const auto results = a.linear ? idx.linear_query(h, a.radius) : idx.query(h, a.radius);
    for (const auto& r : results) std::cout << r.id << ' ' << r.distance << '\n';
  }
  return kExitOk;
}

// --- bundle ----------------------------------------------------------------

struct BundleArgs {
  std::string key;
  std::string factchecks;
  std::uint64_t version = 0;
  std::string out;
  std::string created_at;
  std::string now;
  bool allow_empty = false;
  std::string bundle;
  std::string device;
};

int run_bundle_build(const BundleArgs& a) {
  const auto key = parse_key(a.key);
  const auto now = a.now.empty()
                       ? std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count()
                       : parse_timestamp(a.now);
  std::ifstream csv(a.factchecks);
  if (!csv) throw std::runtime_error("cannot open " + a.factchecks);
  const auto ingest = store::ingest_factchecks(csv, fs::path(a.factchecks).parent_path(), now);
  for (const auto& err : ingest.errors) {
    std::cerr << "factcheck bundle build: " << a.factchecks << ":" << err.line << ": "
              << err.message << '\n';
  }
  store::BundleOptions opts;
  opts.allow_empty = a.allow_empty;
  if (!a.created_at.empty()) opts.created_at = parse_timestamp(a.created_at);
  const auto bundle = store::build_bundle(ingest.records, a.version, key, opts);
  write_atomically(a.out, store::serialize_bundle(bundle));
  std::cerr << "bundle v" << bundle.version << ": " << bundle.records.size() << " record(s)\n";
  return ingest.errors.empty() ? kExitOk : kExitPartial;
}

int run_bundle_verify(const BundleArgs& a) {
  const auto key = parse_key(a.key);
  const auto status = store::verify_bundle_text(read_text(a.bundle), key);
  if (status == store::BundleStatus::kOk) {
    std::cout << "OK\n";
    return kExitOk;
  }
  std::cout << "FAIL " << store::to_string(status) << '\n';
  return kExitFailure;
}

int run_bundle_apply(const BundleArgs& a) {
  const auto key = parse_key(a.key);
  const auto text = read_text(a.bundle);
  if (const auto status = store::verify_bundle_text(text, key); status != store::BundleStatus::kOk) {
    std::cout << "rejected: " << store::to_string(status) << '\n';
    return kExitFailure;
  }
  const auto current = fs::exists(a.device) ? store::DeviceFingerprintSet::parse(read_text(a.device))
                                            : store::DeviceFingerprintSet();
  try {
    const auto next = current.apply(store::parse_bundle(text), key);
    write_atomically(a.device, next.serialize());
    std::cout << "applied v" << next.version() << " (" << next.size() << " record(s))\n";
    return kExitOk;
  } catch (const store::BundleRejected& e) {
    std::cout << "rejected: " << e.what() << '\n';
    return kExitFailure;
  }
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string script;
  std::uint64_t seed = 0;
  std::string policy = "warn-only";
  std::string key;
  bool telemetry = false;
  int radius = store::kDefaultRadius;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  check_radius(a.radius);
  sim::SimConfig cfg;
  cfg.seed = a.seed;
  try {
    cfg.default_policy = sim::parse_policy(a.policy);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.telemetry = a.telemetry;
  cfg.radius = a.radius;
  if (!a.key.empty()) cfg.bundle_key = parse_key(a.key);

  const auto script = sim::SimScript::parse(read_text(a.script));
  sim::FileAssets assets(fs::path(a.script).parent_path());
  const auto report = sim::run_scenario(script, assets, cfg);
  emit(a.out.empty() ? std::nullopt : std::optional<fs::path>(a.out), report.to_json());
  return report.delivery_failures.empty() ? kExitOk : kExitPartial;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string shares;
  std::string checks;
  std::uint64_t exclude_over = 0;
  std::string out;
  std::string cdf_out;
  std::string sim_report;
};

int run_analyze(const AnalyzeArgs& a) {
  std::ifstream shares_in(a.shares);
  if (!shares_in) throw std::runtime_error("cannot open " + a.shares);
  std::ifstream checks_in(a.checks);
  if (!checks_in) throw std::runtime_error("cannot open " + a.checks);
  const auto events = analysis::load_share_log(shares_in);
  const auto checks = analysis::load_checks(checks_in);
  const auto result = analysis::summarize(events, checks);
  for (const auto& err : result.errors) {
    std::cerr << "factcheck analyze: event " << err.index << ": " << err.message << '\n';
  }

  const auto report = analysis::aggregate(result.summaries);
  const auto out = a.out.empty() ? std::nullopt : std::optional<fs::path>(a.out);
  if (a.exclude_over > 0) {
    const auto excl = analysis::exclude_outliers(result.summaries, a.exclude_over);
    emit(out, analysis::report_json(report, excl, a.exclude_over));
  } else {
    emit(out, analysis::report_json(report));
  }

  if (!a.cdf_out.empty()) {
    const auto series = analysis::cdf_series(result.summaries);
    write_atomically(a.cdf_out + "_before.tsv", analysis::cdf_tsv(series.before));
    write_atomically(a.cdf_out + "_after.tsv", analysis::cdf_tsv(series.after));
  }

  int status = result.errors.empty() ? kExitOk : kExitPartial;
  if (!a.sim_report.empty()) {
    const auto sim_report = sim::SimReport::from_json(read_text(a.sim_report));
    const auto check = analysis::cross_check_simulation(sim_report, result.summaries);
    if (check.consistent) {
      std::cerr << "cross-check OK: prevented_total " << check.prevented_total << '\n';
    } else {
      std::cerr << "cross-check FAILED: prevented_total " << check.prevented_total
                << " vs shares_after " << check.shares_after << "; differing images:";
      for (const auto id : check.differing_images) std::cerr << ' ' << id;
      std::cerr << '\n';
      status = kExitFailure;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-device fact-check matching toolkit"};
  app.require_subcommand(1);

  HashArgs hash_args;
  auto* hash_cmd = app.add_subcommand("hash", "Print `<hex> <quality> <path>` per image");
  hash_cmd->add_option("paths", hash_args.paths, "PGM/PPM/raw-luma images")->required();
  hash_cmd->add_flag("--dihedral", hash_args.dihedral, "Also print the 8 rotations/reflections");

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "Build or query a fingerprint index");
  index_cmd->require_subcommand(1);
  auto* index_build = index_cmd->add_subcommand("build", "Build from `<id> <hex>` lines");
  index_build->add_option("hashes", index_args.hashes, "Hash list file")->required();
  index_build->add_option("--out", index_args.out, "Multi-index output file");
  index_build->add_option("--bloom-out", index_args.bloom_out, "Bloom filter output file");
  index_build->add_option("--fpr", index_args.fpr, "Bloom false-positive target")
      ->check(CLI::Range(1e-12, 0.5));
  auto* index_query = index_cmd->add_subcommand("query", "Print `<id> <distance>` matches");
  index_query->add_option("queries", index_args.queries, "64-hex hashes or image paths")
      ->required();
  index_query->add_option("--index", index_args.index_path, "Multi-index file");
  index_query->add_option("--bloom", index_args.bloom_path, "Bloom filter file (exact membership)");
  index_query->add_option("--radius", index_args.radius, "Hamming radius (0-31)");
  index_query->add_flag("--linear", index_args.linear, "Use a linear scan instead of the index");

  BundleArgs bundle_args;
  auto* bundle_cmd = app.add_subcommand("bundle", "Build, verify or apply update bundles");
  bundle_cmd->require_subcommand(1);
  auto* bundle_build = bundle_cmd->add_subcommand("build", "Build a bundle from a fact-check CSV");
  bundle_build->add_option("factchecks", bundle_args.factchecks,
                           "CSV: id,image_path,verdict,check_date,agency,url")
      ->required();
  bundle_build->add_option("--version", bundle_args.version, "Bundle version (> 0)")->required();
  bundle_build->add_option("--key", bundle_args.key, "MAC key (hex)")->required();
  bundle_build->add_option("--out", bundle_args.out, "Bundle output file")->required();
  bundle_build->add_option("--created-at", bundle_args.created_at, "Creation timestamp");
  bundle_build->add_option("--now", bundle_args.now, "Reference time for date validation");
  bundle_build->add_flag("--allow-empty", bundle_args.allow_empty, "Permit an empty bundle");
  auto* bundle_verify = bundle_cmd->add_subcommand("verify", "Print OK or FAIL");
  bundle_verify->add_option("bundle", bundle_args.bundle, "Bundle file")->required();
  bundle_verify->add_option("--key", bundle_args.key, "MAC key (hex)")->required();
  auto* bundle_apply = bundle_cmd->add_subcommand("apply", "Apply a bundle to a device state file");
  bundle_apply->add_option("bundle", bundle_args.bundle, "Bundle file")->required();
  bundle_apply->add_option("--key", bundle_args.key, "MAC key (hex)")->required();
  bundle_apply->add_option("--device", bundle_args.device, "Device state file")->required();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a messaging scenario script");
  sim_cmd->add_option("script", sim_args.script, "JSON-lines scenario")->required();
  sim_cmd->add_option("--seed", sim_args.seed, "Session key seed");
  sim_cmd->add_option("--policy", sim_args.policy, "allow | warn-only | block-forward");
  sim_cmd->add_option("--key", sim_args.key, "Bundle MAC key (hex)");
  sim_cmd->add_flag("--telemetry", sim_args.telemetry, "Enable match counting on every device");
  sim_cmd->add_option("--radius", sim_args.radius, "Match radius (0-31)");
  sim_cmd->add_option("--out", sim_args.out, "Report file (default: stdout)");

  AnalyzeArgs an_args;
  auto* an_cmd = app.add_subcommand("analyze", "Shares before/after fact-checking");
  an_cmd->add_option("shares", an_args.shares, "CSV: image_id,group_id,timestamp")->required();
  an_cmd->add_option("checks", an_args.checks, "CSV: image_id,check_date,agency,url")->required();
  an_cmd->add_option("--exclude-over", an_args.exclude_over,
                     "Also report with images above this many shares removed")
      ->check(CLI::PositiveNumber);
  an_cmd->add_option("--out", an_args.out, "Report file (default: stdout)");
  an_cmd->add_option("--cdf-out", an_args.cdf_out, "Write <prefix>_before.tsv and _after.tsv");
  an_cmd->add_option("--sim-report", an_args.sim_report, "Cross-check against a simulate report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*hash_cmd) return run_hash(hash_args);
    if (*index_build) return run_index_build(index_args);
    if (*index_query) return run_index_query(index_args);
    if (*bundle_build) return run_bundle_build(bundle_args);
    if (*bundle_verify) return run_bundle_verify(bundle_args);
    if (*bundle_apply) return run_bundle_apply(bundle_args);
    if (*sim_cmd) return run_simulate(sim_args);
    if (*an_cmd) return run_analyze(an_args);
  } catch (const UsageError& e) {
    std::cerr << "factcheck: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sim::ScriptError& e) {
    std::cerr << "factcheck: script error, " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "factcheck: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitUsage;
}
