#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "factcheck/analysis.hpp"
#include "factcheck/fingerprint_store.hpp"
#include "factcheck/match_index.hpp"
#include "factcheck/pdq.hpp"
#include "factcheck/pipeline.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace factcheck;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

std::pair<std::string, int> to_py(const pdq::PdqHash& h) { return {h.bits.to_hex(), h.quality}; }

std::vector<std::uint8_t> as_vector(const py::bytes& b) {
  const auto s = static_cast<std::string>(b);
  return {s.begin(), s.end()};
}

py::bytes as_bytes(const std::vector<std::uint8_t>& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

std::string simulate(const std::string& script_path, std::uint64_t seed, const std::string& policy,
                     const std::optional<std::string>& key_hex, bool telemetry, int radius) {
  sim::SimConfig cfg;
  cfg.seed = seed;
  cfg.default_policy = sim::parse_policy(policy);
  cfg.telemetry = telemetry;
  cfg.radius = radius;
  if (key_hex) cfg.bundle_key = store::MacKey::from_hex(*key_hex);
  sim::FileAssets assets(fs::path(script_path).parent_path());
  return sim::run_scenario(sim::SimScript::parse(read_text(script_path)), assets, cfg).to_json();
}

std::string analyze(const std::string& shares_path, const std::string& checks_path,
                    std::uint64_t exclude_over) {
  std::ifstream shares(shares_path);
  if (!shares) throw std::runtime_error("cannot open " + shares_path);
  std::ifstream checks(checks_path);
  if (!checks) throw std::runtime_error("cannot open " + checks_path);
  const auto events = analysis::load_share_log(shares);
  const auto dates = analysis::load_checks(checks);
  const auto summaries = analysis::summarize(events, dates).summaries;
  const auto report = analysis::aggregate(summaries);
  if (exclude_over == 0) return analysis::report_json(report);
  return analysis::report_json(report, analysis::exclude_outliers(summaries, exclude_over), exclude_over);
}

std::string build_bundle(const std::string& csv_path, std::uint64_t version, const std::string& key_hex,
                         const std::optional<std::string>& now) {
  const auto key = store::MacKey::from_hex(key_hex);
  const UnixSeconds reference =
      now ? parse_timestamp(*now)
          : std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open " + csv_path);
  const auto ingest = store::ingest_factchecks(csv, fs::path(csv_path).parent_path(), reference);
  if (!ingest.errors.empty()) {
    const auto& e = ingest.errors.front();
    throw std::invalid_argument(csv_path + ":" + std::to_string(e.line) + ": " + e.message);
  }
  return store::serialize_bundle(store::build_bundle(ingest.records, version, key));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the factcheck toolkit";

  m.def(
      "hash_file", [](const std::string& path) { return to_py(pdq::hash(read_image(path))); },
      py::arg("path"), "Hash a PGM/PPM image file. Returns (hex, quality).");
  m.def(
      "hash_pixels",
      [](std::uint32_t width, std::uint32_t height, int channels, const py::bytes& pixels) {
        return to_py(pdq::hash(RasterImage(width, height, channels, as_vector(pixels))));
      },
      py::arg("width"), py::arg("height"), py::arg("channels"), py::arg("pixels"),
      "Hash row-major 8-bit pixels (1 or 3 channels). Returns (hex, quality).");
  m.def(
      "dihedral_hashes",
      [](const std::string& path) {
        std::vector<std::tuple<std::string, std::string, int>> out;
        const auto all = pdq::dihedral_hashes(read_image(path));
        for (std::size_t i = 0; i < all.size(); ++i) {
          out.emplace_back(std::string(pdq::to_string(pdq::kAllDihedrals[i])), all[i].bits.to_hex(),
                           all[i].quality);
        }
        return out;
      },
      py::arg("path"), "Hashes of all eight rotations/reflections as (name, hex, quality).");
  m.def(
      "hamming",
      [](const std::string& a, const std::string& b) { return hamming(Hash256::from_hex(a), Hash256::from_hex(b)); },
      py::arg("a"), py::arg("b"));

  py::class_<index::MihIndex>(m, "MihIndex")
      .def(py::init([](const std::vector<std::pair<std::uint64_t, std::string>>& items) {
             std::vector<index::IndexEntry> entries;
             entries.reserve(items.size());
             for (const auto& [id, hex] : items) entries.push_back({id, Hash256::from_hex(hex)});
             return index::MihIndex(std::move(entries));
           }),
           py::arg("entries"))
      .def(
          "query",
          [](const index::MihIndex& idx, const std::string& hex, int radius) {
            std::vector<std::pair<std::uint64_t, int>> out;
            for (const auto& r : idx.query(Hash256::from_hex(hex), radius)) out.emplace_back(r.id, r.distance);
            return out;
          },
          py::arg("hash"), py::arg("radius") = store::kDefaultRadius)
      .def("serialize", [](const index::MihIndex& idx) { return as_bytes(idx.serialize()); })
      .def_static("deserialize",
                  [](const py::bytes& b) { return index::MihIndex::deserialize(as_vector(b)); })
      .def("__len__", &index::MihIndex::size);

  py::class_<index::BloomFilter>(m, "BloomFilter")
      .def(py::init([](std::uint64_t n, double fpr) { return index::BloomFilter::create(n, fpr); }),
           py::arg("expected_items"), py::arg("target_fpr"))
      .def("add", [](index::BloomFilter& f, const std::string& hex) { f.insert(Hash256::from_hex(hex)); })
      .def("__contains__",
           [](const index::BloomFilter& f, const std::string& hex) { return f.contains(Hash256::from_hex(hex)); })
      .def_property_readonly("bit_count", &index::BloomFilter::bit_count)
      .def_property_readonly("hash_count", &index::BloomFilter::hash_count)
      .def("serialize", [](const index::BloomFilter& f) { return as_bytes(f.serialize()); })
      .def_static("deserialize",
                  [](const py::bytes& b) { return index::BloomFilter::deserialize(as_vector(b)); });

  m.def("build_bundle", &build_bundle, py::arg("factchecks_csv"), py::arg("version"), py::arg("key_hex"),
        py::arg("now") = std::nullopt, "Build a signed bundle and return its text.");
  m.def(
      "verify_bundle",
      [](const std::string& text, const std::string& key_hex) {
        return std::string(store::to_string(store::verify_bundle_text(text, store::MacKey::from_hex(key_hex))));
      },
      py::arg("text"), py::arg("key_hex"), "Returns \"ok\" or the failure reason.");
  m.def("simulate", &simulate, py::arg("script"), py::arg("seed") = 0, py::arg("policy") = "warn-only",
        py::arg("key_hex") = std::nullopt, py::arg("telemetry") = false,
        py::arg("radius") = store::kDefaultRadius, "Run a scenario script; returns the report JSON.");
  m.def("analyze", &analyze, py::arg("shares_csv"), py::arg("checks_csv"), py::arg("exclude_over") = 0,
        "Share-log summary JSON; exclude_over > 0 adds an outlier-excluded summary.");
}
