#include "factcheck/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "factcheck/csv.hpp"
#include "factcheck/pdq.hpp"
#include "json.hpp"

namespace factcheck::analysis {

using nlohmann::json;

namespace {

std::uint64_t parse_id(const std::string& text, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw CsvError("line " + std::to_string(line) + ": bad image_id '" + text + "'");
  }
  return v;
}

UnixSeconds parse_time_field(const std::string& text, std::size_t line) {
  try {
    return parse_timestamp(text);
  } catch (const TimeParseError& e) {
    throw CsvError("line " + std::to_string(line) + ": " + e.what());
  }
}

std::vector<CdfPoint> ecdf(std::vector<std::uint64_t> values) {
  std::vector<CdfPoint> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

json report_to_json(const AggregateReport& r) {
  return json{{"images_found", r.images_found},
              {"total_shares", r.total_shares},
              {"shares_after", r.shares_after},
              {"max_shares_after", r.max_shares_after},
              {"pct_after", r.pct_after()},
              {"pct_after_text", r.pct_after_text()}};
}

RasterImage replay_image(std::uint64_t seed, std::uint64_t image_id) {
  std::mt19937_64 rng(seed ^ (image_id * 0x9E3779B97F4A7C15ULL));
  std::vector<std::uint8_t> px(64 * 64);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() >> 56);
  return RasterImage(64, 64, 1, std::move(px));
}

}  // namespace

void add_check(CheckDates& checks, std::uint64_t image_id, UnixSeconds check_date) {
  const auto [it, inserted] = checks.try_emplace(image_id, check_date);
  if (!inserted) it->second = std::min(it->second, check_date);
}

SummarizeResult summarize(std::span<const ShareEvent> events, const CheckDates& checks,
                          const std::optional<StudyWindow>& window) {
  SummarizeResult result;
  std::map<std::uint64_t, ImageShareSummary> by_image;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto check = checks.find(e.image_id);
    if (check == checks.end()) {
      result.errors.push_back({i, e.image_id, "no check date for image " + std::to_string(e.image_id)});
      continue;
    }
    if (window && (e.timestamp < window->begin || e.timestamp > window->end)) {
      result.errors.push_back({i, e.image_id,
                               "timestamp " + format_iso8601(e.timestamp) +
                                   " outside the study window"});
      continue;
    }
    auto& s = by_image[e.image_id];
    s.image_id = e.image_id;
    s.first_check_date = check->second;
    if (e.timestamp >= check->second) {
      ++s.shares_after;
    } else {
      ++s.shares_before;
    }
  }
  result.summaries.reserve(by_image.size());
  for (auto& [id, s] : by_image) result.summaries.push_back(s);
  return result;
}

std::uint64_t percent_tenths(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) return 0;
  return (2000 * numerator + denominator) / (2 * denominator);
}

std::string AggregateReport::pct_after_text() const {
  return std::to_string(pct_after_tenths / 10) + "." + std::to_string(pct_after_tenths % 10);
}

AggregateReport aggregate(std::span<const ImageShareSummary> summaries) {
  AggregateReport r;
  r.images_found = summaries.size();
  for (const auto& s : summaries) {
    r.total_shares += s.total();
    r.shares_after += s.shares_after;
    r.max_shares_after = std::max(r.max_shares_after, s.shares_after);
  }
  r.pct_after_tenths = percent_tenths(r.shares_after, r.total_shares);
  return r;
}

OutlierExclusion exclude_outliers(std::span<const ImageShareSummary> summaries,
                                  std::uint64_t max_total_shares) {
  if (max_total_shares < 1) throw std::invalid_argument("outlier threshold must be at least 1");
  OutlierExclusion out;
  for (const auto& s : summaries) {
    if (s.total() > max_total_shares) {
      out.removed.push_back(s.image_id);
    } else {
      out.kept.push_back(s);
    }
  }
  out.report = aggregate(out.kept);
  return out;
}

CdfSeries cdf_series(std::span<const ImageShareSummary> summaries) {
  std::vector<std::uint64_t> before;
  std::vector<std::uint64_t> after;
  for (const auto& s : summaries) {
    before.push_back(s.shares_before);
    after.push_back(s.shares_after);
  }
  return {ecdf(std::move(before)), ecdf(std::move(after))};
}

std::string cdf_tsv(std::span<const CdfPoint> series) {
  std::ostringstream out;
  out << "shares\tcumulative_fraction\n";
  char buf[32];
  for (const auto& p : series) {
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p.y, std::chars_format::fixed, 6);
    out << p.x << '\t' << std::string_view(buf, end - buf) << '\n';
  }
  return out.str();
}

CrossCheck cross_check_simulation(const sim::SimReport& report,
                                  std::span<const ImageShareSummary> summaries) {
  std::map<std::uint64_t, std::uint64_t> blocked;
  for (const auto& d : report.decisions) {
    if (d.decision.stage != sim::Stage::kSend || d.decision.outcome != sim::Outcome::kBlocked) {
      continue;
    }
    ++blocked[d.decision.record_id.value_or(0)];
  }
  std::map<std::uint64_t, std::uint64_t> expected;
  CrossCheck out;
  for (const auto& s : summaries) {
    expected[s.image_id] = s.shares_after;
    out.shares_after += s.shares_after;
  }
  for (const auto& [id, n] : blocked) {
    if (!expected.contains(id)) {
      throw ConfigurationError("simulation blocked record " + std::to_string(id) +
                               ", which has no share summary");
    }
  }
  for (const auto& [id, n] : expected) {
    const auto it = blocked.find(id);
    if ((it == blocked.end() ? 0 : it->second) != n) out.differing_images.push_back(id);
  }
  out.prevented_total = report.prevented_total;
  out.consistent = out.differing_images.empty() && out.prevented_total == out.shares_after;
  return out;
}

std::vector<ShareEvent> load_share_log(std::istream& in) {
  CsvReader reader(in, {"image_id", "group_id", "timestamp"});
  std::vector<ShareEvent> events;
  while (auto row = reader.next()) {
    const auto line = reader.line();
    events.push_back({parse_id(reader.field(*row, "image_id"), line),
                      reader.field(*row, "group_id"),
                      parse_time_field(reader.field(*row, "timestamp"), line)});
  }
  return events;
}

CheckDates load_checks(std::istream& in) {
  CsvReader reader(in, {"image_id", "check_date", "agency", "url"});
  CheckDates checks;
  while (auto row = reader.next()) {
    const auto line = reader.line();
    add_check(checks, parse_id(reader.field(*row, "image_id"), line),
              parse_time_field(reader.field(*row, "check_date"), line));
  }
  return checks;
}

std::string report_json(const AggregateReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

std::string report_json(const AggregateReport& report, const OutlierExclusion& exclusion,
                        std::uint64_t threshold) {
  auto doc = report_to_json(report);
  doc["outlier_exclusion"] = report_to_json(exclusion.report);
  doc["outlier_exclusion"]["threshold"] = threshold;
  doc["outlier_exclusion"]["removed_images"] = exclusion.removed;
  return doc.dump(2) + "\n";
}

ReplayScenario make_replay_scenario(std::span<const ShareEvent> events, const CheckDates& checks,
                                    const store::MacKey& key, std::uint64_t seed) {
  ReplayScenario out;
  std::set<std::uint64_t> images;
  std::set<std::string> groups;
  for (const auto& e : events) {
    if (!checks.contains(e.image_id)) {
      throw ConfigurationError("no check date for image " + std::to_string(e.image_id));
    }
    images.insert(e.image_id);
    groups.insert(e.group_id);
  }

  // (t, rank, index): bundles sort ahead of sends sharing a timestamp so that
  // a share at the check date is already checked against the new record.
  std::vector<std::tuple<UnixSeconds, int, std::size_t, json>> timeline;
  UnixSeconds start = 0;
  bool have_start = false;
  const auto consider = [&](UnixSeconds t) {
    start = have_start ? std::min(start, t) : t;
    have_start = true;
  };

  std::vector<std::pair<UnixSeconds, std::uint64_t>> order;
  for (const auto id : images) order.emplace_back(checks.at(id), id);
  std::sort(order.begin(), order.end());
  std::uint64_t version = 0;
  for (const auto& [check_date, id] : order) {
    auto img = replay_image(seed, id);
    store::FingerprintRecord rec{id, pdq::hash(img).bits, store::Verdict::kMisinformation,
                                 check_date, "replay", "https://factcheck.invalid/" + std::to_string(id)};
    const auto path = "bundle/" + std::to_string(++version);
    out.assets.add_bundle(path, store::build_bundle({rec}, version, key, {.created_at = check_date}));
    out.assets.add_image("img/" + std::to_string(id), std::move(img));
    timeline.emplace_back(check_date, 0, timeline.size(),
                          json{{"t", check_date}, {"kind", "apply_bundle"}, {"actor", "*"},
                               {"bundle_path", path}});
    consider(check_date);
  }
  for (const auto& e : events) {
    timeline.emplace_back(e.timestamp, 1, timeline.size(),
                          json{{"t", e.timestamp}, {"kind", "send"},
                               {"actor", e.group_id + "/poster"}, {"group", e.group_id},
                               {"image_path", "img/" + std::to_string(e.image_id)}});
    consider(e.timestamp);
  }
  std::sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });

  std::string script;
  for (const auto& g : groups) {
    for (const char* role : {"/poster", "/reader"}) {
      script += json{{"t", start}, {"kind", "join"}, {"actor", g + role}, {"group", g}}.dump();
      script += '\n';
    }
  }
  for (const auto& item : timeline) {
    script += std::get<3>(item).dump();
    script += '\n';
  }
  out.script_jsonl = std::move(script);
  return out;
}

}  // namespace factcheck::analysis
