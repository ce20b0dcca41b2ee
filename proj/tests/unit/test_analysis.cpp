#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "factcheck/analysis.hpp"
#include "factcheck/csv.hpp"

namespace analysis = factcheck::analysis;
using analysis::CheckDates;
using analysis::ImageShareSummary;
using analysis::ShareEvent;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(FACTCHECK_TEST_DATA_DIR) / "fixtures";

struct Dataset {
  std::vector<ShareEvent> events;
  CheckDates checks;
};

Dataset load_dataset(const std::string& name) {
  std::ifstream shares(kFixtures / (name + "_shares.csv"));
  std::ifstream checks(kFixtures / (name + "_checks.csv"));
  return {analysis::load_share_log(shares), analysis::load_checks(checks)};
}

// Exact rational comparison: 10 * 100 * num / den rounded half up.
std::uint64_t tenths_oracle(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return 0;
  const std::uint64_t scaled = 1000 * num;
  const std::uint64_t q = scaled / den;
  const std::uint64_t r = scaled % den;
  return 2 * r >= den ? q + 1 : q;
}

}  // namespace

TEST(Checks, AddCheckKeepsEarliest) {
  CheckDates c;
  analysis::add_check(c, 1, 100);
  analysis::add_check(c, 1, 50);
  analysis::add_check(c, 1, 70);
  EXPECT_EQ(c.at(1), 50);
}

TEST(Summarize, BoundaryEventCountsAsAfter) {
  const CheckDates checks{{1, 100}, {2, 200}};
  const std::vector<ShareEvent> events{{1, "g", 99}, {1, "g", 100}, {1, "g", 101}, {2, "h", 5},
                                       {3, "g", 1}};
  const auto r = analysis::summarize(events, checks);
  ASSERT_EQ(r.summaries.size(), 2u);
  EXPECT_EQ(r.summaries[0], (ImageShareSummary{1, 1, 2, 100}));
  EXPECT_EQ(r.summaries[1], (ImageShareSummary{2, 1, 0, 200}));
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].index, 4u);
  EXPECT_EQ(r.errors[0].image_id, 3u);
}

TEST(Summarize, WindowFiltersInclusively) {
  const CheckDates checks{{1, 100}};
  const std::vector<ShareEvent> events{{1, "g", 9}, {1, "g", 10}, {1, "g", 150}, {1, "g", 151}};
  const auto r = analysis::summarize(events, checks, analysis::StudyWindow{10, 150});
  ASSERT_EQ(r.summaries.size(), 1u);
  EXPECT_EQ(r.summaries[0].total(), 2u);
  EXPECT_EQ(r.errors.size(), 2u);
}

TEST(Summarize, MatchesBruteForceClassifier) {
  std::mt19937_64 rng(11);
  CheckDates checks;
  for (std::uint64_t id = 0; id < 50; ++id) analysis::add_check(checks, id, static_cast<long long>(rng() % 1000));
  std::vector<ShareEvent> events;
  for (int i = 0; i < 10000; ++i) {
    events.push_back({rng() % 50, "g", static_cast<long long>(rng() % 1000)});
  }
  const auto r = analysis::summarize(events, checks);
  ASSERT_EQ(r.summaries.size(), 50u);
  for (const auto& s : r.summaries) {
    std::uint64_t before = 0;
    std::uint64_t after = 0;
    for (const auto& e : events) {
      if (e.image_id != s.image_id) continue;
      (e.timestamp >= checks.at(e.image_id) ? after : before) += 1;
    }
    ASSERT_EQ(s.shares_before, before);
    ASSERT_EQ(s.shares_after, after);
  }
}

TEST(Aggregate, PercentRoundsHalfUp) {
  EXPECT_EQ(analysis::percent_tenths(1, 3), 333u);
  EXPECT_EQ(analysis::percent_tenths(2, 3), 667u);
  EXPECT_EQ(analysis::percent_tenths(1, 2000), 1u);
  EXPECT_EQ(analysis::percent_tenths(0, 0), 0u);
  for (std::uint64_t den = 1; den < 300; ++den) {
    for (std::uint64_t num = 0; num <= den; ++num) {
      ASSERT_EQ(analysis::percent_tenths(num, den), tenths_oracle(num, den)) << num << "/" << den;
    }
  }
}

TEST(Aggregate, SumsAndMaximum) {
  const std::vector<ImageShareSummary> s{{1, 3, 1, 0}, {2, 0, 5, 0}, {3, 2, 0, 0}};
  const auto r = analysis::aggregate(s);
  EXPECT_EQ(r.images_found, 3u);
  EXPECT_EQ(r.total_shares, 11u);
  EXPECT_EQ(r.shares_after, 6u);
  EXPECT_EQ(r.max_shares_after, 5u);
  EXPECT_EQ(r.pct_after_tenths, 545u);
  EXPECT_EQ(r.pct_after_text(), "54.5");
  EXPECT_EQ(analysis::aggregate({}).pct_after_text(), "0.0");
}

TEST(Outliers, ExclusionUsesTotalShares) {
  const std::vector<ImageShareSummary> s{{1, 3, 1, 0}, {2, 0, 5, 0}, {3, 2, 0, 0}};
  const auto ex = analysis::exclude_outliers(s, 4);
  EXPECT_EQ(ex.removed, (std::vector<std::uint64_t>{2}));
  EXPECT_EQ(ex.kept.size(), 2u);
  EXPECT_EQ(ex.report.total_shares, 6u);
  EXPECT_EQ(analysis::exclude_outliers(s, 5).removed.size(), 0u);
  EXPECT_THROW(analysis::exclude_outliers(s, 0), std::invalid_argument);
}

TEST(Cdf, MatchesSortRankOracle) {
  std::mt19937_64 rng(5);
  std::vector<ImageShareSummary> s;
  for (std::uint64_t i = 0; i < 200; ++i) s.push_back({i, rng() % 20, rng() % 7, 0});
  const auto cdf = analysis::cdf_series(s);
  std::vector<std::uint64_t> before;
  for (const auto& x : s) before.push_back(x.shares_before);
  std::sort(before.begin(), before.end());
  std::vector<analysis::CdfPoint> expected;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (i + 1 < before.size() && before[i + 1] == before[i]) continue;
    expected.push_back({before[i], static_cast<double>(i + 1) / static_cast<double>(before.size())});
  }
  EXPECT_EQ(cdf.before, expected);
  EXPECT_DOUBLE_EQ(cdf.after.back().y, 1.0);
  for (std::size_t i = 1; i < cdf.after.size(); ++i) {
    EXPECT_LT(cdf.after[i - 1].x, cdf.after[i].x);
    EXPECT_LT(cdf.after[i - 1].y, cdf.after[i].y);
  }
}

TEST(Cdf, TsvFormat) {
  const std::vector<analysis::CdfPoint> pts{{0, 0.25}, {3, 1.0}};
  EXPECT_EQ(analysis::cdf_tsv(pts), "shares\tcumulative_fraction\n0\t0.250000\n3\t1.000000\n");
}

TEST(CrossCheck, ComparesBlockedSendsPerImage) {
  factcheck::sim::SimReport report;
  factcheck::sim::FlagDecision blocked{factcheck::sim::Outcome::kBlocked,
                                       factcheck::sim::Stage::kSend, 1, 0, {}, {}};
  report.decisions.push_back({0, 0, "a", "group:g", blocked});
  report.decisions.push_back({1, 0, "a", "group:g", blocked});
  report.prevented_total = 2;
  const std::vector<ImageShareSummary> s{{1, 0, 2, 0}, {2, 4, 0, 0}};
  auto cc = analysis::cross_check_simulation(report, s);
  EXPECT_TRUE(cc.consistent);
  EXPECT_EQ(cc.prevented_total, 2u);
  EXPECT_EQ(cc.shares_after, 2u);

  const std::vector<ImageShareSummary> off{{1, 0, 3, 0}, {2, 4, 0, 0}};
  cc = analysis::cross_check_simulation(report, off);
  EXPECT_FALSE(cc.consistent);
  EXPECT_EQ(cc.differing_images, (std::vector<std::uint64_t>{1}));

  EXPECT_TRUE(analysis::cross_check_simulation({}, {}).consistent);
  EXPECT_THROW(analysis::cross_check_simulation(report, std::vector<ImageShareSummary>{{2, 4, 0, 0}}),
               analysis::ConfigurationError);
}

TEST(Loaders, ParseMixedTimestampsAndRepeatedChecks) {
  std::istringstream shares(
      "image_id,group_id,timestamp\n"
      "1,g1,2018-10-01\n"
      "2,g2,1538352001\n");
  const auto events = analysis::load_share_log(shares);
  EXPECT_EQ(events, (std::vector<ShareEvent>{{1, "g1", 1538352000}, {2, "g2", 1538352001}}));
  std::istringstream checks(
      "image_id,check_date,agency,url\n"
      "1,2018-10-05,a,u\n"
      "1,2018-10-02,b,v\n");
  EXPECT_EQ(analysis::load_checks(checks), (CheckDates{{1, 1538438400}}));
  std::istringstream bad("image_id,group_id,timestamp\n1,g,yesterday\n");
  EXPECT_THROW(analysis::load_share_log(bad), factcheck::CsvError);
}

TEST(Fixtures, BrazilMatchesPublishedSummary) {
  const auto data = load_dataset("brazil");
  const auto r = analysis::aggregate(analysis::summarize(data.events, data.checks).summaries);
  EXPECT_EQ(r.pct_after_text(), "40.7");
  EXPECT_EQ(r.max_shares_after, 96u);
  EXPECT_EQ(r.images_found, 135u);
}

TEST(Fixtures, IndiaMatchesPublishedSummary) {
  const auto data = load_dataset("india");
  const auto summaries = analysis::summarize(data.events, data.checks).summaries;
  const auto r = analysis::aggregate(summaries);
  EXPECT_EQ(r.pct_after_text(), "82.2");
  EXPECT_EQ(r.max_shares_after, 1089u);
  const auto ex = analysis::exclude_outliers(summaries, 1000);
  EXPECT_NEAR(ex.report.pct_after(), 71.7, 0.1 + 1e-9);
  EXPECT_EQ(ex.removed.size(), 1u);
}

TEST(Reports, JsonIsKeySorted) {
  const std::vector<ImageShareSummary> s{{1, 3, 1, 0}, {2, 0, 5, 0}};
  const auto r = analysis::aggregate(s);
  const auto doc = nlohmann::json::parse(analysis::report_json(r));
  EXPECT_EQ(doc.at("shares_after"), 6);
  EXPECT_EQ(doc.dump(2) + "\n", analysis::report_json(r));
  const auto ex = analysis::exclude_outliers(s, 4);
  const auto doc2 = nlohmann::json::parse(analysis::report_json(r, ex, 4));
  EXPECT_EQ(doc2.at("outlier_exclusion").at("threshold"), 4);
}

TEST(Replay, ScenarioPreventsExactlyTheSharesAfter) {
  std::mt19937_64 rng(3);
  CheckDates checks{{10, 1000}, {11, 1500}, {12, 1200}};
  std::vector<ShareEvent> events;
  for (int i = 0; i < 60; ++i) {
    events.push_back({10 + rng() % 3, "g" + std::to_string(rng() % 4), 800 + static_cast<long long>(rng() % 1000)});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  const factcheck::store::MacKey key(factcheck::crypto::Bytes(32, 1));
  auto replay = analysis::make_replay_scenario(events, checks, key, 99);
  factcheck::sim::SimConfig cfg;
  cfg.default_policy = factcheck::sim::FlagPolicy::kBlockForward;
  cfg.bundle_key = key;
  const auto report = factcheck::sim::run_scenario(
      factcheck::sim::SimScript::parse(replay.script_jsonl), replay.assets, cfg);
  const auto summaries = analysis::summarize(events, checks).summaries;
  const auto cc = analysis::cross_check_simulation(report, summaries);
  EXPECT_TRUE(cc.consistent);
  EXPECT_EQ(cc.prevented_total, analysis::aggregate(summaries).shares_after);
}

TEST(Summarize, EmptyAndHandCountedInputs) {
  EXPECT_TRUE(analysis::summarize({}, CheckDates{{1, 10}}).summaries.empty());
  const std::vector<ShareEvent> events{{1, "g", 1}, {1, "g", 2}, {1, "g", 3}, {1, "g", 10}, {1, "g", 11}};
  const auto r = analysis::summarize(events, CheckDates{{1, 10}});
  ASSERT_EQ(r.summaries.size(), 1u);
  EXPECT_EQ(r.summaries[0].shares_before, 3u);
  EXPECT_EQ(r.summaries[0].shares_after, 2u);
}

TEST(Aggregate, SingleImageAllAfter) {
  const std::vector<ImageShareSummary> s{{1, 0, 1, 0}};
  const auto r = analysis::aggregate(s);
  EXPECT_EQ(r.pct_after_text(), "100.0");
  EXPECT_EQ(r.max_shares_after, 1u);
}

TEST(Aggregate, PublishedTableRowsFromCounts) {
  // Table integers; the after-sums are the integers that round to the printed percentages.
  EXPECT_EQ(analysis::percent_tenths(899, 2209), 407u);
  EXPECT_EQ(analysis::percent_tenths(2420, 2944), 822u);
  const auto excluded = analysis::percent_tenths(2420 - 1089, 2944 - 1089);
  EXPECT_GE(excluded, 716u);
  EXPECT_LE(excluded, 718u);
}

TEST(Outliers, ThresholdEdges) {
  const std::vector<ImageShareSummary> s{{1, 1, 1, 0}, {2, 0, 2, 0}};
  const auto all = analysis::exclude_outliers(s, 1000);
  EXPECT_EQ(all.report, analysis::aggregate(s));
  EXPECT_TRUE(all.removed.empty());
  const auto none = analysis::exclude_outliers(s, 1);
  EXPECT_TRUE(none.kept.empty());
  EXPECT_EQ(none.report, analysis::AggregateReport{});
}

TEST(Cdf, SmallExamples) {
  const std::vector<ImageShareSummary> one{{1, 2, 5, 0}};
  const auto a = analysis::cdf_series(one);
  EXPECT_EQ(a.before, (std::vector<analysis::CdfPoint>{{2, 1.0}}));
  EXPECT_EQ(a.after, (std::vector<analysis::CdfPoint>{{5, 1.0}}));
  const std::vector<ImageShareSummary> two{{1, 0, 1, 0}, {2, 0, 100, 0}};
  EXPECT_EQ(analysis::cdf_series(two).after, (std::vector<analysis::CdfPoint>{{1, 0.5}, {100, 1.0}}));
  EXPECT_TRUE(analysis::cdf_series({}).before.empty());
}

TEST(CrossCheck, TimestampMovedAcrossBoundaryNamesImage) {
  const CheckDates checks{{1, 100}, {2, 100}};
  std::vector<ShareEvent> events{{1, "g", 50}, {1, "g", 150}, {2, "g", 120}, {2, "g", 130}};
  const factcheck::store::MacKey key(factcheck::crypto::Bytes(32, 4));
  auto replay = analysis::make_replay_scenario(events, checks, key, 5);
  factcheck::sim::SimConfig cfg;
  cfg.default_policy = factcheck::sim::FlagPolicy::kBlockForward;
  cfg.bundle_key = key;
  const auto report =
      factcheck::sim::run_scenario(factcheck::sim::SimScript::parse(replay.script_jsonl), replay.assets, cfg);
  EXPECT_TRUE(analysis::cross_check_simulation(report, analysis::summarize(events, checks).summaries).consistent);
  events[0].timestamp = 100;
  const auto cc = analysis::cross_check_simulation(report, analysis::summarize(events, checks).summaries);
  EXPECT_FALSE(cc.consistent);
  EXPECT_EQ(cc.differing_images, (std::vector<std::uint64_t>{1}));
}
