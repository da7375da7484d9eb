// Copyright 2026 The causex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "causex/corpus.hpp"
#include "causex/error.hpp"
#include "causex/report.hpp"
#include "causex/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace causex {
namespace {

ScoreRecord rec(std::string id, int cls, double score, std::vector<std::string> flags = {},
                std::string method = "CNN+LIME", Measure m = Measure::kCosine) {
  return {std::move(id), cls, std::move(method), m, score, std::move(flags)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ClassTable, MeansPerClass) {
  const std::vector<ScoreRecord> r{rec("a", 0, 1.0), rec("b", 0, 1.0), rec("c", 1, 0.5)};
  const auto t = class_table(r, Measure::kCosine);
  EXPECT_EQ(t.method, "CNN+LIME");
  EXPECT_EQ(t.means[0], 1.0);
  EXPECT_EQ(t.means[1], 0.5);
  for (int c = 2; c < kNumClasses; ++c) EXPECT_FALSE(t.means[c].has_value());
  EXPECT_EQ(t.n_per_class[0], 2);
  EXPECT_EQ(t.excluded_count, 0);
}

TEST(ClassTable, FlaggedRecordsExcludedAndCounted) {
  const std::vector<ScoreRecord> r{rec("a", 3, 0.9), rec("b", 3, 0.0, {"zero_norm"}),
                                   rec("c", 3, std::nan(""), {"empty_keywords"}), rec("d", 4, 0.2)};
  const auto t = class_table(r, Measure::kCosine);
  EXPECT_EQ(t.means[3], 0.9);
  EXPECT_EQ(t.n_per_class[3], 1);
  EXPECT_EQ(t.excluded_count, 2);
  int total = t.excluded_count;
  for (int n : t.n_per_class) total += n;
  EXPECT_EQ(total, 4);
}

TEST(ClassTable, AllFlagged) {
  const std::vector<ScoreRecord> r{rec("a", 0, std::nan(""), {"keywords_oov"}),
                                   rec("b", 5, std::nan(""), {"no_inference"})};
  const auto t = class_table(r, Measure::kCosine);
  for (const auto& m : t.means) EXPECT_FALSE(m.has_value());
  EXPECT_EQ(t.excluded_count, 2);
}

TEST(ClassTable, PermutationInvariant) {
  Rng rng(3);
  std::vector<ScoreRecord> r;
  for (int i = 0; i < 60; ++i) {
    r.push_back(rec("d" + std::to_string(i), i % kNumClasses, rng.uniform() * 1e3 + 1e-3 * rng.normal()));
  }
  const auto base = class_table(r, Measure::kCosine);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(r);
    EXPECT_EQ(class_table(r, Measure::kCosine), base);
  }
}

TEST(ClassTable, MixedInputsRejected) {
  const std::vector<ScoreRecord> methods{rec("a", 0, 1.0), rec("b", 0, 1.0, {}, "IG")};
  EXPECT_THROW(class_table(methods, Measure::kCosine), Error);
  const std::vector<ScoreRecord> measures{rec("a", 0, 1.0, {}, "IG", Measure::kWmd)};
  EXPECT_THROW(class_table(measures, Measure::kCosine), Error);
  const auto tables = class_tables(methods, Measure::kCosine);
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(tables[0].method, "CNN+LIME");
  EXPECT_EQ(tables[1].method, "IG");
}

TEST(Ranks, AverageTies) {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Consistency, IdenticalAndReversed) {
  const std::vector<double> v{0.1, 0.7, 0.3, 0.9, 0.5, 0.2};
  EXPECT_NEAR(*consistency_analysis(v, v, Measure::kCosine).rank_correlation, 1.0, 1e-12);
  std::vector<double> rev;
  for (double x : v) rev.push_back(-x);
  EXPECT_NEAR(*consistency_analysis(v, rev, Measure::kCosine).rank_correlation, -1.0, 1e-12);
  // WMD is a distance: the same numbers now agree perfectly.
  EXPECT_NEAR(*consistency_analysis(v, rev, Measure::kWmd).rank_correlation, 1.0, 1e-12);
}

TEST(Consistency, FixedVectorsMatchOracle) {
  const std::vector<double> f1{0.59, 0.25, 0.53, 0.44, 0.58, 0.43};
  const std::vector<double> sim{0.784, 0.821, 0.881, 0.751, 0.867, 0.857};
  const double expect = oracle::spearman_distinct(f1, sim);
  EXPECT_NEAR(expect, 3.0 / 35.0, 1e-15);
  const auto r = consistency_analysis(f1, sim, Measure::kCosine);
  ASSERT_TRUE(r.rank_correlation.has_value());
  EXPECT_NEAR(*r.rank_correlation, expect, 1e-9);
  EXPECT_EQ(r.sim, sim);
}

TEST(Consistency, RandomAgainstOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    EXPECT_NEAR(*consistency_analysis(a, b, Measure::kCosine).rank_correlation,
                oracle::spearman_distinct(a, b), 1e-12);
    EXPECT_NEAR(*consistency_analysis(a, b, Measure::kCosine).rank_correlation,
                *consistency_analysis(b, a, Measure::kCosine).rank_correlation, 1e-15);
  }
}

TEST(Consistency, DispersionIsPopulationCv) {
  const std::vector<double> f1{1, 2, 3, 4, 5, 6};
  const std::vector<double> sim{2, 2, 2, 2, 2, 4};
  const auto r = consistency_analysis(f1, sim, Measure::kCosine);
  EXPECT_NEAR(r.dispersion_f1, std::sqrt(17.5 / 6.0) / 3.5, 1e-15);
  const double mean = 14.0 / 6.0;
  double var = 0.0;
  for (double x : sim) var += (x - mean) * (x - mean) / 6.0;
  EXPECT_NEAR(r.dispersion_sim, std::sqrt(var) / mean, 1e-15);
}

TEST(Consistency, ConstantVectorUndefined) {
  const std::vector<double> f1{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<double> sim{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto r = consistency_analysis(f1, sim, Measure::kCosine);
  EXPECT_FALSE(r.rank_correlation.has_value());
  EXPECT_EQ(r.undefined_reason, "F1 vector is constant");
  const auto s = consistency_analysis(sim, f1, Measure::kCosine);
  EXPECT_EQ(s.undefined_reason, "similarity vector is constant");
}

TEST(Consistency, InvalidInputs) {
  const std::vector<double> six{1, 2, 3, 4, 5, 6};
  const std::vector<double> five{1, 2, 3, 4, 5};
  EXPECT_THROW(consistency_analysis(six, five, Measure::kCosine), Error);
  std::vector<double> bad = six;
  bad[2] = std::nan("");
  EXPECT_THROW(consistency_analysis(six, bad, Measure::kCosine), Error);
}

TEST(Consistency, ForReportSkipsAbsentClasses) {
  ClassReport t;
  t.method = "IG";
  t.means = {0.9, std::nullopt, 0.5, 0.7, std::nullopt, 0.1};
  const std::array<double, kNumClasses> f1{0.8, 0.9, 0.4, 0.6, 0.3, 0.2};
  const auto r = consistency_for(t, f1);
  EXPECT_EQ(r.classes, (std::vector<int>{0, 2, 3, 5}));
  EXPECT_NEAR(*r.rank_correlation, 1.0, 1e-12);

  ClassReport sparse;
  sparse.means[4] = 0.3;
  EXPECT_FALSE(consistency_for(sparse, f1).rank_correlation.has_value());
}

ReportInputs sample_inputs() {
  ReportInputs in;
  std::vector<ScoreRecord> cos{rec("a", 0, 0.25), rec("b", 1, 0.8125), rec("c", 2, 0.5),
                               rec("d", 3, 1.0 / 3.0), rec("e", 4, 0.0, {"zero_norm"})};
  std::vector<ScoreRecord> wmd;
  for (auto r : cos) {
    r.measure = Measure::kWmd;
    r.score = r.flags.empty() ? 1.0 + r.score : r.score;
    wmd.push_back(r);
  }
  in.reports.push_back(class_table(cos, Measure::kCosine));
  in.reports.push_back(class_table(wmd, Measure::kWmd));
  std::array<std::array<int, kNumClasses>, kNumClasses> conf{};
  for (int c = 0; c < kNumClasses; ++c) conf[c][c] = 3 + c;
  conf[0][1] = 2;
  conf[2][3] = 1;
  in.f1_rows.push_back({"CNN", metrics_from_confusion(conf)});
  for (const auto& r : in.reports) in.consistency.push_back(consistency_for(r, in.f1_rows[0].metrics.per_class_f1));
  return in;
}

TEST(Render, WritesExpectedFilesAndRoundTrips) {
  test::TempDir dir;
  const auto in = sample_inputs();
  const auto files = render_report(in, dir.path());
  for (const char* f : {"table_cosine.csv", "counts_cosine.csv", "table_wmd.csv", "counts_wmd.csv",
                        "f1_table.csv", "consistency.csv", "summary.md"}) {
    EXPECT_NE(std::find(files.begin(), files.end(), f), files.end()) << f;
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  for (Measure m : {Measure::kCosine, Measure::kWmd}) {
    const std::string id(measure_id(m));
    const auto back = parse_class_tables(slurp(dir / ("table_" + id + ".csv")),
                                         slurp(dir / ("counts_" + id + ".csv")), m);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], in.reports[m == Measure::kCosine ? 0 : 1]);
  }
  const std::string table = slurp(dir / "table_cosine.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')), "method,Class0,Class1,Class2,Class3,Class4,Class5");
  EXPECT_NE(table.find("CNN+LIME,0.25,0.8125,0.5,"), std::string::npos) << table;
  EXPECT_NE(table.find(",,"), std::string::npos) << "absent means must be empty cells";
  const std::string f1 = slurp(dir / "f1_table.csv");
  EXPECT_EQ(f1.substr(0, f1.find('\n')), "model,Class0,Class1,Class2,Class3,Class4,Class5,Accuracy");
  const std::string summary = slurp(dir / "summary.md");
  EXPECT_NE(summary.find("81.29%"), std::string::npos);
  EXPECT_NE(summary.find("0.906"), std::string::npos);
}

TEST(Render, SingleRowCsv) {
  test::TempDir dir;
  ReportInputs in;
  in.reports.push_back(class_table(std::vector<ScoreRecord>{rec("a", 1, 0.5)}, Measure::kCosine));
  render_report(in, dir.path());
  const std::string table = slurp(dir / "table_cosine.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "f1_table.csv"));
}

TEST(Render, ByteDeterministic) {
  test::TempDir a, b;
  const auto in = sample_inputs();
  const auto files = render_report(in, a.path());
  render_report(in, b.path());
  for (const auto& f : files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Render, UnwritableDirectory) {
  test::TempDir dir;
  write_file(dir / "blocker", "x", "test");
  EXPECT_THROW(render_report(sample_inputs(), dir / "blocker" / "sub"), Error);
}

TEST(Hashing, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, ManifestListsFilesSorted) {
  test::TempDir dir;
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "sub" / "b.txt", "abc", "test");
  write_file(dir / "a.txt", "", "test");
  write_file(dir / "manifest.json", "{}", "test");
  nlohmann::json cfg{{"seed", 1}};
  const auto m = build_manifest(dir.path(), cfg, dir / "manifest.json");
  EXPECT_EQ(m.at("config"), cfg);
  const auto& files = m.at("files");
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files.begin().key(), "a.txt");
  EXPECT_EQ(files.at("sub/b.txt"), sha256_hex("abc"));
}

}  // namespace
}  // namespace causex
