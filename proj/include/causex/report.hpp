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

#ifndef CAUSEX_REPORT_HPP_
#define CAUSEX_REPORT_HPP_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causex/corpus.hpp"
#include "causex/model.hpp"
#include "causex/similarity.hpp"
#include "json.hpp"

namespace causex {

// Per-class mean similarity of one classifier+explainer row.
struct ClassReport {
  std::string method;  // e.g. "CNN+LIME"
  Measure measure = Measure::kCosine;
  std::array<std::optional<double>, kNumClasses> means{};  // absent: no usable document
  std::array<int, kNumClasses> n_per_class{};              // usable documents
  int excluded_count = 0;                                  // flagged records

  friend bool operator==(const ClassReport&, const ClassReport&) = default;
};

// Means over usable records of `measure`. The row label is `method` when
// given, otherwise the records' common method. Error(kInvalidArgument)
// when records mix methods or measures.
ClassReport class_table(std::span<const ScoreRecord> records, Measure measure,
                        std::string method = {});

// Builds one ClassReport per distinct method, in order of first appearance.
std::vector<ClassReport> class_tables(std::span<const ScoreRecord> records, Measure measure);

// Spearman correlation (Pearson on average ranks) between per-class F1 and
// per-class similarity. WMD distances are negated first so that larger
// always means more similar. Dispersion is the coefficient of variation,
// population std / |mean|, of the raw vectors (NaN for a zero mean).
struct ConsistencyResult {
  std::string method;
  Measure measure = Measure::kCosine;
  std::vector<int> classes;  // class index of each vector entry
  std::vector<double> f1;
  std::vector<double> sim;   // raw scores, before any sign change
  std::optional<double> rank_correlation;
  std::string undefined_reason;  // set when rank_correlation is absent
  double dispersion_f1 = 0.0;
  double dispersion_sim = 0.0;
};

// Vectors must have equal length >= 2 and finite entries.
ConsistencyResult consistency_analysis(std::span<const double> f1, std::span<const double> sims,
                                       Measure measure);

// Pairs a row's F1 scores with its class means over the classes that have
// a mean. Fewer than two such classes leaves the correlation undefined.
ConsistencyResult consistency_for(const ClassReport& report,
                                  const std::array<double, kNumClasses>& f1);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct F1Row {
  std::string model;  // e.g. "CNN"
  MetricsReport metrics;
};

struct ReportInputs {
  std::vector<ClassReport> reports;
  std::vector<ConsistencyResult> consistency;
  std::vector<F1Row> f1_rows;
};

// Writes, in `out_dir`:
//   table_<measure>.csv   method,Class0..Class5 (empty cell = absent mean)
//   counts_<measure>.csv  method,n_Class0..n_Class5,excluded
//   f1_table.csv          model,Class0..Class5,Accuracy (when F1 rows exist)
//   consistency.csv       method,measure,rank_correlation,dispersion_f1,dispersion_sim,reason
//   summary.md
// Returns the written file names. Output bytes depend only on the inputs.
std::vector<std::string> render_report(const ReportInputs& inputs,
                                       const std::filesystem::path& out_dir);

// Re-reads a table/counts CSV pair written by render_report.
std::vector<ClassReport> parse_class_tables(std::string_view table_csv,
                                            std::string_view counts_csv, Measure measure);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

// {"config": config, "files": {relative path: sha256}} over every regular
// file below `root` except `exclude`, sorted by path.
nlohmann::json build_manifest(const std::filesystem::path& root, const nlohmann::json& config,
                              const std::filesystem::path& exclude = {});

}  // namespace causex

#endif  // CAUSEX_REPORT_HPP_
