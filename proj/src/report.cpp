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

#include "causex/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "causex/csv.hpp"
#include "causex/error.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "report";

// Sorted summation keeps the mean independent of record order.
double ordered_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double coefficient_of_variation(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  if (mean == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(ss / n) / std::abs(mean);
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

csv::Row class_header(std::string_view first, std::string_view prefix) {
  csv::Row h = {std::string(first)};
  for (int c = 0; c < kNumClasses; ++c) h.push_back(std::string(prefix) + "Class" + std::to_string(c));
  return h;
}

int parse_count(const std::string& s, const std::string& where) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0) {
    fail(ErrorKind::kSchema, kModule, where + ": bad count '" + s + "'");
  }
  return v;
}

std::string summary_markdown(const ReportInputs& in) {
  std::string md = "# Explanation similarity report\n";
  for (Measure m : {Measure::kCosine, Measure::kWmd}) {
    std::vector<const ClassReport*> rows;
    for (const auto& r : in.reports) {
      if (r.measure == m) rows.push_back(&r);
    }
    if (rows.empty()) continue;
    const bool cos = m == Measure::kCosine;
    md += cos ? "\n## Cosine similarity (higher is more similar)\n\n"
              : "\n## Word Mover's Distance (lower is more similar)\n\n";
    md += "| Method |";
    for (int c = 0; c < kNumClasses; ++c) md += " Class" + std::to_string(c) + " |";
    md += " Row mean | Excluded |\n|---|";
    for (int c = 0; c <= kNumClasses + 1; ++c) md += "---|";
    md += "\n";
    std::vector<double> cells, row_means;
    for (const auto* r : rows) {
      md += "| " + r->method + " |";
      std::vector<double> present;
      for (const auto& v : r->means) {
        md += " " + (v ? fixed(*v, 3) : std::string("-")) + " |";
        if (v) present.push_back(*v);
      }
      cells.insert(cells.end(), present.begin(), present.end());
      if (present.empty()) {
        md += " - |";
      } else {
        row_means.push_back(std::accumulate(present.begin(), present.end(), 0.0) /
                            static_cast<double>(present.size()));
        md += " " + fixed(row_means.back(), 3) + " |";
      }
      md += " " + std::to_string(r->excluded_count) + " |\n";
    }
    auto mean_of = [](const std::vector<double>& v) {
      return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double grand_cells = mean_of(cells);
    const double grand_rows = mean_of(row_means);
    md += "\nGrand mean over all class cells: " + fixed(grand_cells, 4);
    if (cos) md += " (" + fixed(100.0 * grand_cells, 2) + "%)";
    md += "\n\nMean of row means: " + fixed(grand_rows, 4);
    if (cos) md += " (" + fixed(100.0 * grand_rows, 2) + "%)";
    md += cos ? "\n\nReference target on the full annotated corpus: 81.29% category-wise average.\n"
              : "\n\nReference target on the full annotated corpus: 0.906 category-wise average.\n";
  }
  if (!in.f1_rows.empty()) {
    md += "\n## Classifier F1 per class\n\n| Model |";
    for (int c = 0; c < kNumClasses; ++c) md += " Class" + std::to_string(c) + " |";
    md += " Accuracy |\n|---|";
    for (int c = 0; c <= kNumClasses; ++c) md += "---|";
    md += "\n";
    for (const auto& r : in.f1_rows) {
      md += "| " + r.model + " |";
      for (double f : r.metrics.per_class_f1) md += " " + fixed(f, 3) + " |";
      md += " " + fixed(r.metrics.accuracy, 3) + " |\n";
    }
  }
  if (!in.consistency.empty()) {
    md += "\n## F1 vs explanation consistency\n\n"
          "Spearman rank correlation between per-class F1 and per-class similarity "
          "(WMD negated so that larger means more similar). Dispersion is the coefficient "
          "of variation.\n\n| Method | Measure | Rank correlation | CV(F1) | CV(similarity) |\n"
          "|---|---|---|---|---|\n";
    for (const auto& c : in.consistency) {
      md += "| " + c.method + " | " + std::string(measure_id(c.measure)) + " | " +
            (c.rank_correlation ? fixed(*c.rank_correlation, 4) : "undefined: " + c.undefined_reason) +
            " | " + fixed(c.dispersion_f1, 4) + " | " + fixed(c.dispersion_sim, 4) + " |\n";
    }
  }
  return md;
}

}  // namespace

ClassReport class_table(std::span<const ScoreRecord> records, Measure measure, std::string method) {
  ClassReport out;
  out.measure = measure;
  out.method = std::move(method);
  if (out.method.empty() && !records.empty()) out.method = records.front().method;
  std::array<std::vector<double>, kNumClasses> values;
  for (const auto& r : records) {
    if (r.method != out.method) {
      fail(ErrorKind::kInvalidArgument, kModule,
           "score records mix methods '" + out.method + "' and '" + r.method + "'");
    }
    if (r.measure != measure) {
      fail(ErrorKind::kInvalidArgument, kModule,
           "score record for '" + r.doc_id + "' has measure " + std::string(measure_id(r.measure)) +
               ", expected " + std::string(measure_id(measure)));
    }
    if (r.cls < 0 || r.cls >= kNumClasses) {
      fail(ErrorKind::kInvalidArgument, kModule, "score record class out of range for '" + r.doc_id + "'");
    }
    if (!r.usable() || !std::isfinite(r.score)) {
      ++out.excluded_count;
      continue;
    }
    values[r.cls].push_back(r.score);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    out.n_per_class[c] = static_cast<int>(values[c].size());
    if (!values[c].empty()) out.means[c] = ordered_mean(values[c]);
  }
  return out;
}

std::vector<ClassReport> class_tables(std::span<const ScoreRecord> records, Measure measure) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<ScoreRecord>> groups;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.method);
    if (inserted) order.push_back(r.method);
    it->second.push_back(r);
  }
  std::vector<ClassReport> out;
  for (const auto& m : order) out.push_back(class_table(groups[m], measure, m));
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

ConsistencyResult consistency_analysis(std::span<const double> f1, std::span<const double> sims,
                                       Measure measure) {
  if (f1.size() != sims.size() || f1.size() < 2) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "consistency needs two vectors of equal length >= 2 (got " + std::to_string(f1.size()) +
             " and " + std::to_string(sims.size()) + ")");
  }
  auto finite = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(f1) || !finite(sims)) {
    fail(ErrorKind::kNumeric, kModule, "consistency vectors must be finite");
  }
  ConsistencyResult out;
  out.measure = measure;
  out.f1.assign(f1.begin(), f1.end());
  out.sim.assign(sims.begin(), sims.end());
  out.classes.resize(f1.size());
  std::iota(out.classes.begin(), out.classes.end(), 0);
  out.dispersion_f1 = coefficient_of_variation(f1);
  out.dispersion_sim = coefficient_of_variation(sims);
  if (is_constant(f1)) {
    out.undefined_reason = "F1 vector is constant";
  } else if (is_constant(sims)) {
    out.undefined_reason = "similarity vector is constant";
  } else {
    std::vector<double> oriented = out.sim;
    if (measure == Measure::kWmd) {
      for (double& v : oriented) v = -v;
    }
    const auto rf = average_ranks(f1);
    const auto rs = average_ranks(oriented);
    out.rank_correlation = pearson(rf, rs);
  }
  return out;
}

ConsistencyResult consistency_for(const ClassReport& report,
                                  const std::array<double, kNumClasses>& f1) {
  std::vector<double> f, s;
  std::vector<int> classes;
  for (int c = 0; c < kNumClasses; ++c) {
    if (!report.means[c]) continue;
    classes.push_back(c);
    f.push_back(f1[c]);
    s.push_back(*report.means[c]);
  }
  ConsistencyResult out;
  if (classes.size() < 2) {
    out.measure = report.measure;
    out.f1 = f;
    out.sim = s;
    out.undefined_reason = "fewer than two classes have a similarity mean";
    out.dispersion_f1 = f.empty() ? std::numeric_limits<double>::quiet_NaN() : coefficient_of_variation(f);
    out.dispersion_sim = s.empty() ? std::numeric_limits<double>::quiet_NaN() : coefficient_of_variation(s);
  } else {
    out = consistency_analysis(f, s, report.measure);
  }
  out.method = report.method;
  out.classes = std::move(classes);
  return out;
}

std::vector<std::string> render_report(const ReportInputs& inputs,
                                       const std::filesystem::path& out_dir) {
  if (inputs.reports.empty() && inputs.f1_rows.empty()) {
    fail(ErrorKind::kInvalidArgument, kModule, "nothing to report");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::kIo, kModule, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(out_dir / name, content, kModule);
    written.push_back(name);
  };
  for (Measure m : {Measure::kCosine, Measure::kWmd}) {
    std::string table = csv::format_row(class_header("method", ""));
    csv::Row counts_header = class_header("method", "n_");
    counts_header.push_back("excluded");
    std::string counts = csv::format_row(counts_header);
    bool any = false;
    for (const auto& r : inputs.reports) {
      if (r.measure != m) continue;
      any = true;
      csv::Row row = {r.method}, crow = {r.method};
      for (int c = 0; c < kNumClasses; ++c) {
        row.push_back(cell(r.means[c]));
        crow.push_back(std::to_string(r.n_per_class[c]));
      }
      crow.push_back(std::to_string(r.excluded_count));
      table += csv::format_row(row);
      counts += csv::format_row(crow);
    }
    if (!any) continue;
    const std::string id(measure_id(m));
    emit("table_" + id + ".csv", table);
    emit("counts_" + id + ".csv", counts);
  }
  if (!inputs.f1_rows.empty()) {
    csv::Row header = class_header("model", "");
    header.push_back("Accuracy");
    std::string f1 = csv::format_row(header);
    for (const auto& r : inputs.f1_rows) {
      csv::Row row = {r.model};
      for (double v : r.metrics.per_class_f1) row.push_back(csv::format_double(v));
      row.push_back(csv::format_double(r.metrics.accuracy));
      f1 += csv::format_row(row);
    }
    emit("f1_table.csv", f1);
  }
  if (!inputs.consistency.empty()) {
    std::string text = csv::format_row(
        {"method", "measure", "rank_correlation", "dispersion_f1", "dispersion_sim", "reason"});
    auto num = [](double v) { return std::isfinite(v) ? csv::format_double(v) : std::string(); };
    for (const auto& c : inputs.consistency) {
      text += csv::format_row({c.method, std::string(measure_id(c.measure)),
                               c.rank_correlation ? csv::format_double(*c.rank_correlation) : "",
                               num(c.dispersion_f1), num(c.dispersion_sim), c.undefined_reason});
    }
    emit("consistency.csv", text);
  }
  emit("summary.md", summary_markdown(inputs));
  return written;
}

std::vector<ClassReport> parse_class_tables(std::string_view table_csv, std::string_view counts_csv,
                                            Measure measure) {
  const auto table = csv::parse(table_csv);
  const auto counts = csv::parse(counts_csv);
  csv::Row counts_header = class_header("method", "n_");
  counts_header.push_back("excluded");
  if (table.empty() || table.front() != class_header("method", "")) {
    fail(ErrorKind::kSchema, kModule, "class table must start with method,Class0..Class5");
  }
  if (counts.empty() || counts.front() != counts_header) {
    fail(ErrorKind::kSchema, kModule, "count table must start with method,n_Class0..n_Class5,excluded");
  }
  if (table.size() != counts.size()) {
    fail(ErrorKind::kSchema, kModule, "class and count tables have different row counts");
  }
  std::vector<ClassReport> out;
  for (size_t i = 1; i < table.size(); ++i) {
    const std::string where = "table row " + std::to_string(i);
    const auto& row = table[i];
    const auto& crow = counts[i];
    if (row.size() != 1 + kNumClasses || crow.size() != 2 + kNumClasses || row[0] != crow[0]) {
      fail(ErrorKind::kSchema, kModule, where + ": malformed or mismatched row");
    }
    ClassReport r;
    r.method = row[0];
    r.measure = measure;
    for (int c = 0; c < kNumClasses; ++c) {
      if (!row[1 + c].empty()) r.means[c] = csv::parse_double(row[1 + c], where + " mean");
      r.n_per_class[c] = parse_count(crow[1 + c], where);
    }
    r.excluded_count = parse_count(crow[1 + kNumClasses], where);
    out.push_back(std::move(r));
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::kIo, kModule, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path, kModule)); }

nlohmann::json build_manifest(const std::filesystem::path& root, const nlohmann::json& config,
                              const std::filesystem::path& exclude) {
  std::map<std::string, std::string> files;
  const auto excluded = exclude.empty() ? std::filesystem::path() : std::filesystem::weakly_canonical(exclude);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    if (!excluded.empty() && std::filesystem::weakly_canonical(entry.path()) == excluded) continue;
    files[std::filesystem::relative(entry.path(), root).generic_string()] = file_sha256(entry.path());
  }
  nlohmann::json j;
  j["config"] = config;
  j["files"] = nlohmann::json::object();
  for (const auto& [k, v] : files) j["files"][k] = v;
  return j;
}

}  // namespace causex
