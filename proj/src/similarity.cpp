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

#include "causex/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "causex/csv.hpp"
#include "causex/error.hpp"
#include "causex/parallel.hpp"

namespace causex {
namespace detail {
extern const char kStopWordsData[];
}  // namespace detail

namespace {

constexpr std::string_view kModule = "similarity";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StopList {
  std::vector<std::string> words;
  std::unordered_set<std::string> set;
};

const StopList& stop_list() {
  static const StopList list = [] {
    StopList out;
    std::istringstream in(detail::kStopWordsData);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      if (out.set.insert(line).second) out.words.push_back(line);
    }
    return out;
  }();
  return list;
}

std::vector<std::string> content_tokens(std::span<const std::string> tokens, bool remove_stopwords) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (remove_stopwords && is_stop_word(t)) continue;
    out.push_back(t);
  }
  return out;
}

bool any_known(std::span<const std::string> tokens, const EmbeddingTable& table) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return table.index_of(t).has_value(); });
}

}  // namespace

std::string_view stop_list_version() { return "en-v1"; }

const std::vector<std::string>& stop_words() { return stop_list().words; }

bool is_stop_word(std::string_view token) {
  return stop_list().set.count(std::string(token)) > 0;
}

NbowDistribution nbow(std::span<const std::string> tokens, const EmbeddingTable& table,
                      bool remove_stopwords) {
  NbowDistribution out;
  std::unordered_map<std::string, size_t> slot;
  std::vector<double> counts;
  double total = 0.0;
  for (const auto& t : tokens) {
    if (remove_stopwords && is_stop_word(t)) continue;
    if (!table.index_of(t)) continue;
    auto [it, inserted] = slot.emplace(t, out.support.size());
    if (inserted) {
      out.support.push_back(t);
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
    total += 1.0;
  }
  if (out.support.empty()) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "empty nBOW support after stop-word and out-of-vocabulary filtering (" +
             std::to_string(tokens.size()) + " input tokens)");
  }
  out.mass.reserve(counts.size());
  for (double c : counts) out.mass.push_back(c / total);
  return out;
}

CosineResult cosine_sim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "cosine of vectors with different lengths (" + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()) + ")");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  const double c = a.dot(b) / (na * nb);
  return {std::clamp(c, -1.0, 1.0), false};
}

std::string_view ground_cost_id(GroundCost c) {
  return c == GroundCost::kEuclidean ? "euclidean" : "sqeuclidean";
}

GroundCost parse_ground_cost(std::string_view id) {
  if (id == "sqeuclidean") return GroundCost::kSquaredEuclidean;
  if (id == "euclidean") return GroundCost::kEuclidean;
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown ground cost '" + std::string(id) + "' (expected sqeuclidean|euclidean)");
}

Eigen::MatrixXd cost_matrix(const NbowDistribution& a, const NbowDistribution& b,
                            const EmbeddingTable& table, GroundCost cost) {
  auto vec = [&](const std::string& t) {
    auto v = table.lookup(t);
    if (!v) fail(ErrorKind::kInvalidArgument, kModule, "token '" + t + "' is not in the vocabulary");
    return *v;
  };
  Eigen::MatrixXd out(a.support.size(), b.support.size());
  for (size_t i = 0; i < a.support.size(); ++i) {
    const auto xi = vec(a.support[i]);
    for (size_t j = 0; j < b.support.size(); ++j) {
      const double d2 = (xi - vec(b.support[j])).squaredNorm();
      out(i, j) = cost == GroundCost::kEuclidean ? std::sqrt(d2) : d2;
    }
  }
  return out;
}

TransportPlan wmd_exact(const NbowDistribution& a, const NbowDistribution& b,
                        const EmbeddingTable& table, GroundCost cost) {
  return transport_exact(a.mass, b.mass, cost_matrix(a, b, table, cost));
}

TransportPlan wmd_sinkhorn(const NbowDistribution& a, const NbowDistribution& b,
                           const EmbeddingTable& table, double epsilon, int max_iterations,
                           GroundCost cost) {
  const Eigen::MatrixXd c = cost_matrix(a, b, table, cost);
  if (epsilon <= 0.0) epsilon = 0.01 * c.mean();
  // All costs zero: any feasible plan is optimal.
  if (epsilon <= 0.0) return transport_exact(a.mass, b.mass, c);
  return transport_sinkhorn(a.mass, b.mass, c, epsilon, max_iterations);
}

std::string_view measure_id(Measure m) { return m == Measure::kWmd ? "wmd" : "cosine"; }

Measure parse_measure(std::string_view id) {
  if (id == "cosine") return Measure::kCosine;
  if (id == "wmd") return Measure::kWmd;
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown measure '" + std::string(id) + "' (expected cosine|wmd)");
}

std::string_view solver_id(WmdSolver s) { return s == WmdSolver::kSinkhorn ? "sinkhorn" : "exact"; }

WmdSolver parse_solver(std::string_view id) {
  if (id == "exact") return WmdSolver::kExact;
  if (id == "sinkhorn") return WmdSolver::kSinkhorn;
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown solver '" + std::string(id) + "' (expected exact|sinkhorn)");
}

nlohmann::json SimilarityOptions::to_json() const {
  return {{"remove_stopwords", remove_stopwords},
          {"stop_list", stop_list_version()},
          {"ground_cost", ground_cost_id(cost)},
          {"solver", solver_id(solver)},
          {"sinkhorn_epsilon", sinkhorn_epsilon},
          {"sinkhorn_max_iterations", sinkhorn_max_iterations}};
}

SimilarityResult explanation_similarity(std::span<const std::string> keywords,
                                        std::string_view inference,
                                        const EmbeddingTable& table, Measure measure,
                                        const SimilarityOptions& options) {
  const auto inference_tokens = tokenize(inference);
  const auto kw = content_tokens(keywords, options.remove_stopwords);
  const auto inf = content_tokens(inference_tokens, options.remove_stopwords);
  SimilarityResult out;
  if (kw.empty()) {
    out.flags.push_back("empty_keywords");
  } else if (!any_known(kw, table)) {
    out.flags.push_back("keywords_oov");
  }
  if (inf.empty()) {
    out.flags.push_back("empty_inference");
  } else if (!any_known(inf, table)) {
    out.flags.push_back("inference_oov");
  }
  if (!out.flags.empty()) {
    out.score = kNaN;
    return out;
  }
  if (measure == Measure::kCosine) {
    const auto va = doc_vector(table, kw, OovPolicy::kSkip);
    const auto vb = doc_vector(table, inf, OovPolicy::kSkip);
    const auto c = cosine_sim(va.values, vb.values);
    out.score = c.value;
    if (c.zero_norm) out.flags.push_back("zero_norm");
    return out;
  }
  const auto na = nbow(kw, table, false);
  const auto nb = nbow(inf, table, false);
  const auto plan = options.solver == WmdSolver::kExact
                        ? wmd_exact(na, nb, table, options.cost)
                        : wmd_sinkhorn(na, nb, table, options.sinkhorn_epsilon,
                                       options.sinkhorn_max_iterations, options.cost);
  out.score = plan.objective;
  return out;
}

std::string method_row_label(const Explanation& e) {
  const std::string m(method_label(e.method));
  return e.model_label.empty() ? m : e.model_label + "+" + m;
}

std::vector<ScoreRecord> score_explanations(std::span<const Explanation> explanations,
                                            std::span<const Document> docs,
                                            const EmbeddingTable& table, Measure measure,
                                            int top_k, const SimilarityOptions& options,
                                            int jobs) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id.emplace(d.id, &d);
  std::vector<const Document*> matched(explanations.size());
  for (size_t i = 0; i < explanations.size(); ++i) {
    auto it = by_id.find(explanations[i].doc_id);
    if (it == by_id.end()) {
      fail(ErrorKind::kNotFound, kModule,
           "explanation for document '" + explanations[i].doc_id + "' has no matching document");
    }
    matched[i] = it->second;
  }
  std::vector<ScoreRecord> out(explanations.size());
  parallel_for(explanations.size(), jobs, [&](size_t i) {
    const Explanation& e = explanations[i];
    const Document& d = *matched[i];
    ScoreRecord r;
    r.doc_id = d.id;
    r.cls = d.label_index();
    r.method = method_row_label(e);
    r.measure = measure;
    if (!d.inference) {
      r.score = kNaN;
      r.flags = {"no_inference"};
    } else {
      const auto kw = top_keywords(e, top_k);
      auto s = explanation_similarity(kw, *d.inference, table, measure, options);
      r.score = s.score;
      r.flags = std::move(s.flags);
    }
    out[i] = std::move(r);
  });
  return out;
}

std::string scores_to_csv(std::span<const ScoreRecord> records) {
  std::string out = csv::format_row({"doc_id", "class", "method", "measure", "score", "flags"});
  for (const auto& r : records) {
    std::string flags;
    for (size_t k = 0; k < r.flags.size(); ++k) flags += (k ? ";" : "") + r.flags[k];
    out += csv::format_row({r.doc_id, std::to_string(r.cls), r.method,
                            std::string(measure_id(r.measure)),
                            std::isfinite(r.score) ? csv::format_double(r.score) : "", flags});
  }
  return out;
}

std::vector<ScoreRecord> scores_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  const csv::Row header = {"doc_id", "class", "method", "measure", "score", "flags"};
  if (rows.empty() || rows.front() != header) {
    fail(ErrorKind::kSchema, kModule, "score file must start with header doc_id,class,method,measure,score,flags");
  }
  std::vector<ScoreRecord> out;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "score record " + std::to_string(i);
    if (row.size() != header.size()) {
      fail(ErrorKind::kSchema, kModule, where + ": expected 6 fields, found " + std::to_string(row.size()));
    }
    ScoreRecord r;
    r.doc_id = row[0];
    int cls = -1;
    const auto res = std::from_chars(row[1].data(), row[1].data() + row[1].size(), cls);
    if (res.ec != std::errc() || res.ptr != row[1].data() + row[1].size() || !cause_from_value(cls)) {
      fail(ErrorKind::kSchema, kModule, where + ": class '" + row[1] + "' is not in 0-5");
    }
    r.cls = cls;
    r.method = row[2];
    r.measure = parse_measure(row[3]);
    r.score = row[4].empty() ? kNaN : csv::parse_double(row[4], where + " score");
    std::string_view flags = row[5];
    while (!flags.empty()) {
      const size_t cut = flags.find(';');
      r.flags.emplace_back(flags.substr(0, cut));
      flags = cut == std::string_view::npos ? std::string_view() : flags.substr(cut + 1);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace causex
