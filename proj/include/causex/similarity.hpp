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

#ifndef CAUSEX_SIMILARITY_HPP_
#define CAUSEX_SIMILARITY_HPP_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "causex/corpus.hpp"
#include "causex/embeddings.hpp"
#include "causex/explain.hpp"
#include "causex/transport.hpp"

namespace causex {

// Version tag of the bundled stop list (data/stopwords_en_v1.txt).
std::string_view stop_list_version();
const std::vector<std::string>& stop_words();
bool is_stop_word(std::string_view token);

// Normalized bag of words: distinct in-vocabulary tokens in order of first
// appearance, each with its relative frequency.
struct NbowDistribution {
  std::vector<std::string> support;
  std::vector<double> mass;
};

// Drops stop words (when asked) and out-of-vocabulary tokens, then
// normalizes counts. Error(kInvalidArgument) when nothing is left.
NbowDistribution nbow(std::span<const std::string> tokens, const EmbeddingTable& table,
                      bool remove_stopwords = true);

struct CosineResult {
  double value = 0.0;
  bool zero_norm = false;  // either input had zero norm; value is 0
};

// a.b / (|a| |b|), clamped to [-1, 1].
CosineResult cosine_sim(const Vector& a, const Vector& b);

enum class GroundCost { kSquaredEuclidean, kEuclidean };
std::string_view ground_cost_id(GroundCost c);  // "sqeuclidean", "euclidean"
GroundCost parse_ground_cost(std::string_view id);

Eigen::MatrixXd cost_matrix(const NbowDistribution& a, const NbowDistribution& b,
                            const EmbeddingTable& table,
                            GroundCost cost = GroundCost::kSquaredEuclidean);

TransportPlan wmd_exact(const NbowDistribution& a, const NbowDistribution& b,
                        const EmbeddingTable& table,
                        GroundCost cost = GroundCost::kSquaredEuclidean);

// epsilon <= 0 selects 0.01 * mean(cost).
TransportPlan wmd_sinkhorn(const NbowDistribution& a, const NbowDistribution& b,
                           const EmbeddingTable& table, double epsilon = 0.0,
                           int max_iterations = 100000,
                           GroundCost cost = GroundCost::kSquaredEuclidean);

enum class Measure { kCosine, kWmd };
std::string_view measure_id(Measure m);  // "cosine", "wmd"
Measure parse_measure(std::string_view id);

enum class WmdSolver { kExact, kSinkhorn };
std::string_view solver_id(WmdSolver s);  // "exact", "sinkhorn"
WmdSolver parse_solver(std::string_view id);

struct SimilarityOptions {
  bool remove_stopwords = true;  // applied to keywords and inference alike
  GroundCost cost = GroundCost::kSquaredEuclidean;
  WmdSolver solver = WmdSolver::kExact;
  double sinkhorn_epsilon = 0.0;  // <= 0: 0.01 * mean(cost)
  int sinkhorn_max_iterations = 100000;

  nlohmann::json to_json() const;
};

// A score with the reasons it must stay out of aggregates. Excluded scores
// are NaN, except zero_norm cosine which keeps its defined value 0.
struct SimilarityResult {
  double score = 0.0;
  std::vector<std::string> flags;

  bool usable() const { return flags.empty(); }
};

// Cosine of mean keyword and inference vectors, or the transport objective
// between their nBOWs. Flags: empty_keywords, empty_inference (nothing
// left after stop-word removal), keywords_oov, inference_oov (no token in
// the vocabulary), zero_norm.
SimilarityResult explanation_similarity(std::span<const std::string> keywords,
                                        std::string_view inference,
                                        const EmbeddingTable& table, Measure measure,
                                        const SimilarityOptions& options = {});

struct ScoreRecord {
  std::string doc_id;
  int cls = 0;          // gold class
  std::string method;   // e.g. "CNN+LIME"
  Measure measure = Measure::kCosine;
  double score = 0.0;
  std::vector<std::string> flags;

  bool usable() const { return flags.empty(); }
};

// "<model label>+<method label>", or the method label alone.
std::string method_row_label(const Explanation& e);

// Scores each explanation's top-k keywords against its document's
// inference. Documents without an inference get the flag no_inference.
// Error(kNotFound) when an explanation's doc_id is not in `docs`.
std::vector<ScoreRecord> score_explanations(std::span<const Explanation> explanations,
                                            std::span<const Document> docs,
                                            const EmbeddingTable& table, Measure measure,
                                            int top_k, const SimilarityOptions& options = {},
                                            int jobs = 1);

// CSV with header doc_id,class,method,measure,score,flags. Excluded scores
// have an empty score cell when not finite; flags are joined with ';'.
std::string scores_to_csv(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> scores_from_csv(std::string_view text);

}  // namespace causex

#endif  // CAUSEX_SIMILARITY_HPP_
