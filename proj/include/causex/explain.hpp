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

#ifndef CAUSEX_EXPLAIN_HPP_
#define CAUSEX_EXPLAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "causex/corpus.hpp"
#include "causex/model.hpp"
#include "json.hpp"

namespace causex {

enum class ExplainMethod { kLime, kIg };
std::string_view method_id(ExplainMethod m);     // "lime", "ig"
std::string_view method_label(ExplainMethod m);  // "LIME", "IG"
ExplainMethod parse_method(std::string_view id);

struct LimeConfig {
  int n_samples = 1000;
  double kernel_width = 25.0;
  double ridge_lambda = 1.0;
  uint64_t seed = 0;
  void validate() const;
};

enum class IgBaseline { kZeroEmbedding, kPadToken };
std::string_view baseline_id(IgBaseline b);  // "zero_embedding", "pad_token"
IgBaseline parse_baseline(std::string_view id);

struct IgConfig {
  int steps = 300;
  IgBaseline baseline = IgBaseline::kZeroEmbedding;
  void validate() const;
};

struct LimeDiagnostics {
  double surrogate_r2 = 0.0;
  double intercept = 0.0;
  bool degenerate = false;  // all perturbed scores identical
  LimeConfig config;
};

struct IgDiagnostics {
  double completeness_gap = 0.0;  // |sum(attr) - (F(u) - F(u'))|
  double logit_input = 0.0;       // F(u)
  double logit_baseline = 0.0;    // F(u')
  double attribution_sum = 0.0;
  IgConfig config;
};

struct TokenWeight {
  std::string token;
  int position = 0;
  double weight = 0.0;

  friend bool operator==(const TokenWeight&, const TokenWeight&) = default;
};

struct Explanation {
  std::string doc_id;
  int target_class = 0;
  int gold_class = 0;
  std::string model_label;  // e.g. "CNN"; empty for black-box predictors
  ExplainMethod method = ExplainMethod::kLime;
  std::vector<TokenWeight> weights;  // one per original token position
  std::variant<LimeDiagnostics, IgDiagnostics> diagnostics;
  std::vector<std::string> flags;
};

// Black-box text classifier: text -> class probabilities.
using Predictor = std::function<Probabilities(const std::string& text)>;

// Predictor backed by a model: tokenize, encode, forward.
Predictor model_predictor(const Model& model);

// n binary masks over token positions. Mask 0 keeps every token; the rest
// keep each position independently with probability 1/2.
std::vector<std::vector<uint8_t>> perturb_samples(size_t n_tokens, int n,
                                                  uint64_t seed);

// Text of the kept tokens joined by single spaces.
std::string masked_text(std::span<const std::string> tokens,
                        std::span<const uint8_t> mask);

// LIME kernel on binary masks: exp(-D^2 / width^2) where D is the cosine
// distance between the mask and the all-ones mask (D = 1 for an empty mask).
double lime_kernel(std::span<const uint8_t> mask, double kernel_width);

// Local surrogate explanation. Masked texts are scored by `predict` for the
// target class (the predicted class of the full text unless
// `target_class` is given); a weighted ridge regression with an
// unpenalized intercept maps masks to scores and its coefficients become
// the token weights.
Explanation lime_explain(const Predictor& predict, const Document& doc,
                         const LimeConfig& cfg,
                         std::optional<int> target_class = std::nullopt);

// Riemann approximation of the path integral of input gradients from
// `baseline` to `input`:
//   (input - baseline) * (1/m) * sum_{k=1..m} grad(baseline + k/m (input - baseline))
// with the gradient of the target-class logit.
Eigen::MatrixXd integrated_gradients(const Model& model,
                                     const Eigen::MatrixXd& input,
                                     const Eigen::MatrixXd& baseline,
                                     int target_class, int steps);

// Baseline matrix for `input` under `kind`.
Eigen::MatrixXd ig_baseline(const Model& model, const Eigen::MatrixXd& input,
                            IgBaseline kind);

// Token weight = sum of the token's attribution over embedding dimensions.
// Tokens beyond the model's max_len get weight 0.
Explanation ig_explain(const Model& model, const Document& doc,
                       const IgConfig& cfg, int target_class);

// Distinct tokens by descending |weight| (a repeated token keeps its
// largest magnitude), ties broken lexicographically; at most k entries.
std::vector<std::string> top_keywords(const Explanation& expl, int k);

struct ExplainRunConfig {
  ExplainMethod method = ExplainMethod::kLime;
  LimeConfig lime;  // lime.seed is the run seed; each document derives its own
  IgConfig ig;
  bool gold_target = false;
  int jobs = 1;
};

// Per-document seed for LIME sampling: derive_seed(run_seed, doc_id).
uint64_t document_seed(uint64_t run_seed, std::string_view doc_id);

// Explains every document; output order follows `docs`.
std::vector<Explanation> explain_documents(const Model& model,
                                           std::span<const Document> docs,
                                           const ExplainRunConfig& cfg);

nlohmann::json explanation_to_json(const Explanation& e, int top_k);
Explanation explanation_from_json(const nlohmann::json& j);

}  // namespace causex

#endif  // CAUSEX_EXPLAIN_HPP_
