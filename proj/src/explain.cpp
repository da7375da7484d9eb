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

#include "causex/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "causex/error.hpp"
#include "causex/parallel.hpp"
#include "causex/rng.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "explain";

using Eigen::MatrixXd;
using Eigen::VectorXd;

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

}  // namespace

std::string_view baseline_id(IgBaseline b) {
  return b == IgBaseline::kZeroEmbedding ? "zero_embedding" : "pad_token";
}

IgBaseline parse_baseline(std::string_view s) {
  if (s == "zero_embedding") return IgBaseline::kZeroEmbedding;
  if (s == "pad_token") return IgBaseline::kPadToken;
  fail(ErrorKind::kInvalidArgument, kModule, "unknown IG baseline '" + std::string(s) + "'");
}

std::string_view method_id(ExplainMethod m) {
  return m == ExplainMethod::kLime ? "lime" : "ig";
}

std::string_view method_label(ExplainMethod m) {
  return m == ExplainMethod::kLime ? "LIME" : "IG";
}

ExplainMethod parse_method(std::string_view id) {
  if (id == "lime") return ExplainMethod::kLime;
  if (id == "ig") return ExplainMethod::kIg;
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown explanation method '" + std::string(id) + "' (expected lime|ig)");
}

void LimeConfig::validate() const {
  if (n_samples < 10) fail(ErrorKind::kInvalidArgument, kModule, "LIME needs at least 10 samples");
  if (!(kernel_width > 0.0)) fail(ErrorKind::kInvalidArgument, kModule, "kernel width must be positive");
  if (!(ridge_lambda > 0.0)) fail(ErrorKind::kInvalidArgument, kModule, "ridge lambda must be positive");
}

void IgConfig::validate() const {
  if (steps < 1) fail(ErrorKind::kInvalidArgument, kModule, "IG needs at least one step");
}

Predictor model_predictor(const Model& model) {
  return [&model](const std::string& text) {
    const auto tokens = tokenize(text);
    return predict_tokens(model, tokens);
  };
}

std::vector<std::vector<uint8_t>> perturb_samples(size_t n_tokens, int n, uint64_t seed) {
  if (n_tokens == 0) fail(ErrorKind::kInvalidArgument, kModule, "cannot perturb an empty token sequence");
  if (n < 1) fail(ErrorKind::kInvalidArgument, kModule, "sample count must be positive");
  Rng rng(seed);
  std::vector<std::vector<uint8_t>> masks(n, std::vector<uint8_t>(n_tokens, 1));
  for (int s = 1; s < n; ++s) {
    for (size_t j = 0; j < n_tokens; ++j) masks[s][j] = rng.coin() ? 1 : 0;
  }
  return masks;
}

std::string masked_text(std::span<const std::string> tokens, std::span<const uint8_t> mask) {
  std::string out;
  for (size_t j = 0; j < tokens.size(); ++j) {
    if (!mask[j]) continue;
    if (!out.empty()) out.push_back(' ');
    out += tokens[j];
  }
  return out;
}

double lime_kernel(std::span<const uint8_t> mask, double kernel_width) {
  size_t kept = 0;
  for (uint8_t b : mask) kept += b ? 1 : 0;
  // cos(mask, ones) = kept / (sqrt(kept) * sqrt(n)) = sqrt(kept / n)
  const double distance =
      kept == 0 ? 1.0 : 1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(mask.size()));
  return std::exp(-(distance * distance) / (kernel_width * kernel_width));
}

Explanation lime_explain(const Predictor& predict, const Document& doc, const LimeConfig& cfg,
                         std::optional<int> target_class) {
  cfg.validate();
  if (doc.tokens.empty()) {
    fail(ErrorKind::kInvalidArgument, kModule, "document '" + doc.id + "' has no tokens");
  }
  const auto masks = perturb_samples(doc.tokens.size(), cfg.n_samples, cfg.seed);
  const Eigen::Index n = cfg.n_samples;
  const Eigen::Index p = static_cast<Eigen::Index>(doc.tokens.size());

  auto score = [&](int s) -> Probabilities {
    try {
      return predict(masked_text(doc.tokens, masks[s]));
    } catch (const Error& e) {
      fail(e.kind(), kModule, "predictor failed on sample " + std::to_string(s) + ": " + e.what());
    } catch (const std::exception& e) {
      fail(ErrorKind::kInvalidArgument, kModule,
           "predictor failed on sample " + std::to_string(s) + ": " + e.what());
    }
  };

  const Probabilities full = score(0);
  const int target = target_class.value_or(argmax(full));
  if (target < 0 || target >= kNumClasses) fail(ErrorKind::kInvalidArgument, kModule, "target class outside 0-5");

  MatrixXd x(n, p);
  VectorXd y(n), w(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    y(s) = s == 0 ? full[target] : score(static_cast<int>(s))[target];
    if (!std::isfinite(y(s))) {
      fail(ErrorKind::kNumeric, kModule, "predictor returned a non-finite score on sample " + std::to_string(s));
    }
    w(s) = lime_kernel(masks[s], cfg.kernel_width);
    for (Eigen::Index j = 0; j < p; ++j) x(s, j) = masks[s][j];
  }

  Explanation e;
  e.doc_id = doc.id;
  e.target_class = target;
  e.gold_class = doc.label_index();
  e.method = ExplainMethod::kLime;
  LimeDiagnostics diag;
  diag.config = cfg;

  VectorXd beta = VectorXd::Zero(p);
  double intercept = y(0);
  if ((y.array() == y(0)).all()) {
    diag.degenerate = true;
    diag.surrogate_r2 = 1.0;
    e.flags.push_back("degenerate_scores");
  } else {
    // Weighted ridge with an unpenalized intercept, solved on weighted-
    // centered data: (Xc' W Xc + lambda I) beta = Xc' W yc.
    const double wsum = w.sum();
    const VectorXd x_mean = (x.transpose() * w) / wsum;
    const double y_mean = w.dot(y) / wsum;
    const MatrixXd xc = x.rowwise() - x_mean.transpose();
    const VectorXd yc = y.array() - y_mean;
    MatrixXd gram = xc.transpose() * w.asDiagonal() * xc;
    gram.diagonal().array() += cfg.ridge_lambda;
    beta = gram.ldlt().solve(xc.transpose() * w.asDiagonal() * yc);
    intercept = y_mean - x_mean.dot(beta);

    const VectorXd fitted = (x * beta).array() + intercept;
    const double ss_res = w.dot((y - fitted).cwiseAbs2());
    const double ss_tot = w.dot(yc.cwiseAbs2());
    diag.surrogate_r2 = 1.0 - ss_res / ss_tot;
  }
  diag.intercept = intercept;
  if (!beta.allFinite()) fail(ErrorKind::kNumeric, kModule, "non-finite surrogate coefficients");

  e.weights.reserve(doc.tokens.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    e.weights.push_back({doc.tokens[j], static_cast<int>(j), beta(j)});
  }
  e.diagnostics = diag;
  return e;
}

Eigen::MatrixXd integrated_gradients(const Model& model, const Eigen::MatrixXd& input,
                                     const Eigen::MatrixXd& baseline, int target_class, int steps) {
  if (steps < 1) fail(ErrorKind::kInvalidArgument, kModule, "IG needs at least one step");
  if (input.rows() != baseline.rows() || input.cols() != baseline.cols()) {
    fail(ErrorKind::kInvalidArgument, kModule, "IG baseline shape differs from the input");
  }
  const MatrixXd delta = input - baseline;
  MatrixXd grad_sum = MatrixXd::Zero(input.rows(), input.cols());
  for (int k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / steps;
    const MatrixXd g = input_gradients(model, baseline + alpha * delta, target_class);
    if (!g.allFinite()) {
      fail(ErrorKind::kNumeric, kModule, "non-finite gradient at IG step " + std::to_string(k));
    }
    grad_sum += g;
  }
  return delta.cwiseProduct(grad_sum) / static_cast<double>(steps);
}

Eigen::MatrixXd ig_baseline(const Model& model, const Eigen::MatrixXd& input, IgBaseline kind) {
  if (kind == IgBaseline::kZeroEmbedding) return MatrixXd::Zero(input.rows(), input.cols());
  MatrixXd b(input.rows(), input.cols());
  b.colwise() = model.embeddings().col(kPadId);
  return b;
}

Explanation ig_explain(const Model& model, const Document& doc, const IgConfig& cfg,
                       int target_class) {
  cfg.validate();
  if (target_class < 0 || target_class >= kNumClasses) {
    fail(ErrorKind::kInvalidArgument, kModule, "target class outside 0-5");
  }
  const MatrixXd input = model.embed(model.encode(doc.tokens));
  const MatrixXd base = ig_baseline(model, input, cfg.baseline);
  const MatrixXd attr = integrated_gradients(model, input, base, target_class, cfg.steps);

  IgDiagnostics diag;
  diag.config = cfg;
  diag.logit_input = logits(model, input)(target_class);
  diag.logit_baseline = logits(model, base)(target_class);
  diag.attribution_sum = attr.sum();
  diag.completeness_gap =
      std::abs(diag.attribution_sum - (diag.logit_input - diag.logit_baseline));

  Explanation e;
  e.doc_id = doc.id;
  e.target_class = target_class;
  e.gold_class = doc.label_index();
  e.method = ExplainMethod::kIg;
  e.weights.reserve(doc.tokens.size());
  for (size_t j = 0; j < doc.tokens.size(); ++j) {
    const double w = static_cast<Eigen::Index>(j) < attr.cols() ? attr.col(j).sum() : 0.0;
    e.weights.push_back({doc.tokens[j], static_cast<int>(j), w});
  }
  if (doc.tokens.size() > static_cast<size_t>(attr.cols())) e.flags.push_back("truncated");
  e.diagnostics = diag;
  return e;
}

std::vector<std::string> top_keywords(const Explanation& expl, int k) {
  if (k < 1) fail(ErrorKind::kInvalidArgument, kModule, "top-k needs k >= 1");
  std::map<std::string, double> best;
  for (const auto& tw : expl.weights) {
    const double a = std::abs(tw.weight);
    auto [it, inserted] = best.emplace(tw.token, a);
    if (!inserted && a > it->second) it->second = a;
  }
  std::vector<std::pair<std::string, double>> ranked(best.begin(), best.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (size_t i = 0; i < ranked.size() && static_cast<int>(i) < k; ++i) out.push_back(ranked[i].first);
  return out;
}

uint64_t document_seed(uint64_t run_seed, std::string_view doc_id) {
  return derive_seed(run_seed, doc_id);
}

std::vector<Explanation> explain_documents(const Model& model, std::span<const Document> docs,
                                           const ExplainRunConfig& cfg) {
  std::vector<Explanation> out(docs.size());
  const Predictor predict = model_predictor(model);
  const std::string label(arch_label(model.architecture().kind));
  parallel_for(docs.size(), cfg.jobs, [&](size_t i) {
    const Document& doc = docs[i];
    const std::optional<int> gold =
        cfg.gold_target ? std::optional<int>(doc.label_index()) : std::nullopt;
    Explanation e;
    if (doc.tokens.empty()) {
      e.doc_id = doc.id;
      e.gold_class = doc.label_index();
      e.target_class = gold.value_or(argmax(predict_tokens(model, doc.tokens)));
      e.method = cfg.method;
      if (cfg.method == ExplainMethod::kLime) {
        e.diagnostics = LimeDiagnostics{0.0, 0.0, true, cfg.lime};
      } else {
        e.diagnostics = IgDiagnostics{0.0, 0.0, 0.0, 0.0, cfg.ig};
      }
      e.flags.push_back("empty_document");
    } else if (cfg.method == ExplainMethod::kLime) {
      LimeConfig lc = cfg.lime;
      lc.seed = document_seed(cfg.lime.seed, doc.id);
      e = lime_explain(predict, doc, lc, gold);
    } else {
      const int target = gold.value_or(argmax(predict_tokens(model, doc.tokens)));
      e = ig_explain(model, doc, cfg.ig, target);
    }
    e.model_label = label;
    out[i] = std::move(e);
  });
  return out;
}

nlohmann::json explanation_to_json(const Explanation& e, int top_k) {
  nlohmann::json j;
  j["doc_id"] = e.doc_id;
  j["target_class"] = e.target_class;
  j["gold_class"] = e.gold_class;
  j["model"] = e.model_label;
  j["method"] = std::string(method_id(e.method));
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& tw : e.weights) {
    weights.push_back({{"token", tw.token}, {"position", tw.position}, {"weight", tw.weight}});
  }
  j["weights"] = weights;
  j["top_k"] = top_k;
  j["keywords"] = top_keywords(e, top_k);
  nlohmann::json d;
  if (const auto* l = std::get_if<LimeDiagnostics>(&e.diagnostics)) {
    d["surrogate_r2"] = finite_or_null(l->surrogate_r2);
    d["intercept"] = finite_or_null(l->intercept);
    d["degenerate"] = l->degenerate;
    d["n_samples"] = l->config.n_samples;
    d["kernel_width"] = l->config.kernel_width;
    d["ridge_lambda"] = l->config.ridge_lambda;
    d["seed"] = l->config.seed;
  } else {
    const auto& g = std::get<IgDiagnostics>(e.diagnostics);
    d["completeness_gap"] = finite_or_null(g.completeness_gap);
    d["logit_input"] = finite_or_null(g.logit_input);
    d["logit_baseline"] = finite_or_null(g.logit_baseline);
    d["attribution_sum"] = finite_or_null(g.attribution_sum);
    d["steps"] = g.config.steps;
    d["baseline"] = std::string(baseline_id(g.config.baseline));
  }
  j["diagnostics"] = d;
  j["flags"] = e.flags;
  return j;
}

Explanation explanation_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::nan("") : v.get<double>();
  };
  try {
    Explanation e;
    e.doc_id = j.at("doc_id").get<std::string>();
    e.target_class = j.at("target_class").get<int>();
    e.gold_class = j.at("gold_class").get<int>();
    e.model_label = j.value("model", "");
    e.method = parse_method(j.at("method").get<std::string>());
    for (const auto& w : j.at("weights")) {
      e.weights.push_back({w.at("token").get<std::string>(), w.at("position").get<int>(),
                           w.at("weight").get<double>()});
    }
    const auto& d = j.at("diagnostics");
    if (e.method == ExplainMethod::kLime) {
      LimeDiagnostics l;
      l.surrogate_r2 = num(d.at("surrogate_r2"));
      l.intercept = num(d.at("intercept"));
      l.degenerate = d.at("degenerate").get<bool>();
      l.config.n_samples = d.at("n_samples").get<int>();
      l.config.kernel_width = d.at("kernel_width").get<double>();
      l.config.ridge_lambda = d.at("ridge_lambda").get<double>();
      l.config.seed = d.at("seed").get<uint64_t>();
      e.diagnostics = l;
    } else {
      IgDiagnostics g;
      g.completeness_gap = num(d.at("completeness_gap"));
      g.logit_input = num(d.at("logit_input"));
      g.logit_baseline = num(d.at("logit_baseline"));
      g.attribution_sum = num(d.at("attribution_sum"));
      g.config.steps = d.at("steps").get<int>();
      g.config.baseline = parse_baseline(d.at("baseline").get<std::string>());
      e.diagnostics = g;
    }
    e.flags = j.value("flags", std::vector<std::string>{});
    return e;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::kSchema, kModule, std::string("bad explanation record: ") + ex.what());
  }
}

}  // namespace causex
