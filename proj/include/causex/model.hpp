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

#ifndef CAUSEX_MODEL_HPP_
#define CAUSEX_MODEL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "causex/corpus.hpp"
#include "causex/embeddings.hpp"
#include "causex/rng.hpp"
#include "json.hpp"

namespace causex {

enum class ArchKind { kMeanMlp, kCnn, kLstm, kBiLstm, kCnnLstm };

// "mean_mlp", "cnn", "lstm", "bilstm", "cnn_lstm".
std::string_view arch_id(ArchKind kind);
// Display label used in report rows: "MeanMLP", "CNN", "LSTM", "BiLSTM",
// "CNN-LSTM".
std::string_view arch_label(ArchKind kind);
ArchKind parse_arch(std::string_view id);

// Layer layout of a classifier. Every architecture ends in a dense layer
// of width kNumClasses followed by softmax.
//
//   mean_mlp  masked mean of token vectors -> dense_sizes -> output
//   cnn       one convolution per filter width (ReLU) -> global max pool
//             over time -> concat -> dense_sizes -> output
//   lstm      LSTM(hidden_size), final state -> dense_sizes -> output
//   bilstm    forward and backward LSTM final states, concatenated
//   cnn_lstm  a single convolution (ReLU) whose output sequence feeds an
//             LSTM; final state -> dense_sizes -> output
//
// Dropout is applied to the input of every dense layer while training.
struct Architecture {
  ArchKind kind = ArchKind::kCnn;
  std::vector<int> filter_widths = {3, 4, 5};
  int filters = 64;  // per width
  int hidden_size = 64;
  std::vector<int> dense_sizes;  // hidden dense layers (ReLU)
  double dropout = 0.3;
  bool trainable_embeddings = false;

  static Architecture defaults(ArchKind kind);
  // Throws Error(kInvalidArgument) on an unsupported combination.
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

struct Param {
  std::string name;
  Eigen::MatrixXd value;
};

// Ordered list of named parameter tensors. The order is the serialization
// order of the model file.
class ParamSet {
 public:
  void add(std::string name, Eigen::MatrixXd value);
  Eigen::MatrixXd& at(std::string_view name);
  const Eigen::MatrixXd& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::vector<Param>& entries() { return entries_; }
  const std::vector<Param>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  // Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  void set_zero();
  void add_scaled(const ParamSet& other, double scale);
  bool all_finite() const;

 private:
  std::vector<Param> entries_;
};

struct TrainConfig {
  int batch_size = 128;
  int epochs = 20;
  double learning_rate = 1.46e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  uint64_t seed = 0;

  // Learning rate 0.0005 for cnn_lstm, 1.46e-3 otherwise.
  static TrainConfig defaults_for(ArchKind kind);
  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean cross-entropy over the epoch's batches
  std::optional<double> val_accuracy;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

using Probabilities = std::array<double, kNumClasses>;

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;

class Model {
 public:
  Model() = default;

  const Architecture& architecture() const { return arch_; }
  int embedding_dim() const { return embedding_dim_; }
  int max_len() const { return max_len_; }
  uint64_t seed() const { return seed_; }

  // Vocabulary excluding the two reserved ids (pad = 0, unk = 1).
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()) + 2; }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Embedding matrix, one column per token id.
  const Eigen::MatrixXd& embeddings() const { return params_.at("embedding"); }

  // Token strings to ids; unknown tokens map to kUnkId and the result is
  // truncated to max_len.
  std::vector<int> encode(std::span<const std::string> tokens) const;
  // Embedded sequence (embedding_dim x n) of the non-pad ids. Throws on ids
  // outside the vocabulary or sequences longer than max_len.
  Eigen::MatrixXd embed(std::span<const int> ids) const;

  std::optional<TrainConfig> train_config;
  std::vector<EpochRecord> history;

 private:
  friend Model init_model(const Architecture&, const EmbeddingTable&, uint64_t,
                          std::span<const std::string>, int);
  friend Model load_model(const std::filesystem::path&);
  friend Model model_from_bytes(std::string_view);

  Architecture arch_;
  int embedding_dim_ = 0;
  int max_len_ = 265;
  uint64_t seed_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> vocab_index_;
  ParamSet params_;
};

// Builds a model with Glorot-uniform weights drawn from `seed`
// (limit = sqrt(6 / (rows + cols)) per weight matrix), zero biases, LSTM
// forget-gate biases of 1, and an embedding layer copied from `table`.
// `vocabulary`, when non-empty, restricts the embedding layer to those
// tokens (table entries only); otherwise the whole table is used.
Model init_model(const Architecture& arch, const EmbeddingTable& table,
                 uint64_t seed, std::span<const std::string> vocabulary = {},
                 int max_len = 265);

// Pre-softmax class scores for an embedded sequence (eval mode).
Eigen::VectorXd logits(const Model& model, const Eigen::MatrixXd& embedded);
Probabilities softmax(const Eigen::VectorXd& logits);

// Class probabilities for a token-id sequence; pad ids are masked out.
Probabilities forward(const Model& model, std::span<const int> token_ids);
Probabilities predict_tokens(const Model& model,
                             std::span<const std::string> tokens);
int argmax(const Probabilities& p);

// d logit[target_class] / d embedded, same shape as `embedded`.
Eigen::MatrixXd input_gradients(const Model& model,
                                const Eigen::MatrixXd& embedded,
                                int target_class);

// Cross-entropy of one example and its gradient accumulated into `grads`
// (shaped like model.params()). `dropout_rng` enables training-mode dropout;
// pass nullptr for eval mode. The embedding block receives gradients only
// when the architecture's embeddings are trainable.
double loss_and_gradients(const Model& model, std::span<const int> token_ids,
                          int label, ParamSet& grads,
                          Rng* dropout_rng = nullptr);
// Same on an already embedded sequence; also returns d loss / d embedded
// through `input_grad` when non-null. Never touches the embedding block.
double loss_and_gradients_embedded(const Model& model,
                                   const Eigen::MatrixXd& embedded, int label,
                                   ParamSet* grads,
                                   Eigen::MatrixXd* input_grad = nullptr,
                                   Rng* dropout_rng = nullptr);

// Forward pass that also exposes the pooled feature vector (the input of
// the first dense layer). For bilstm this is [forward final h; backward
// final h].
Eigen::VectorXd encoder_features(const Model& model,
                                 const Eigen::MatrixXd& embedded);

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
};

// Mini-batch Adam on categorical cross-entropy. Batches are split into
// fixed chunks whose gradients are summed in order, so results do not
// depend on `jobs`.
TrainResult train(Model model, std::span<const Document> train_docs,
                  std::span<const Document> val_docs, const TrainConfig& cfg,
                  int jobs = 1);

struct MetricsReport {
  std::array<double, kNumClasses> per_class_f1{};
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<int, kNumClasses> support{};
  double accuracy = 0.0;
  // confusion[gold][predicted]
  std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};
};

// F1 is 0 when precision + recall is 0.
MetricsReport metrics_from_confusion(
    const std::array<std::array<int, kNumClasses>, kNumClasses>& confusion);
MetricsReport evaluate(const Model& model, std::span<const Document> test_docs,
                       int jobs = 1);

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

// Model container: 8-byte magic "CAUSEXM1", little-endian uint64 header
// length, JSON header, then little-endian float32 parameter blocks
// (column-major) in header order.
std::string model_to_bytes(const Model& model);
Model model_from_bytes(std::string_view bytes);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace causex

#endif  // CAUSEX_MODEL_HPP_
