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

#ifndef CAUSEX_EMBEDDINGS_HPP_
#define CAUSEX_EMBEDDINGS_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace causex {

using Vector = Eigen::VectorXd;

// How out-of-vocabulary tokens enter a pooled vector: `skip` ignores them,
// `zero` counts them as zero vectors.
enum class OovPolicy { kSkip, kZero };
OovPolicy parse_oov_policy(std::string_view name);

// Immutable token -> vector mapping of a fixed dimension. Tokens keep the
// order in which they were first added.
class EmbeddingTable {
 public:
  class Builder {
   public:
    explicit Builder(int dim);
    // Returns false (and keeps the first vector) when `token` already exists.
    bool add(std::string token, std::span<const double> values);
    EmbeddingTable build() &&;

   private:
    int dim_;
    std::vector<std::string> tokens_;
    std::vector<double> values_;
    std::unordered_map<std::string, int> index_;
  };

  EmbeddingTable() = default;

  int dim() const { return dim_; }
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Exact-match lookup; no case folding.
  std::optional<Eigen::Map<const Vector>> lookup(std::string_view token) const;
  std::optional<int> index_of(std::string_view token) const;
  Eigen::Map<const Vector> row(int index) const;

 private:
  int dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> values_;  // size() * dim_, token-major
  std::unordered_map<std::string, int> index_;
};

// Reads the plain-text pretrained vector format: one `token f1 ... fd` per
// line. A leading "<count> <dim>" header line is skipped. Duplicate tokens
// keep their first vector and add a message to `warnings`.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               int expected_dim,
                               std::vector<std::string>* warnings = nullptr);
EmbeddingTable parse_embeddings(std::string_view content, int expected_dim,
                                std::vector<std::string>* warnings = nullptr);

// Inverse of parse_embeddings (no header line); values in shortest
// round-trip decimal form.
std::string format_embeddings(const EmbeddingTable& table);

struct PooledVector {
  Vector values;
  size_t known = 0;        // in-vocabulary tokens that contributed
  bool all_oov = false;    // no token was found; values is zero
};

// Arithmetic mean of token vectors under `policy`. Throws on empty input.
PooledVector doc_vector(const EmbeddingTable& table,
                        std::span<const std::string> tokens,
                        OovPolicy policy = OovPolicy::kSkip);

}  // namespace causex

#endif  // CAUSEX_EMBEDDINGS_HPP_
