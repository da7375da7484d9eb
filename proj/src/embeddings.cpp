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

#include "causex/embeddings.hpp"

#include <charconv>
#include <cmath>

#include "causex/corpus.hpp"
#include "causex/csv.hpp"
#include "causex/error.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "embeddings";

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_blank(line[i])) ++i;
    const size_t start = i;
    while (i < line.size() && !is_blank(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_integer(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

OovPolicy parse_oov_policy(std::string_view name) {
  if (name == "skip") return OovPolicy::kSkip;
  if (name == "zero") return OovPolicy::kZero;
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown OOV policy '" + std::string(name) + "' (expected skip|zero)");
}

EmbeddingTable::Builder::Builder(int dim) : dim_(dim) {
  if (dim <= 0) {
    fail(ErrorKind::kInvalidArgument, kModule, "embedding dimension must be positive");
  }
}

bool EmbeddingTable::Builder::add(std::string token,
                                  std::span<const double> values) {
  if (static_cast<int>(values.size()) != dim_) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "vector for '" + token + "' has " + std::to_string(values.size()) +
             " components, expected " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      fail(ErrorKind::kNumeric, kModule, "non-finite component for '" + token + "'");
    }
  }
  if (index_.contains(token)) return false;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
  values_.insert(values_.end(), values.begin(), values.end());
  return true;
}

EmbeddingTable EmbeddingTable::Builder::build() && {
  EmbeddingTable t;
  t.dim_ = dim_;
  t.tokens_ = std::move(tokens_);
  t.values_ = std::move(values_);
  t.index_ = std::move(index_);
  return t;
}

std::optional<Eigen::Map<const Vector>> EmbeddingTable::lookup(
    std::string_view token) const {
  const auto idx = index_of(token);
  if (!idx) return std::nullopt;
  return row(*idx);
}

std::optional<int> EmbeddingTable::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::Map<const Vector> EmbeddingTable::row(int index) const {
  return Eigen::Map<const Vector>(values_.data() + static_cast<size_t>(index) * dim_, dim_);
}

std::string format_embeddings(const EmbeddingTable& table) {
  std::string out;
  for (size_t i = 0; i < table.size(); ++i) {
    out += table.tokens()[i];
    const auto v = table.row(static_cast<int>(i));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out.push_back(' ');
      out += csv::format_double(v(k));
    }
    out.push_back('\n');
  }
  return out;
}

EmbeddingTable parse_embeddings(std::string_view content, int expected_dim,
                                std::vector<std::string>* warnings) {
  EmbeddingTable::Builder builder(expected_dim);
  std::vector<double> values(expected_dim);
  size_t line_no = 0;
  size_t start = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_integer(fields[0]) &&
        is_integer(fields[1])) {
      continue;  // word2vec-style "<count> <dim>" header
    }
    if (static_cast<int>(fields.size()) - 1 != expected_dim) {
      fail(ErrorKind::kSchema, kModule,
           "line " + std::to_string(line_no) + ": expected " +
               std::to_string(expected_dim) + " floats, got " +
               std::to_string(static_cast<int>(fields.size()) - 1));
    }
    for (int k = 0; k < expected_dim; ++k) {
      const auto f = fields[k + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[k]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(values[k])) {
        fail(ErrorKind::kSchema, kModule,
             "line " + std::to_string(line_no) + ": cannot parse float '" +
                 std::string(f) + "'");
      }
    }
    std::string token(fields[0]);
    if (!builder.add(token, values) && warnings != nullptr) {
      warnings->push_back("line " + std::to_string(line_no) + ": duplicate token '" +
                          token + "' ignored; first occurrence kept");
    }
  }
  return std::move(builder).build();
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               int expected_dim,
                               std::vector<std::string>* warnings) {
  return parse_embeddings(read_file(path, kModule), expected_dim, warnings);
}

PooledVector doc_vector(const EmbeddingTable& table,
                        std::span<const std::string> tokens, OovPolicy policy) {
  if (tokens.empty()) {
    fail(ErrorKind::kInvalidArgument, kModule, "doc_vector of an empty token sequence");
  }
  PooledVector out;
  out.values = Vector::Zero(table.dim());
  for (const auto& t : tokens) {
    if (auto v = table.lookup(t)) {
      out.values += *v;
      ++out.known;
    }
  }
  if (out.known == 0) {
    out.all_oov = true;
    return out;
  }
  const size_t denom = policy == OovPolicy::kSkip ? out.known : tokens.size();
  out.values /= static_cast<double>(denom);
  return out;
}

}  // namespace causex
