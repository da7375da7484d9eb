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

#ifndef CAUSEX_CORPUS_HPP_
#define CAUSEX_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace causex {

inline constexpr int kNumClasses = 6;

// Cause categories of a post. The value/name mapping is fixed.
enum class CauseCategory : int {
  kNoReason = 0,
  kBiasOrAbuse = 1,
  kJobsAndCareers = 2,
  kMedication = 3,
  kRelationships = 4,
  kAlienation = 5,
};

inline constexpr std::array<std::string_view, kNumClasses> kCauseNames = {
    "no reason",     "bias or abuse", "jobs and careers",
    "medication",    "relationships", "alienation"};

std::string_view cause_name(CauseCategory c);
std::optional<CauseCategory> cause_from_name(std::string_view name);
std::optional<CauseCategory> cause_from_value(int value);

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;  // always tokenize(text)
  CauseCategory label = CauseCategory::kNoReason;
  std::optional<std::string> inference;

  int label_index() const { return static_cast<int>(label); }
  bool has_inference() const { return inference.has_value(); }

  friend bool operator==(const Document&, const Document&) = default;
};

// Builds a Document with tokens computed from `text`. Blank inference
// strings are stored as absent.
Document make_document(std::string id, std::string text, CauseCategory label,
                       std::optional<std::string> inference = std::nullopt);

// Lowercases (ASCII and Latin-1 letters), splits on Unicode whitespace,
// strips leading/trailing punctuation from each token and drops empty
// tokens. No truncation.
std::vector<std::string> tokenize(std::string_view text);

// True when `s` is well-formed UTF-8.
bool is_valid_utf8(std::string_view s);

enum class DataFormat { kCsv, kJsonl };
DataFormat parse_data_format(std::string_view name);

// Reads a labeled dataset. CSV needs a header row with at least `text` and
// `cause` columns (case-insensitive; `label` is accepted for `cause`);
// `id` and `inference` are optional. JSONL uses the same keys. Missing ids
// become the 1-based record number. Row order is preserved.
std::vector<Document> load_dataset(const std::filesystem::path& path,
                                   DataFormat format);
std::vector<Document> parse_csv_dataset(std::string_view content);
std::vector<Document> parse_jsonl_dataset(std::string_view content);

// CSV with header id,text,cause,inference; an absent inference is an
// empty cell.
std::string format_csv_dataset(std::span<const Document> docs);

struct SplitCounts {
  size_t train = 1699;
  size_t validation = 117;
  size_t test = 370;
};

struct CorpusSplit {
  std::vector<Document> train;
  std::vector<Document> validation;
  std::vector<Document> test;
  uint64_t seed = 0;
};

// Seeded Fisher-Yates shuffle of the documents followed by contiguous
// assignment: [train | validation | test | unused].
CorpusSplit split(std::span<const Document> docs, const SplitCounts& counts,
                  uint64_t seed);

nlohmann::json document_to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path,
                 std::span<const Document> docs);
std::vector<Document> read_jsonl(const std::filesystem::path& path);

// Split directory layout: train.jsonl, val.jsonl, test.jsonl, split.json.
void write_split(const CorpusSplit& split, const std::filesystem::path& dir);
CorpusSplit read_split(const std::filesystem::path& dir);

// Reads a whole file; Error(kNotFound) when it does not exist.
std::string read_file(const std::filesystem::path& path,
                      std::string_view module);
void write_file(const std::filesystem::path& path, std::string_view content,
                std::string_view module);

}  // namespace causex

#endif  // CAUSEX_CORPUS_HPP_
