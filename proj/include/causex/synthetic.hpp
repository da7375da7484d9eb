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

#ifndef CAUSEX_SYNTHETIC_HPP_
#define CAUSEX_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "causex/corpus.hpp"
#include "causex/embeddings.hpp"

namespace causex {

// Generator for a planted-signal corpus with known explanations.
//
// Classes 1-5 each own `signatures_per_class` tokens whose vectors cluster
// around a class centroid. A signal document of class c holds
// `signature_hits` of them among neutral filler words, and its inference
// is a selection of class c's signature tokens. Class 0 has no signal: its
// documents are filler only and its inferences are unrelated filler words.
// A fraction noise_rate[c] of class c's documents are filler only as well,
// while keeping class c's label and inference.
struct SyntheticConfig {
  int docs_per_class = 130;
  int signatures_per_class = 5;
  int signature_hits = 3;
  int content_fillers = 10;
  int stop_fillers = 4;
  int filler_vocabulary = 200;
  int inference_length = 4;
  std::array<double, kNumClasses> noise_rate = {0.0, 0.0, 0.04, 0.04, 0.08, 0.08};
  int dim = 50;
  double signature_spread = 0.3;  // relative to the centroid scale
  uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<Document> docs;
  EmbeddingTable table;
  // signatures[c] is empty for class 0.
  std::array<std::vector<std::string>, kNumClasses> signatures;
};

SyntheticCorpus make_synthetic(const SyntheticConfig& cfg);

// Writes data.csv and vectors.txt into `dir`.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace causex

#endif  // CAUSEX_SYNTHETIC_HPP_
