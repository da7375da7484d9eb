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

#include "causex/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "causex/error.hpp"
#include "causex/rng.hpp"
#include "causex/similarity.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "corpus";

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace

void SyntheticConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) fail(ErrorKind::kInvalidArgument, kModule, std::string(name) + " must be positive");
  };
  positive(docs_per_class, "docs_per_class");
  positive(signatures_per_class, "signatures_per_class");
  positive(signature_hits, "signature_hits");
  positive(content_fillers, "content_fillers");
  positive(filler_vocabulary, "filler_vocabulary");
  positive(inference_length, "inference_length");
  positive(dim, "dim");
  if (stop_fillers < 0) fail(ErrorKind::kInvalidArgument, kModule, "stop_fillers must be >= 0");
  if (signature_hits > signatures_per_class || inference_length > signatures_per_class) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "signature_hits and inference_length cannot exceed signatures_per_class");
  }
  if (inference_length > filler_vocabulary) {
    fail(ErrorKind::kInvalidArgument, kModule, "inference_length cannot exceed filler_vocabulary");
  }
  for (double r : noise_rate) {
    if (!(r >= 0.0 && r <= 1.0)) fail(ErrorKind::kInvalidArgument, kModule, "noise rates must lie in [0, 1]");
  }
  if (!(signature_spread >= 0.0)) fail(ErrorKind::kInvalidArgument, kModule, "signature_spread must be >= 0");
}

SyntheticCorpus make_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  SyntheticCorpus out;
  std::vector<std::string> fillers;
  for (int i = 0; i < cfg.filler_vocabulary; ++i) fillers.push_back("word" + std::to_string(i));
  const auto& stops = stop_words();
  const size_t n_stops = std::min<size_t>(stops.size(), 40);
  for (int c = 1; c < kNumClasses; ++c) {
    for (int j = 0; j < cfg.signatures_per_class; ++j) {
      out.signatures[c].push_back("sig" + std::to_string(c) + "x" + std::to_string(j));
    }
  }

  // Vectors: components N(0, 1/dim), so norms are close to 1.
  Rng vec_rng(derive_seed(cfg.seed, "vectors"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  auto draw = [&] {
    Vector v(cfg.dim);
    for (int k = 0; k < cfg.dim; ++k) v(k) = scale * vec_rng.normal();
    return v;
  };
  EmbeddingTable::Builder builder(cfg.dim);
  for (int c = 1; c < kNumClasses; ++c) {
    const Vector centroid = draw();
    for (const auto& t : out.signatures[c]) {
      const Vector v = centroid + cfg.signature_spread * draw();
      builder.add(t, std::span<const double>(v.data(), v.size()));
    }
  }
  for (const auto& t : fillers) {
    const Vector v = draw();
    builder.add(t, std::span<const double>(v.data(), v.size()));
  }
  for (size_t i = 0; i < n_stops; ++i) {
    const Vector v = draw();
    builder.add(stops[i], std::span<const double>(v.data(), v.size()));
  }
  out.table = std::move(builder).build();

  Rng rng(derive_seed(cfg.seed, "documents"));
  auto pick_distinct = [&](const std::vector<std::string>& pool, int k) {
    std::vector<size_t> idx(pool.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    std::vector<std::string> words;
    for (int i = 0; i < k; ++i) words.push_back(pool[idx[i]]);
    return words;
  };
  std::array<int, kNumClasses> noise_docs{};
  for (int c = 0; c < kNumClasses; ++c) {
    noise_docs[c] = c == 0 ? 0 : static_cast<int>(std::lround(cfg.noise_rate[c] * cfg.docs_per_class));
  }
  int serial = 0;
  for (int i = 0; i < cfg.docs_per_class; ++i) {
    for (int c = 0; c < kNumClasses; ++c) {
      const bool signal = c != 0 && i >= noise_docs[c];
      std::vector<std::string> words;
      if (signal) words = pick_distinct(out.signatures[c], cfg.signature_hits);
      for (int k = 0; k < cfg.content_fillers; ++k) words.push_back(fillers[rng.below(fillers.size())]);
      for (int k = 0; k < cfg.stop_fillers; ++k) words.push_back(stops[rng.below(n_stops)]);
      rng.shuffle(words);
      const std::string inference = c == 0 ? join(pick_distinct(fillers, cfg.inference_length))
                                           : join(pick_distinct(out.signatures[c], cfg.inference_length));
      char id[32];
      std::snprintf(id, sizeof(id), "syn%05d", ++serial);
      out.docs.push_back(make_document(id, join(words), *cause_from_value(c), inference));
    }
  }
  return out;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, kModule, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "data.csv", format_csv_dataset(corpus.docs), kModule);
  write_file(dir / "vectors.txt", format_embeddings(corpus.table), kModule);
}

}  // namespace causex
