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

#include <gtest/gtest.h>

#include <set>
#include <string>

#include "causex/error.hpp"
#include "causex/synthetic.hpp"
#include "test_util.hpp"

namespace causex {
namespace {

TEST(Synthetic, ShapeAndBalance) {
  SyntheticConfig cfg;
  cfg.docs_per_class = 20;
  const auto c = make_synthetic(cfg);
  ASSERT_EQ(c.docs.size(), 120u);
  std::array<int, kNumClasses> per_class{};
  for (const auto& d : c.docs) {
    ++per_class[d.label_index()];
    EXPECT_TRUE(d.has_inference());
  }
  for (int n : per_class) EXPECT_EQ(n, 20);
  EXPECT_TRUE(c.signatures[0].empty());
  for (int k = 1; k < kNumClasses; ++k) EXPECT_EQ(c.signatures[k].size(), 5u);
  EXPECT_EQ(c.table.dim(), 50);
}

TEST(Synthetic, SignalDocumentsCarryOwnSignatures) {
  SyntheticConfig cfg;
  cfg.docs_per_class = 30;
  cfg.noise_rate.fill(0.0);
  const auto c = make_synthetic(cfg);
  for (const auto& d : c.docs) {
    const auto& own = c.signatures[d.label_index()];
    int hits = 0;
    for (const auto& t : d.tokens) {
      for (int k = 1; k < kNumClasses; ++k) {
        const auto& sig = c.signatures[k];
        if (std::find(sig.begin(), sig.end(), t) != sig.end()) {
          EXPECT_EQ(k, d.label_index()) << d.id;
          ++hits;
        }
      }
    }
    EXPECT_EQ(hits, d.label_index() == 0 ? 0 : cfg.signature_hits) << d.id;
    if (d.label_index() > 0) {
      for (const auto& t : tokenize(*d.inference)) {
        EXPECT_NE(std::find(own.begin(), own.end(), t), own.end()) << t;
      }
    }
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticConfig cfg;
  cfg.docs_per_class = 5;
  const auto a = make_synthetic(cfg);
  const auto b = make_synthetic(cfg);
  EXPECT_EQ(a.docs, b.docs);
  EXPECT_EQ(format_embeddings(a.table), format_embeddings(b.table));
  cfg.seed = 2;
  EXPECT_NE(make_synthetic(cfg).docs, a.docs);
}

TEST(Synthetic, WrittenFilesReload) {
  SyntheticConfig cfg;
  cfg.docs_per_class = 4;
  cfg.dim = 6;
  const auto c = make_synthetic(cfg);
  test::TempDir dir;
  write_synthetic(c, dir.path());
  EXPECT_EQ(load_dataset(dir / "data.csv", DataFormat::kCsv), c.docs);
  EXPECT_EQ(load_embeddings(dir / "vectors.txt", 6).tokens(), c.table.tokens());
}

TEST(Synthetic, InvalidConfig) {
  SyntheticConfig cfg;
  cfg.signature_hits = 9;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = SyntheticConfig{};
  cfg.noise_rate[2] = 1.5;
  EXPECT_THROW(make_synthetic(cfg), Error);
}

}  // namespace
}  // namespace causex
