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

#include <algorithm>
#include <string>
#include <vector>

#include "causex/embeddings.hpp"
#include "causex/error.hpp"
#include "causex/rng.hpp"
#include "test_util.hpp"

namespace causex {
namespace {

std::string line_of(const std::string& token, int dim, double start) {
  std::string s = token;
  for (int i = 0; i < dim; ++i) s += " " + std::to_string(start + i);
  return s + "\n";
}

TEST(LoadEmbeddings, SmallFile) {
  const auto t = parse_embeddings("job 0.1 0.2 0.3\nlove -1 0 2.5\n", 3);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dim(), 3);
  const auto v = t.lookup("love");
  ASSERT_TRUE(v.has_value());
  EXPECT_DOUBLE_EQ((*v)(0), -1.0);
  EXPECT_DOUBLE_EQ((*v)(2), 2.5);
  EXPECT_FALSE(t.lookup("hate").has_value());
}

TEST(LoadEmbeddings, ShortLineNamesLine) {
  std::string content = line_of("a", 100, 0) + line_of("b", 99, 0);
  try {
    parse_embeddings(content, 100);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("99"), std::string::npos) << msg;
  }
}

TEST(LoadEmbeddings, DuplicateKeepsFirstAndWarns) {
  std::string content;
  for (int i = 1; i <= 10; ++i) {
    const std::string token = (i == 5 || i == 9) ? "dup" : "t" + std::to_string(i);
    content += line_of(token, 3, i);
  }
  std::vector<std::string> warnings;
  const auto t = parse_embeddings(content, 3, &warnings);
  EXPECT_EQ(t.size(), 9u);
  EXPECT_DOUBLE_EQ((*t.lookup("dup"))(0), 5.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("line 9"), std::string::npos) << warnings[0];
}

TEST(LoadEmbeddings, CaseSensitive) {
  const auto t = parse_embeddings("Job 1 0\njob 0 1\n", 2);
  EXPECT_DOUBLE_EQ((*t.lookup("Job"))(0), 1.0);
  EXPECT_DOUBLE_EQ((*t.lookup("job"))(0), 0.0);
  EXPECT_FALSE(t.lookup("JOB").has_value());
}

TEST(LoadEmbeddings, HeaderLineSkipped) {
  const auto t = parse_embeddings("2 3\nx 1 2 3\ny 4 5 6\n", 3);
  EXPECT_EQ(t.size(), 2u);
}

TEST(LoadEmbeddings, UnparsableFloat) {
  EXPECT_THROW(parse_embeddings("x 1 two 3\n", 3), Error);
}

TEST(LoadEmbeddings, FormatRoundTrip) {
  Rng rng(4);
  EmbeddingTable::Builder b(5);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> v(5);
    for (auto& x : v) x = rng.normal();
    b.add("tok" + std::to_string(i), v);
  }
  const auto t = std::move(b).build();
  const auto back = parse_embeddings(format_embeddings(t), 5);
  ASSERT_EQ(back.tokens(), t.tokens());
  for (size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back.row(static_cast<int>(i)), t.row(static_cast<int>(i)));
  }
}

TEST(LoadEmbeddings, MissingFile) {
  try {
    load_embeddings("/nonexistent/vectors.txt", 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotFound);
  }
}

class DocVector : public ::testing::Test {
 protected:
  EmbeddingTable table_ = parse_embeddings("a 1 0 2\nb 3 4 0\nc -1 2 1\n", 3);
};

TEST_F(DocVector, MeanOfKnownTokens) {
  const std::vector<std::string> toks{"a", "b", "zzz"};
  const auto p = doc_vector(table_, toks);
  EXPECT_EQ(p.known, 2u);
  EXPECT_FALSE(p.all_oov);
  EXPECT_DOUBLE_EQ(p.values(0), 2.0);
  EXPECT_DOUBLE_EQ(p.values(1), 2.0);
  EXPECT_DOUBLE_EQ(p.values(2), 1.0);
}

TEST_F(DocVector, ZeroPolicyCountsOov) {
  const std::vector<std::string> toks{"a", "b", "zzz"};
  const auto p = doc_vector(table_, toks, OovPolicy::kZero);
  EXPECT_NEAR(p.values(0), 4.0 / 3.0, 1e-15);
}

TEST_F(DocVector, SingleTokenIsItsVector) {
  const std::vector<std::string> toks{"c"};
  EXPECT_EQ(doc_vector(table_, toks).values, Vector(*table_.lookup("c")));
}

TEST_F(DocVector, AllOovFlagged) {
  const std::vector<std::string> toks{"x", "y"};
  const auto p = doc_vector(table_, toks);
  EXPECT_TRUE(p.all_oov);
  EXPECT_EQ(p.known, 0u);
  EXPECT_EQ(p.values, Vector::Zero(3));
}

TEST_F(DocVector, EmptyInputRejected) {
  EXPECT_THROW(doc_vector(table_, std::vector<std::string>{}), Error);
}

TEST_F(DocVector, PermutationInvariant) {
  std::vector<std::string> toks{"a", "b", "c", "a", "q"};
  const auto base = doc_vector(table_, toks).values;
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(toks);
    EXPECT_LT((doc_vector(table_, toks).values - base).norm(), 1e-12);
  }
}

TEST_F(DocVector, RepetitionInvariant) {
  const std::vector<std::string> once{"a", "b", "c"};
  std::vector<std::string> thrice;
  for (int r = 0; r < 3; ++r) thrice.insert(thrice.end(), once.begin(), once.end());
  EXPECT_LT((doc_vector(table_, thrice).values - doc_vector(table_, once).values).norm(), 1e-12);
}

}  // namespace
}  // namespace causex
