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

#ifndef CAUSEX_TESTS_WMD_INSTANCES_HPP_
#define CAUSEX_TESTS_WMD_INSTANCES_HPP_

#include <string>
#include <vector>

#include "causex/embeddings.hpp"
#include "causex/rng.hpp"
#include "causex/similarity.hpp"
#include "oracles.hpp"

namespace causex::test {

struct WmdInstance {
  EmbeddingTable table;
  NbowDistribution a;
  NbowDistribution b;
};

// Random pair of nBOWs over an 8-word, dim-3 vocabulary. Supports hold
// 1-4 distinct words; masses are small integer counts over their total.
inline WmdInstance random_wmd_instance(uint64_t seed) {
  Rng rng(seed);
  EmbeddingTable::Builder builder(3);
  std::vector<std::string> words;
  for (int i = 0; i < 8; ++i) {
    words.push_back("v" + std::to_string(i));
    std::vector<double> v(3);
    for (auto& x : v) x = rng.normal();
    builder.add(words.back(), v);
  }
  WmdInstance inst{std::move(builder).build(), {}, {}};
  auto draw = [&] {
    std::vector<std::string> pool = words;
    rng.shuffle(pool);
    const size_t support = 1 + rng.below(4);
    std::vector<std::string> tokens;
    for (size_t i = 0; i < support; ++i) {
      const size_t count = 1 + rng.below(5);
      for (size_t c = 0; c < count; ++c) tokens.push_back(pool[i]);
    }
    return nbow(tokens, inst.table, false);
  };
  inst.a = draw();
  inst.b = draw();
  return inst;
}

inline oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
  oracle::Matrix out(static_cast<size_t>(m.rows()), std::vector<double>(static_cast<size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

}  // namespace causex::test

#endif  // CAUSEX_TESTS_WMD_INSTANCES_HPP_
