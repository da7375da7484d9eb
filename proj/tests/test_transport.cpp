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

#include <cmath>
#include <vector>

#include "causex/error.hpp"
#include "causex/rng.hpp"
#include "causex/transport.hpp"
#include "oracles.hpp"
#include "wmd_instances.hpp"

namespace causex {
namespace {

using Eigen::MatrixXd;

std::vector<double> rational_masses(Rng& rng, size_t n) {
  std::vector<double> counts(n);
  double total = 0.0;
  for (auto& c : counts) {
    c = static_cast<double>(1 + rng.below(6));
    total += c;
  }
  for (auto& c : counts) c /= total;
  return counts;
}

void expect_feasible(const TransportPlan& p, const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(p.plan.rows(), static_cast<Eigen::Index>(a.size()));
  ASSERT_EQ(p.plan.cols(), static_cast<Eigen::Index>(b.size()));
  EXPECT_GE(p.plan.minCoeff(), -1e-15);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(p.plan.row(i).sum(), a[i], 1e-12);
  for (size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(p.plan.col(j).sum(), b[j], 1e-12);
}

TEST(TransportExact, MatchesBruteForceOnRandomProblems) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t m = 1 + rng.below(4);
    const size_t n = 1 + rng.below(4);
    const auto a = rational_masses(rng, m);
    const auto b = rational_masses(rng, n);
    MatrixXd c(m, n);
    // Half the trials use small integer costs, which makes ties and
    // degenerate pivots common.
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      c.data()[i] = trial % 2 ? static_cast<double>(rng.below(4)) : rng.uniform() * 10.0;
    }
    const auto p = transport_exact(a, b, c);
    const double brute = oracle::transport_bruteforce(a, b, test::to_rows(c));
    EXPECT_NEAR(p.objective, brute, 1e-9) << "trial " << trial;
    EXPECT_NEAR(p.objective, (c.array() * p.plan.array()).sum(), 1e-12);
    EXPECT_NEAR(dual_objective(a, b, p), p.objective, 1e-9) << "trial " << trial;
    EXPECT_LE(dual_infeasibility(c, p), 1e-9) << "trial " << trial;
    expect_feasible(p, a, b);
  }
}

TEST(TransportExact, UniformQuarterMasses) {
  Rng rng(8);
  const std::vector<double> q(4, 0.25);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd c(4, 4);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform();
    const auto p = transport_exact(q, q, c);
    EXPECT_NEAR(p.objective, oracle::transport_bruteforce(q, q, test::to_rows(c)), 1e-9);
  }
}

TEST(TransportExact, ForcedPlans) {
  const std::vector<double> one{1.0};
  const std::vector<double> split{0.2, 0.3, 0.5};
  MatrixXd c(1, 3);
  c << 4.0, 1.0, 2.0;
  const auto p = transport_exact(one, split, c);
  EXPECT_NEAR(p.objective, 0.2 * 4 + 0.3 * 1 + 0.5 * 2, 1e-15);
  expect_feasible(p, one, split);
  const auto q = transport_exact(split, one, MatrixXd(c.transpose()));
  EXPECT_NEAR(q.objective, p.objective, 1e-15);
}

TEST(TransportExact, ZeroMassEntriesAllowed) {
  const std::vector<double> a{0.5, 0.0, 0.5};
  const std::vector<double> b{0.0, 1.0};
  MatrixXd c(3, 2);
  c << 1, 2, 3, 4, 5, 6;
  const auto p = transport_exact(a, b, c);
  EXPECT_NEAR(p.objective, 0.5 * 2 + 0.5 * 6, 1e-12);
}

TEST(TransportExact, InvalidProblems) {
  const std::vector<double> a{0.5, 0.5};
  const std::vector<double> b{0.6, 0.6};
  EXPECT_THROW(transport_exact(a, b, MatrixXd::Ones(2, 2)), Error);
  const std::vector<double> neg{1.5, -0.5};
  const std::vector<double> ok{0.5, 0.5};
  EXPECT_THROW(transport_exact(neg, ok, MatrixXd::Ones(2, 2)), Error);
  EXPECT_THROW(transport_exact(ok, ok, MatrixXd::Ones(3, 2)), Error);
  MatrixXd bad = MatrixXd::Ones(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(transport_exact(ok, ok, bad), Error);
}

TEST(TransportExact, IterationCapReported) {
  Rng rng(2);
  const auto a = rational_masses(rng, 4);
  const auto b = rational_masses(rng, 4);
  MatrixXd c(4, 4);
  c << 9, 8, 7, 0, 8, 7, 0, 6, 7, 0, 6, 5, 0, 6, 5, 4;  // north-west start is far from optimal
  try {
    transport_exact(a, b, c, 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("objective"), std::string::npos) << e.what();
  }
}

TEST(TransportSinkhorn, AboveExactAndClose) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t m = 1 + rng.below(4);
    const size_t n = 1 + rng.below(4);
    const auto a = rational_masses(rng, m);
    const auto b = rational_masses(rng, n);
    MatrixXd c(m, n);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform() * 4.0;
    const auto exact = transport_exact(a, b, c);
    const auto approx = transport_sinkhorn(a, b, c, 0.01 * c.mean());
    EXPECT_GE(approx.objective, exact.objective - 1e-12) << trial;
    EXPECT_LE(approx.objective, 1.02 * exact.objective + 1e-12) << trial;
    expect_feasible(approx, a, b);
  }
}

TEST(TransportSinkhorn, HalvingEpsilonMovesCloser) {
  Rng rng(9);
  const std::vector<double> q(4, 0.25);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd c(4, 4);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform();
    const double exact = transport_exact(q, q, c).objective;
    double eps = 0.1 * c.mean();
    double prev = transport_sinkhorn(q, q, c, eps).objective - exact;
    for (int h = 0; h < 4; ++h) {
      eps /= 2;
      const double gap = transport_sinkhorn(q, q, c, eps).objective - exact;
      EXPECT_LE(gap, prev + 1e-12) << "trial " << trial << " halving " << h;
      prev = gap;
    }
  }
}

TEST(TransportSinkhorn, NonConvergenceCarriesResidual) {
  const std::vector<double> a{0.3, 0.7};
  const std::vector<double> b{0.6, 0.4};
  MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  try {
    transport_sinkhorn(a, b, c, 1e-3, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos) << e.what();
  }
  EXPECT_THROW(transport_sinkhorn(a, b, c, 0.0), Error);
}

TEST(Wmd, RandomInstancesAgainstOracle) {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    const auto inst = test::random_wmd_instance(seed);
    const auto p = wmd_exact(inst.a, inst.b, inst.table);
    const MatrixXd c = cost_matrix(inst.a, inst.b, inst.table);
    EXPECT_NEAR(p.objective, oracle::transport_bruteforce(inst.a.mass, inst.b.mass, test::to_rows(c)), 1e-9);
    EXPECT_NEAR(dual_objective(inst.a.mass, inst.b.mass, p), p.objective, 1e-9);
    EXPECT_LE(dual_infeasibility(c, p), 1e-9);
    EXPECT_NEAR(wmd_exact(inst.b, inst.a, inst.table).objective, p.objective, 1e-9);
    EXPECT_EQ(wmd_exact(inst.a, inst.a, inst.table).objective, 0.0);
  }
}

TEST(Wmd, IdenticalDistributionPlanIsDiagonal) {
  const auto inst = test::random_wmd_instance(77);
  const auto p = wmd_exact(inst.a, inst.a, inst.table);
  for (Eigen::Index i = 0; i < p.plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.plan.cols(); ++j) {
      EXPECT_EQ(p.plan(i, j), i == j ? inst.a.mass[i] : 0.0);
    }
  }
  EXPECT_LE(wmd_sinkhorn(inst.a, inst.a, inst.table, 1e-3).objective, 1e-3);
}

TEST(Wmd, SingletonAndForcedSplit) {
  const auto table = parse_embeddings("a 0 0\nb 3 4\nc 1 1\n", 2);
  const std::vector<std::string> ta{"a"}, tb{"b"}, tbc{"b", "c"};
  const auto na = nbow(ta, table, false);
  EXPECT_EQ(wmd_exact(na, nbow(tb, table, false), table).objective, 25.0);
  EXPECT_EQ(wmd_exact(na, nbow(tb, table, false), table, GroundCost::kEuclidean).objective, 5.0);
  EXPECT_NEAR(wmd_exact(na, nbow(tbc, table, false), table).objective, 0.5 * 25 + 0.5 * 2, 1e-15);
}

}  // namespace
}  // namespace causex
