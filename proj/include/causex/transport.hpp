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

#ifndef CAUSEX_TRANSPORT_HPP_
#define CAUSEX_TRANSPORT_HPP_

#include <span>

#include <Eigen/Dense>

namespace causex {

// Solution of a balanced transportation problem
//   min sum_ij C_ij P_ij  s.t.  P >= 0, P 1 = a, P' 1 = b.
struct TransportPlan {
  Eigen::MatrixXd plan;       // |a| x |b|
  double objective = 0.0;     // sum_ij C_ij P_ij
  // Dual potentials (exact solver only): u_i + v_j <= C_ij, equality on
  // basic cells.
  Eigen::VectorXd row_potential;
  Eigen::VectorXd col_potential;
  int iterations = 0;
  double marginal_residual = 0.0;  // max |row/col sum - target mass|
};

// Transportation simplex. Starts from the north-west corner basis, prices
// with u-v potentials on the spanning-tree basis, and pivots around the
// unique tree cycle. Uses the most negative reduced cost, switching to
// Bland's smallest-index rule after a degenerate pivot so that ties cannot
// cycle. Masses must be non-negative with equal totals (1e-9 relative).
// Throws Error(kNumeric) when `max_iterations` pivots do not reach
// optimality; the message carries the current objective.
TransportPlan transport_exact(std::span<const double> a, std::span<const double> b,
                              const Eigen::MatrixXd& cost, int max_iterations = 100000);

// Dual objective a'u + b'v of a solved plan.
double dual_objective(std::span<const double> a, std::span<const double> b,
                      const TransportPlan& plan);
// max_ij (u_i + v_j - C_ij); <= 0 when the potentials are dual feasible.
double dual_infeasibility(const Eigen::MatrixXd& cost, const TransportPlan& plan);

// Entropy-regularized transport by log-domain Sinkhorn iterations, followed
// by a rounding step that projects the plan onto the exact marginals, so
// the returned objective is never below the exact optimum. Throws
// Error(kNumeric) with the last marginal residual when `tolerance` is not
// reached within `max_iterations`.
TransportPlan transport_sinkhorn(std::span<const double> a, std::span<const double> b,
                                 const Eigen::MatrixXd& cost, double epsilon,
                                 int max_iterations = 100000, double tolerance = 1e-6);

}  // namespace causex

#endif  // CAUSEX_TRANSPORT_HPP_
