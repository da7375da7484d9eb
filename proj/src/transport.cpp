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

#include "causex/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "causex/csv.hpp"
#include "causex/error.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "similarity";

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_problem(std::span<const double> a, std::span<const double> b, const MatrixXd& cost) {
  if (a.empty() || b.empty()) fail(ErrorKind::kInvalidArgument, kModule, "empty transport marginal");
  if (cost.rows() != static_cast<Eigen::Index>(a.size()) ||
      cost.cols() != static_cast<Eigen::Index>(b.size())) {
    fail(ErrorKind::kInvalidArgument, kModule, "cost matrix shape does not match marginals");
  }
  if (!cost.allFinite()) fail(ErrorKind::kNumeric, kModule, "non-finite cost matrix");
  for (double v : a) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::kInvalidArgument, kModule, "negative or non-finite mass");
  }
  for (double v : b) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::kInvalidArgument, kModule, "negative or non-finite mass");
  }
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(sa > 0.0) || std::abs(sa - sb) > 1e-9 * std::max(sa, sb)) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "unbalanced transport problem (" + std::to_string(sa) + " vs " + std::to_string(sb) + ")");
  }
}

double residual(const MatrixXd& plan, std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) r = std::max(r, std::abs(plan.row(i).sum() - a[i]));
  for (Eigen::Index j = 0; j < plan.cols(); ++j) r = std::max(r, std::abs(plan.col(j).sum() - b[j]));
  return r;
}

struct Cell {
  int row;
  int col;
};

// Spanning-tree basis of a transportation problem with m rows and n
// columns. Tree nodes: rows are 0..m-1, columns are m..m+n-1.
class Basis {
 public:
  Basis(int m, int n) : m_(m), n_(n), slot_(static_cast<size_t>(m) * n, -1) {}

  void add(Cell c, double flow) {
    slot_[index(c)] = static_cast<int>(cells_.size());
    cells_.push_back(c);
    flow_.push_back(flow);
  }

  void replace(int slot, Cell entering, double flow) {
    slot_[index(cells_[slot])] = -1;
    cells_[slot] = entering;
    flow_[slot] = flow;
    slot_[index(entering)] = slot;
  }

  bool is_basic(int i, int j) const { return slot_[static_cast<size_t>(i) * n_ + j] >= 0; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::vector<double>& flow() { return flow_; }

  // u_0 = 0, u_i + v_j = C_ij on every basic cell.
  void potentials(const MatrixXd& cost, VectorXd& u, VectorXd& v) const {
    const auto adj = adjacency();
    u = VectorXd::Constant(m_, std::numeric_limits<double>::quiet_NaN());
    v = VectorXd::Constant(n_, std::numeric_limits<double>::quiet_NaN());
    std::vector<int> stack = {0};
    u(0) = 0.0;
    std::vector<char> seen(m_ + n_, 0);
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int s : adj[node]) {
        const Cell c = cells_[s];
        const int other = node < m_ ? m_ + c.col : c.row;
        if (seen[other]) continue;
        seen[other] = 1;
        if (node < m_) {
          v(c.col) = cost(c.row, c.col) - u(c.row);
        } else {
          u(c.row) = cost(c.row, c.col) - v(c.col);
        }
        stack.push_back(other);
      }
    }
  }

  // Basis slots on the tree path from row `p` to column `q`, ordered from
  // the row end.
  std::vector<int> path(int p, int q) const {
    const auto adj = adjacency();
    std::vector<int> parent_slot(m_ + n_, -1);
    std::vector<int> parent_node(m_ + n_, -1);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<int> queue = {p};
    seen[p] = 1;
    for (size_t head = 0; head < queue.size(); ++head) {
      const int node = queue[head];
      if (node == m_ + q) break;
      for (int s : adj[node]) {
        const Cell c = cells_[s];
        const int other = node < m_ ? m_ + c.col : c.row;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_slot[other] = s;
        parent_node[other] = node;
        queue.push_back(other);
      }
    }
    std::vector<int> out;
    for (int node = m_ + q; node != p; node = parent_node[node]) {
      if (parent_slot[node] < 0) fail(ErrorKind::kNumeric, kModule, "transport basis is not a spanning tree");
      out.push_back(parent_slot[node]);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  size_t index(Cell c) const { return static_cast<size_t>(c.row) * n_ + c.col; }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(m_ + n_);
    for (size_t s = 0; s < cells_.size(); ++s) {
      adj[cells_[s].row].push_back(static_cast<int>(s));
      adj[m_ + cells_[s].col].push_back(static_cast<int>(s));
    }
    return adj;
  }

  int m_;
  int n_;
  std::vector<int> slot_;
  std::vector<Cell> cells_;
  std::vector<double> flow_;
};

TransportPlan forced_plan(std::span<const double> a, std::span<const double> b, const MatrixXd& cost) {
  // One side has a single point: every unit of mass has only one route.
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  TransportPlan out;
  out.plan.resize(m, n);
  out.row_potential = VectorXd::Zero(m);
  out.col_potential = VectorXd::Zero(n);
  if (m == 1) {
    for (int j = 0; j < n; ++j) {
      out.plan(0, j) = b[j];
      out.col_potential(j) = cost(0, j);
    }
  } else {
    for (int i = 0; i < m; ++i) {
      out.plan(i, 0) = a[i];
      out.row_potential(i) = cost(i, 0);
    }
  }
  out.objective = (cost.array() * out.plan.array()).sum();
  out.marginal_residual = residual(out.plan, a, b);
  return out;
}

}  // namespace

TransportPlan transport_exact(std::span<const double> a, std::span<const double> b,
                              const Eigen::MatrixXd& cost, int max_iterations) {
  check_problem(a, b, cost);
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  if (m == 1 || n == 1) return forced_plan(a, b, cost);

  // North-west corner start. When a row and a column run out together
  // only the row advances, which leaves a zero-flow basic cell and keeps
  // exactly m + n - 1 basic cells.
  Basis basis(m, n);
  std::vector<double> supply(a.begin(), a.end());
  std::vector<double> demand(b.begin(), b.end());
  for (int i = 0, j = 0; i < m && j < n;) {
    const double x = std::min(supply[i], demand[j]);
    basis.add({i, j}, x);
    supply[i] -= x;
    demand[j] -= x;
    if (i == m - 1) {
      ++j;
    } else if (j == n - 1) {
      ++i;
    } else if (supply[i] <= demand[j]) {
      ++i;
    } else {
      ++j;
    }
  }

  const double tol = 1e-12 * std::max(1.0, cost.cwiseAbs().maxCoeff());
  VectorXd u, v;
  bool bland = false;
  int iter = 0;
  for (;; ++iter) {
    basis.potentials(cost, u, v);
    int p = -1, q = -1;
    double best = -tol;
    for (int i = 0; i < m && !(bland && p >= 0); ++i) {
      for (int j = 0; j < n; ++j) {
        if (basis.is_basic(i, j)) continue;
        const double r = cost(i, j) - u(i) - v(j);
        if (r < best) {
          best = bland ? -tol : r;
          p = i;
          q = j;
          if (bland) break;
        }
      }
    }
    if (p < 0) break;  // optimal
    if (iter >= max_iterations) {
      MatrixXd plan = MatrixXd::Zero(m, n);
      for (size_t s = 0; s < basis.cells().size(); ++s) {
        plan(basis.cells()[s].row, basis.cells()[s].col) = basis.flow()[s];
      }
      fail(ErrorKind::kNumeric, kModule,
           "transport simplex hit the iteration cap (" + std::to_string(max_iterations) +
               "); current objective " + csv::format_double((cost.array() * plan.array()).sum()) +
               ", most negative reduced cost " + csv::format_double(best));
    }

    // Cycle: the entering cell gains theta, then the path cells from row p
    // alternate -, +, ..., -.
    const auto path = basis.path(p, q);
    const size_t len = path.size();
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (size_t k = 0; k < len; ++k) {
      if (k % 2 != 0) continue;
      const int s = path[k];
      const double x = basis.flow()[s];
      const Cell c = basis.cells()[s];
      const bool smaller_index =
          leaving >= 0 && (c.row < basis.cells()[leaving].row ||
                           (c.row == basis.cells()[leaving].row && c.col < basis.cells()[leaving].col));
      if (x < theta || (x == theta && smaller_index)) {
        theta = x;
        leaving = s;
      }
    }
    for (size_t k = 0; k < len; ++k) {
      double& x = basis.flow()[path[k]];
      if (k % 2 == 0) {
        x = std::max(0.0, x - theta);
      } else {
        x += theta;
      }
    }
    basis.replace(leaving, {p, q}, theta);
    bland = theta == 0.0;
  }

  TransportPlan out;
  out.plan = MatrixXd::Zero(m, n);
  for (size_t s = 0; s < basis.cells().size(); ++s) {
    out.plan(basis.cells()[s].row, basis.cells()[s].col) = basis.flow()[s];
  }
  out.objective = (cost.array() * out.plan.array()).sum();
  out.row_potential = u;
  out.col_potential = v;
  out.iterations = iter;
  out.marginal_residual = residual(out.plan, a, b);
  return out;
}

double dual_objective(std::span<const double> a, std::span<const double> b, const TransportPlan& plan) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] * plan.row_potential(static_cast<Eigen::Index>(i));
  for (size_t j = 0; j < b.size(); ++j) d += b[j] * plan.col_potential(static_cast<Eigen::Index>(j));
  return d;
}

double dual_infeasibility(const Eigen::MatrixXd& cost, const TransportPlan& plan) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      worst = std::max(worst, plan.row_potential(i) + plan.col_potential(j) - cost(i, j));
    }
  }
  return worst;
}

TransportPlan transport_sinkhorn(std::span<const double> a, std::span<const double> b,
                                 const Eigen::MatrixXd& cost, double epsilon, int max_iterations,
                                 double tolerance) {
  check_problem(a, b, cost);
  if (!(epsilon > 0.0)) fail(ErrorKind::kInvalidArgument, kModule, "Sinkhorn epsilon must be positive");
  const Eigen::Index m = cost.rows();
  const Eigen::Index n = cost.cols();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  VectorXd log_a(m), log_b(n);
  for (Eigen::Index i = 0; i < m; ++i) log_a(i) = a[i] > 0.0 ? std::log(a[i]) : neg_inf;
  for (Eigen::Index j = 0; j < n; ++j) log_b(j) = b[j] > 0.0 ? std::log(b[j]) : neg_inf;

  // Potentials in cost units: P_ij = exp((f_i + g_j - C_ij) / eps). The
  // regularization starts at max|C| and halves toward `epsilon`, each stage
  // warm-starting the next; iterations count toward one shared budget.
  VectorXd f = VectorXd::Zero(m);
  VectorXd g = VectorXd::Zero(n);
  auto lse = [neg_inf](auto&& values) {
    const double mx = values.maxCoeff();
    if (mx == neg_inf) return neg_inf;
    return mx + std::log((values.array() - mx).exp().sum());
  };
  MatrixXd plan(m, n);
  auto build_plan = [&](double eps) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double e = (f(i) + g(j) - cost(i, j)) / eps;
        plan(i, j) = std::isfinite(e) ? std::exp(e) : 0.0;
      }
    }
  };
  auto row_residual = [&] {
    double r = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) r = std::max(r, std::abs(plan.row(i).sum() - a[i]));
    return r;
  };

  std::vector<double> schedule{epsilon};
  for (double e = 2.0 * epsilon; e < cost.cwiseAbs().maxCoeff(); e *= 2.0) schedule.push_back(e);
  std::reverse(schedule.begin(), schedule.end());

  double res = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iter = 0;
  for (size_t stage = 0; stage < schedule.size() && iter < max_iterations; ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    // Intermediate stages only need a rough fit before tightening.
    const double target = last ? tolerance : std::max(tolerance, 1e-4);
    for (int local = 0; iter < max_iterations; ++iter, ++local) {
      for (Eigen::Index i = 0; i < m; ++i) {
        f(i) = log_a(i) == neg_inf
                   ? neg_inf
                   : eps * (log_a(i) - lse(((g - cost.row(i).transpose()) / eps).eval()));
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        g(j) = log_b(j) == neg_inf ? neg_inf
                                   : eps * (log_b(j) - lse(((f - cost.col(j)) / eps).eval()));
      }
      // Columns are exact after the g update; test the rows.
      if (local % 10 == 9 || iter + 1 == max_iterations) {
        build_plan(eps);
        res = row_residual();
        if (res <= target) {
          converged = last;
          ++iter;
          break;
        }
      }
    }
  }
  if (!converged) {
    fail(ErrorKind::kNumeric, kModule,
         "Sinkhorn did not converge in " + std::to_string(max_iterations) +
             " iterations; last marginal residual " + csv::format_double(res));
  }

  // Rounding onto the transport polytope: scale rows down, scale columns
  // down, then add the rank-one correction of the remaining deficits.
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = plan.row(i).sum();
    if (r > a[i] && r > 0.0) plan.row(i) *= a[i] / r;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = plan.col(j).sum();
    if (c > b[j] && c > 0.0) plan.col(j) *= b[j] / c;
  }
  VectorXd err_r(m), err_c(n);
  for (Eigen::Index i = 0; i < m; ++i) err_r(i) = std::max(0.0, a[i] - plan.row(i).sum());
  for (Eigen::Index j = 0; j < n; ++j) err_c(j) = std::max(0.0, b[j] - plan.col(j).sum());
  const double total = err_r.sum();
  if (total > 0.0) plan += err_r * err_c.transpose() / total;

  TransportPlan out;
  out.plan = std::move(plan);
  out.objective = (cost.array() * out.plan.array()).sum();
  out.iterations = iter;
  out.marginal_residual = residual(out.plan, a, b);
  return out;
}

}  // namespace causex
