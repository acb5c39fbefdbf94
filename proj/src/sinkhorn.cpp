/* Copyright 2026 The vsrcap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vsrcap/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

void check_input(Eigen::Index rows, Eigen::Index cols, int iterations) {
  if (rows != cols || rows == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "sinkhorn needs a non-empty square matrix, got " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (iterations < 1) {
    throw Error(ErrorCode::kInvalidInput, "sinkhorn needs at least one iteration");
  }
}

const double kLogEps = std::log(kSinkhornEps);

}  // namespace

Eigen::MatrixXd log_sinkhorn(const Eigen::MatrixXd& z, int iterations) {
  check_input(z.rows(), z.cols(), iterations);
  if (!z.allFinite()) throw Error(ErrorCode::kNonFinite, "sinkhorn input");
  Eigen::MatrixXd s = z;
  for (int k = 0; k < iterations; ++k) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double m = s.row(i).maxCoeff();
      const double lse = m + std::log((s.row(i).array() - m).exp().sum());
      s.row(i).array() -= std::max(lse, kLogEps);
    }
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      const double m = s.col(j).maxCoeff();
      const double lse = m + std::log((s.col(j).array() - m).exp().sum());
      s.col(j).array() -= std::max(lse, kLogEps);
    }
  }
  return s;
}

Eigen::MatrixXd sinkhorn(const Eigen::MatrixXd& z, int iterations) {
  return log_sinkhorn(z, iterations).array().exp().matrix();
}

ad::Var sinkhorn(const ad::Var& z, int iterations) {
  check_input(z.rows(), z.cols(), iterations);
  if (!z.value().allFinite()) throw Error(ErrorCode::kNonFinite, "sinkhorn input");
  ad::Var s = z;
  for (int k = 0; k < iterations; ++k) {
    s = ad::log_normalize_cols(ad::log_normalize_rows(s, kLogEps), kLogEps);
  }
  return ad::exp(s);
}

// Shortest augmenting path formulation on the cost -P (potentials u, v).
std::vector<int> hungarian_assign(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "hungarian needs a square matrix");
  }
  const int n = static_cast<int>(p.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -p(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return assignment;
}

Eigen::MatrixXd permutation_matrix(const std::vector<int>& assignment) {
  const auto n = static_cast<Eigen::Index>(assignment.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) x(r, assignment[static_cast<std::size_t>(r)]) = 1.0;
  return x;
}

Eigen::MatrixXd hungarian_round(const Eigen::MatrixXd& p) {
  return permutation_matrix(hungarian_assign(p));
}

bool is_soft_permutation(const Eigen::MatrixXd& p, double tol) {
  if (p.rows() != p.cols() || (p.array() < 0.0).any()) return false;
  return ((p.rowwise().sum().array() - 1.0).abs() <= tol).all() &&
         ((p.colwise().sum().array() - 1.0).abs() <= tol).all();
}

bool is_hard_permutation(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols()) return false;
  if (((p.array() != 0.0) && (p.array() != 1.0)).any()) return false;
  return (p.rowwise().sum().array() == 1.0).all() &&
         (p.colwise().sum().array() == 1.0).all();
}

}  // namespace vsrcap
