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

// Sinkhorn normalization in the log domain and Hungarian rounding of soft
// permutation matrices.

#ifndef VSRCAP_SINKHORN_HPP_
#define VSRCAP_SINKHORN_HPP_

#include <Eigen/Dense>
#include <vector>

#include "vsrcap/autodiff.hpp"

namespace vsrcap {

inline constexpr double kSinkhornEps = 1e-20;

// S^0 = exp(Z); each of the K iterations applies row then column
// normalization. Throws kNonFinite, kShapeMismatch (non-square) or
// kInvalidInput (K < 1).
Eigen::MatrixXd sinkhorn(const Eigen::MatrixXd& z, int iterations);
Eigen::MatrixXd log_sinkhorn(const Eigen::MatrixXd& z, int iterations);
ad::Var sinkhorn(const ad::Var& z, int iterations);

// Row r is assigned column assignment[r]; maximizes sum P(r, assignment[r]).
std::vector<int> hungarian_assign(const Eigen::MatrixXd& p);
Eigen::MatrixXd hungarian_round(const Eigen::MatrixXd& p);
Eigen::MatrixXd permutation_matrix(const std::vector<int>& assignment);

bool is_soft_permutation(const Eigen::MatrixXd& p, double tol = 1e-6);
bool is_hard_permutation(const Eigen::MatrixXd& p);

}  // namespace vsrcap

#endif  // VSRCAP_SINKHORN_HPP_
