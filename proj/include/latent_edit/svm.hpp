// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "latent_edit/embedding_file.hpp"

namespace latent_edit {

/// Positives carry label +1, negatives -1.
struct LabeledEmbeddingSet {
  EmbeddingMatrix positives;
  EmbeddingMatrix negatives;
  std::vector<std::string> positive_ids;
  std::vector<std::string> negative_ids;
};

struct SvmOptions {
  double reg_weight = 1.0;  // weight on the hinge sum
  double tol = 1e-6;        // KKT violation at which SMO stops
  std::size_t max_iters = 100000;
};

struct Hyperplane {
  std::vector<double> w;
  double b = 0.0;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Linear soft-margin SVM with an unregularized bias:
///
///   min_{w,b} 1/2 |w|^2 + C * sum_i max(0, 1 - y_i (w.h_i + b))
///
/// solved in the dual with SMO (second-order working-set selection over a
/// precomputed Gram matrix). The bias is then moved to the exact minimizer of
/// the hinge sum for the final w. Deterministic for identical inputs.
///
/// Throws DegenerateData when every point is identical or w collapses to zero,
/// OverlappingSets when an id appears on both sides. Hitting max_iters is not
/// an error: the result comes back with converged == false.
Hyperplane train_svm(const LabeledEmbeddingSet& data, const SvmOptions& options = {});

/// Primal objective of (w, b) on data.
double svm_objective(const LabeledEmbeddingSet& data, const std::vector<double>& w, double b,
                     double reg_weight = 1.0);

}  // namespace latent_edit
