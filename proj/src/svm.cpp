// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/svm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "latent_edit/error.hpp"

namespace latent_edit {
namespace {

constexpr double kTau = 1e-12;

struct Problem {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;
};

Problem stack(const LabeledEmbeddingSet& data) {
  const auto np = static_cast<Eigen::Index>(data.positives.rows());
  const auto nn = static_cast<Eigen::Index>(data.negatives.rows());
  const auto d = static_cast<Eigen::Index>(data.positives.dim());
  Problem p{Eigen::MatrixXd(np + nn, d), Eigen::VectorXd(np + nn)};
  for (Eigen::Index i = 0; i < np; ++i) {
    const auto r = data.positives.row(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < d; ++j) p.x(i, j) = r[static_cast<std::size_t>(j)];
    p.y(i) = 1.0;
  }
  for (Eigen::Index i = 0; i < nn; ++i) {
    const auto r = data.negatives.row(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < d; ++j) p.x(np + i, j) = r[static_cast<std::size_t>(j)];
    p.y(np + i) = -1.0;
  }
  return p;
}

void validate(const LabeledEmbeddingSet& data, const SvmOptions& options) {
  if (data.positives.rows() == 0 || data.negatives.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "both classes need at least one embedding");
  }
  if (data.positives.dim() != data.negatives.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "positive and negative embeddings differ in dimension");
  }
  if (!(options.reg_weight > 0.0) || !(options.tol > 0.0) || options.max_iters == 0) {
    throw Error(ErrorCode::InvalidArgument, "reg_weight, tol and max_iters must be positive");
  }
  std::unordered_set<std::string_view> pos(data.positive_ids.begin(), data.positive_ids.end());
  for (const auto& id : data.negative_ids) {
    if (pos.contains(id)) {
      throw Error(ErrorCode::OverlappingSets, "id '" + id + "' is both positive and negative");
    }
  }
}

// Hinge sum h(b) = sum max(0, 1 - y_i (f_i + b)) has breakpoints y_i - f_i and
// slope -P + #{breakpoints below b}, so its minimizers are exactly the interval
// between the P-th and (P+1)-th smallest breakpoints.
std::pair<double, double> optimal_bias_interval(const Eigen::VectorXd& f, const Eigen::VectorXd& y,
                                                std::size_t positives) {
  std::vector<double> breaks(static_cast<std::size_t>(f.size()));
  for (Eigen::Index i = 0; i < f.size(); ++i) breaks[static_cast<std::size_t>(i)] = y(i) - f(i);
  std::sort(breaks.begin(), breaks.end());
  return {breaks[positives - 1], breaks[positives]};
}

}  // namespace

double svm_objective(const LabeledEmbeddingSet& data, const std::vector<double>& w, double b,
                     double reg_weight) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double hinge = 0.0;
  const auto add = [&](const EmbeddingMatrix& m, double label) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      double f = b;
      for (std::size_t j = 0; j < r.size(); ++j) f += w[j] * static_cast<double>(r[j]);
      hinge += std::max(0.0, 1.0 - label * f);
    }
  };
  add(data.positives, 1.0);
  add(data.negatives, -1.0);
  return 0.5 * reg + reg_weight * hinge;
}

Hyperplane train_svm(const LabeledEmbeddingSet& data, const SvmOptions& options) {
  validate(data, options);
  const Problem p = stack(data);
  const Eigen::Index n = p.x.rows();
  const double c = options.reg_weight;

  bool all_same = true;
  for (Eigen::Index i = 1; i < n && all_same; ++i) all_same = p.x.row(i) == p.x.row(0);
  if (all_same) throw Error(ErrorCode::DegenerateData, "all training points are identical");

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(p.x);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  const auto& y = p.y;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q alpha - e
  const auto is_upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  const auto is_lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  Hyperplane out;
  std::size_t iter = 0;
  for (; iter < options.max_iters; ++iter) {
    // Maximal violating pair with second-order selection of j.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y(t) > 0 ? !is_upper(t) : !is_lower(t)) {
        if (-y(t) * grad(t) >= gmax) {
          gmax = -y(t) * grad(t);
          i = t;
        }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y(t) > 0 ? is_lower(t) : is_upper(t)) continue;
      const double yg = y(t) * grad(t);
      gmax2 = std::max(gmax2, yg);
      if (i < 0) continue;
      const double diff = gmax + yg;
      if (diff > 0.0) {
        double quad = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (quad <= 0.0) quad = kTau;
        const double gain = -(diff * diff) / quad;
        if (gain <= best) {
          best = gain;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < options.tol) {
      out.converged = true;
      break;
    }

    const double ai_old = alpha(i);
    const double aj_old = alpha(j);
    const double qij = y(i) * y(j) * gram(i, j);
    if (y(i) != y(j)) {
      double quad = gram(i, i) + gram(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    const double dai = alpha(i) - ai_old;
    const double daj = alpha(j) - aj_old;
    grad += (y(i) * dai) * y.cwiseProduct(gram.col(i)) + (y(j) * daj) * y.cwiseProduct(gram.col(j));
  }
  out.iterations = iter;

  // Bias from the KKT conditions: average over free multipliers, else the
  // midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (is_upper(t)) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);

  const Eigen::VectorXd w = p.x.transpose() * alpha.cwiseProduct(y);
  if (w.squaredNorm() == 0.0) {
    throw Error(ErrorCode::DegenerateData, "classes are not distinguishable (zero normal vector)");
  }
  const Eigen::VectorXd f = p.x * w;
  const auto [lo, hi] = optimal_bias_interval(f, y, data.positives.rows());
  out.b = std::isfinite(rho) ? std::clamp(-rho, lo, hi) : 0.5 * (lo + hi);
  out.w.assign(w.data(), w.data() + w.size());
  out.objective = svm_objective(data, out.w, out.b, c);
  return out;
}

}  // namespace latent_edit
