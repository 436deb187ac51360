// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "qp_oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace latent_edit::testing {
namespace {

double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double step = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) step = std::min(step, -x(i) / dx(i));
  }
  return step;
}

double primal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
              double c) {
  const Eigen::VectorXd f = x * w;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) hinge += std::max(0.0, 1.0 - y(i) * (f(i) + b));
  return 0.5 * w.squaredNorm() + c * hinge;
}

}  // namespace

QpSolution solve_svm_qp(const LabeledEmbeddingSet& data, double c) {
  const auto np = static_cast<Eigen::Index>(data.positives.rows());
  const auto nn = static_cast<Eigen::Index>(data.negatives.rows());
  const auto d = static_cast<Eigen::Index>(data.positives.dim());
  const Eigen::Index n = np + nn;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = i < np ? data.positives.row(static_cast<std::size_t>(i))
                            : data.negatives.row(static_cast<std::size_t>(i - np));
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
    y(i) = i < np ? 1.0 : -1.0;
  }
  const Eigen::MatrixXd q = (y.asDiagonal() * (x * x.transpose())) * y.asDiagonal();
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(n);

  // a: multipliers, s = C - a, z and v: duals of a >= 0 and s >= 0.
  Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 0.5 * c);
  Eigen::VectorXd s = Eigen::VectorXd::Constant(n, 0.5 * c);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  double lambda = 0.0;

  QpSolution out;
  int it = 0;
  for (; it < 200; ++it) {
    const Eigen::VectorXd rd = q * a - e + lambda * y - z + v;
    const double rp = y.dot(a);
    const double gap = (a.dot(z) + s.dot(v)) / static_cast<double>(2 * n);
    if (rd.lpNorm<Eigen::Infinity>() < 1e-11 && std::abs(rp) < 1e-11 && gap < 1e-13) break;

    const double mu = 0.1 * gap;
    const Eigen::VectorXd diag = z.cwiseQuotient(a) + v.cwiseQuotient(s);
    Eigen::MatrixXd m = q;
    m.diagonal() += diag;
    const Eigen::VectorXd rhs = -rd + (mu - (a.cwiseProduct(z)).array()).matrix().cwiseQuotient(a) -
                                (mu - (s.cwiseProduct(v)).array()).matrix().cwiseQuotient(s);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    const Eigen::VectorXd m_rhs = ldlt.solve(rhs);
    const Eigen::VectorXd m_y = ldlt.solve(y);
    const double dlambda = (y.dot(m_rhs) + rp) / y.dot(m_y);
    const Eigen::VectorXd da = m_rhs - dlambda * m_y;
    const Eigen::VectorXd ds = -da;
    const Eigen::VectorXd dz =
        ((mu - (a.cwiseProduct(z)).array()).matrix() - z.cwiseProduct(da)).cwiseQuotient(a);
    const Eigen::VectorXd dv =
        ((mu - (s.cwiseProduct(v)).array()).matrix() - v.cwiseProduct(ds)).cwiseQuotient(s);

    const double step = 0.995 * std::min({max_step(a, da), max_step(s, ds), max_step(z, dz),
                                          max_step(v, dv), 1.0 / 0.995});
    a += step * da;
    s = (Eigen::VectorXd::Constant(n, c) - a).cwiseMax(1e-300);
    z += step * dz;
    v += step * dv;
    lambda += step * dlambda;
  }
  out.iterations = it;
  out.dual_gap = (a.dot(z) + s.dot(v));

  const Eigen::VectorXd w = x.transpose() * a.cwiseProduct(y);
  // The primal is convex piecewise linear in b for fixed w, so some
  // breakpoint y_i - f_i attains the minimum.
  const Eigen::VectorXd f = x * w;
  double best_b = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = y(i) - f(i);
    const double p = primal(x, y, w, b, c);
    if (p < best) {
      best = p;
      best_b = b;
    }
  }
  out.w.assign(w.data(), w.data() + w.size());
  out.b = best_b;
  out.objective = best;
  return out;
}

}  // namespace latent_edit::testing
