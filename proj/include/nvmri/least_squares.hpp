#pragma once

// Levenberg-Marquardt with Marquardt diagonal scaling and central-difference
// Jacobians. Small problems only (a handful of nonlinear parameters).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace nvmri {

struct LmOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd parameters;
  double cost = std::numeric_limits<double>::infinity();  // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd jacobian;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central-difference Jacobian; `scale` sets the per-parameter step size.
inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& scale, Eigen::Index m) {
  Eigen::MatrixXd jac(m, x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(std::abs(x(j)), scale(j));
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = f(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = f(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

inline LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd x,
                                    const Eigen::VectorXd& scale, const LmOptions& opt = {}) {
  LmResult res;
  Eigen::VectorXd r = f(x);
  double cost = 0.5 * r.squaredNorm();
  double lambda = opt.initial_damping;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd jac = numeric_jacobian(f, x, scale, r.size());
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-30);

    bool improved = false;
    for (int inner = 0; inner < 30; ++inner) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd xn = x + step;
      const Eigen::VectorXd rn = f(xn);
      const double cn = 0.5 * rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        const double rel = (cost - cn) / std::max(cost, 1e-300);
        const double step_rel = step.norm() / std::max(x.norm(), 1e-300);
        x = xn;
        r = rn;
        cost = cn;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (rel < opt.relative_tolerance || step_rel < opt.step_tolerance) {
          res.converged = true;
        }
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) break;
    }
    if (!improved) {
      // No descent direction left: at a (local) minimum to working precision.
      res.converged = true;
    }
    if (res.converged) break;
  }
  res.parameters = x;
  res.cost = cost;
  res.jacobian = numeric_jacobian(f, x, scale, r.size());
  return res;
}

}  // namespace nvmri
