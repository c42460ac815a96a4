#pragma once

// Independent finite-difference oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "penflow/topopt.hpp"

namespace oracle {

using penflow::Vector;

/// Central difference step used by every oracle.
inline double fd_step(double x) { return 1e-6 * (1.0 + std::abs(x)); }

/// Columnwise relative discrepancy between an analytic Jacobian and central
/// differences of `residual`, each column scaled by its own magnitude.
inline double jacobian_discrepancy(const std::function<Vector(const Vector&)>& residual, const Vector& X,
                                   const penflow::SparseMatrix& jac) {
  const Eigen::MatrixXd J = Eigen::MatrixXd(jac);
  const double global = J.cwiseAbs().maxCoeff();
  double worst = 0.0;
  Vector Xp = X, Xm = X;
  for (int j = 0; j < X.size(); ++j) {
    const double h = fd_step(X[j]);
    Xp[j] = X[j] + h;
    Xm[j] = X[j] - h;
    const Vector fd = (residual(Xp) - residual(Xm)) / (2.0 * h);
    Xp[j] = Xm[j] = X[j];
    const double scale = std::max({J.col(j).cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff(), 1e-8 * global});
    if (scale == 0.0) continue;
    worst = std::max(worst, (fd - J.col(j)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

/// Relative discrepancy |fd - grad|_inf / |grad|_inf for a scalar function.
inline double gradient_discrepancy(const std::function<double(const Vector&)>& f, const Vector& X,
                                   const Vector& grad) {
  Vector fd(X.size());
  Vector Xp = X, Xm = X;
  for (int j = 0; j < X.size(); ++j) {
    const double h = fd_step(X[j]);
    Xp[j] = X[j] + h;
    Xm[j] = X[j] - h;
    fd[j] = (f(Xp) - f(Xm)) / (2.0 * h);
    Xp[j] = Xm[j] = X[j];
  }
  const double scale = std::max(grad.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff());
  return scale == 0.0 ? 0.0 : (fd - grad).cwiseAbs().maxCoeff() / scale;
}

/// Random point with zero Dirichlet velocity and a perturbed level field that
/// stays negative on the outer boundary.
inline penflow::OptVector random_admissible_point(const penflow::SpaceLayout& layout,
                                                  const penflow::LevelFunction& level, std::mt19937_64& rng,
                                                  double perturbation = 0.02) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  penflow::OptVector X;
  X.Y = Vector(layout.velocity_size());
  for (int i = 0; i < X.Y.size(); ++i) X.Y[i] = layout.is_dirichlet(i) ? 0.0 : u(rng);
  X.P = Vector(layout.N2);
  for (int i = 0; i < X.P.size(); ++i) X.P[i] = u(rng);
  X.G = Vector(layout.N3);
  for (int i = 0; i < X.G.size(); ++i) {
    const double g = level(layout.mesh.vertices[i]);
    X.G[i] = g < 0.0 ? std::min(g + perturbation * u(rng), -1e-3) : g + perturbation * u(rng);
  }
  return X;
}

}  // namespace oracle
