#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ssmkit/model.hpp"
#include "ssmkit/reduced.hpp"
#include "ssmkit/ssm.hpp"

namespace ssmkit {

struct FullTrajectory {
  std::vector<double> t;
  Eigen::MatrixXd states;  // one column per sample, 2n rows
};

// Adaptive integration of xdot = A x + F(x) with dense output evaluated at
// the given increasing times (which must start at >= 0).
FullTrajectory integrate_full(const FirstOrderSystem& fos, const Eigen::VectorXd& x0,
                              const std::vector<double>& times);

struct InvarianceResult {
  int order = 0;
  double rho0 = 0.0;
  double rho_eps = 0.0;
  int n_traj = 0;
  double delta_inv = 0.0;
  std::vector<double> per_trajectory;  // dist(i) per launch angle
};

struct InvarianceOptions {
  int n_grid = 600;  // shared comparison grid, at least 500 points
  std::optional<unsigned> theta_seed;  // jitter the launch angles when set
  int threads = 0;  // 0: SSMKIT_THREADS env var, then hardware count
};

// Launch N on-manifold points at radius rho0, integrate the reduced and the
// full dynamics over the same span (until rho = rho_eps), and average the
// maximum physical-space distances, normalized by the largest launch norm.
InvarianceResult invariance_error(const FirstOrderSystem& fos, const SSMExpansion& ssm,
                                  double rho0, double rho_eps, int N,
                                  const InvarianceOptions& opt = {});

// Exact-polynomial invariance defect Lambda W + G(W) - J_W R as a PolyMap.
// Orders <= n_w must cancel (checked); only the tail orders are returned.
PolyMap invariance_residual_map(const SSMExpansion& ssm, const PolyMap& G);

// Euclidean norm of the invariance defect at each sample point.
std::vector<double> invariance_residual(const SSMExpansion& ssm, const PolyMap& G,
                                        const std::vector<Eigen::VectorXcd>& z_samples);

}  // namespace ssmkit
