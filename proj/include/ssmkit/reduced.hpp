#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssmkit/ssm.hpp"

namespace ssmkit {

// Shared adaptive-integrator tolerances (reduced and full trajectories).
// Tight enough that trajectory phase error stays well below the 1e-8
// invariance floor demanded of exactly invariant (linear) manifolds.
inline constexpr double kOdeRelTol = 1e-10;
inline constexpr double kOdeAbsTol = 1e-12;

// Autonomous polar form of the reduced dynamics on an underdamped master
// pair: rho_dot(rho) = sum_k rho_dot_coeffs[k] rho^k (k = 1 is the linear
// decay rate), omega(rho) = sum_k omega_coeffs[k] rho^k (k = 0 is the
// linear frequency).
struct PolarDynamics {
  std::map<int, double> rho_dot_coeffs;
  std::map<int, double> omega_coeffs;
  std::map<std::pair<int, int>, cd> gammas;  // (a,b) -> resonant coefficient
  std::vector<std::string> warnings;

  double rho_dot(double rho) const;
  double omega(double rho) const;
};

// Extract gamma_{a,b} from row 1 of R (keys with a = b + 1 only; any other
// flagged key is theta-dependent in polar form and is excluded with a
// warning). Row 2 must carry the conjugate data.
PolarDynamics to_polar(const SSMExpansion& ssm);

// Mean over n_theta uniform angles of the Euclidean norm of the n position
// coordinates of real(T W(rho e^{i th}, rho e^{-i th})).
double amplitude(const SSMExpansion& ssm, double rho, int n_theta = 128);

// Max over theta of |position DOF| for each of the n DOFs (diagnostic).
Eigen::VectorXd amplitude_extremes(const SSMExpansion& ssm, double rho, int n_theta = 128);

struct BackbonePoint {
  double rho = 0.0;
  double omega = 0.0;
  double amplitude = 0.0;
};

struct BackboneCurve {
  std::vector<BackbonePoint> samples;
  double rho_max = 0.0;
};

// (rho, omega(rho), A(rho)) over a strictly increasing rho grid.
BackboneCurve backbone(const SSMExpansion& ssm, const std::vector<double>& rho_grid);

// Stop at t_end, or at the rho = rho_eps crossing (bisection-refined); when
// only rho_eps is given, 10x the linear decay estimate caps the search and
// exceeding it raises EventNotReached.
struct StopCondition {
  std::optional<double> t_end;
  std::optional<double> rho_eps;
};

struct ReducedTrajectory {
  std::vector<double> t;
  std::vector<double> rho;
  std::vector<double> theta;
  bool hit_event = false;
  double t_end = 0.0;
};

// Adaptive Dormand-Prince integration of the polar dynamics. Samples at the
// accepted steps, or exactly at sample_times when given (dense output).
// Throws BlowUp if rho exceeds 10 rho0.
ReducedTrajectory integrate_reduced(const PolarDynamics& pd, double rho0, double theta0,
                                    const StopCondition& stop,
                                    const std::vector<double>* sample_times = nullptr);

}  // namespace ssmkit
