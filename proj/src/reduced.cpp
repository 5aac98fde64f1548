#include "ssmkit/reduced.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>

#include "ssmkit/errors.hpp"

namespace ssmkit {

double PolarDynamics::rho_dot(double rho) const {
  double v = 0.0;
  for (const auto& [k, c] : rho_dot_coeffs) v += c * std::pow(rho, k);
  return v;
}

double PolarDynamics::omega(double rho) const {
  double v = 0.0;
  for (const auto& [k, c] : omega_coeffs) v += c * std::pow(rho, k);
  return v;
}

PolarDynamics to_polar(const SSMExpansion& ssm) {
  const ModalSystem& ms = ssm.modal;
  if (!ms.master_conjugate)
    throw RealMasterPairUnsupported(
        "polar reduced dynamics needs a complex-conjugate master pair");

  PolarDynamics pd;
  pd.rho_dot_coeffs[1] = ms.lambda1().real();
  pd.omega_coeffs[0] = ms.lambda1().imag();

  for (const auto& [ord, blk] : ssm.R.blocks) {
    if (ord < 2) continue;
    for (int c = 0; c < static_cast<int>(blk.keys.size()); ++c) {
      const int a = blk.keys[static_cast<std::size_t>(c)][0];
      const int b = blk.keys[static_cast<std::size_t>(c)][1];
      cd gamma = blk.coeffs(0, c);
      int cc = blk.find({b, a});
      cd partner = cc >= 0 ? blk.coeffs(1, cc) : cd(0, 0);
      if (std::abs(gamma) <= 1e-300 && std::abs(partner) <= 1e-300) continue;
      if (std::abs(partner - std::conj(gamma)) > 1e-12 * (1.0 + std::abs(gamma)))
        throw Error("reduced dynamics row 2 does not mirror row 1 at key (" +
                    std::to_string(b) + "," + std::to_string(a) + ")");
      if (a != b + 1) {
        pd.warnings.push_back("resonant key (" + std::to_string(a) + "," + std::to_string(b) +
                              ") is theta-dependent in polar form; excluded");
        continue;
      }
      pd.gammas[{a, b}] = gamma;
      pd.rho_dot_coeffs[a + b] += gamma.real();
      pd.omega_coeffs[a + b - 1] += gamma.imag();
    }
  }
  return pd;
}

namespace {

Eigen::VectorXcd on_manifold_state(const SSMExpansion& ssm, double rho, double theta) {
  Eigen::VectorXcd z(2);
  z << rho * std::exp(cd(0, theta)), rho * std::exp(cd(0, -theta));
  return ssm.modal.T * ssm.W.eval(z);
}

}  // namespace

double amplitude(const SSMExpansion& ssm, double rho, int n_theta) {
  if (rho < 0.0) throw ConfigError("amplitude: rho must be nonnegative");
  if (n_theta < 4) throw ConfigError("amplitude: need at least 4 angle samples");
  const int n = ssm.modal.dim / 2;
  double acc = 0.0;
  for (int k = 0; k < n_theta; ++k) {
    double theta = 2.0 * M_PI * k / n_theta;
    Eigen::VectorXcd x = on_manifold_state(ssm, rho, theta);
    double xn = x.norm();
    if (x.imag().norm() > 1e-8 * (xn > 0 ? xn : 1.0))
      throw NonNegligibleImaginaryPart(
          "reconstructed state has a non-negligible imaginary part");
    acc += x.real().head(n).norm();
  }
  return acc / n_theta;
}

Eigen::VectorXd amplitude_extremes(const SSMExpansion& ssm, double rho, int n_theta) {
  if (rho < 0.0) throw ConfigError("amplitude_extremes: rho must be nonnegative");
  const int n = ssm.modal.dim / 2;
  Eigen::VectorXd extremes = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n_theta; ++k) {
    double theta = 2.0 * M_PI * k / n_theta;
    Eigen::VectorXd pos = on_manifold_state(ssm, rho, theta).real().head(n);
    extremes = extremes.cwiseMax(pos.cwiseAbs());
  }
  return extremes;
}

BackboneCurve backbone(const SSMExpansion& ssm, const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw ConfigError("backbone: empty rho grid");
  for (std::size_t i = 1; i < rho_grid.size(); ++i)
    if (!(rho_grid[i] > rho_grid[i - 1]))
      throw ConfigError("backbone: rho grid must be strictly increasing");
  PolarDynamics pd = to_polar(ssm);
  BackboneCurve curve;
  curve.rho_max = rho_grid.back();
  curve.samples.reserve(rho_grid.size());
  for (double rho : rho_grid)
    curve.samples.push_back({rho, pd.omega(rho), amplitude(ssm, rho)});
  return curve;
}

ReducedTrajectory integrate_reduced(const PolarDynamics& pd, double rho0, double theta0,
                                    const StopCondition& stop,
                                    const std::vector<double>* sample_times) {
  if (!(rho0 > 0.0)) throw ConfigError("integrate_reduced: rho0 must be positive");
  if (!stop.t_end && !stop.rho_eps)
    throw ConfigError("integrate_reduced: need a stop condition");
  if (stop.rho_eps && !(*stop.rho_eps > 0.0 && *stop.rho_eps < rho0))
    throw ConfigError("integrate_reduced: rho_eps must lie in (0, rho0)");

  double cap;
  if (stop.t_end) {
    cap = *stop.t_end;
  } else {
    double decay = std::abs(pd.rho_dot_coeffs.count(1) ? pd.rho_dot_coeffs.at(1) : 0.0);
    if (decay <= 0.0) throw ConfigError("integrate_reduced: no linear decay to stop on");
    cap = 10.0 * std::log(rho0 / *stop.rho_eps) / decay;
  }
  if (!(cap > 0.0)) throw ConfigError("integrate_reduced: stop time must be positive");
  if (sample_times) {
    for (std::size_t i = 0; i < sample_times->size(); ++i) {
      if (!std::isfinite((*sample_times)[i]))
        throw ConfigError("integrate_reduced: sample times must be finite");
      if (i > 0 && (*sample_times)[i] < (*sample_times)[i - 1])
        throw ConfigError("integrate_reduced: sample times must be non-decreasing");
    }
    if (stop.t_end && !sample_times->empty() &&
        sample_times->back() > cap + 1e-12 * std::max(1.0, cap))
      throw ConfigError("integrate_reduced: sample times extend past t_end");
  }

  using state = std::array<double, 2>;
  auto rhs = [&pd](const state& x, state& dxdt, double) {
    dxdt[0] = pd.rho_dot(x[0]);
    dxdt[1] = pd.omega(x[0]);
  };

  namespace ode = boost::numeric::odeint;
  auto stepper =
      ode::make_dense_output(kOdeAbsTol, kOdeRelTol, ode::runge_kutta_dopri5<state>());
  state x0 = {rho0, theta0};
  stepper.initialize(x0, 0.0, std::min(1e-2, cap / 100.0));

  ReducedTrajectory traj;
  std::size_t next_sample = 0;
  // tolerance must scale with t: a grid endpoint equal to cap can round a few
  // ulps above it
  auto emit_through = [&](double t_hi) {
    if (!sample_times) return;
    const double slack = 1e-12 * std::max(1.0, std::abs(t_hi));
    state xs;
    while (next_sample < sample_times->size() &&
           (*sample_times)[next_sample] <= t_hi + slack) {
      double ts = std::min((*sample_times)[next_sample], t_hi);
      stepper.calc_state(ts, xs);
      traj.t.push_back(ts);
      traj.rho.push_back(xs[0]);
      traj.theta.push_back(xs[1]);
      ++next_sample;
    }
  };

  if (!sample_times) {
    traj.t.push_back(0.0);
    traj.rho.push_back(rho0);
    traj.theta.push_back(theta0);
  } else {
    // allow a leading t = 0 sample before any step is taken
    while (next_sample < sample_times->size() && (*sample_times)[next_sample] <= 0.0) {
      traj.t.push_back((*sample_times)[next_sample]);
      traj.rho.push_back(rho0);
      traj.theta.push_back(theta0);
      ++next_sample;
    }
  }

  traj.t_end = cap;
  while (stepper.current_time() < cap) {
    double t_prev = stepper.current_time();
    stepper.do_step(rhs);
    double t_curr = stepper.current_time();
    const state& xc = stepper.current_state();
    if (!std::isfinite(xc[0]) || xc[0] > 10.0 * rho0)
      throw BlowUp("integrate_reduced: rho left the validity region at t = " +
                   std::to_string(t_curr));

    if (stop.rho_eps && xc[0] <= *stop.rho_eps) {
      // bracket the crossing and bisect to 1e-12 in time
      double lo = t_prev, hi = t_curr;
      state xm;
      while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, xm);
        if (xm[0] <= *stop.rho_eps) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      traj.hit_event = true;
      traj.t_end = hi;
      emit_through(hi);
      if (!sample_times) {
        stepper.calc_state(hi, xm);
        traj.t.push_back(hi);
        traj.rho.push_back(xm[0]);
        traj.theta.push_back(xm[1]);
      }
      return traj;
    }

    if (t_curr >= cap && stop.t_end) {
      state xe;
      stepper.calc_state(cap, xe);
      emit_through(cap);
      if (sample_times && next_sample != sample_times->size())
        throw Error("integrate_reduced: dense resampling dropped a requested time");
      if (!sample_times) {
        traj.t.push_back(cap);
        traj.rho.push_back(xe[0]);
        traj.theta.push_back(xe[1]);
      }
      traj.t_end = cap;
      return traj;
    }

    emit_through(std::min(t_curr, cap));
    if (!sample_times && t_curr < cap) {
      traj.t.push_back(t_curr);
      traj.rho.push_back(xc[0]);
      traj.theta.push_back(xc[1]);
    }
  }

  if (stop.rho_eps)
    throw EventNotReached("integrate_reduced: rho did not reach " +
                          std::to_string(*stop.rho_eps) + " within t = " + std::to_string(cap));
  return traj;
}

}  // namespace ssmkit
