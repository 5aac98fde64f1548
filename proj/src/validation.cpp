#include "ssmkit/validation.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <random>
#include <thread>

#include "ssmkit/errors.hpp"

namespace ssmkit {

namespace {

// flat real-arithmetic form of A x + F(x) for the integrator hot loop
class CompiledForce {
 public:
  CompiledForce(const Eigen::MatrixXd& A, const PolyMap& F) : A_(A) {
    const int dim = static_cast<int>(A.rows());
    for (const auto& [order, blk] : F.blocks) {
      for (int c = 0; c < static_cast<int>(blk.keys.size()); ++c) {
        if (blk.coeffs.col(c).imag().cwiseAbs().maxCoeff() >
            1e-12 * (1.0 + blk.coeffs.col(c).norm()))
          throw ConfigError("integrate_full: nonlinearity must have real coefficients");
        Term term;
        const Key& k = blk.keys[static_cast<std::size_t>(c)];
        for (int v = 0; v < static_cast<int>(k.size()); ++v)
          if (k[static_cast<std::size_t>(v)] > 0)
            term.factors.push_back({v, k[static_cast<std::size_t>(v)]});
        term.col = blk.coeffs.col(c).real();
        if (term.col.cwiseAbs().maxCoeff() > 0.0 && static_cast<int>(k.size()) == dim)
          terms_.push_back(std::move(term));
      }
    }
  }

  void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double) const {
    eval(x.data(), dxdt.data());
  }

  void rhs(const Eigen::VectorXd& x, Eigen::VectorXd& dxdt) const {
    eval(x.data(), dxdt.data());
  }

  // J = A + dF/dx by per-factor product differentiation
  void jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
    J = A_;
    for (const Term& term : terms_) {
      for (std::size_t f = 0; f < term.factors.size(); ++f) {
        const int v = term.factors[f].first;
        double part = term.factors[f].second;
        for (std::size_t g = 0; g < term.factors.size(); ++g) {
          const auto& [u, eu] = term.factors[g];
          const int p = (g == f) ? eu - 1 : eu;
          for (int r = 0; r < p; ++r) part *= x[u];
        }
        if (part != 0.0) J.col(v) += part * term.col;
      }
    }
  }

  // cheap upper bound on |lambda|_max of the linear part
  double gershgorin_bound() const {
    double bound = 0.0;
    for (Eigen::Index i = 0; i < A_.rows(); ++i)
      bound = std::max(bound, A_.row(i).cwiseAbs().sum());
    return bound;
  }

  Eigen::Index dim() const { return A_.rows(); }

 private:
  void eval(const double* x, double* dxdt) const {
    Eigen::Map<const Eigen::VectorXd> xm(x, A_.rows());
    Eigen::Map<Eigen::VectorXd> dm(dxdt, A_.rows());
    dm.noalias() = A_ * xm;
    for (const Term& term : terms_) {
      double mono = 1.0;
      for (const auto& [v, e] : term.factors)
        for (int r = 0; r < e; ++r) mono *= x[v];
      dm.noalias() += mono * term.col;
    }
  }

  struct Term {
    std::vector<std::pair<int, int>> factors;
    Eigen::VectorXd col;
  };
  Eigen::MatrixXd A_;
  std::vector<Term> terms_;
};

// cheap-to-copy view: the explicit stepper takes its system by value each step
struct ForceRef {
  const CompiledForce* f;
  void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double t) const {
    (*f)(x, dxdt, t);
  }
};

// beyond this many projected stability-capped explicit steps the implicit
// stepper is the cheaper (and only timely) choice
constexpr double kStiffSwitchSteps = 2e4;

// L-stable 4(3) Rosenbrock pair with a cubic continuous extension and
// predictive step control (classic fourth-order coefficients for autonomous
// systems), run on the analytic Jacobian of the compiled force. Mirrors the
// explicit dense-output stepper's interface so the sampling loop is shared.
class StiffStepper {
 public:
  StiffStepper(double abs_tol, double rel_tol, Eigen::Index n)
      : atol_(abs_tol), rtol_(rel_tol), n_(n) {
    x_.setZero(n);
    x_old_.setZero(n);
    cont3_.setZero(n);
    cont4_.setZero(n);
  }

  void initialize(const Eigen::VectorXd& x0, double t0, double dt0) {
    x_ = x0;
    x_old_ = x0;
    t_ = t0;
    t_old_ = t0;
    dt_ = dt0;
  }

  void do_step(const CompiledForce& f) {
    x_old_ = x_;
    t_old_ = t_;
    for (;;) {
      if (!(dt_ > 0.0) || dt_ < 1e-14 * std::max(1.0, std::abs(t_)))
        throw StepFailure("integrate_full: adaptive step collapsed at t = " +
                          std::to_string(t_));
      if (try_step(f)) return;
    }
  }

  double current_time() const { return t_; }
  double current_time_step() const { return t_ - t_old_; }
  const Eigen::VectorXd& current_state() const { return x_; }

  void calc_state(double t, Eigen::VectorXd& out) const {
    const double dt = t_ - t_old_;
    const double s = (t - t_old_) / dt;
    const double s1 = 1.0 - s;
    out = s1 * x_old_ + s * (x_ + s1 * (cont3_ + s * cont4_));
  }

 private:
  bool try_step(const CompiledForce& f) {
    const double dt = dt_;
    Eigen::MatrixXd W;
    f.jacobian(x_old_, W);
    W *= -1.0;
    W.diagonal().array() += 1.0 / (kGamma * dt);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(W);

    Eigen::VectorXd dxdt(n_), xtmp(n_);
    f.rhs(x_old_, dxdt);
    Eigen::VectorXd g1 = lu.solve(dxdt);

    xtmp = x_old_ + kA21 * g1;
    f.rhs(xtmp, dxdt);
    Eigen::VectorXd g2 = lu.solve((dxdt + (kC21 / dt) * g1).eval());

    xtmp = x_old_ + kA31 * g1 + kA32 * g2;
    f.rhs(xtmp, dxdt);
    Eigen::VectorXd g3 = lu.solve((dxdt + (kC31 * g1 + kC32 * g2) / dt).eval());

    xtmp = x_old_ + kA41 * g1 + kA42 * g2 + kA43 * g3;
    f.rhs(xtmp, dxdt);
    Eigen::VectorXd g4 = lu.solve((dxdt + (kC41 * g1 + kC42 * g2 + kC43 * g3) / dt).eval());

    xtmp = x_old_ + kA51 * g1 + kA52 * g2 + kA53 * g3 + kA54 * g4;
    f.rhs(xtmp, dxdt);
    Eigen::VectorXd g5 =
        lu.solve((dxdt + (kC51 * g1 + kC52 * g2 + kC53 * g3 + kC54 * g4) / dt).eval());

    xtmp += g5;
    f.rhs(xtmp, dxdt);
    Eigen::VectorXd xerr = lu.solve(
        (dxdt + (kC61 * g1 + kC62 * g2 + kC63 * g3 + kC64 * g4 + kC65 * g5) / dt).eval());
    Eigen::VectorXd xout = xtmp + xerr;

    double err = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double sk = atol_ + rtol_ * std::max(std::abs(x_old_[i]), std::abs(xout[i]));
      err += (xerr[i] / sk) * (xerr[i] / sk);
    }
    err = std::sqrt(err / static_cast<double>(n_));
    if (!std::isfinite(err)) err = 1e10;

    constexpr double kSafe = 0.9, kFacMax = 5.0, kFacMin = 1.0 / 6.0;
    double fac = std::max(kFacMin, std::min(kFacMax, std::pow(err, 0.25) / kSafe));
    double dt_new = dt / fac;
    if (err <= 1.0) {
      if (first_step_) {
        first_step_ = false;
      } else {
        double fac_pred = (dt_old_ / dt) * std::pow(err * err / err_old_, 0.25) / kSafe;
        fac_pred = std::max(kFacMin, std::min(kFacMax, fac_pred));
        fac = std::max(fac, fac_pred);
        dt_new = dt / fac;
      }
      dt_old_ = dt;
      err_old_ = std::max(0.01, err);
      if (last_rejected_) dt_new = std::min(dt_new, dt);
      last_rejected_ = false;

      cont3_ = kD21 * g1 + kD22 * g2 + kD23 * g3 + kD24 * g4 + kD25 * g5;
      cont4_ = kD31 * g1 + kD32 * g2 + kD33 * g3 + kD34 * g4 + kD35 * g5;
      x_ = xout;
      t_ = t_old_ + dt;
      dt_ = dt_new;
      return true;
    }
    dt_ = dt_new;
    last_rejected_ = true;
    return false;
  }

  static constexpr double kGamma = 0.25;
  static constexpr double kA21 = 0.1544000000000000e+01;
  static constexpr double kA31 = 0.9466785280815826e+00, kA32 = 0.2557011698983284e+00;
  static constexpr double kA41 = 0.3314825187068521e+01, kA42 = 0.2896124015972201e+01,
                          kA43 = 0.9986419139977817e+00;
  static constexpr double kA51 = 0.1221224509226641e+01, kA52 = 0.6019134481288629e+01,
                          kA53 = 0.1253708332932087e+02, kA54 = -0.6878860361058950e+00;
  static constexpr double kC21 = -0.5668800000000000e+01;
  static constexpr double kC31 = -0.2430093356833875e+01, kC32 = -0.2063599157091915e+00;
  static constexpr double kC41 = -0.1073529058151375e+00, kC42 = -0.9594562251023355e+01,
                          kC43 = -0.2047028614809616e+02;
  static constexpr double kC51 = 0.7496443313967647e+01, kC52 = -0.1024680431464352e+02,
                          kC53 = -0.3399990352819905e+02, kC54 = 0.1170890893206160e+02;
  static constexpr double kC61 = 0.8083246795921522e+01, kC62 = -0.7981132988064893e+01,
                          kC63 = -0.3152159432874371e+02, kC64 = 0.1631930543123136e+02,
                          kC65 = -0.6058818238834054e+01;
  static constexpr double kD21 = 0.1012623508344586e+02, kD22 = -0.7487995877610167e+01,
                          kD23 = -0.3480091861555747e+02, kD24 = -0.7992771707568823e+01,
                          kD25 = 0.1025137723295662e+01;
  static constexpr double kD31 = -0.6762803392801253e+00, kD32 = 0.6087714651680015e+01,
                          kD33 = 0.1643084320892478e+02, kD34 = 0.2476722511418386e+02,
                          kD35 = -0.6594389125716872e+01;

  double atol_;
  double rtol_;
  Eigen::Index n_;
  Eigen::VectorXd x_, x_old_, cont3_, cont4_;
  double t_ = 0.0, t_old_ = 0.0, dt_ = 0.0;
  bool first_step_ = true;
  bool last_rejected_ = false;
  double err_old_ = 0.01, dt_old_ = 0.0;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SSMKIT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

FullTrajectory integrate_full(const FirstOrderSystem& fos, const Eigen::VectorXd& x0,
                              const std::vector<double>& times) {
  if (x0.size() != fos.dim) throw DimensionMismatch("integrate_full: state size != 2n");
  if (!x0.allFinite()) throw ConfigError("integrate_full: initial state must be finite");
  if (times.empty()) throw ConfigError("integrate_full: no sample times");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw ConfigError("integrate_full: times must be strictly increasing");
  if (times.front() < 0.0) throw ConfigError("integrate_full: times must start at >= 0");

  const double t_final = times.back();
  CompiledForce rhs(fos.A, fos.F);

  FullTrajectory traj;
  traj.t = times;
  traj.states.resize(fos.dim, static_cast<Eigen::Index>(times.size()));

  using state = std::vector<double>;
  state x(static_cast<std::size_t>(fos.dim));
  Eigen::Map<Eigen::VectorXd>(x.data(), fos.dim) = x0;

  std::size_t next = 0;
  while (next < times.size() && times[next] <= 0.0) {
    traj.states.col(static_cast<Eigen::Index>(next)) = x0;
    ++next;
  }
  if (next == times.size()) return traj;

  namespace ode = boost::numeric::odeint;
  auto drive = [&](auto& stepper, auto&& system, auto& xs) {
    while (next < times.size()) {
      stepper.do_step(system);
      const double t_curr = stepper.current_time();
      const double dt = stepper.current_time_step();
      for (double v : stepper.current_state())
        if (!std::isfinite(v))
          throw StepFailure("integrate_full: state became non-finite at t = " +
                            std::to_string(t_curr));
      if (dt < 1e-13 * std::max(1.0, std::abs(t_curr)))
        throw StepFailure("integrate_full: adaptive step collapsed at t = " +
                          std::to_string(t_curr));
      while (next < times.size() &&
             times[next] <= t_curr + 1e-12 * std::max(1.0, std::abs(t_curr))) {
        stepper.calc_state(std::min(times[next], t_curr), xs);
        traj.states.col(static_cast<Eigen::Index>(next)) =
            Eigen::Map<const Eigen::VectorXd>(&xs[0], fos.dim);
        ++next;
      }
    }
  };

  // absolute tolerance in the trajectory's own amplitude scale, so states far
  // from unit magnitude are not held to a sub-roundoff component floor
  const double abs_tol = kOdeAbsTol * std::max(1.0, x0.lpNorm<Eigen::Infinity>());
  const double dt0 = std::min(1e-2, t_final / 100.0);
  if (rhs.gershgorin_bound() * t_final / 3.0 <= kStiffSwitchSteps) {
    auto stepper =
        ode::make_dense_output(abs_tol, kOdeRelTol, ode::runge_kutta_dopri5<state>());
    stepper.initialize(x, 0.0, dt0);
    state xs(static_cast<std::size_t>(fos.dim));
    drive(stepper, ForceRef{&rhs}, xs);
  } else {
    // stability would cap the explicit stepper far below the accuracy scale;
    // switch to the L-stable implicit pair at the same tolerances
    StiffStepper stepper(abs_tol, kOdeRelTol, fos.dim);
    stepper.initialize(x0, 0.0, dt0);
    Eigen::VectorXd xs(fos.dim);
    drive(stepper, rhs, xs);
  }
  return traj;
}

InvarianceResult invariance_error(const FirstOrderSystem& fos, const SSMExpansion& ssm,
                                  double rho0, double rho_eps, int N,
                                  const InvarianceOptions& opt) {
  if (!(rho_eps > 0.0 && rho_eps < rho0))
    throw ConfigError("invariance_error: need 0 < rho_eps < rho0");
  if (N < 1) throw ConfigError("invariance_error: need at least one trajectory");
  if (opt.n_grid < 500) throw ConfigError("invariance_error: comparison grid below 500 points");

  const ModalSystem& ms = ssm.modal;
  PolarDynamics pd = to_polar(ssm);

  std::vector<double> thetas(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) thetas[static_cast<std::size_t>(k)] = 2.0 * M_PI * k / N;
  if (opt.theta_seed) {
    std::mt19937 gen(*opt.theta_seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < N; ++k)
      thetas[static_cast<std::size_t>(k)] = 2.0 * M_PI * (k + u(gen)) / N;
  }

  std::vector<double> dist(static_cast<std::size_t>(N), 0.0);
  std::vector<double> launch_norm(static_cast<std::size_t>(N), 0.0);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(N));

  auto run_one = [&](int k) {
    const double theta0 = thetas[static_cast<std::size_t>(k)];
    Eigen::VectorXcd z0(2);
    z0 << rho0 * std::exp(cd(0, theta0)), rho0 * std::exp(cd(0, -theta0));
    Eigen::VectorXcd x0c = ms.T * ssm.W.eval(z0);
    if (x0c.imag().norm() > 1e-8 * std::max(1e-300, x0c.norm()))
      throw NonNegligibleImaginaryPart("invariance_error: launch state is not real");
    Eigen::VectorXd x0= x0c.real();
    launch_norm[static_cast<std::size_t>(k)] = x0.norm();

    StopCondition until_eps;
    until_eps.rho_eps = rho_eps;
    ReducedTrajectory probe = integrate_reduced(pd, rho0, theta0, until_eps);
    const double t_span = probe.t_end;

    std::vector<double> grid(static_cast<std::size_t>(opt.n_grid));
    for (int j = 0; j < opt.n_grid; ++j)
      grid[static_cast<std::size_t>(j)] = t_span * j / (opt.n_grid - 1);
    grid.back() = t_span;

    StopCondition to_span;
    to_span.t_end = t_span;
    ReducedTrajectory red = integrate_reduced(pd, rho0, theta0, to_span, &grid);
    if (red.t.size() != grid.size())
      throw Error("invariance_error: reduced resampling returned the wrong grid size");

    FullTrajectory full = integrate_full(fos, x0, grid);

    double worst = 0.0;
    for (int j = 0; j < opt.n_grid; ++j) {
      Eigen::VectorXcd zj(2);
      cd zr = red.rho[static_cast<std::size_t>(j)] *
              std::exp(cd(0, red.theta[static_cast<std::size_t>(j)]));
      zj << zr, std::conj(zr);
      Eigen::VectorXd lifted = (ms.T * ssm.W.eval(zj)).real();
      worst = std::max(worst,
                       (full.states.col(static_cast<Eigen::Index>(j)) - lifted).norm());
    }
    dist[static_cast<std::size_t>(k)] = worst;
  };

  const int workers = std::min(N, resolve_threads(opt.threads));
  if (workers <= 1) {
    for (int k = 0; k < N; ++k) run_one(k);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int k = w; k < N; k += workers) {
          try {
            run_one(k);
          } catch (...) {
            failures[static_cast<std::size_t>(k)] = std::current_exception();
          }
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (int k = 0; k < N; ++k)
      if (failures[static_cast<std::size_t>(k)])
        std::rethrow_exception(failures[static_cast<std::size_t>(k)]);
  }

  InvarianceResult res;
  res.order = ssm.order;
  res.rho0 = rho0;
  res.rho_eps = rho_eps;
  res.n_traj = N;
  res.per_trajectory = dist;
  double denom = 0.0;
  for (double v : launch_norm) denom = std::max(denom, v);
  if (denom <= 0.0) throw ConfigError("invariance_error: degenerate launch states");
  double mean = 0.0;
  for (double v : dist) mean += v;
  mean /= N;
  res.delta_inv = mean / denom;
  return res;
}

namespace {

void add_blocks(PolyMap& acc, const PolyMap& inc, double sign) {
  for (const auto& [order, blk] : inc.blocks) {
    auto it = acc.blocks.find(order);
    if (it == acc.blocks.end()) {
      PolyBlock full = make_full_block(2, acc.out_dim, order);
      it = acc.blocks.emplace(order, std::move(full)).first;
    }
    for (int c = 0; c < static_cast<int>(blk.keys.size()); ++c) {
      int col = it->second.find(blk.keys[static_cast<std::size_t>(c)]);
      it->second.coeffs.col(col) += sign * blk.coeffs.col(c);
    }
  }
}

}  // namespace

PolyMap invariance_residual_map(const SSMExpansion& ssm, const PolyMap& G) {
  const int n_w = ssm.order;
  const int gamma = G.empty() ? 1 : G.max_order();
  const int cap = std::max(n_w, gamma * n_w);

  PolyMap lam_w = ssm.W;
  for (auto& [order, blk] : lam_w.blocks)
    for (int l = 0; l < blk.coeffs.rows(); ++l) blk.coeffs.row(l) *= ssm.modal.lambdas[l];

  PolyMap res;
  res.in_dim = 2;
  res.out_dim = ssm.W.out_dim;
  add_blocks(res, lam_w, 1.0);
  if (!G.empty()) add_blocks(res, compose(G, ssm.W, cap, n_w), 1.0);
  add_blocks(res, jac_times(ssm.W, ssm.R, cap), -1.0);

  // the solved orders must cancel; only the truncation tail may survive
  double scale = 0.0;
  for (const auto& [order, blk] : lam_w.blocks) scale = std::max(scale, blk.coeffs.norm());
  for (auto it = res.blocks.begin(); it != res.blocks.end();) {
    if (it->first <= n_w) {
      if (it->second.coeffs.norm() > 1e-10 * (1.0 + scale))
        throw Error("invariance defect does not cancel at solved order " +
                    std::to_string(it->first));
      it = res.blocks.erase(it);
    } else {
      ++it;
    }
  }
  return res;
}

std::vector<double> invariance_residual(const SSMExpansion& ssm, const PolyMap& G,
                                        const std::vector<Eigen::VectorXcd>& z_samples) {
  PolyMap tail = invariance_residual_map(ssm, G);
  std::vector<double> norms;
  norms.reserve(z_samples.size());
  for (const Eigen::VectorXcd& z : z_samples) {
    if (z.size() != 2) throw DimensionMismatch("invariance_residual: z must be 2-dimensional");
    norms.push_back(tail.eval(z).norm());
  }
  return norms;
}

}  // namespace ssmkit
