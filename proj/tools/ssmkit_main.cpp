#include <CLI11.hpp>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssmkit/beam.hpp"
#include "ssmkit/errors.hpp"
#include "ssmkit/model.hpp"
#include "ssmkit/reduced.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/ssm.hpp"
#include "ssmkit/validation.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace ssmkit;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- config schema ----------------------------------------------------

void require_keys(const ojson& j, const std::set<std::string>& allowed, const char* where) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(std::string("config: unknown key '") + k + "' in " + where);
}

double jnum(const ojson& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

int jint(const ojson& j, const char* key, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number_integer()) throw ConfigError(std::string("config: '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

bool jbool(const ojson& j, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean()) throw ConfigError(std::string("config: '") + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

struct Job {
  ojson model_json;  // raw "model" entry, resolved during build_model
  MasterSelector master = MasterSelector::slowest();
  ojson master_json = "slowest";
  int order = 15;
  double delta = 0.05;
  double rho0 = 0.35;
  double rho_eps = 0.01;
  int n_traj = 50;
  int n_theta = 128;
  int n_grid = 600;
  std::optional<unsigned> theta_seed;
  std::vector<int> orders;  // invariance sweep; empty = not supplied
  std::optional<double> rho_max;
  double rho_step = 0.01;
  int memory_n = 2;
  int memory_order = 0;  // 0 = fall back to job order
  bool cubic_only = false;
  int threads = 0;
  std::string out_dir = ".";

  ojson resolved;  // effective values, embedded into every output
};

Job load_job(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  require_keys(j,
               {"model", "master_mode", "order", "delta", "rho0", "rho_eps", "n_traj", "n_theta",
                "n_grid", "theta_seed", "orders", "rho_max", "rho_step", "memory", "threads",
                "outputs"},
               "top level");

  Job job;
  if (j.contains("model")) job.model_json = j.at("model");
  if (j.contains("master_mode")) {
    const auto& m = j.at("master_mode");
    if (m.is_string() && m.get<std::string>() == "slowest") {
      job.master = MasterSelector::slowest();
    } else if (m.is_number_integer()) {
      job.master = MasterSelector::pair(m.get<int>());
    } else {
      throw ConfigError("config: master_mode must be \"slowest\" or a 1-based pair index");
    }
    job.master_json = m;
  }
  job.order = jint(j, "order", job.order);
  job.delta = jnum(j, "delta", job.delta);
  job.rho0 = jnum(j, "rho0", job.rho0);
  job.rho_eps = jnum(j, "rho_eps", job.rho_eps);
  job.n_traj = jint(j, "n_traj", job.n_traj);
  job.n_theta = jint(j, "n_theta", job.n_theta);
  job.n_grid = jint(j, "n_grid", job.n_grid);
  if (j.contains("theta_seed") && !j.at("theta_seed").is_null())
    job.theta_seed = static_cast<unsigned>(jint(j, "theta_seed", 0));
  if (j.contains("orders")) {
    if (!j.at("orders").is_array()) throw ConfigError("config: 'orders' must be an array");
    for (const auto& o : j.at("orders")) {
      if (!o.is_number_integer()) throw ConfigError("config: 'orders' entries must be integers");
      job.orders.push_back(o.get<int>());
    }
  }
  if (j.contains("rho_max")) job.rho_max = jnum(j, "rho_max", 0.0);
  job.rho_step = jnum(j, "rho_step", job.rho_step);
  if (j.contains("memory")) {
    const auto& m = j.at("memory");
    require_keys(m, {"n", "order", "cubic_only"}, "memory");
    job.memory_n = jint(m, "n", job.memory_n);
    job.memory_order = jint(m, "order", 0);
    job.cubic_only = jbool(m, "cubic_only", false);
  }
  job.threads = jint(j, "threads", job.threads);
  if (j.contains("outputs")) {
    if (!j.at("outputs").is_string()) throw ConfigError("config: 'outputs' must be a string");
    job.out_dir = j.at("outputs").get<std::string>();
  }
  return job;
}

// ---- model construction -----------------------------------------------

Eigen::MatrixXd parse_matrix(const ojson& j, int n, const char* name) {
  Eigen::MatrixXd X(n, n);
  if (j.is_array() && !j.empty() && j[0].is_array()) {
    if (static_cast<int>(j.size()) != n) throw ConfigError(std::string("config: ") + name + " must be n x n");
    for (int r = 0; r < n; ++r) {
      if (static_cast<int>(j[r].size()) != n)
        throw ConfigError(std::string("config: ") + name + " must be n x n");
      for (int c = 0; c < n; ++c) X(r, c) = j[r][c].get<double>();
    }
    return X;
  }
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != n * n)
      throw ConfigError(std::string("config: ") + name + " must hold n*n row-major entries");
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) X(r, c) = j[r * n + c].get<double>();
    return X;
  }
  throw ConfigError(std::string("config: ") + name + " must be an array");
}

MechanicalSystem build_model(const Job& job, ojson& resolved_model) {
  const ojson& jm = job.model_json;
  if (jm.is_null()) throw ConfigError("config: 'model' is required for this command");
  if (!jm.is_object()) throw ConfigError("config: 'model' must be an object");

  if (jm.contains("builtin")) {
    require_keys(jm, {"builtin", "params"}, "model");
    const std::string name = jm.at("builtin").get<std::string>();
    ojson params = jm.contains("params") ? jm.at("params") : ojson::object();
    if (name == "shaw_pierre_inner" || name == "shaw_pierre_outer") {
      require_keys(params, {"k1", "k2", "k3", "c", "kappa", "mass"}, "model.params");
      ShawPierreParams p;
      p.k1 = jnum(params, "k1", p.k1);
      p.k2 = jnum(params, "k2", p.k2);
      p.k3 = jnum(params, "k3", p.k3);
      p.c = jnum(params, "c", p.c);
      p.kappa = jnum(params, "kappa", p.kappa);
      p.mass = jnum(params, "mass", p.mass);
      const bool inner = name == "shaw_pierre_inner";
      if (inner) p.k2 = p.k3 = p.k1;
      resolved_model = {{"builtin", name},
                        {"params",
                         {{"k1", p.k1}, {"k2", p.k2}, {"k3", p.k3}, {"c", p.c},
                          {"kappa", p.kappa}, {"mass", p.mass}}}};
      return make_shaw_pierre(inner ? ShawPierreVariant::inner : ShawPierreVariant::outer, p);
    }
    if (name == "timoshenko_beam") {
      require_keys(params,
                   {"L", "h", "b", "rho_density", "E", "G_shear", "eta", "mu", "lambda_ext",
                    "m_elems"},
                   "model.params");
      BeamParams p;
      p.L = jnum(params, "L", p.L);
      p.h = jnum(params, "h", p.h);
      p.b = jnum(params, "b", p.b);
      p.rho_density = jnum(params, "rho_density", p.rho_density);
      p.E = jnum(params, "E", p.E);
      p.G_shear = jnum(params, "G_shear", p.G_shear);
      p.eta = jnum(params, "eta", p.eta);
      p.mu = jnum(params, "mu", p.mu);
      p.lambda_ext = jnum(params, "lambda_ext", p.lambda_ext);
      p.m_elems = jint(params, "m_elems", p.m_elems);
      resolved_model = {{"builtin", name},
                        {"params",
                         {{"L", p.L}, {"h", p.h}, {"b", p.b}, {"rho_density", p.rho_density},
                          {"E", p.E}, {"G_shear", p.G_shear}, {"eta", p.eta}, {"mu", p.mu},
                          {"lambda_ext", p.lambda_ext}, {"m_elems", p.m_elems}}}};
      return assemble_beam(p).sys;
    }
    throw ConfigError("config: unknown builtin model '" + name + "'");
  }

  if (jm.contains("matrices")) {
    require_keys(jm, {"matrices", "nonlinear_terms"}, "model");
    const ojson& mt = jm.at("matrices");
    require_keys(mt, {"n", "M", "C", "K"}, "model.matrices");
    const int n = jint(mt, "n", 0);
    if (n < 1) throw ConfigError("config: matrices.n must be >= 1");
    MechanicalSystem sys;
    sys.n = n;
    sys.M = parse_matrix(mt.at("M"), n, "matrices.M");
    sys.C = parse_matrix(mt.at("C"), n, "matrices.C");
    sys.K = parse_matrix(mt.at("K"), n, "matrices.K");
    if (jm.contains("nonlinear_terms")) {
      if (!jm.at("nonlinear_terms").is_array())
        throw ConfigError("config: nonlinear_terms must be an array");
      for (const auto& jt : jm.at("nonlinear_terms")) {
        require_keys(jt, {"target_dof", "coefficient", "exponents"}, "nonlinear_terms entry");
        ForceTerm t;
        t.target_dof = jint(jt, "target_dof", -1);
        t.coefficient = jnum(jt, "coefficient", 0.0);
        if (!jt.contains("exponents") || !jt.at("exponents").is_array())
          throw ConfigError("config: nonlinear term needs an 'exponents' array");
        for (const auto& e : jt.at("exponents")) t.exponents.push_back(e.get<int>());
        sys.nonlinearity.push_back(t);
      }
    }
    sys.validate();
    resolved_model = jm;
    return sys;
  }

  throw ConfigError("config: model needs either 'builtin' or 'matrices'");
}

ojson resolved_config(const Job& job, const ojson& resolved_model) {
  ojson r;
  r["model"] = resolved_model;
  r["master_mode"] = job.master_json;
  r["order"] = job.order;
  r["delta"] = job.delta;
  r["rho0"] = job.rho0;
  r["rho_eps"] = job.rho_eps;
  r["n_traj"] = job.n_traj;
  r["n_theta"] = job.n_theta;
  r["n_grid"] = job.n_grid;
  r["theta_seed"] = job.theta_seed ? ojson(*job.theta_seed) : ojson(nullptr);
  r["orders"] = job.orders;
  r["rho_max"] = job.rho_max ? ojson(*job.rho_max) : ojson(job.rho0);
  r["rho_step"] = job.rho_step;
  r["memory"] = {{"n", job.memory_n},
                 {"order", job.memory_order > 0 ? job.memory_order : job.order},
                 {"cubic_only", job.cubic_only}};
  r["threads"] = job.threads;
  r["outputs"] = job.out_dir;
  return r;
}

// ---- serialization ----------------------------------------------------

ojson complex_json(cd v) { return ojson::array({v.real(), v.imag()}); }

std::string key_string(const Key& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(k[i]);
  }
  return s;
}

ojson poly_json(const PolyMap& p) {
  ojson out = ojson::object();
  for (const auto& [ord, blk] : p.blocks) {
    ojson jb = ojson::object();
    for (std::size_t c = 0; c < blk.keys.size(); ++c) {
      ojson col = ojson::array();
      for (int r = 0; r < blk.coeffs.rows(); ++r) col.push_back(complex_json(blk.coeffs(r, c)));
      jb[key_string(blk.keys[c])] = col;
    }
    out[std::to_string(ord)] = jb;
  }
  return out;
}

ojson resonance_json(const ResonanceReport& rep) {
  ojson entries = ojson::array();
  for (const ResonanceEntry& e : rep.entries) {
    entries.push_back({{"a", e.a}, {"b", e.b}, {"order", e.order}, {"lambda_index", e.lambda_index},
                       {"lambda", complex_json(e.lambda_l)}, {"inner", e.inner}, {"I", e.I}});
  }
  return {{"delta", rep.delta}, {"entries", entries}};
}

ojson spectrum_json(const ModalSystem& ms) {
  ojson lam = ojson::array();
  for (int i = 0; i < ms.dim; ++i) lam.push_back(complex_json(ms.lambdas[i]));
  SpectralQuotients q = spectral_quotients(ms);
  return {{"dim", ms.dim}, {"lambdas", lam}, {"master_conjugate", ms.master_conjugate},
          {"sigma_out", q.sigma_out}, {"sigma_in", q.sigma_in}};
}

ojson polar_json(const PolarDynamics& pd) {
  ojson rd = ojson::object(), om = ojson::object(), gm = ojson::object();
  for (const auto& [k, v] : pd.rho_dot_coeffs) rd[std::to_string(k)] = v;
  for (const auto& [k, v] : pd.omega_coeffs) om[std::to_string(k)] = v;
  for (const auto& [ab, g] : pd.gammas)
    gm[std::to_string(ab.first) + "," + std::to_string(ab.second)] = complex_json(g);
  return {{"rho_dot", rd}, {"omega", om}, {"gamma", gm}, {"warnings", pd.warnings}};
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << body;
}

std::string csv_header(const ojson& resolved) {
  return std::string("# ssmkit ") + kVersion + "\n# config: " + resolved.dump() + "\n";
}

// ---- shared pipeline pieces -------------------------------------------

struct Computed {
  FirstOrderSystem fos;
  ModalSystem ms;
  SSMExpansion ssm;
};

// The linear expansion: identity embedding of the master plane, R = Lambda_E.
SSMExpansion order_one(const ModalSystem& ms) {
  SSMExpansion s;
  s.order = 1;
  s.modal = ms;
  PolyBuilder wb(2, ms.dim);
  wb.add(0, Key{1, 0}, cd(1.0, 0.0));
  wb.add(1, Key{0, 1}, cd(1.0, 0.0));
  s.W = wb.build();
  PolyBuilder rb(2, 2);
  rb.add(0, Key{1, 0}, ms.lambdas[0]);
  rb.add(1, Key{0, 1}, ms.lambdas[1]);
  s.R = rb.build();
  return s;
}

Computed compute_pipeline(const MechanicalSystem& sys, const Job& job, int order) {
  if (order < 1) throw ConfigError("config: order must be >= 1");
  Computed c;
  c.fos = build_first_order(sys);
  c.ms = decompose(c.fos, job.master);
  c.ssm = order == 1 ? order_one(c.ms) : compute_ssm(c.ms, order, job.delta);
  return c;
}

// Orders solve hierarchically, so the prefix of a higher-order expansion is
// the lower-order expansion; truncation avoids recomputation in sweeps.
SSMExpansion truncate_ssm(const SSMExpansion& full, int order) {
  if (order > full.order) throw ConfigError("requested order exceeds the computed expansion");
  SSMExpansion s;
  s.order = order;
  s.modal = full.modal;
  s.warnings = full.warnings;
  s.W.in_dim = full.W.in_dim;
  s.W.out_dim = full.W.out_dim;
  s.R.in_dim = full.R.in_dim;
  s.R.out_dim = full.R.out_dim;
  for (const auto& [ord, blk] : full.W.blocks)
    if (ord <= order) s.W.blocks.emplace(ord, blk);
  for (const auto& [ord, blk] : full.R.blocks)
    if (ord <= order) s.R.blocks.emplace(ord, blk);
  for (const ResonantSlot& slot : full.resonant)
    if (slot.order <= order) s.resonant.push_back(slot);
  return s;
}

std::vector<double> rho_grid(const Job& job) {
  const double rmax = job.rho_max ? *job.rho_max : job.rho0;
  if (rmax < 0) throw ConfigError("config: rho_max must be >= 0");
  if (!(job.rho_step > 0)) throw ConfigError("config: rho_step must be > 0");
  std::vector<double> grid;
  const int count = static_cast<int>(std::floor(rmax / job.rho_step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) grid.push_back(i * job.rho_step);
  if (grid.empty() || rmax == 0.0) grid.assign(1, 0.0);
  return grid;
}

std::string backbone_csv(const SSMExpansion& ssm, const Job& job) {
  PolarDynamics pd = to_polar(ssm);
  std::string body = csv_header(job.resolved);
  body += "rho,omega,amplitude\n";
  for (double rho : rho_grid(job)) {
    body += fmt17(rho) + "," + fmt17(pd.omega(rho)) + "," +
            fmt17(amplitude(ssm, rho, job.n_theta)) + "\n";
  }
  return body;
}

struct InvarianceSweep {
  std::vector<InvarianceResult> rows;
};

InvarianceSweep invariance_sweep(const MechanicalSystem& sys, const Job& job,
                                 const std::vector<int>& orders) {
  if (orders.empty()) throw ConfigError("config: 'orders' list is required for invariance");
  int max_order = 1;
  for (int o : orders) {
    if (o < 1) throw ConfigError("config: invariance orders must be >= 1");
    max_order = std::max(max_order, o);
  }
  Computed c = compute_pipeline(sys, job, max_order);
  InvarianceOptions opt;
  opt.n_grid = job.n_grid;
  opt.theta_seed = job.theta_seed;
  opt.threads = job.threads;
  InvarianceSweep sweep;
  for (int o : orders) {
    SSMExpansion part = truncate_ssm(c.ssm, o);
    sweep.rows.push_back(invariance_error(c.fos, part, job.rho0, job.rho_eps, job.n_traj, opt));
    sweep.rows.back().order = o;
  }
  return sweep;
}

std::string invariance_csv(const InvarianceSweep& sweep, const Job& job) {
  std::string body = csv_header(job.resolved);
  body += "order,delta_inv\n";
  for (const InvarianceResult& r : sweep.rows)
    body += std::to_string(r.order) + "," + fmt17(r.delta_inv) + "\n";
  return body;
}

std::string trajectories_csv(const InvarianceSweep& sweep, const Job& job) {
  std::string body = csv_header(job.resolved);
  body += "order,trajectory,dist\n";
  for (const InvarianceResult& r : sweep.rows)
    for (std::size_t i = 0; i < r.per_trajectory.size(); ++i)
      body += std::to_string(r.order) + "," + std::to_string(i) + "," +
              fmt17(r.per_trajectory[i]) + "\n";
  return body;
}

// ---- commands ----------------------------------------------------------

int cmd_compute(const MechanicalSystem& sys, const Job& job) {
  Computed c = compute_pipeline(sys, job, job.order);
  ResonanceReport rep = resonance_scan(c.ms, job.delta, std::max(job.order, 2));

  ojson out;
  out["artifact"] = {{"name", "ssmkit"}, {"version", kVersion}};
  out["config"] = job.resolved;
  out["spectrum"] = spectrum_json(c.ms);
  out["resonances"] = resonance_json(rep);
  ojson slots = ojson::array();
  for (const ResonantSlot& s : c.ssm.resonant)
    slots.push_back({{"order", s.order}, {"row", s.row}, {"a", s.a}, {"b", s.b}});
  out["resonant_slots"] = slots;
  out["W"] = poly_json(c.ssm.W);
  out["R"] = poly_json(c.ssm.R);
  if (c.ms.master_conjugate) out["polar"] = polar_json(to_polar(c.ssm));
  out["warnings"] = c.ssm.warnings;

  fs::create_directories(job.out_dir);
  write_text(fs::path(job.out_dir) / "ssm.json", out.dump(2) + "\n");
  std::printf("wrote %s\n", (fs::path(job.out_dir) / "ssm.json").c_str());
  return 0;
}

int cmd_backbone(const MechanicalSystem& sys, const Job& job) {
  Computed c = compute_pipeline(sys, job, job.order);
  fs::create_directories(job.out_dir);
  write_text(fs::path(job.out_dir) / "backbone.csv", backbone_csv(c.ssm, job));
  std::printf("wrote %s\n", (fs::path(job.out_dir) / "backbone.csv").c_str());
  return 0;
}

int cmd_invariance(const MechanicalSystem& sys, const Job& job) {
  InvarianceSweep sweep = invariance_sweep(sys, job, job.orders);
  fs::create_directories(job.out_dir);
  write_text(fs::path(job.out_dir) / "invariance.csv", invariance_csv(sweep, job));
  write_text(fs::path(job.out_dir) / "invariance_trajectories.csv", trajectories_csv(sweep, job));
  std::printf("wrote %s and sidecar\n", (fs::path(job.out_dir) / "invariance.csv").c_str());
  return 0;
}

int cmd_resonances(const MechanicalSystem& sys, const Job& job) {
  FirstOrderSystem fos = build_first_order(sys);
  ModalSystem ms = decompose(fos, job.master);
  ResonanceReport rep = resonance_scan(ms, job.delta, std::max(job.order, 2));
  ojson out;
  out["artifact"] = {{"name", "ssmkit"}, {"version", kVersion}};
  out["config"] = job.resolved;
  out["spectrum"] = spectrum_json(ms);
  out["resonances"] = resonance_json(rep);
  fs::create_directories(job.out_dir);
  write_text(fs::path(job.out_dir) / "resonances.json", out.dump(2) + "\n");
  std::printf("wrote %s\n", (fs::path(job.out_dir) / "resonances.json").c_str());
  return 0;
}

int cmd_memory(const Job& job) {
  const int top = job.memory_order > 0 ? job.memory_order : job.order;
  if (top < 3) throw ConfigError("memory: order must be >= 3");
  std::set<int> g_orders = job.cubic_only ? std::set<int>{3} : std::set<int>{2, 3};
  std::printf("order %18s %12s\n", "bytes", "TB");
  for (int i = 3; i <= top; ++i) {
    MemoryEstimate est = memory_estimate(job.memory_n, i, g_orders);
    std::printf("%5d %18.0f %12.4f\n", i, est.total_bytes, est.total_bytes / 1e12);
  }
  return 0;
}

int cmd_plot_data(const MechanicalSystem& sys, const Job& job) {
  Computed c = compute_pipeline(sys, job, job.order);
  fs::create_directories(job.out_dir);

  // backbone curves per requested order (falling back to the single order)
  std::vector<int> orders = job.orders.empty() ? std::vector<int>{job.order} : job.orders;
  std::string bb = csv_header(job.resolved);
  bb += "order,rho,omega,amplitude\n";
  for (int o : orders) {
    SSMExpansion part = truncate_ssm(c.ssm, o);
    PolarDynamics pd = to_polar(part);
    for (double rho : rho_grid(job))
      bb += std::to_string(o) + "," + fmt17(rho) + "," + fmt17(pd.omega(rho)) + "," +
            fmt17(amplitude(part, rho, job.n_theta)) + "\n";
  }
  write_text(fs::path(job.out_dir) / "plot_backbone.csv", bb);

  // one reduced decay trajectory from rho0 down to rho_eps
  PolarDynamics pd = to_polar(c.ssm);
  StopCondition stop;
  stop.rho_eps = job.rho_eps;
  ReducedTrajectory traj = integrate_reduced(pd, job.rho0, 0.0, stop);
  std::string dec = csv_header(job.resolved);
  dec += "t,rho,theta,omega\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i)
    dec += fmt17(traj.t[i]) + "," + fmt17(traj.rho[i]) + "," + fmt17(traj.theta[i]) + "," +
           fmt17(pd.omega(traj.rho[i])) + "\n";
  write_text(fs::path(job.out_dir) / "plot_decay.csv", dec);

  // invariance sweep when an order list is configured
  if (!job.orders.empty()) {
    InvarianceSweep sweep = invariance_sweep(sys, job, job.orders);
    write_text(fs::path(job.out_dir) / "plot_invariance.csv", invariance_csv(sweep, job));
    write_text(fs::path(job.out_dir) / "plot_trajectories.csv", trajectories_csv(sweep, job));
  }
  std::printf("wrote plot data to %s\n", job.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ssmkit: two-dimensional spectral submanifolds of mechanical systems"};
  app.require_subcommand(1);

  std::string config_path;
  int order_flag = 0;
  double delta_flag = 0.0;
  std::string out_flag;
  int threads_flag = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON job config file")->required();
    sub->add_option("--order", order_flag, "override the expansion order");
    sub->add_option("--delta", delta_flag, "override the resonance closeness threshold");
    sub->add_option("--out", out_flag, "override the output directory");
    sub->add_option("--threads", threads_flag, "cap worker threads (env SSMKIT_THREADS as fallback)");
    return sub;
  };
  CLI::App* c_compute = add_common(app.add_subcommand("compute", "solve W and R, write ssm.json"));
  CLI::App* c_backbone = add_common(app.add_subcommand("backbone", "write backbone.csv"));
  CLI::App* c_invariance =
      add_common(app.add_subcommand("invariance", "write invariance.csv plus per-trajectory sidecar"));
  CLI::App* c_resonances =
      add_common(app.add_subcommand("resonances", "write the resonance report as resonances.json"));
  CLI::App* c_memory =
      add_common(app.add_subcommand("memory", "print the dense-assembly memory table"));
  CLI::App* c_plot =
      add_common(app.add_subcommand("plot-data", "emit per-figure CSV data for external plotting"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Job job = load_job(config_path);
    if (order_flag > 0) job.order = order_flag;
    if (delta_flag > 0) job.delta = delta_flag;
    if (!out_flag.empty()) job.out_dir = out_flag;
    if (threads_flag >= 0) job.threads = threads_flag;

    if (c_memory->parsed()) {
      job.resolved = resolved_config(job, job.model_json);
      return cmd_memory(job);
    }

    ojson resolved_model;
    MechanicalSystem sys = build_model(job, resolved_model);
    job.resolved = resolved_config(job, resolved_model);

    if (c_compute->parsed()) return cmd_compute(sys, job);
    if (c_backbone->parsed()) return cmd_backbone(sys, job);
    if (c_invariance->parsed()) return cmd_invariance(sys, job);
    if (c_resonances->parsed()) return cmd_resonances(sys, job);
    if (c_plot->parsed()) return cmd_plot_data(sys, job);
    return 2;
  } catch (const OuterResonanceBreakdown& e) {
    std::fprintf(stderr, "error: %s (lambda = %.17g%+.17gi)\n", e.what(), e.lambda.real(),
                 e.lambda.imag());
    return 4;
  } catch (const UnstableSpectrum& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DefectiveMatrix& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const SingularTransform& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const RealMasterPairUnsupported& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const BlowUp& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const StepFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const EventNotReached& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const NonNegligibleImaginaryPart& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
