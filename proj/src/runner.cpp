#include "ucps/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ucps/oracles.hpp"
#include "ucps/scaling.hpp"
#include "ucps/serialize.hpp"
#include "ucps/state.hpp"
#include "ucps/tdvp.hpp"
#include "ucps/umps.hpp"

namespace ucps {
namespace {

using nlohmann::json;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double require_finite(double x, const char* what) {
  if (!std::isfinite(x))
    throw InvalidArgument(std::string("config: ") + what + " must be finite");
  return x;
}

Engine engine_from_string(const std::string& s) {
  if (s == "ucps") return Engine::ucps;
  if (s == "umps") return Engine::umps;
  throw InvalidArgument("config: engine must be 'ucps' or 'umps'");
}

const char* engine_to_string(Engine e) {
  return e == Engine::ucps ? "ucps" : "umps";
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Runs fn(0..count-1), at most `threads` concurrently. Callers store results
// by index, so assembly order never depends on completion order.
void run_cells(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int nt = std::min(threads, count);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) fn(i);
    });
  for (auto& th : pool) th.join();
}

struct GsCell {
  std::uint64_t seed = 0;
  double theta = 0.0;
  int size = 0;  // n (ucps) or D (umps)
  bool ok = false;
  bool converged = false;
  double energy = std::nan("");
  double entropy = std::nan("");
  double corr = std::nan("");
  double order = std::nan("");
  double wall = 0.0;
  int steps = 0;
  std::string error;
};

GsCell ground_cell(const RunConfig& cfg, std::uint64_t seed, double theta,
                   int size) {
  GsCell cell;
  cell.seed = seed;
  cell.theta = theta;
  cell.size = size;
  const double t0 = now_seconds();
  try {
    const auto terms = rotate_basis(build_model(cfg.model, cfg.params), theta);
    const Matrix op_z = rotate_op(pauli_z(), theta);
    if (cfg.engine == Engine::ucps) {
      const BlockHamiltonian H = block_embed(terms, size);
      UcpsState state = random_state(size, seed);
      GroundStateOptions opts;
      opts.dt = cfg.dt;
      opts.grad_tol = cfg.tol;
      opts.max_steps = cfg.max_steps;
      opts.solver.bicgstab_tol = cfg.bicgstab_tol;
      opts.solver.bicgstab_max_iter = cfg.bicgstab_max_iter;
      const GroundStateReport rep = ground_state(state, H, opts);
      const SpectralEnvironment env = environments(state);
      cell.energy = rep.energy;
      cell.converged = rep.converged;
      cell.steps = rep.steps;
      try {
        cell.entropy = entanglement_entropy(schmidt_coefficients(state, env));
        cell.corr = correlation_length(env, size);
      } catch (const Error&) {
      }
      cell.order = order_parameter_average(state, env, op_z);
    } else {
      const Matrix h2 = two_site_hamiltonian(terms);
      UmpsState state = random_umps(2, size, seed);
      UmpsEnv env = umps_environments(state);
      umps_normalize(state, &env);
      env = umps_environments(state, 1e-12, 100000, &env);
      UmpsGroundOptions opts;
      opts.dt = cfg.dt;
      opts.grad_tol = cfg.tol;
      opts.max_steps = cfg.max_steps;
      opts.bicgstab_tol = cfg.bicgstab_tol;
      const UmpsGroundReport rep = umps_ground_state(state, env, h2, opts);
      cell.energy = rep.energy;
      cell.converged = rep.converged;
      cell.steps = rep.steps;
      try {
        cell.entropy = umps_entropy(state, env);
        cell.corr = correlation_length(umps_second_eigenvalue(state, env), 1,
                                       Engine::umps);
      } catch (const Error&) {
      }
      cell.order = umps_expectation_one_site(state, env, op_z).real();
    }
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  cell.wall = cfg.zero_timings ? 0.0 : now_seconds() - t0;
  return cell;
}

void write_cell_row(std::ostream& out, const GsCell& c, bool with_theta,
                    bool size_column) {
  if (with_theta) out << fmt(c.theta) << ',';
  if (size_column)
    out << c.size << ',';
  else
    out << c.seed << ',';
  out << (c.converged ? 1 : 0) << ',' << fmt(c.energy) << ','
      << fmt(c.entropy) << ',' << fmt(c.corr) << ',' << fmt(c.order) << ','
      << fmt(c.wall) << ',' << c.steps << '\n';
}

void write_errors(std::ostream& out, const std::vector<GsCell>& cells) {
  for (const auto& c : cells)
    if (!c.ok)
      out << "# error seed=" << c.seed << " theta=" << fmt(c.theta) << ": "
          << c.error << '\n';
}

void write_cluster_summary(std::ostream& out, const std::vector<GsCell>& cells,
                           double tol) {
  std::vector<double> energies;
  for (const auto& c : cells)
    energies.push_back(c.ok && c.converged ? c.energy : std::nan(""));
  const std::vector<int> ids = cluster_by_gap(energies, tol);
  const int nclusters = ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
  out << "# clusters=" << std::max(nclusters, 0) << '\n';
  for (int k = 0; k < nclusters; ++k) {
    double emin = std::numeric_limits<double>::infinity();
    int pop = 0;
    for (size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == k) {
        ++pop;
        emin = std::min(emin, energies[i]);
      }
    out << "# cluster " << k << ": energy=" << fmt(emin)
        << " population=" << pop << '\n';
  }
}

void write_prologue(std::ostream& out, const RunConfig& cfg,
                    const char* subcommand) {
  out << "# ucps-tools " << subcommand << '\n';
  out << "# config: " << config_to_json(cfg) << '\n';
}

constexpr const char* kCellHeader =
    "seed,converged,energy,entropy,corr_length,order_param,wall_time_s,steps";

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  if (j.contains("model"))
    c.model = model_kind_from_string(j.at("model").get<std::string>());
  if (j.contains("params")) {
    const auto& p = j.at("params");
    c.params.J = require_finite(p.value("J", 1.0), "params.J");
    c.params.h = require_finite(p.value("h", 0.0), "params.h");
    c.params.gamma = require_finite(p.value("gamma", 1.0), "params.gamma");
  }
  c.theta = require_finite(j.value("theta", 0.0), "theta");
  c.engine = engine_from_string(j.value("engine", std::string("ucps")));
  c.n = j.value("n", 1);
  c.D = j.value("D", 2);
  if (c.n < 1 || c.D < 1)
    throw InvalidArgument("config: n and D must be >= 1");
  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) throw InvalidArgument("config: need at least one seed");
  }
  c.dt = require_finite(j.value("dt", 0.05), "dt");
  c.tol = require_finite(j.value("tol", 1e-8), "tol");
  c.max_steps = j.value("max_steps", 50000);
  c.bicgstab_tol = require_finite(j.value("bicgstab_tol", 1e-10), "bicgstab_tol");
  c.bicgstab_max_iter = j.value("bicgstab_max_iter", 500);
  if (c.dt <= 0 || c.tol <= 0 || c.max_steps < 1)
    throw InvalidArgument("config: dt, tol must be > 0 and max_steps >= 1");
  if (j.contains("quench")) {
    const auto& q = j.at("quench");
    QuenchSpec spec;
    spec.h0 = require_finite(q.at("h0").get<double>(), "quench.h0");
    spec.h1 = require_finite(q.at("h1").get<double>(), "quench.h1");
    spec.t_max = require_finite(q.value("t_max", 1.0), "quench.t_max");
    spec.rkf_tol = require_finite(q.value("rkf_tol", 1e-8), "quench.rkf_tol");
    spec.out_dt = require_finite(q.value("out_dt", 0.01), "quench.out_dt");
    if (spec.t_max <= 0 || spec.out_dt <= 0 || spec.rkf_tol <= 0)
      throw InvalidArgument("config: quench times and tolerance must be > 0");
    c.quench = spec;
  }
  if (j.contains("thetas")) {
    c.thetas = j.at("thetas").get<std::vector<double>>();
    for (double th : c.thetas) require_finite(th, "thetas[]");
  }
  if (j.contains("sizes")) {
    c.sizes = j.at("sizes").get<std::vector<int>>();
    for (int s : c.sizes)
      if (s < 1) throw InvalidArgument("config: sizes must be >= 1");
  }
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    OracleSpec spec;
    spec.kind = o.at("kind").get<std::string>();
    if (o.contains("h_list"))
      spec.h_list = o.at("h_list").get<std::vector<double>>();
    spec.gamma = require_finite(o.value("gamma", 1.0), "oracle.gamma");
    spec.h0 = require_finite(o.value("h0", 0.0), "oracle.h0");
    spec.h1 = require_finite(o.value("h1", 0.0), "oracle.h1");
    spec.t_max = require_finite(o.value("t_max", 1.0), "oracle.t_max");
    spec.dt = require_finite(o.value("dt", 0.01), "oracle.dt");
    c.oracle = spec;
  }
  c.output_path = j.value("output_path", std::string());
  c.initial_state_path = j.value("initial_state_path", std::string());
  c.checkpoint_path = j.value("checkpoint_path", std::string());
  c.cluster_tol = require_finite(j.value("cluster_tol", 1e-8), "cluster_tol");
  c.threads = j.value("threads", 1);
  c.zero_timings = j.value("zero_timings", false);
  if (c.cluster_tol <= 0 || c.threads < 1)
    throw InvalidArgument("config: cluster_tol must be > 0 and threads >= 1");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("config: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["params"] = {{"J", c.params.J}, {"h", c.params.h}, {"gamma", c.params.gamma}};
  j["theta"] = c.theta;
  j["engine"] = engine_to_string(c.engine);
  j["n"] = c.n;
  j["D"] = c.D;
  j["seeds"] = c.seeds;
  j["dt"] = c.dt;
  j["tol"] = c.tol;
  j["max_steps"] = c.max_steps;
  j["bicgstab_tol"] = c.bicgstab_tol;
  j["bicgstab_max_iter"] = c.bicgstab_max_iter;
  if (c.quench)
    j["quench"] = {{"h0", c.quench->h0},
                   {"h1", c.quench->h1},
                   {"t_max", c.quench->t_max},
                   {"rkf_tol", c.quench->rkf_tol},
                   {"out_dt", c.quench->out_dt}};
  if (!c.thetas.empty()) j["thetas"] = c.thetas;
  if (!c.sizes.empty()) j["sizes"] = c.sizes;
  if (c.oracle)
    j["oracle"] = {{"kind", c.oracle->kind},   {"h_list", c.oracle->h_list},
                   {"gamma", c.oracle->gamma}, {"h0", c.oracle->h0},
                   {"h1", c.oracle->h1},       {"t_max", c.oracle->t_max},
                   {"dt", c.oracle->dt}};
  if (!c.output_path.empty()) j["output_path"] = c.output_path;
  if (!c.initial_state_path.empty())
    j["initial_state_path"] = c.initial_state_path;
  if (!c.checkpoint_path.empty()) j["checkpoint_path"] = c.checkpoint_path;
  j["cluster_tol"] = c.cluster_tol;
  j["threads"] = c.threads;
  j["zero_timings"] = c.zero_timings;
  return j.dump();
}

std::vector<int> cluster_by_gap(const std::vector<double>& values, double tol) {
  std::vector<int> ids(values.size(), -1);
  std::vector<size_t> order;
  for (size_t i = 0; i < values.size(); ++i)
    if (std::isfinite(values[i])) order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  int cluster = -1;
  double prev = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (cluster < 0 || values[order[k]] - prev > tol) ++cluster;
    ids[order[k]] = cluster;
    prev = values[order[k]];
  }
  return ids;
}

int cmd_groundstate(const RunConfig& cfg, std::ostream& out) {
  write_prologue(out, cfg, "groundstate");
  out << kCellHeader << '\n';
  std::vector<GsCell> cells(cfg.seeds.size());
  run_cells(static_cast<int>(cfg.seeds.size()), cfg.threads, [&](int i) {
    cells[i] = ground_cell(cfg, cfg.seeds[i], cfg.theta,
                           cfg.engine == Engine::ucps ? cfg.n : cfg.D);
  });
  bool all_ok = true;
  for (const auto& c : cells) {
    write_cell_row(out, c, false, false);
    all_ok = all_ok && c.ok && c.converged;
  }
  write_cluster_summary(out, cells, cfg.cluster_tol);
  write_errors(out, cells);
  return all_ok ? 0 : 1;
}

int cmd_angle_scan(const RunConfig& cfg, std::ostream& out) {
  if (cfg.thetas.size() < 2)
    throw InvalidArgument("angle-scan: need at least two angles in 'thetas'");
  write_prologue(out, cfg, "angle-scan");
  out << "theta," << kCellHeader << '\n';
  const int per = static_cast<int>(cfg.seeds.size());
  const int total = static_cast<int>(cfg.thetas.size()) * per;
  std::vector<GsCell> cells(total);
  run_cells(total, cfg.threads, [&](int i) {
    const double theta = cfg.thetas[i / per];
    const std::uint64_t seed = cfg.seeds[i % per];
    cells[i] = ground_cell(cfg, seed, theta,
                           cfg.engine == Engine::ucps ? cfg.n : cfg.D);
  });
  bool all_ok = true;
  for (const auto& c : cells) {
    write_cell_row(out, c, true, false);
    all_ok = all_ok && c.ok && c.converged;
  }
  for (size_t a = 0; a < cfg.thetas.size(); ++a) {
    std::vector<double> energies;
    for (int s = 0; s < per; ++s) {
      const GsCell& c = cells[a * per + s];
      energies.push_back(c.ok && c.converged ? c.energy : std::nan(""));
    }
    const std::vector<int> ids = cluster_by_gap(energies, cfg.cluster_tol);
    const int nclusters =
        ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
    out << "# theta=" << fmt(cfg.thetas[a]) << " clusters=" << nclusters
        << " minima=";
    for (int k = 0; k < nclusters; ++k) {
      double emin = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == k) emin = std::min(emin, energies[i]);
      out << (k ? ";" : "") << fmt(emin);
    }
    out << '\n';
  }
  write_errors(out, cells);
  return all_ok ? 0 : 1;
}

namespace {

ObservableRecord ucps_record(double t, const UcpsState& s,
                             const UcpsState& psi0,
                             const BlockHamiltonian& H, const Matrix& op_z) {
  const SpectralEnvironment env = environments(s);
  ObservableRecord rec;
  rec.t = t;
  rec.energy = energy_density(s, env, H);
  try {
    rec.entropy = entanglement_entropy(schmidt_coefficients(s, env));
    rec.corr_length = correlation_length(env, s.n);
  } catch (const Error&) {
    rec.entropy = std::nan("");
    rec.corr_length = std::nan("");
  }
  rec.order_param = order_parameter_average(s, env, op_z);
  rec.rate_function = rate_function(psi0, s);
  return rec;
}

}  // namespace

int cmd_quench(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.quench)
    throw InvalidArgument("quench: config needs a 'quench' block");
  const QuenchSpec q = *cfg.quench;
  write_prologue(out, cfg, "quench");

  const Matrix op_z = rotate_op(pauli_z(), cfg.theta);
  ModelParams p1 = cfg.params;
  p1.h = q.h1;
  const auto terms1 = rotate_basis(build_model(cfg.model, p1), cfg.theta);

  if (cfg.engine == Engine::ucps) {
    const BlockHamiltonian H1 = block_embed(terms1, cfg.n);
    UcpsState psi0(cfg.n, Matrix::Identity(1 << cfg.n, 1 << cfg.n));
    if (!cfg.initial_state_path.empty()) {
      psi0 = load_state(cfg.initial_state_path);
      if (psi0.n != cfg.n)
        throw InvalidArgument("quench: initial state has wrong block size");
      normalize(psi0);
      out << "# initial_state=loaded\n";
    } else {
      ModelParams p0 = cfg.params;
      p0.h = q.h0;
      const BlockHamiltonian H0 =
          block_embed(rotate_basis(build_model(cfg.model, p0), cfg.theta), cfg.n);
      psi0 = random_state(cfg.n, cfg.seeds.front());
      GroundStateOptions opts;
      opts.dt = cfg.dt;
      opts.grad_tol = cfg.tol;
      opts.max_steps = cfg.max_steps;
      opts.solver.bicgstab_tol = cfg.bicgstab_tol;
      opts.solver.bicgstab_max_iter = cfg.bicgstab_max_iter;
      const GroundStateReport rep = ground_state(psi0, H0, opts);
      if (!rep.converged) {
        out << "# error: pre-quench ground state did not converge\n";
        return 1;
      }
      out << "# initial_state=converged grad_norm=" << fmt(rep.gradient_norm)
          << '\n';
    }

    out << observable_csv_header() << '\n';
    UcpsState psi = psi0;
    EvolveOptions eopts;
    eopts.t_max = q.t_max;
    eopts.rel_tol = q.rkf_tol;
    eopts.out_dt = q.out_dt;
    eopts.solver.bicgstab_tol = cfg.bicgstab_tol;
    eopts.solver.bicgstab_max_iter = cfg.bicgstab_max_iter;
    eopts.checkpoint_path = cfg.checkpoint_path;
    bool aborted = false;
    std::string abort_reason;
    try {
      evolve(psi, H1, eopts, [&](double t, const UcpsState& s) {
        out << to_csv_row(ucps_record(t, s, psi0, H1, op_z)) << '\n';
      });
    } catch (const std::exception& e) {
      aborted = true;
      abort_reason = e.what();
    }
    if (aborted) {
      out << "# aborted: " << abort_reason << '\n';
      return 1;
    }
    return 0;
  }

  // Uniform-MPS engine: fixed-step Euler in real time on the output grid.
  const Matrix h2_post = two_site_hamiltonian(terms1);
  ModelParams p0 = cfg.params;
  p0.h = q.h0;
  const Matrix h2_pre =
      two_site_hamiltonian(rotate_basis(build_model(cfg.model, p0), cfg.theta));
  UmpsState psi0 = random_umps(2, cfg.D, cfg.seeds.front());
  UmpsEnv env0 = umps_environments(psi0);
  UmpsGroundOptions gopts;
  gopts.dt = cfg.dt;
  gopts.grad_tol = cfg.tol;
  gopts.max_steps = cfg.max_steps;
  gopts.bicgstab_tol = cfg.bicgstab_tol;
  const UmpsGroundReport rep = umps_ground_state(psi0, env0, h2_pre, gopts);
  if (!rep.converged) {
    out << "# error: pre-quench ground state did not converge\n";
    return 1;
  }
  out << "# initial_state=converged grad_norm=" << fmt(rep.grad_norm) << '\n';
  out << observable_csv_header() << '\n';

  UmpsState psi = psi0;
  UmpsEnv env = env0;
  const int nsub = std::max(1, static_cast<int>(std::ceil(q.out_dt / 1e-3)));
  const double h_step = q.out_dt / nsub;
  const long ngrid = std::lround(std::ceil(q.t_max / q.out_dt - 1e-12));
  bool failed = false;
  for (long k = 0; k <= ngrid && !failed; ++k) {
    const double t = k * q.out_dt;
    ObservableRecord rec;
    rec.t = t;
    try {
      rec.energy = umps_energy(psi, env, h2_post);
      rec.entropy = umps_entropy(psi, env);
      try {
        rec.corr_length = correlation_length(
            umps_second_eigenvalue(psi, env), 1, Engine::umps);
      } catch (const Error&) {
        rec.corr_length = std::nan("");
      }
      rec.order_param = umps_expectation_one_site(psi, env, op_z).real();
      const double mag = std::abs(umps_mixed_dominant(psi, psi0));
      rec.rate_function =
          mag > 0.0 ? std::min(-2.0 * std::log(mag), kRateCap) : kRateCap;
      out << to_csv_row(rec) << '\n';
      if (k < ngrid)
        for (int s = 0; s < nsub; ++s)
          umps_tdvp_step(psi, env, h2_post, h_step, EvolutionMode::real,
                         cfg.bicgstab_tol, cfg.bicgstab_max_iter);
    } catch (const std::exception& e) {
      out << "# aborted: " << e.what() << '\n';
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

int cmd_scaling(const RunConfig& cfg, std::ostream& out) {
  if (cfg.sizes.size() < 3)
    throw InvalidArgument("scaling: need at least three entries in 'sizes'");
  write_prologue(out, cfg, "scaling");
  out << "size,converged,energy,entropy,corr_length,order_param,wall_time_s,steps"
      << '\n';

  const int per = static_cast<int>(cfg.seeds.size());
  const int total = static_cast<int>(cfg.sizes.size()) * per;
  std::vector<GsCell> cells(total);
  run_cells(total, cfg.threads, [&](int i) {
    cells[i] = ground_cell(cfg, cfg.seeds[i % per], cfg.theta,
                           cfg.sizes[i / per]);
  });

  bool all_ok = true;
  std::vector<int> fit_sizes;
  std::vector<double> fit_S, fit_mu;
  for (size_t a = 0; a < cfg.sizes.size(); ++a) {
    // Best converged seed per size (lowest energy).
    const GsCell* best = nullptr;
    for (int s = 0; s < per; ++s) {
      const GsCell& c = cells[a * per + s];
      if (c.ok && c.converged && (!best || c.energy < best->energy)) best = &c;
    }
    if (best) {
      write_cell_row(out, *best, false, true);
      if (std::isfinite(best->entropy) && best->corr > 0) {
        fit_sizes.push_back(best->size);
        fit_S.push_back(best->entropy);
        fit_mu.push_back(best->corr);
      }
    } else {
      GsCell placeholder;
      placeholder.size = cfg.sizes[a];
      write_cell_row(out, placeholder, false, true);
      all_ok = false;
    }
  }
  write_errors(out, cells);

  if (fit_sizes.size() < 3) {
    out << "# fit skipped: fewer than 3 converged sizes\n";
    return 1;
  }
  const ScalingFit kappa = kappa_tilde_estimate(fit_sizes, fit_mu);
  out << "# fit kappa_tilde slope=" << fmt(kappa.slope)
      << " stderr=" << fmt(kappa.stderr_slope)
      << " intercept=" << fmt(kappa.intercept) << " npoints=" << kappa.npoints
      << '\n';
  out << "# fit c_global c="
      << fmt(central_charge_estimate(fit_S, fit_mu, fit_sizes, false)) << '\n';
  if (fit_sizes.size() >= 4)
    out << "# fit c_extrapolated c="
        << fmt(central_charge_estimate(fit_S, fit_mu, fit_sizes, true)) << '\n';
  return all_ok ? 0 : 1;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.oracle)
    throw InvalidArgument("oracle: config needs an 'oracle' block");
  const OracleSpec& o = *cfg.oracle;
  write_prologue(out, cfg, "oracle");
  if (o.kind == "ising_energy") {
    if (o.h_list.empty())
      throw InvalidArgument("oracle: ising_energy needs 'h_list'");
    out << "h,energy\n";
    for (double h : o.h_list)
      out << fmt(h) << ',' << fmt(ising_ground_energy(h)) << '\n';
    return 0;
  }
  if (o.kind == "xy_energy") {
    if (o.h_list.empty())
      throw InvalidArgument("oracle: xy_energy needs 'h_list'");
    out << "h,gamma,energy\n";
    for (double h : o.h_list)
      out << fmt(h) << ',' << fmt(o.gamma) << ','
          << fmt(xy_ground_energy(h, o.gamma)) << '\n';
    return 0;
  }
  if (o.kind == "quench_rate") {
    const QuenchOracle oracle(o.h0, o.h1);
    const auto times = oracle.times();
    out << "# critical_times=";
    for (size_t i = 0; i < times.size(); ++i)
      out << (i ? ";" : "") << fmt(times[i]);
    out << '\n';
    out << "t,rate\n";
    const long ngrid = std::lround(std::ceil(o.t_max / o.dt - 1e-12));
    for (long k = 0; k <= ngrid; ++k) {
      const double t = k * o.dt;
      out << fmt(t) << ',' << fmt(oracle.rate(t)) << '\n';
    }
    return 0;
  }
  if (o.kind == "critical_times") {
    out << "m,t\n";
    const auto times = critical_times(o.h0, o.h1);
    for (size_t m = 0; m < times.size(); ++m)
      out << m << ',' << fmt(times[m]) << '\n';
    return 0;
  }
  if (o.kind == "heisenberg") {
    out << "energy\n" << fmt(heisenberg_ground_energy()) << '\n';
    return 0;
  }
  throw InvalidArgument("oracle: unknown kind '" + o.kind + "'");
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Correlator-product-state toolkit for infinite spin chains"};
  app.require_subcommand(1);

  std::string config_path, out_path, seeds_csv;
  int threads = 0;
  double cluster_tol = 0.0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_path,
                    "output CSV path (overrides config output_path)");
    sub->add_option("--seeds", seeds_csv, "comma-separated seed override");
    sub->add_option("--threads", threads, "max concurrent cells");
    sub->add_option("--cluster-tol", cluster_tol,
                    "branch clustering energy tolerance");
  };
  add_common(app.add_subcommand("groundstate",
                                "multi-seed ground-state optimisation"));
  add_common(app.add_subcommand("angle-scan",
                                "ground states across basis angles"));
  add_common(app.add_subcommand("quench", "real-time evolution after a quench"));
  add_common(app.add_subcommand("scaling", "observables across sizes + fits"));
  add_common(app.add_subcommand("oracle", "exact reference tables"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!seeds_csv.empty()) {
      cfg.seeds.clear();
      std::stringstream ss(seeds_csv);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
      if (cfg.seeds.empty())
        throw InvalidArgument("--seeds: no seeds parsed");
    }
    if (threads > 0) cfg.threads = threads;
    if (cluster_tol > 0) cfg.cluster_tol = cluster_tol;
    if (!out_path.empty()) cfg.output_path = out_path;

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!cfg.output_path.empty()) {
      file.open(cfg.output_path, std::ios::binary | std::ios::trunc);
      if (!file)
        throw Error("cannot open output file " + cfg.output_path);
      os = &file;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "groundstate") return cmd_groundstate(cfg, *os);
    if (sub == "angle-scan") return cmd_angle_scan(cfg, *os);
    if (sub == "quench") return cmd_quench(cfg, *os);
    if (sub == "scaling") return cmd_scaling(cfg, *os);
    if (sub == "oracle") return cmd_oracle(cfg, *os);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace ucps
