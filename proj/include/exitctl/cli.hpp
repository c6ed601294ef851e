#pragma once

// Subcommand drivers behind tools/exitctl. Each returns the process exit
// code: 0 ok/pass, 1 config or input error, 2 solver non-convergence,
// 3 verification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "exitctl/applications.hpp"
#include "exitctl/config.hpp"
#include "exitctl/error.hpp"
#include "exitctl/grid.hpp"
#include "exitctl/hypothesis.hpp"
#include "exitctl/integrate.hpp"
#include "exitctl/solver.hpp"
#include "exitctl/verifier.hpp"

namespace exitctl {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNotConverged = 2, kExitVerifyFail = 3 };

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& dir, const std::string& file) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / file, std::ios::binary);
  if (!os) throw Error(ErrorCode::Config, "cannot write " + (dir / file).string());
  return os;
}

inline ResidualOptions residual_options(const RunConfig& c) {
  ResidualOptions o;
  o.order = static_cast<int>(c.integer("verify", "order", 1));
  o.target_band = c.real("verify", "target_band", 0.0);
  if (c.has("verify", "window_lower") || c.has("verify", "window_upper")) {
    o.window_lower = c.vec("verify", "window_lower");
    o.window_upper = c.vec("verify", "window_upper");
  }
  return o;
}

/// Fast marching needs f = a over the unit ball and l independent of a.
inline ValueField fast_marching_for(const Instance& in, const Grid& g, const SolverParams& sp) {
  if (in.problem.name != "eikonal")
    throw Error(ErrorCode::Config, "fast_marching is only available for the eikonal instance");
  const ControlProblem& p = in.problem;
  const Vec a0(p.state_dim, 0.0);
  return solve_fast_marching([&p, a0](const Vec& x) { return eval_lagrangian(p, x, a0); }, p.target, g,
                             sp.target_tolerance);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::NotConverged ? kExitNotConverged : kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace detail

inline int run_solve(const RunConfig& c, const std::filesystem::path& out, std::ostream& os, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Instance in = build_instance(c);
    const Grid g = build_grid(c);
    const SolverParams sp = build_solver_params(c);
    const std::string method = c.word("solver", "method", "value_iteration");
    ValueField w;
    if (method == "value_iteration") w = solve_value_iteration(in.problem, g, sp);
    else if (method == "fast_marching") w = detail::fast_marching_for(in, g, sp);
    else throw Error(ErrorCode::Config, "method must be value_iteration or fast_marching");
    auto f = detail::open_out(out, "value.csv");
    write_value_csv(f, w);
    const ResidualReport rep = hjb_residual(w, in.problem, detail::residual_options(c));
    char buf[96];
    std::snprintf(buf, sizeof buf, "SOLVED sweeps=%zu residual=%.6g", w.sweeps, rep.max_abs);
    os << buf << '\n';
    return int(kExitOk);
  });
}

inline int run_verify(const RunConfig& c, const std::filesystem::path& out, const std::filesystem::path& candidate,
                      std::ostream& os, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Instance in = build_instance(c);
    if (candidate.empty()) throw Error(ErrorCode::Config, "verify needs --candidate");
    std::ifstream is(candidate);
    if (!is) throw Error(ErrorCode::Config, "cannot read " + candidate.string());
    ValueField w = read_value_csv(is);
    if (w.grid.dim() != in.problem.state_dim)
      throw Error(ErrorCode::DimensionMismatch, "candidate dimension differs from the instance");
    if (c.flag("verify", "target_roles", true))
      assign_target_roles(w, in.problem.target, std::max(in.problem.target.tolerance(), 0.5 * w.grid.h_min()));
    ResidualReport rep = hjb_residual(w, in.problem, detail::residual_options(c));
    const ControlProblem& p = in.problem;
    rep.side = check_side_condition(w, c.real("verify", "lower_bound", -1e-9),
                                    [&p](const Vec& x) { return p.exit_value(x); });
    const double tol = c.real("verify", "residual_tol", 10.0 * rep.h);
    auto f = detail::open_out(out, "residual.csv");
    write_residual_csv(f, w, rep);
    const std::string line = summary_line(rep, tol);
    os << line << '\n';
    return line.rfind("PASS", 0) == 0 ? int(kExitOk) : int(kExitVerifyFail);
  });
}

inline int run_simulate(const RunConfig& c, const std::filesystem::path& out, std::ostream& os, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Instance in = build_instance(c);
    const Vec x0 = c.vec("simulate", "x0");
    if (x0.size() != in.problem.state_dim) throw Error(ErrorCode::DimensionMismatch, "x0 dimension differs");
    const ControlSignal u = parse_signal(c.text("simulate", "signal"));
    IntegrateOptions opt;
    opt.record_every = static_cast<std::size_t>(c.integer("simulate", "record_every", 1));
    const Trajectory tr = integrate(in.problem, x0, u, c.real("simulate", "dt"), c.real("simulate", "horizon"), opt);
    auto f = detail::open_out(out, "trajectory.csv");
    write_trajectory_csv(f, tr);
    char buf[160];
    std::snprintf(buf, sizeof buf, "SIMULATED exited=%s exit_time=%.10g cost=%.10g", tr.exited ? "true" : "false",
                  tr.exit_time, tr.final_cost());
    os << buf << '\n';
    return int(kExitOk);
  });
}

inline int run_hypotheses(const RunConfig& c, const std::filesystem::path& out, std::ostream& os,
                          std::ostream& err) {
  return detail::guarded(err, [&] {
    const Instance in = build_instance(c);
    H5Options h5;
    const char* box = c.has("hypotheses", "lower") ? "hypotheses" : "grid";
    h5.lower = c.vec(box, "lower");
    h5.upper = c.vec(box, "upper");
    h5.probes = in.h5_probes;
    h5.seed = static_cast<std::uint64_t>(c.integer("hypotheses", "seed", 12345));
    h5.max_switches = static_cast<int>(c.integer("hypotheses", "max_switches", 3));
    const auto n_states = static_cast<std::size_t>(c.integer("hypotheses", "states", 100));
    const auto n_signals = static_cast<std::size_t>(c.integer("hypotheses", "signals", 10));
    const H5Report r5 = check_h5_sampled(in.problem, n_states, n_signals, c.real("hypotheses", "horizon", 1.0), h5);

    H6Options o6;
    o6.dt_rel = c.real("hypotheses", "dt_rel", o6.dt_rel);
    const auto horizons =
        c.has("hypotheses", "h6_horizons") ? c.list("hypotheses", "h6_horizons") : default_h6_horizons();
    const H6Report r6 = check_h6_escape(in.problem, in.escape_families, horizons, o6);

    auto f = detail::open_out(out, "hypotheses.txt");
    char buf[256];
    std::snprintf(buf, sizeof buf, "H5 %s samples=%zu violations=%zu min_positive_cost=%.6g\n", r5.verdict(),
                  r5.samples, r5.violations.size(), r5.min_positive_cost);
    f << buf;
    for (const auto& v : r5.violations) {
      f << "H5_VIOLATION x0=" << detail::vec_text(v.x0) << " signal=" << v.descriptor;
      std::snprintf(buf, sizeof buf, " horizon=%.6g cost=%.6g\n", v.horizon, v.cost);
      f << buf;
    }
    for (const auto& r : r6.families) {
      std::snprintf(buf, sizeof buf, "H6 %s %s exponent=%.6g limit=%.10g blowup=%s\n", r.name.c_str(),
                    to_string(r.verdict), r.exponent, r.limit, r.blowup ? "true" : "false");
      f << buf;
      auto e = detail::open_out(out, "escape_" + r.name + ".csv");
      e << "# T,cost,max_norm\n";
      for (std::size_t i = 0; i < r.costs.size(); ++i)
        e << detail::fmt17(r.horizons[i]) << ',' << detail::fmt17(r.costs[i]) << ','
          << detail::fmt17(r.max_norms[i]) << '\n';
    }
    os << "H5 " << r5.verdict() << " samples=" << r5.samples << '\n';
    for (const auto& r : r6.families) os << "H6 " << r.name << ' ' << to_string(r.verdict) << '\n';
    return int(kExitOk);
  });
}

/// Loads the config file and dispatches on the subcommand name.
inline int run_command(const std::string& cmd, const std::filesystem::path& config, const std::filesystem::path& out,
                       const std::filesystem::path& candidate, std::ostream& os, std::ostream& err) {
  RunConfig c;
  const int rc = detail::guarded(err, [&] {
    std::ifstream is(config);
    if (!is) throw Error(ErrorCode::Config, "cannot read config " + config.string());
    c = parse_config(is);
    return int(kExitOk);
  });
  if (rc != kExitOk) return rc;
  if (cmd == "solve") return run_solve(c, out, os, err);
  if (cmd == "verify") return run_verify(c, out, candidate, os, err);
  if (cmd == "simulate") return run_simulate(c, out, os, err);
  if (cmd == "hypotheses") return run_hypotheses(c, out, os, err);
  err << "error: unknown subcommand '" << cmd << "'\n";
  return kExitInput;
}

}  // namespace exitctl
