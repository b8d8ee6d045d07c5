// critsys: command-line front end for the coupled critical system.
#include <array>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "critsys/checks.hpp"
#include "critsys/coupling.hpp"
#include "critsys/experiments.hpp"
#include "critsys/io.hpp"
#include "critsys/solver.hpp"

using namespace critsys;

namespace {

enum Exit { kOk = 0, kConfig = 1, kAlgebra = 2, kSolver = 3 };

// Flags mirror RunConfig; a flag given on the command line overrides --config.
struct Flags {
  std::string config;
  RunConfig v;
  CLI::Option *N, *mu1, *mu2, *beta, *l1, *l2, *lf, *R, *M, *grading, *mode, *init, *eps, *tol, *max_iter, *betas, *radii,
      *beta_max, *steps, *out, *seed, *jobs;
  double beta_v = 0.0, l1_v = 0.0, l2_v = 0.0, beta_max_v = 0.0;
  bool quick = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    N = app->add_option("--N", v.N, "dimension (>= 5)");
    mu1 = app->add_option("--mu1", v.mu1);
    mu2 = app->add_option("--mu2", v.mu2);
    beta = app->add_option("--beta", beta_v);
    l1 = app->add_option("--lambda1", l1_v);
    l2 = app->add_option("--lambda2", l2_v);
    lf = app->add_option("--lambda-fraction", v.lambda_fraction, "lambda_i = -fraction * lambda_1(Omega) when not given");
    R = app->add_option("--R", v.R, "ball radius");
    M = app->add_option("--M", v.M, "grid intervals");
    grading = app->add_option("--grading", v.grading, "power grading exponent, 1 = uniform");
    mode = app->add_option("--mode", v.mode, "two_constraint | mountain_pass | subcritical");
    init = app->add_option("--init", v.init, "automatic | instanton_pair | disjoint_bumps | disjoint_bumps_swapped");
    eps = app->add_option("--eps", v.eps, "subcritical schedule")->delimiter(',');
    tol = app->add_option("--tol", v.tol);
    max_iter = app->add_option("--max-iter", v.max_iter);
    betas = app->add_option("--betas", v.betas)->delimiter(',');
    radii = app->add_option("--radii", v.radii)->delimiter(',');
    beta_max = app->add_option("--beta-max", beta_max_v, "continue the coupling branch up to this beta");
    steps = app->add_option("--branch-steps", v.branch_steps);
    out = app->add_option("--out", v.out, "output directory");
    seed = app->add_option("--seed", v.seed);
    jobs = app->add_option("--jobs", v.jobs);
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_config(config);
    auto take = [](CLI::Option* o, auto& dst, const auto& src) {
      if (o->count() > 0) dst = src;
    };
    take(N, c.N, v.N);
    take(mu1, c.mu1, v.mu1);
    take(mu2, c.mu2, v.mu2);
    if (beta->count()) c.beta = beta_v;
    if (l1->count()) c.lambda1 = l1_v;
    if (l2->count()) c.lambda2 = l2_v;
    take(lf, c.lambda_fraction, v.lambda_fraction);
    take(R, c.R, v.R);
    take(M, c.M, v.M);
    take(grading, c.grading, v.grading);
    take(mode, c.mode, v.mode);
    take(init, c.init, v.init);
    take(eps, c.eps, v.eps);
    take(tol, c.tol, v.tol);
    take(max_iter, c.max_iter, v.max_iter);
    take(betas, c.betas, v.betas);
    take(radii, c.radii, v.radii);
    if (beta_max->count()) c.beta_max = beta_max_v;
    take(steps, c.branch_steps, v.branch_steps);
    take(out, c.out, v.out);
    take(seed, c.seed, v.seed);
    take(jobs, c.jobs, v.jobs);
    return c;
  }
};

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

int fail(int code, const std::string& kind, const std::string& msg) {
  json e;
  e["errors"] = json::array({{{"kind", kind}, {"message", msg}}});
  std::cerr << e.dump() << '\n';
  return code;
}

int run_coupling(RunConfig c) {
  validate(c, false, false);
  SystemParams P = params_of(c);
  json j = envelope(c, "coupling");
  const double b0 = solve_beta0(P);
  j["p"] = P.p();
  j["beta0"] = b0;
  j["beta0_target"] = beta0_target(P);
  j["g_beta0"] = g_of_beta(P, b0);
  if (c.beta) {
    if (*c.beta <= 0.0) throw ConfigError("coupling: the (k, l) system needs beta > 0");
    const auto s = solve_k0_l0(P);
    j["k0"] = s.k;
    j["l0"] = s.l;
    j["solution"] = to_json(s);
    j["jacobian"] = to_json(jacobian_at(P, s));
    j["above_beta0"] = *c.beta > b0;
    const auto u = check_region_uniqueness(P, s, 20000);
    j["region_uniqueness"] = {{"passed", u.passed}, {"samples", u.samples}, {"violations", u.violations.size()}};
  }
  if (c.beta_max) {
    const auto br = continue_branch(P, *c.beta_max, c.branch_steps);
    const auto dir = output_dir(c);
    std::ostringstream os;
    write_branch_csv(os, br);
    write_text(dir / "branch.csv", os.str());
    j["branch_csv"] = (dir / "branch.csv").string();
    j["branch_points"] = br.size();
  }
  emit(j);
  return kOk;
}

int run_solve(RunConfig c) {
  validate(c, true, true);
  resolve_lambdas(c);
  const SystemParams P = params_of(c);
  const auto g = grid_of(c);
  const auto opt = solver_options_of(c);
  const auto dir = output_dir(c);
  json j = envelope(c, "solve");
  CoupledResult r;
  if (c.mode == "subcritical") {
    if (c.eps.empty()) throw ConfigError("subcritical mode needs --eps");
    int stage = 0;
    json stages = json::array();
    r = solve_subcritical(P, g, c.eps, opt, SolveMode::mountain_pass, [&](double e, const FieldPair& w, const SolveStats& st) {
      std::ostringstream os;
      write_pair_csv(os, w);
      const auto name = "stage_" + std::to_string(++stage) + ".csv";
      write_text(dir / name, os.str());
      stages.push_back({{"eps", e}, {"energy", st.energy}, {"residual", st.residual}, {"csv", name}});
    });
    j["stages"] = stages;
  } else {
    const auto mode = c.mode == "mountain_pass" ? SolveMode::mountain_pass : SolveMode::two_constraint;
    r = solve_coupled(P, g, mode, preset_of(c.init), opt);
  }
  std::ostringstream os;
  write_pair_csv(os, r.pair);
  write_text(dir / "pair.csv", os.str());
  j["report"] = to_json(r.report);
  j["thresholds"] = to_json(threshold_report(P, r.report));
  write_text(dir / "report.json", j.dump(2) + "\n");
  emit(j);
  return kOk;
}

int run_sweep(RunConfig c) {
  validate(c, true, false);
  resolve_lambdas(c);
  c.beta = c.betas.empty() ? 0.0 : c.betas.front();
  const SystemParams P = params_of(c);
  const auto g = grid_of(c);
  const auto dir = output_dir(c);
  const auto res = beta_sweep(P, g, c.betas, solver_options_of(c));
  SystemParams Pf = P;
  Pf.beta = c.betas.back();
  json j = envelope(c, "sweep");
  j["tail_ratio"] = res.tail_ratio;
  j["tail_decreasing"] = res.tail_decreasing;
  j["sign_changing"] = to_json(sign_changing_check(Pf, res.final_pair, res.final_report));
  j["thresholds"] = to_json(threshold_report(Pf, res.final_report));
  json pts = json::array();
  for (const auto& p : res.points) pts.push_back({{"beta", p.beta}, {"basin", p.basin}, {"basin_switch", p.basin_switch}, {"residual", p.residual}});
  j["points"] = pts;
  std::ostringstream os;
  write_sweep_csv(os, res.points);
  write_text(dir / "sweep.csv", os.str());
  std::ostringstream fp;
  write_pair_csv(fp, res.final_pair);
  write_text(dir / "sweep_final_pair.csv", fp.str());
  write_text(dir / "sweep.json", j.dump(2) + "\n");
  emit(j);
  return kOk;
}

int run_smallball(RunConfig c) {
  validate(c, true, false);
  resolve_lambdas(c);
  const SystemParams P = params_of(c);
  SmallBallOptions so;
  so.intervals = c.M;
  so.grading = c.grading > 1.0 ? c.grading : 3.0;
  so.jobs = c.jobs;
  so.solver = solver_options_of(c);
  const auto rep = small_ball_law(P, c.radii, so);
  json j = envelope(c, "smallball");
  j["fit"] = to_json(rep);
  write_text(output_dir(c) / "smallball.json", j.dump(2) + "\n");
  emit(j);
  int failed = 0;
  for (const auto& p : rep.points) failed += !p.converged;
  return failed ? kSolver : kOk;
}

int run_check(RunConfig c, bool quick) {
  validate(c, false, false);
  const auto res = quick ? quick_checks() : full_checks(c.seed);
  json fails = json::array();
  std::printf("%-40s %-6s %-14s %-14s %s\n", "invariant", "status", "value", "limit", "detail");
  for (const auto& r : res) {
    std::printf("%-40s %-6s %-14.6g %-14.6g %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.value, r.limit, r.detail.c_str());
    if (!r.passed) fails.push_back({{"kind", "invariant"}, {"name", r.name}, {"value", r.value}, {"limit", r.limit}, {"detail", r.detail}});
  }
  if (!fails.empty()) {
    std::cerr << json{{"errors", fails}}.dump() << '\n';
    return kSolver;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critsys: least-energy solutions of a critically coupled elliptic system on a ball"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::array<Flags, 5> flags;
  auto* coupling = app.add_subcommand("coupling", "solve the (k, l) coupling system, beta0, Jacobian, branch");
  auto* solve = app.add_subcommand("solve", "least-energy coupled pair on the ball");
  auto* sweep = app.add_subcommand("sweep", "beta -> -infinity phase-separation sweep");
  auto* smallball = app.add_subcommand("smallball", "small-ball energy deficit law");
  auto* check = app.add_subcommand("check", "invariant suite");
  const std::array<CLI::App*, 5> subs{coupling, solve, sweep, smallball, check};
  for (std::size_t i = 0; i < subs.size(); ++i) flags[i].attach(subs[i]);
  check->add_flag("--quick", flags[4].quick, "coupling-algebra invariants only");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }
  try {
    if (coupling->parsed()) return run_coupling(flags[0].resolve());
    if (solve->parsed()) return run_solve(flags[1].resolve());
    if (sweep->parsed()) return run_sweep(flags[2].resolve());
    if (smallball->parsed()) return run_smallball(flags[3].resolve());
    return run_check(flags[4].resolve(), flags[4].quick);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const AdmissibilityError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const BracketError& e) {
    return fail(kAlgebra, "algebra", e.what());
  } catch (const ContinuationError& e) {
    return fail(kAlgebra, "algebra", e.what());
  } catch (const DomainError& e) {
    return fail(coupling->parsed() ? kAlgebra : kConfig, "domain", e.what());
  } catch (const Error& e) {
    return fail(kSolver, "solver", e.what());
  } catch (const std::exception& e) {
    return fail(kSolver, "internal", e.what());
  }
}
