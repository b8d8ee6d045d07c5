#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "critsys/coupling.hpp"
#include "critsys/errors.hpp"
#include "critsys/experiments.hpp"
#include "critsys/params.hpp"
#include "critsys/radial.hpp"
#include "critsys/solver.hpp"

namespace critsys {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::ordered_json;

struct RunConfig {
  int N = 6;
  double mu1 = 1.0;
  double mu2 = 1.0;
  std::optional<double> beta;
  std::optional<double> lambda1;  // absolute values; when absent -lambda_fraction * lambda_1(Omega)
  std::optional<double> lambda2;
  double lambda_fraction = 0.9;
  double R = 1.0;
  int M = 2048;
  double grading = 1.0;  // 1 = uniform, q > 1 = r_i = R (i/M)^q
  std::string mode = "two_constraint";
  std::string init = "automatic";
  std::vector<double> eps;
  double tol = 1e-7;
  int max_iter = 100000;
  std::vector<double> betas{-1.0, -10.0, -100.0, -1000.0, -10000.0};
  std::vector<double> radii{0.3, 0.2, 0.15, 0.1, 0.07, 0.05};
  std::optional<double> beta_max;
  int branch_steps = 200;
  std::string out = "critsys_out";
  std::uint64_t seed = 1;
  int jobs = 1;
};

inline json to_json(const RunConfig& c) {
  json j;
  j["N"] = c.N;
  j["mu1"] = c.mu1;
  j["mu2"] = c.mu2;
  j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
  j["lambda1"] = c.lambda1 ? json(*c.lambda1) : json(nullptr);
  j["lambda2"] = c.lambda2 ? json(*c.lambda2) : json(nullptr);
  j["lambda_fraction"] = c.lambda_fraction;
  j["R"] = c.R;
  j["M"] = c.M;
  j["grading"] = c.grading;
  j["mode"] = c.mode;
  j["init"] = c.init;
  j["eps"] = c.eps;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["betas"] = c.betas;
  j["radii"] = c.radii;
  j["beta_max"] = c.beta_max ? json(*c.beta_max) : json(nullptr);
  j["branch_steps"] = c.branch_steps;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  return j;
}

// Fills c from a JSON object; unknown keys are rejected.
inline void merge_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  auto opt = [&](const json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "N") c.N = v.get<int>();
      else if (k == "mu1") c.mu1 = v.get<double>();
      else if (k == "mu2") c.mu2 = v.get<double>();
      else if (k == "beta") c.beta = opt(v);
      else if (k == "lambda1") c.lambda1 = opt(v);
      else if (k == "lambda2") c.lambda2 = opt(v);
      else if (k == "lambda_fraction") c.lambda_fraction = v.get<double>();
      else if (k == "R") c.R = v.get<double>();
      else if (k == "M") c.M = v.get<int>();
      else if (k == "grading") c.grading = v.get<double>();
      else if (k == "mode") c.mode = v.get<std::string>();
      else if (k == "init") c.init = v.get<std::string>();
      else if (k == "eps") c.eps = v.get<std::vector<double>>();
      else if (k == "tol") c.tol = v.get<double>();
      else if (k == "max_iter") c.max_iter = v.get<int>();
      else if (k == "betas") c.betas = v.get<std::vector<double>>();
      else if (k == "radii") c.radii = v.get<std::vector<double>>();
      else if (k == "beta_max") c.beta_max = opt(v);
      else if (k == "branch_steps") c.branch_steps = v.get<int>();
      else if (k == "out") c.out = v.get<std::string>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "jobs") c.jobs = v.get<int>();
      else throw ConfigError("config: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  RunConfig c;
  try {
    merge_json(c, json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline Grading grading_of(const RunConfig& c) { return c.grading > 1.0 ? Grading::power(c.grading) : Grading::uniform(); }

inline GridPtr grid_of(const RunConfig& c) { return make_grid(c.N, c.R, c.M, grading_of(c)); }

// Parameter checks shared by all subcommands; PDE runs additionally resolve and
// check lambda against the discrete lambda_1(Omega).
inline void validate(const RunConfig& c, bool pde, bool need_beta) {
  if (c.N < 5) throw ConfigError("N >= 5 is assumed throughout (the critical exponent 2N/(N-2) < 4 regime); got N = " + std::to_string(c.N));
  if (!(c.mu1 > 0.0) || !(c.mu2 > 0.0)) throw ConfigError("mu1, mu2 must be positive");
  if (need_beta && (!c.beta || *c.beta == 0.0)) throw ConfigError("beta != 0 required");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!pde) return;
  if (!(c.R > 0.0)) throw ConfigError("R must be positive");
  if (c.M < 16) throw ConfigError("M >= 16 required");
  if (c.grading < 1.0) throw ConfigError("grading exponent must be >= 1");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.mode != "two_constraint" && c.mode != "mountain_pass" && c.mode != "subcritical")
    throw ConfigError("mode must be two_constraint, mountain_pass or subcritical");
  if (c.init != "automatic" && c.init != "instanton_pair" && c.init != "disjoint_bumps" && c.init != "disjoint_bumps_swapped")
    throw ConfigError("init must be automatic, instanton_pair, disjoint_bumps or disjoint_bumps_swapped");
}

// Fills absent lambdas from lambda_fraction and checks -lambda_1(Omega) < lambda_i < 0.
inline void resolve_lambdas(RunConfig& c) {
  const double lam1 = first_eigenvalue(*grid_of(c));
  if (!c.lambda1) c.lambda1 = -c.lambda_fraction * lam1;
  if (!c.lambda2) c.lambda2 = -c.lambda_fraction * lam1;
  for (double l : {*c.lambda1, *c.lambda2})
    if (!(l > -lam1 && l < 0.0))
      throw ConfigError("lambda_i must lie in (-lambda_1(Omega), 0) = (" + std::to_string(-lam1) + ", 0); got " + std::to_string(l));
}

inline SystemParams params_of(const RunConfig& c) {
  SystemParams P;
  P.N = c.N;
  P.mu1 = c.mu1;
  P.mu2 = c.mu2;
  P.beta = c.beta.value_or(0.0);
  P.lambda1 = c.lambda1.value_or(0.0);
  P.lambda2 = c.lambda2.value_or(0.0);
  return P;
}

inline SolverOptions solver_options_of(const RunConfig& c) {
  SolverOptions o;
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  return o;
}

inline InitPreset preset_of(const std::string& s) {
  if (s == "instanton_pair") return InitPreset::instanton_pair;
  if (s == "disjoint_bumps") return InitPreset::disjoint_bumps;
  if (s == "disjoint_bumps_swapped") return InitPreset::disjoint_bumps_swapped;
  return InitPreset::automatic;
}

// Output directory: CRITSYS_OUT wins over the config and the flags.
inline std::filesystem::path output_dir(const RunConfig& c) {
  const char* env = std::getenv("CRITSYS_OUT");
  std::filesystem::path p = env && *env ? std::filesystem::path(env) : std::filesystem::path(c.out);
  std::filesystem::create_directories(p);
  return p;
}

inline json envelope(const RunConfig& c, const char* command) {
  json j;
  j["tool"] = "critsys";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = to_json(c);
  return j;
}

inline json to_json(const CouplingSolution& s) {
  return json{{"k", s.k}, {"l", s.l}, {"is_minimal_k", s.is_minimal_k}, {"residual", s.residual}, {"clamped", s.clamped}};
}

inline json to_json(const JacobianResult& r) {
  return json{{"J", {{r.J[0][0], r.J[0][1]}, {r.J[1][0], r.J[1][1]}}}, {"det", r.det}, {"det_closed_form", r.det_closed_form}};
}

inline json to_json(const EnergyReport& r) {
  json j;
  j["B"] = r.B;
  j["B_mu1"] = r.B_mu1;
  j["B_mu2"] = r.B_mu2;
  j["A"] = r.A ? json(*r.A) : json(nullptr);
  j["S"] = r.S;
  j["lambda1_omega"] = r.lambda1_omega;
  json t = json::array();
  for (const auto& x : r.thresholds) t.push_back({{"name", x.name}, {"value", x.value}, {"margin", x.value - r.B}});
  j["thresholds"] = t;
  j["residual_norm"] = r.residual_norm;
  j["res_u"] = r.res_u;
  j["res_v"] = r.res_v;
  j["iterations"] = r.iterations;
  j["newton_steps"] = r.newton_steps;
  j["nehari_identity_gap"] = r.nehari_identity_gap;
  j["ratio_deviation"] = std::isfinite(r.ratio_deviation) ? json(r.ratio_deviation) : json(nullptr);
  j["max_energy_increase"] = r.max_energy_increase;
  j["mode"] = r.mode;
  j["basin"] = r.basin;
  json b = json::array();
  for (const auto& x : r.basins)
    b.push_back({{"preset", x.preset}, {"converged", x.converged}, {"resolved", x.resolved}, {"energy", x.energy},
                 {"residual", x.residual}, {"iterations", x.iterations}});
  j["basins"] = b;
  json e = json::array();
  for (const auto& [eps, E] : r.eps_energies) e.push_back({{"eps", eps}, {"energy", E}});
  j["eps_energies"] = e;
  j["warnings"] = r.warnings;
  return j;
}

inline json to_json(const std::vector<ThresholdCheck>& t) {
  json a = json::array();
  for (const auto& c : t) a.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin}, {"passed", c.passed}});
  return a;
}

inline json to_json(const SignChangeReport& s) {
  return json{{"residual", s.residual},
              {"dual_residual", s.dual_residual},
              {"J_w", s.J_w},
              {"J_bound", s.J_bound},
              {"J_margin", s.J_margin},
              {"positive_part_error", s.positive_part_error},
              {"disjoint_fraction", s.disjoint_fraction},
              {"consistency_constant", s.consistency_constant},
              {"regime", s.unverified_regime ? "unverified regime" : "verified"}};
}

inline json to_json(const SmallBallReport& r) {
  json j;
  j["N"] = r.N;
  j["threshold"] = r.threshold;
  j["predicted_exponent"] = r.predicted_exponent;
  j["slope"] = r.slope;
  j["intercept"] = r.intercept;
  j["C1_hat"] = r.C1_hat;
  j["C2_hat"] = std::isfinite(r.C2_hat) ? json(r.C2_hat) : json(nullptr);
  j["fitted"] = r.fitted;
  j["all_deficits_positive"] = r.all_deficits_positive;
  json p = json::array();
  for (const auto& x : r.points)
    p.push_back({{"R", x.R}, {"J", x.J}, {"J_fine", x.J_fine}, {"J_coarse", x.J_coarse}, {"deficit", x.deficit},
                 {"converged", x.converged}, {"fitted", x.fitted}, {"error", x.error}});
  j["points"] = p;
  return j;
}

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Column order is part of the output contract.
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepResult>& pts) {
  os << "beta,B_beta,overlap,beta_overlap,support_u,support_v,signchange_residual\n";
  for (const auto& p : pts)
    os << fmt(p.beta) << ',' << fmt(p.B_beta) << ',' << fmt(p.overlap) << ',' << fmt(p.beta_overlap) << ','
       << fmt(p.support_radius_u) << ',' << fmt(p.support_radius_v) << ',' << fmt(p.sign_changing_residual) << '\n';
}

inline void write_branch_csv(std::ostream& os, const std::vector<BranchPoint>& b) {
  os << "beta,k,l,residual,above_min_threshold\n";
  for (const auto& x : b)
    os << fmt(x.beta) << ',' << fmt(x.sol.k) << ',' << fmt(x.sol.l) << ',' << fmt(x.sol.residual) << ','
       << (x.above_min_threshold ? 1 : 0) << '\n';
}

inline void write_pair_csv(std::ostream& os, const FieldPair& w) { write_csv(os, w.grid(), {"u", "v"}, {w.u.values(), w.v.values()}); }

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << s;
}

}  // namespace critsys
