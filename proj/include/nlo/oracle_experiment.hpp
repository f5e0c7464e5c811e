#pragma once

// The "oracle" subcommand: dense reference results for a config with
// Psi(s) = s^2, written next to (not over) the production outputs.

#include "nlo/experiment.hpp"
#include "nlo/oracle.hpp"

namespace nlo::experiment {

inline Outcome run_oracle(const ExperimentConfig& c, const std::optional<fs::path>& out_dir = std::nullopt) {
  if (c.problem != "dirichlet" && c.problem != "eigen")
    throw ConfigError("/problem: the oracle subcommand supports \"dirichlet\" and \"eigen\"");
  if (c.young.family != "power" || c.young.p != 2.0)
    throw ConfigError("/young: dense oracles need family \"power\" with p = 2");
  const EnergyAssembly A = assemble_config(c);
  json j{{"spec_version", kSpecVersion},
         {"kind", "oracle_report"},
         {"problem", c.problem},
         {"config_digest", c.digest()},
         {"grid", A.grid()->describe()},
         {"kernel", A.kernel().describe()},
         {"young", A.young().describe()}};
  GridFunction u;
  if (c.problem == "dirichlet") {
    u = oracle::dirichlet_solution(A, c.forcing.build(A.grid(), c.seed));
    j["max_abs"] = u.max_abs();
  } else {
    auto ep = oracle::principal_eigenpair(A);
    u = std::move(ep.eigenfunction);
    j["lambda1"] = ep.lambda1;
  }
  const double s = A.grid()->inradius();
  const double closed = tail_integral(A.kernel(), s);
  const double brute = tail_integral_quadrature(A.kernel(), s);
  j["quadrature"] = {{"s", s},
                     {"tail_integral", closed},
                     {"tail_integral_brute_force", brute},
                     {"relative_difference", std::abs(closed - brute) / std::abs(brute)}};

  const fs::path root = detail::output_root(c, out_dir);
  fs::create_directories(root);
  Outcome o;
  detail::emit(o, root / "oracle_solution.csv", detail::solution_csv(u));
  detail::emit(o, root / "oracle.json", j.dump(2) + "\n");
  o.summary = "problem=" + c.problem + " oracle=dense";
  return o;
}

}  // namespace nlo::experiment
