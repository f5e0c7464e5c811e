#pragma once

// Declarative experiments: a JSON config wires a grid, kernel, Young
// function and problem; results go to CSV and versioned JSON files.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlo/energy.hpp"
#include "nlo/errors.hpp"
#include "nlo/grid.hpp"
#include "nlo/inequalities.hpp"
#include "nlo/kernel.hpp"
#include "nlo/solvers.hpp"
#include "nlo/young.hpp"

namespace nlo::experiment {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kSpecVersion = "1.0";

inline const std::set<std::string>& supported_spec_versions() {
  static const std::set<std::string> v{"1.0"};
  return v;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

/// Typed access to one JSON object that rejects keys not declared.
class Fields {
 public:
  Fields(const json& j, std::string where, std::initializer_list<const char*> allowed) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) fail(path(k), "unknown key");
  }

  bool has(const char* k) const { return j_.contains(k); }
  std::string path(const std::string& k) const { return where_ + "/" + k; }
  const std::string& where() const { return where_; }

  const json& at(const char* k) const {
    if (!has(k)) fail(path(k), "missing required key");
    return j_.at(k);
  }
  double number(const char* k) const {
    const json& v = at(k);
    if (!v.is_number()) fail(path(k), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path(k), "expected a finite number");
    return x;
  }
  double number(const char* k, double fallback) const { return has(k) ? number(k) : fallback; }
  long long integer(const char* k) const {
    const json& v = at(k);
    if (!v.is_number_integer()) fail(path(k), "expected an integer");
    return v.get<long long>();
  }
  long long integer(const char* k, long long fallback) const { return has(k) ? integer(k) : fallback; }
  std::string string(const char* k) const {
    const json& v = at(k);
    if (!v.is_string()) fail(path(k), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const char* k, const std::string& fallback) const { return has(k) ? string(k) : fallback; }
  std::vector<double> numbers(const char* k) const {
    const json& v = at(k);
    if (!v.is_array()) fail(path(k), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        fail(path(k) + "/" + std::to_string(i), "expected a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const char* k) const {
    const json& v = at(k);
    if (!v.is_array()) fail(path(k), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(path(k) + "/" + std::to_string(i), "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string where_;
};

template <class F>
auto guarded(const std::string& where, F&& make) {
  try {
    return make();
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(path.string() + ": cannot read file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace detail

struct GridSpec {
  std::string shape = "interval";
  std::vector<double> bounds{-1.0, 1.0};
  Point center{0.0, 0.0};
  double radius = 1.0;
  int n = 32;

  int dim() const { return shape == "interval" ? 1 : 2; }
  GridPtr build() const {
    if (shape == "interval") return make_interval_grid(bounds[0], bounds[1], n);
    if (shape == "box") return make_box_grid(bounds[0], bounds[1], bounds[2], bounds[3], n);
    return make_ball_grid(center, radius, n);
  }
  json to_json() const {
    json j{{"shape", shape}, {"n", n}};
    if (shape == "ball") {
      j["center"] = {center[0], center[1]};
      j["radius"] = radius;
    } else {
      j["bounds"] = bounds;
    }
    return j;
  }
};

struct KernelSpec {
  std::string family = "fractional";
  double alpha = 0.5;
  double inner = 0.5, outer = 0.5;
  double beta = 1.0;
  double mu = 0.0;

  Kernel build(int dim) const {
    if (family == "fractional") return Kernel::fractional(alpha, dim);
    if (family == "two_exponent") return Kernel::two_exponent(inner, outer, dim);
    if (family == "log") return Kernel::log_kernel(beta, dim, mu);
    return Kernel::piecewise_dyadic(mu, dim);
  }
  json to_json() const {
    json j{{"family", family}};
    if (family == "fractional") j["alpha"] = alpha;
    if (family == "two_exponent") {
      j["inner"] = inner;
      j["outer"] = outer;
    }
    if (family == "log") {
      j["beta"] = beta;
      j["mu"] = mu;
    }
    if (family == "piecewise_dyadic") j["mu"] = mu;
    return j;
  }
};

struct YoungSpec {
  std::string family = "power";
  double p = 2.0;
  double r = 1.0;
  std::vector<PowerTerm> terms;

  YoungFunction build() const {
    if (family == "power") return YoungFunction::pure_power(p);
    if (family == "power_sum") return YoungFunction::power_sum(terms);
    return YoungFunction::log_perturbed(p, r);
  }
  json to_json() const {
    json j{{"family", family}};
    if (family == "power_sum") {
      json t = json::array();
      for (const auto& term : terms) t.push_back({term.k, term.exponent});
      j["terms"] = t;
    } else {
      j["p"] = p;
      if (family == "log_perturbed") j["r"] = r;
    }
    return j;
  }
};

struct ForcingSpec {
  std::string kind = "constant";  ///< "constant", "bump" or "random" (nonnegative)
  double value = 1.0;
  double height = 1.0;
  std::optional<double> radius;  ///< bump radius; default half the inradius
  double amplitude = 1.0;

  GridFunction build(const GridPtr& g, std::uint64_t seed) const {
    if (kind == "constant") return GridFunction(g, std::vector<double>(g->size(), value));
    if (kind == "bump") return bump(g, g->center(), radius.value_or(0.5 * g->inradius()), height);
    return random_function(g, seed, amplitude).abs();
  }
  json to_json() const {
    json j{{"kind", kind}};
    if (kind == "constant") j["value"] = value;
    if (kind == "bump") {
      j["height"] = height;
      if (radius) j["radius"] = *radius;
    }
    if (kind == "random") j["amplitude"] = amplitude;
    return j;
  }
};

struct SolverSpec {
  std::optional<double> tol;
  std::optional<int> max_iter;
  double armijo = 1e-4;
  int max_backtracks = 60;
  int path_points = 33;
  int path_iters = 200;
  bool warn_only = false;
  double pair_budget = 1e8;

  SolverOptions options() const {
    SolverOptions o;
    if (tol) o.tol = *tol;
    if (max_iter) o.max_iter = *max_iter;
    o.armijo = armijo;
    o.max_backtracks = max_backtracks;
    return o;
  }
  MountainPassOptions mountain_pass() const {
    MountainPassOptions o;
    if (tol) o.tol = *tol;
    if (max_iter) o.max_iter = *max_iter;
    o.path_points = path_points;
    o.path_iters = path_iters;
    return o;
  }
  json to_json() const {
    json j{{"armijo", armijo},           {"max_backtracks", max_backtracks}, {"path_points", path_points},
           {"path_iters", path_iters},   {"pair_budget", pair_budget},
           {"on_nonconvergence", warn_only ? "warn" : "error"}};
    if (tol) j["tol"] = *tol;
    if (max_iter) j["max_iter"] = *max_iter;
    return j;
  }
};

struct BatterySpec {
  int trials = 100;
  double amplitude = 2.0;
  std::vector<std::string> generators{"random", "sign_mixed", "bumps", "indicators"};
  std::vector<std::string> properties;  ///< empty: all
  double tolerance = 1e-9;
  double validation_slack = 0.05;
  int pair_samples = 10000;

  json to_json() const {
    return {{"trials", trials},       {"amplitude", amplitude},         {"generators", generators},
            {"properties", properties}, {"tolerance", tolerance}, {"validation_slack", validation_slack},
            {"pair_samples", pair_samples}};
  }
};

struct SweepSpec {
  std::string problem;
  /// Sorted by name; the last name varies fastest in the point order.
  std::vector<std::pair<std::string, std::vector<double>>> parameters;
};

struct ExperimentConfig {
  std::string problem;
  GridSpec grid;
  KernelSpec kernel;
  YoungSpec young;
  ForcingSpec forcing;
  std::optional<double> m;
  SolverSpec solver;
  BatterySpec battery;
  std::optional<SweepSpec> sweep;
  std::uint64_t seed = 1;
  std::string output_dir;

  /// Everything that determines the numbers; excludes output_dir and sweep.
  json canonical() const {
    json j{{"problem", problem}, {"grid", grid.to_json()},     {"kernel", kernel.to_json()},
           {"young", young.to_json()}, {"solver", solver.to_json()}, {"seed", seed}};
    if (problem == "dirichlet") j["forcing"] = forcing.to_json();
    if (m) j["reaction"] = {{"m", *m}};
    if (problem == "battery") j["battery"] = battery.to_json();
    return j;
  }
  std::string digest() const { return nlo::detail::fnv1a_hex(canonical().dump()); }
};

namespace detail {

inline const std::set<std::string>& problems() {
  static const std::set<std::string> s{"dirichlet", "sublinear", "superlinear", "eigen", "battery", "sweep"};
  return s;
}

inline GridSpec parse_grid(const json& j) {
  Fields f(j, "/grid", {"shape", "bounds", "center", "radius", "n"});
  GridSpec g;
  g.shape = f.string("shape");
  g.n = static_cast<int>(f.integer("n"));
  if (g.shape == "interval" || g.shape == "box") {
    if (f.has("center") || f.has("radius")) fail(f.where(), "center/radius apply to shape \"ball\" only");
    g.bounds = f.numbers("bounds");
    if (g.bounds.size() != (g.shape == "interval" ? 2u : 4u))
      fail(f.path("bounds"), g.shape == "interval" ? "expected [a, b]" : "expected [a1, b1, a2, b2]");
  } else if (g.shape == "ball") {
    if (f.has("bounds")) fail(f.path("bounds"), "bounds apply to shapes \"interval\" and \"box\" only");
    const auto c = f.numbers("center");
    if (c.size() != 2) fail(f.path("center"), "expected [x, y]");
    g.center = {c[0], c[1]};
    g.radius = f.number("radius");
  } else {
    fail(f.path("shape"), "expected \"interval\", \"box\" or \"ball\"");
  }
  guarded("/grid", [&] { return g.build(); });
  return g;
}

inline KernelSpec parse_kernel(const json& j, int dim) {
  Fields f(j, "/kernel", {"family", "alpha", "inner", "outer", "beta", "mu"});
  KernelSpec k;
  k.family = f.string("family");
  auto only = [&](std::initializer_list<const char*> keys) {
    for (const char* key : {"alpha", "inner", "outer", "beta", "mu"})
      if (f.has(key) && std::find_if(keys.begin(), keys.end(), [&](const char* a) { return std::string(a) == key; }) ==
                            keys.end())
        fail(f.path(key), "not a parameter of family \"" + k.family + "\"");
  };
  if (k.family == "fractional") {
    only({"alpha"});
    k.alpha = f.number("alpha");
  } else if (k.family == "two_exponent") {
    only({"inner", "outer"});
    k.inner = f.number("inner");
    k.outer = f.number("outer");
  } else if (k.family == "log") {
    only({"beta", "mu"});
    k.beta = f.number("beta");
    k.mu = f.number("mu", 0.0);
  } else if (k.family == "piecewise_dyadic") {
    only({"mu"});
    k.mu = f.number("mu");
  } else {
    fail(f.path("family"), "expected \"fractional\", \"two_exponent\", \"log\" or \"piecewise_dyadic\"");
  }
  guarded("/kernel", [&] { return k.build(dim); });
  return k;
}

inline YoungSpec parse_young(const json& j) {
  Fields f(j, "/young", {"family", "p", "r", "terms"});
  YoungSpec y;
  y.family = f.string("family");
  if (y.family == "power") {
    if (f.has("r") || f.has("terms")) fail(f.where(), "family \"power\" takes only p");
    y.p = f.number("p");
  } else if (y.family == "log_perturbed") {
    if (f.has("terms")) fail(f.path("terms"), "not a parameter of family \"log_perturbed\"");
    y.p = f.number("p");
    y.r = f.number("r");
  } else if (y.family == "power_sum") {
    if (f.has("p") || f.has("r")) fail(f.where(), "family \"power_sum\" takes only terms");
    const json& t = f.at("terms");
    if (!t.is_array() || t.empty()) fail(f.path("terms"), "expected a nonempty array of [coeff, exponent] pairs");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& e = t[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        fail(f.path("terms") + "/" + std::to_string(i), "expected [coeff, exponent]");
      y.terms.push_back({e[0].get<double>(), e[1].get<double>()});
    }
  } else {
    fail(f.path("family"), "expected \"power\", \"power_sum\" or \"log_perturbed\"");
  }
  guarded("/young", [&] { return y.build(); });
  return y;
}

inline ForcingSpec parse_forcing(const json& j) {
  Fields f(j, "/forcing", {"kind", "value", "height", "radius", "amplitude"});
  ForcingSpec s;
  s.kind = f.string("kind");
  if (s.kind == "constant") {
    if (f.has("height") || f.has("radius") || f.has("amplitude")) fail(f.where(), "kind \"constant\" takes only value");
    s.value = f.number("value", 1.0);
  } else if (s.kind == "bump") {
    if (f.has("value") || f.has("amplitude")) fail(f.where(), "kind \"bump\" takes height and radius");
    s.height = f.number("height", 1.0);
    if (f.has("radius")) {
      s.radius = f.number("radius");
      if (!(*s.radius > 0.0)) fail(f.path("radius"), "must be > 0");
    }
  } else if (s.kind == "random") {
    if (f.has("value") || f.has("height") || f.has("radius")) fail(f.where(), "kind \"random\" takes only amplitude");
    s.amplitude = f.number("amplitude", 1.0);
    if (!(s.amplitude > 0.0)) fail(f.path("amplitude"), "must be > 0");
  } else {
    fail(f.path("kind"), "expected \"constant\", \"bump\" or \"random\"");
  }
  return s;
}

inline SolverSpec parse_solver(const json& j) {
  Fields f(j, "/solver", {"tol", "max_iter", "armijo", "max_backtracks", "path_points", "path_iters",
                          "on_nonconvergence", "pair_budget"});
  SolverSpec s;
  if (f.has("tol")) {
    s.tol = f.number("tol");
    if (!(*s.tol > 0.0)) fail(f.path("tol"), "must be > 0");
  }
  if (f.has("max_iter")) {
    const auto v = f.integer("max_iter");
    if (v < 1 || v > 100000000) fail(f.path("max_iter"), "must be in [1, 1e8]");
    s.max_iter = static_cast<int>(v);
  }
  s.armijo = f.number("armijo", s.armijo);
  if (!(s.armijo > 0.0 && s.armijo < 0.5)) fail(f.path("armijo"), "must be in (0, 0.5)");
  const auto bt = f.integer("max_backtracks", s.max_backtracks);
  if (bt < 1 || bt > 1000) fail(f.path("max_backtracks"), "must be in [1, 1000]");
  s.max_backtracks = static_cast<int>(bt);
  const auto pp = f.integer("path_points", s.path_points);
  if (pp < 3 || pp > 10000) fail(f.path("path_points"), "must be in [3, 10000]");
  s.path_points = static_cast<int>(pp);
  const auto pi = f.integer("path_iters", s.path_iters);
  if (pi < 0 || pi > 1000000) fail(f.path("path_iters"), "must be in [0, 1e6]");
  s.path_iters = static_cast<int>(pi);
  const std::string nc = f.string("on_nonconvergence", "error");
  if (nc != "error" && nc != "warn") fail(f.path("on_nonconvergence"), "expected \"error\" or \"warn\"");
  s.warn_only = nc == "warn";
  s.pair_budget = f.number("pair_budget", s.pair_budget);
  if (!(s.pair_budget > 0.0)) fail(f.path("pair_budget"), "must be > 0");
  return s;
}

inline BatterySpec parse_battery(const json& j) {
  Fields f(j, "/battery",
           {"trials", "amplitude", "generators", "properties", "tolerance", "validation_slack", "pair_samples"});
  BatterySpec b;
  const auto t = f.integer("trials", b.trials);
  if (t < 1 || t > 1000000) fail(f.path("trials"), "must be in [1, 1e6]");
  b.trials = static_cast<int>(t);
  b.amplitude = f.number("amplitude", b.amplitude);
  if (!(b.amplitude > 0.0)) fail(f.path("amplitude"), "must be > 0");
  if (f.has("generators")) {
    b.generators = f.strings("generators");
    if (b.generators.empty()) fail(f.path("generators"), "must not be empty");
    for (std::size_t i = 0; i < b.generators.size(); ++i) {
      const auto& g = b.generators[i];
      if (g != "random" && g != "sign_mixed" && g != "bumps" && g != "indicators")
        fail(f.path("generators") + "/" + std::to_string(i), "unknown generator \"" + g + "\"");
    }
  }
  if (f.has("properties")) {
    b.properties = f.strings("properties");
    const auto& names = property_names();
    for (std::size_t i = 0; i < b.properties.size(); ++i)
      if (std::find(names.begin(), names.end(), b.properties[i]) == names.end())
        fail(f.path("properties") + "/" + std::to_string(i), "unknown property \"" + b.properties[i] + "\"");
  }
  b.tolerance = f.number("tolerance", b.tolerance);
  if (!(b.tolerance >= 0.0)) fail(f.path("tolerance"), "must be >= 0");
  b.validation_slack = f.number("validation_slack", b.validation_slack);
  if (!(b.validation_slack >= 0.0)) fail(f.path("validation_slack"), "must be >= 0");
  const auto ps = f.integer("pair_samples", b.pair_samples);
  if (ps < 1 || ps > 100000000) fail(f.path("pair_samples"), "must be in [1, 1e8]");
  b.pair_samples = static_cast<int>(ps);
  return b;
}

inline const std::set<std::string>& sweep_parameter_names() {
  static const std::set<std::string> s{"m", "alpha", "p", "n", "inner", "outer"};
  return s;
}

inline SweepSpec parse_sweep(const json& j) {
  Fields f(j, "/sweep", {"problem", "parameters"});
  SweepSpec s;
  s.problem = f.string("problem");
  if (s.problem != "dirichlet" && s.problem != "sublinear" && s.problem != "superlinear" && s.problem != "reaction" &&
      s.problem != "eigen")
    fail(f.path("problem"), "expected \"dirichlet\", \"sublinear\", \"superlinear\", \"reaction\" or \"eigen\"");
  const json& params = f.at("parameters");
  if (!params.is_object()) fail(f.path("parameters"), "expected an object of value arrays");
  if (params.empty()) fail(f.path("parameters"), "empty parameter grid");
  for (const auto& [name, vals] : params.items()) {
    const std::string p = f.path("parameters") + "/" + name;
    if (!sweep_parameter_names().count(name)) fail(p, "unknown sweep parameter");
    if (!vals.is_array() || vals.empty()) fail(p, "empty parameter grid");
    std::vector<double> v;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i].is_number() || !std::isfinite(vals[i].get<double>()))
        fail(p + "/" + std::to_string(i), "expected a finite number");
      v.push_back(vals[i].get<double>());
    }
    s.parameters.emplace_back(name, std::move(v));
  }
  return s;
}

}  // namespace detail

/// Validates the whole config; throws ConfigError naming the offending key.
inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  Fields f(j, "", {"spec_version", "problem", "grid", "kernel", "young", "forcing", "reaction", "solver", "battery",
                   "sweep", "seed", "output_dir"});
  if (f.has("spec_version") && !supported_spec_versions().count(f.string("spec_version")))
    fail("/spec_version", "unsupported version");
  ExperimentConfig c;
  c.problem = f.string("problem");
  if (!problems().count(c.problem))
    fail("/problem", "expected \"dirichlet\", \"sublinear\", \"superlinear\", \"eigen\", \"battery\" or \"sweep\"");
  c.grid = parse_grid(f.at("grid"));
  c.kernel = parse_kernel(f.at("kernel"), c.grid.dim());
  c.young = parse_young(f.at("young"));
  if (f.has("forcing")) c.forcing = parse_forcing(f.at("forcing"));
  if (f.has("reaction")) {
    Fields r(f.at("reaction"), "/reaction", {"m"});
    c.m = r.number("m");
    guarded("/reaction", [&] { return ReactionSpec::power_law(*c.m); });
  }
  if (f.has("solver")) c.solver = parse_solver(f.at("solver"));
  if (f.has("battery")) c.battery = parse_battery(f.at("battery"));
  if (f.has("seed")) {
    const json& s = f.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      fail("/seed", "expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.output_dir = f.string("output_dir");
  if (c.output_dir.empty()) fail("/output_dir", "must not be empty");

  if (c.problem == "sweep") {
    if (!f.has("sweep")) fail("/sweep", "missing required key for problem \"sweep\"");
    c.sweep = parse_sweep(f.at("sweep"));
  } else if (f.has("sweep")) {
    fail("/sweep", "only valid with problem \"sweep\"");
  }
  const std::string solve = c.sweep ? c.sweep->problem : c.problem;
  const bool swept_m = c.sweep && std::any_of(c.sweep->parameters.begin(), c.sweep->parameters.end(),
                                              [](const auto& p) { return p.first == "m"; });
  if ((solve == "sublinear" || solve == "superlinear" || solve == "reaction") && !c.m && !swept_m)
    fail("/reaction", "missing required key for problem \"" + solve + "\"");
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  const std::string text = detail::read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  return parse_config(j);
}

struct Outcome {
  int exit_code = 0;
  std::vector<fs::path> files;
  std::vector<std::string> warnings;
  std::string summary;
};

inline EnergyAssembly assemble_config(const ExperimentConfig& c) {
  AssemblyOptions o;
  o.pair_budget = c.solver.pair_budget;
  return assemble(c.grid.build(), c.kernel.build(c.grid.dim()), c.young.build(), o);
}

/// One solver run with the diagnostics that go into its report.
struct PointResult {
  std::string problem;  ///< the solver actually used
  SolveReport report;
  std::optional<ConditionReport> conditions;
  std::optional<PohozaevReport> pohozaev;
  std::optional<double> analytic_ratio;  ///< m (N - delta) / (N p) for power data
};

inline PointResult solve_point(const ExperimentConfig& c, const EnergyAssembly& A, std::string problem) {
  PointResult out;
  if (problem == "reaction") {
    if (!c.m) throw ConfigError("/reaction: missing m");
    const double p = A.young().p();
    if (*c.m == p) throw InvalidArgument("reaction: m equals p, neither the sublinear nor the superlinear regime");
    problem = *c.m < p ? "sublinear" : "superlinear";
  }
  out.problem = problem;
  if (problem == "dirichlet") {
    out.report = solve_dirichlet(A, c.forcing.build(A.grid(), c.seed), c.solver.options());
  } else if (problem == "eigen") {
    out.report = solve_eigen(A, c.solver.options());
    const double a = poincare_constant(A.kernel(), *A.grid());
    out.report.extras["poincare_constant"] = a;
    if (out.report.converged && out.report.extras.at("lambda1") < a) out.report.flags.emplace_back("below_poincare");
  } else {
    const ReactionSpec R = ReactionSpec::power_law(*c.m);
    out.conditions = check_reaction_conditions(A, R);
    out.report = problem == "sublinear" ? solve_sublinear(A, R, c.solver.options())
                                        : mountain_pass_search(A, R, std::nullopt, c.solver.mountain_pass());
    out.pohozaev = pohozaev_check(A, R, out.report.solution);
    if (out.pohozaev->status != "inapplicable" && A.young().is_pure_power()) {
      const int N = A.grid()->dim();
      out.analytic_ratio = *c.m * (N - out.pohozaev->delta) / (N * A.young().p());
    }
  }
  return out;
}

namespace detail {

inline json optional_number(std::optional<double> x) { return x ? json(*x) : json(nullptr); }

inline json point_json(const ExperimentConfig& c, const EnergyAssembly& A, const PointResult& r, const char* kind) {
  const SolveReport& s = r.report;
  json j{{"spec_version", kSpecVersion},
         {"kind", kind},
         {"problem", r.problem},
         {"config_digest", c.digest()},
         {"config", c.canonical()},
         {"grid", A.grid()->describe()},
         {"kernel", A.kernel().describe()},
         {"young", A.young().describe()},
         {"status", s.status},
         {"converged", s.converged},
         {"iterations", s.iterations},
         {"objective", s.objective},
         {"residual_inf", s.residual_inf},
         {"energy_E", s.energy_E},
         {"integral_F", s.integral_F},
         {"max_abs", s.solution.values.empty() ? 0.0 : s.solution.max_abs()},
         {"flags", s.flags},
         {"notes", s.notes},
         {"extras", s.extras},
         {"history_length", s.objective_history.size()}};
  if (r.conditions) {
    const auto& cr = *r.conditions;
    j["conditions"] = {{"sub1", cr.sub1.pass},
                       {"rho", cr.rho.pass},
                       {"expected_sub1", cr.expected_sub1 ? json(*cr.expected_sub1) : json(nullptr)},
                       {"expected_rho", cr.expected_rho ? json(*cr.expected_rho) : json(nullptr)},
                       {"consistent", cr.consistent}};
  }
  if (r.pohozaev) {
    const auto& p = *r.pohozaev;
    j["pohozaev"] = {{"status", p.status}, {"lhs", p.lhs},     {"rhs", p.rhs},
                     {"ratio", p.ratio},   {"delta", p.delta}, {"m_star", optional_number(p.m_star)},
                     {"analytic_ratio", optional_number(r.analytic_ratio)}, {"holds", p.holds}};
  }
  return j;
}

inline std::string history_csv(const SolveReport& s) {
  std::string out = "iteration,objective\n";
  for (std::size_t k = 0; k < s.objective_history.size(); ++k)
    out += std::to_string(k) + "," + nlo::detail::format_double(s.objective_history[k]) + "\n";
  return out;
}

inline std::string solution_csv(const GridFunction& u) {
  std::ostringstream os;
  write_csv(os, u);
  return os.str();
}

inline fs::path output_root(const ExperimentConfig& c, const std::optional<fs::path>& override_dir) {
  return override_dir ? *override_dir : fs::path(c.output_dir);
}

inline void emit(Outcome& o, const fs::path& path, const std::string& text) {
  write_text(path, text);
  o.files.push_back(path);
}

inline json battery_json(const ExperimentConfig& c, const EnergyAssembly& A, const std::vector<PropertyResult>& rs) {
  json results = json::array();
  for (const auto& r : rs)
    results.push_back({{"name", r.name},
                       {"status", r.status},
                       {"trials", r.trials},
                       {"failures", r.failures},
                       {"worst_margin", r.worst_margin},
                       {"constant", r.constant},
                       {"note", r.note},
                       {"extras", r.extras},
                       {"probe", r.probe},
                       {"config_digest", r.config_digest}});
  return {{"spec_version", kSpecVersion},
          {"kind", "battery_report"},
          {"config_digest", config_digest(A, c.seed)},
          {"config", c.canonical()},
          {"seed", c.seed},
          {"grid", A.grid()->describe()},
          {"kernel", A.kernel().describe()},
          {"young", A.young().describe()},
          {"results", results}};
}

}  // namespace detail

inline CorpusSpec corpus_spec(const ExperimentConfig& c) {
  CorpusSpec cs;
  cs.seed = c.seed;
  cs.trials = c.battery.trials;
  cs.amplitude = c.battery.amplitude;
  cs.generators = c.battery.generators;
  return cs;
}

inline Tolerances tolerances(const ExperimentConfig& c) {
  Tolerances t;
  t.relative = c.battery.tolerance;
  t.validation_slack = c.battery.validation_slack;
  t.pair_samples = c.battery.pair_samples;
  return t;
}

/// The "run" subcommand. Outputs are written only after the computation
/// succeeds; a non-converged solve still writes its report.
inline Outcome run(const ExperimentConfig& c, const std::optional<fs::path>& out_dir = std::nullopt) {
  if (c.problem == "sweep") throw ConfigError("/problem: use the sweep subcommand for problem \"sweep\"");
  const EnergyAssembly A = assemble_config(c);
  const fs::path root = detail::output_root(c, out_dir);
  Outcome o;
  if (c.problem == "battery") {
    const auto rs = run_battery(A, corpus_spec(c), tolerances(c), c.battery.properties);
    std::ostringstream csv;
    write_property_csv(csv, rs);
    fs::create_directories(root);
    detail::emit(o, root / "battery.csv", csv.str());
    detail::emit(o, root / "battery.json", detail::battery_json(c, A, rs).dump(2) + "\n");
    int failed = 0;
    for (const auto& r : rs) failed += r.passed() ? 0 : 1;
    o.summary = "properties=" + std::to_string(rs.size()) + " failed=" + std::to_string(failed);
    return o;
  }
  const PointResult r = solve_point(c, A, c.problem);
  fs::create_directories(root);
  detail::emit(o, root / "solution.csv", detail::solution_csv(r.report.solution));
  detail::emit(o, root / "history.csv", detail::history_csv(r.report));
  detail::emit(o, root / "report.json", detail::point_json(c, A, r, "solve_report").dump(2) + "\n");
  o.summary = "problem=" + r.problem + " status=" + r.report.status +
              " iterations=" + std::to_string(r.report.iterations) +
              " residual_inf=" + nlo::detail::format_double(r.report.residual_inf);
  if (!r.report.converged) {
    o.warnings.push_back("kind=nonconvergence status=" + r.report.status);
    if (!c.solver.warn_only) o.exit_code = 3;
  }
  return o;
}

struct SweepPoint {
  std::size_t index = 0;
  std::vector<std::pair<std::string, double>> params;
  ExperimentConfig config;
  std::string digest;
};

/// Cartesian product of the parameter arrays, last name fastest. Every
/// point is validated before anything runs.
inline std::vector<SweepPoint> expand_sweep(const ExperimentConfig& c) {
  if (!c.sweep) throw ConfigError("/sweep: missing");
  const auto& P = c.sweep->parameters;
  std::size_t total = 1;
  for (const auto& [name, vals] : P) total *= vals.size();
  if (total == 0) throw ConfigError("/sweep/parameters: empty parameter grid");
  if (total > 100000) throw ConfigError("/sweep/parameters: more than 1e5 points");
  std::vector<SweepPoint> pts;
  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepPoint sp;
    sp.index = idx;
    sp.config = c;
    sp.config.problem = c.sweep->problem;
    sp.config.sweep.reset();
    std::size_t rem = idx;
    std::vector<std::size_t> pick(P.size());
    for (std::size_t k = P.size(); k-- > 0;) {
      pick[k] = rem % P[k].second.size();
      rem /= P[k].second.size();
    }
    for (std::size_t k = 0; k < P.size(); ++k) {
      const auto& name = P[k].first;
      const double v = P[k].second[pick[k]];
      const std::string where = "/sweep/parameters/" + name + "/" + std::to_string(pick[k]);
      auto& pc = sp.config;
      if (name == "m") {
        pc.m = v;
        detail::guarded(where, [&] { return ReactionSpec::power_law(v); });
      } else if (name == "alpha") {
        if (pc.kernel.family != "fractional") detail::fail(where, "alpha needs kernel family \"fractional\"");
        pc.kernel.alpha = v;
      } else if (name == "inner" || name == "outer") {
        if (pc.kernel.family != "two_exponent") detail::fail(where, name + " needs kernel family \"two_exponent\"");
        (name == "inner" ? pc.kernel.inner : pc.kernel.outer) = v;
      } else if (name == "p") {
        if (pc.young.family == "power_sum") detail::fail(where, "p does not apply to family \"power_sum\"");
        pc.young.p = v;
      } else if (name == "n") {
        if (v != std::floor(v) || v < 0 || v > 1e6) detail::fail(where, "n must be a nonnegative integer");
        pc.grid.n = static_cast<int>(v);
      }
      sp.params.emplace_back(name, v);
    }
    const std::string where = "/sweep/parameters[" + std::to_string(idx) + "]";
    detail::guarded(where, [&] { return sp.config.grid.build(); });
    detail::guarded(where, [&] { return sp.config.kernel.build(sp.config.grid.dim()); });
    detail::guarded(where, [&] { return sp.config.young.build(); });
    sp.digest = sp.config.digest();
    pts.push_back(std::move(sp));
  }
  return pts;
}

inline std::string sweep_header(const SweepSpec& s) {
  std::string h = "index,digest";
  for (const auto& [name, vals] : s.parameters) h += "," + name;
  return h + ",problem,status,converged,iterations,objective,residual_inf,lambda1,pohozaev_ratio,analytic_ratio,error";
}

inline constexpr const char* kSweepTail =
    ",problem,status,converged,iterations,objective,residual_inf,lambda1,pohozaev_ratio,analytic_ratio,error";

namespace detail {

inline std::string sweep_row_tail(const SweepPoint& sp, const std::optional<PointResult>& r, const std::string& error) {
  using nlo::detail::format_double;
  std::string row = sp.digest;
  for (const auto& [name, v] : sp.params) row += "," + format_double(v);
  if (!r) return row + "," + sp.config.problem + ",error,0,0,,,,,," + csv_field(error);
  const auto& s = r->report;
  auto opt = [](bool have, double x) { return have ? format_double(x) : std::string(); };
  const auto lam = s.extras.find("lambda1");
  row += "," + r->problem + "," + s.status + "," + (s.converged ? "1" : "0") + "," + std::to_string(s.iterations) + "," +
         format_double(s.objective) + "," + format_double(s.residual_inf) + "," +
         opt(lam != s.extras.end(), lam == s.extras.end() ? 0.0 : lam->second) + "," +
         opt(r->pohozaev && r->pohozaev->status == "ok", r->pohozaev ? r->pohozaev->ratio : 0.0) + "," +
         opt(r->analytic_ratio.has_value(), r->analytic_ratio.value_or(0.0)) + ",";
  return row;
}

/// digest -> row text after the index column.
inline std::map<std::string, std::string> read_sweep_rows(const fs::path& path, const std::string& header) {
  std::map<std::string, std::string> rows;
  if (!fs::exists(path)) return rows;
  std::ifstream is(path);
  std::string line;
  if (!std::getline(is, line)) return rows;
  if (line != header) throw ConfigError(path.string() + ": existing table has a different header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    if (c1 == std::string::npos) continue;
    const auto c2 = line.find(',', c1 + 1);
    const std::string tail = line.substr(c1 + 1);
    rows[line.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1)] = tail;
  }
  return rows;
}

}  // namespace detail

/// The "sweep" subcommand. Rows already present (matched by digest) are
/// not recomputed; point failures are recorded in the row.
inline Outcome run_sweep(const ExperimentConfig& c, const std::optional<fs::path>& out_dir = std::nullopt) {
  if (c.problem != "sweep") throw ConfigError("/problem: the sweep subcommand needs problem \"sweep\"");
  const auto points = expand_sweep(c);
  const fs::path root = detail::output_root(c, out_dir);
  const fs::path table = root / "sweep.csv";
  const std::string header = sweep_header(*c.sweep);
  auto rows = detail::read_sweep_rows(table, header);

  fs::create_directories(root / "points");
  if (!fs::exists(table)) detail::write_text(table, header + "\n");
  std::mutex table_lock;
  Outcome o;
  int computed = 0, skipped = 0, failed = 0;
  for (const auto& sp : points) {
    if (rows.count(sp.digest)) {
      ++skipped;
      continue;
    }
    std::optional<PointResult> r;
    std::string error;
    try {
      const EnergyAssembly A = assemble_config(sp.config);
      r = solve_point(sp.config, A, sp.config.problem);
      json pj = detail::point_json(sp.config, A, *r, "sweep_point");
      pj["sweep_index"] = sp.index;
      json params = json::object();
      for (const auto& [name, v] : sp.params) params[name] = v;
      pj["parameters"] = params;
      const fs::path stem = root / "points" / sp.digest;
      detail::emit(o, fs::path(stem).replace_extension(".json"), pj.dump(2) + "\n");
      detail::emit(o, fs::path(stem).replace_extension(".csv"), detail::solution_csv(r->report.solution));
    } catch (const std::exception& e) {
      r.reset();
      error = e.what();
    }
    ++computed;
    if (!r || !r->report.converged) ++failed;
    const std::string tail = detail::sweep_row_tail(sp, r, error);
    std::lock_guard<std::mutex> lock(table_lock);
    std::ofstream app(table, std::ios::app | std::ios::binary);
    app << sp.index << ',' << tail << '\n';
    if (!app) throw Error("write failed: " + table.string());
    rows[sp.digest] = tail;
  }

  std::string text = header + "\n";
  for (const auto& sp : points) text += std::to_string(sp.index) + "," + rows.at(sp.digest) + "\n";
  const fs::path tmp = fs::path(table).concat(".tmp");
  detail::write_text(tmp, text);
  fs::rename(tmp, table);
  o.files.push_back(table);
  o.summary = "points=" + std::to_string(points.size()) + " computed=" + std::to_string(computed) +
              " skipped=" + std::to_string(skipped) + " failed=" + std::to_string(failed);
  return o;
}

struct SchemaIssue {
  fs::path file;
  std::string message;
};

struct SchemaReport {
  int checked = 0;
  std::vector<SchemaIssue> issues;
};

namespace detail {

inline std::string check_json_document(const json& j) {
  if (!j.is_object()) return "top level is not an object";
  if (j.contains("output_dir") && !j.contains("kind")) {
    try {
      parse_config(j);
    } catch (const ConfigError& e) {
      return std::string("invalid config: ") + e.what();
    }
    return "";
  }
  if (!j.contains("spec_version") || !j["spec_version"].is_string()) return "missing spec_version";
  if (!supported_spec_versions().count(j["spec_version"].get<std::string>()))
    return "unsupported spec_version " + j["spec_version"].get<std::string>();
  if (!j.contains("kind") || !j["kind"].is_string()) return "missing kind";
  const std::string kind = j["kind"];
  auto need = [&](std::initializer_list<const char*> keys) -> std::string {
    for (const char* k : keys)
      if (!j.contains(k)) return std::string("missing key ") + k;
    return "";
  };
  if (kind == "solve_report" || kind == "sweep_point") {
    auto m = need({"problem", "config_digest", "status", "converged", "iterations", "objective", "residual_inf",
                   "energy_E", "integral_F", "flags", "extras"});
    if (m.empty() && kind == "sweep_point") m = need({"sweep_index", "parameters"});
    return m;
  }
  if (kind == "battery_report") {
    auto m = need({"config_digest", "seed", "results"});
    if (!m.empty()) return m;
    if (!j["results"].is_array()) return "results is not an array";
    for (const auto& r : j["results"])
      for (const char* k : {"name", "status", "trials", "failures", "worst_margin"})
        if (!r.contains(k)) return std::string("result missing key ") + k;
    return "";
  }
  if (kind == "oracle_report") return need({"problem", "config_digest"});
  return "unknown kind " + kind;
}

inline std::string check_csv_header(const std::string& line) {
  static const std::set<std::string> fixed{"x,value", "x,y,value", "iteration,objective",
                                           "property,trials,failures,worst_margin,config_digest"};
  if (fixed.count(line)) return "";
  const std::string tail = kSweepTail;
  if (line.rfind("index,digest,", 0) == 0 && line.size() > tail.size() &&
      line.compare(line.size() - tail.size(), tail.size(), tail) == 0)
    return "";
  return "unrecognized CSV header \"" + line + "\"";
}

}  // namespace detail

/// The "schema-check" subcommand: every .json and .csv under dir must
/// match a known, supported output format (or be a valid config).
inline SchemaReport schema_check(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && (e.path().extension() == ".json" || e.path().extension() == ".csv"))
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  SchemaReport rep;
  for (const auto& f : files) {
    ++rep.checked;
    std::string msg;
    if (f.extension() == ".json") {
      try {
        msg = detail::check_json_document(json::parse(detail::read_text(f)));
      } catch (const json::parse_error&) {
        msg = "not valid JSON";
      }
    } else {
      std::ifstream is(f);
      std::string line;
      if (!std::getline(is, line)) msg = "empty CSV";
      else msg = detail::check_csv_header(line);
    }
    if (!msg.empty()) rep.issues.push_back({f, msg});
  }
  return rep;
}

}  // namespace nlo::experiment
