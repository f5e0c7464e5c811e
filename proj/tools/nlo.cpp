#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nlo/experiment.hpp"
#include "nlo/oracle_experiment.hpp"

namespace {

namespace ex = nlo::experiment;

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n') ? ' ' : c;
  }
  return out + "\"";
}

int diagnose(const char* kind, int code, const std::string& message) {
  std::cerr << "nlo: error kind=" << kind << " exit=" << code << " message=" << quoted(message) << "\n";
  return code;
}

template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const nlo::ConfigError& e) {
    return diagnose("config", 2, e.what());
  } catch (const nlo::InvalidArgument& e) {
    return diagnose("invalid_argument", 2, e.what());
  } catch (const nlo::ResourceLimit& e) {
    return diagnose("resource_limit", 2, e.what());
  } catch (const nlo::NumericalFailure& e) {
    return diagnose("numerical", 3, e.what());
  } catch (const std::exception& e) {
    return diagnose("internal", 1, e.what());
  }
}

int finish(const char* command, const ex::Outcome& o) {
  for (const auto& w : o.warnings) std::cerr << "nlo: warning " << w << "\n";
  std::cout << command << ": " << o.summary << " files=" << o.files.size() << "\n";
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal Orlicz-type operators: solvers, oracles and inequality battery"};
  app.require_subcommand(1);

  std::string config, dir;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "Run the problem declared in a config");
  auto* sweep = app.add_subcommand("sweep", "Run or resume a parameter sweep");
  auto* oracle = app.add_subcommand("oracle", "Dense reference results for a config with Psi(s) = s^2");
  for (auto* sub : {run, sweep, oracle}) {
    sub->add_option("config", config, "JSON config file")->required();
    sub->add_option("--out", out, "Override output_dir");
  }
  auto* check = app.add_subcommand("schema-check", "Validate output files under a directory");
  check->add_option("dir", dir, "Directory to scan")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return diagnose("usage", 2, e.what());
  }

  const std::optional<ex::fs::path> out_dir = out ? std::optional<ex::fs::path>(*out) : std::nullopt;
  if (*run) return guarded([&] { return finish("run", ex::run(ex::load_config(config), out_dir)); });
  if (*sweep) return guarded([&] { return finish("sweep", ex::run_sweep(ex::load_config(config), out_dir)); });
  if (*oracle) return guarded([&] { return finish("oracle", ex::run_oracle(ex::load_config(config), out_dir)); });
  return guarded([&] {
    const auto rep = ex::schema_check(dir);
    for (const auto& i : rep.issues)
      std::cerr << "nlo: error kind=schema exit=2 file=" << quoted(i.file.string()) << " message=" << quoted(i.message)
                << "\n";
    std::cout << "schema-check: checked=" << rep.checked << " invalid=" << rep.issues.size() << "\n";
    return rep.issues.empty() ? 0 : 2;
  });
}
