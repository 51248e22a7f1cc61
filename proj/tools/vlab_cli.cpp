#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vlab/acceptance.hpp"
#include "vlab/experiments.hpp"

namespace {

struct RunFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

int run(const std::string& experiment, const RunFlags& f) {
  vlab::ConfigInputs in;
  if (f.config) in.file = *f.config;
  in.seed = f.seed;
  in.grid = f.grid;
  if (f.out) in.out = *f.out;
  in.overrides = f.overrides;
  const vlab::ExperimentConfig cfg = vlab::parse_config(experiment, in);
  const vlab::RunOutcome r = vlab::run_experiment(cfg);
  for (const auto& a : r.manifest.assertions) {
    std::printf("%s %s value=%.6g %s %.6g\n", a.pass ? "[PASS]" : "[FAIL]", a.name.c_str(), a.value, a.op.c_str(),
                a.tolerance);
  }
  for (const auto& n : r.manifest.notes) std::printf("note: %s\n", n.c_str());
  std::printf("wrote %zu files and manifest.json to %s\n", r.manifest.files.size(), cfg.out_dir.string().c_str());
  return r.exit_code;
}

int verify(const std::vector<int>& only) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t passed = 0, total = 0;
  for (const auto& c : vlab::acceptance_criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto r = vlab::run_criterion(c.id);
    std::printf("%s\n", vlab::format_result(r).c_str());
    std::fflush(stdout);
    ++total;
    if (r.pass) ++passed;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("verify: %zu/%zu criteria passed in %.1f s\n", passed, total, secs);
  return passed == total ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tessellation experiments: voronoi, colonize, heat, eikonal, transport, harmonic"};
  app.require_subcommand(1);
  RunFlags flags;
  std::string chosen;
  for (const auto& name : vlab::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", flags.config, "key = value config file");
    sub->add_option("--seed", flags.seed, "overrides the seed key");
    sub->add_option("--grid", flags.grid, "overrides the grid key (nodes per side)");
    sub->add_option("--out", flags.out, std::string("output directory (default $") + vlab::kOutDirEnv + "/" + name + ")");
    sub->add_option("--override", flags.overrides, "key=value, applied after the config file")->allow_extra_args(false);
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::vector<int> only;
  auto* ver = app.add_subcommand("verify", "run acceptance criteria 1-9 and print a pass/fail table");
  ver->add_option("--only", only, "criterion ids to run")->delimiter(',');
  ver->callback([&chosen] { chosen = "verify"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    if (chosen == "verify") return verify(only);
    return run(chosen, flags);
  } catch (const vlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
