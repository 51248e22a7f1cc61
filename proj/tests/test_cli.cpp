#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "vlab/artifacts.hpp"
#include "vlab/experiments.hpp"
#include "vlab/raster_io.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vlab_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string config_error_key(const std::string& experiment, const ConfigInputs& in) {
  try {
    parse_config(experiment, in);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

int cli(const std::string& args) {
  const std::string cmd = std::string("'") + VLAB_CLI_PATH + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ConfigInputs small_colonize(const fs::path& out) {
  ConfigInputs in;
  in.overrides = {"sources=2", "particles=10", "iterations=50"};
  in.grid = 64;
  in.out = out;
  return in;
}

}  // namespace

TEST_CASE("sha256 of a known message") {
  const std::string abc = "abc";
  CHECK(sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("minimal colonize config takes the table defaults") {
  const fs::path dir = scratch("minimal");
  ConfigInputs in;
  in.file = write_config(dir, "# four sources, everything else default\nsources = 4\n");
  const auto cfg = parse_config("colonize", in);
  CHECK(cfg.integer("sources") == 4);
  CHECK(cfg.integer("particles") == 100);
  CHECK(cfg.integer("iterations") == 500);
  CHECK(cfg.real("step") == 0.1);
  CHECK(cfg.real("epsilon") == 0.01);
  CHECK(cfg.reals("domain") == std::vector<double>{0, 2, 0, 2});
}

TEST_CASE("config errors name the key") {
  ConfigInputs in;
  in.overrides = {"sources=3", "lambda=1.3"};
  CHECK(config_error_key("transport", in) == "lambda");
  in.overrides = {"sources=3", "lambda=0"};
  CHECK(config_error_key("transport", in) == "lambda");
  in.overrides = {"sources=3", "colour=red"};
  CHECK(config_error_key("transport", in) == "colour");
  in.overrides = {"particles=10"};
  CHECK(config_error_key("colonize", in) == "sources");
  in.overrides = {"sources=4", "step=-1"};
  CHECK(config_error_key("colonize", in) == "step");
  in.overrides = {"sources=4", "audit=maybe"};
  CHECK(config_error_key("colonize", in) == "audit");
  in.overrides = {"sites=0.5 0.5; 1.5", "sources=2"};
  CHECK(config_error_key("voronoi", in) == "sites");
  in.overrides = {"sites=0.5 0.5; 1.5 1.5", "sources=3"};
  CHECK(config_error_key("voronoi", in) == "sources");
  in.overrides = {"sources=2"};
  CHECK(config_error_key("fractal", in) == "experiment");

  const fs::path dir = scratch("errors");
  ConfigInputs bad;
  bad.file = write_config(dir, "sources = 4\nthis line has no equals sign\n");
  CHECK(config_error_key("colonize", bad) == "this line has no equals sign");
  bad.file = write_config(dir, "sources = 4\nsources = 5\n");
  CHECK(config_error_key("colonize", bad) == "sources");
  bad.file = write_config(dir, "experiment = heat\nsources = 4\n");
  CHECK(config_error_key("colonize", bad) == "experiment");
}

TEST_CASE("flags override the file") {
  const fs::path dir = scratch("precedence");
  ConfigInputs in;
  in.file = write_config(dir, "sources = 4\ngrid = 64\nseed = 5\nstep = 0.2\n");
  in.overrides = {"step=0.05", "grid=48"};
  in.grid = 32;
  const auto cfg = parse_config("colonize", in);
  CHECK(cfg.grid() == 32);
  CHECK(cfg.seed() == 5);
  CHECK(cfg.real("step") == 0.05);
}

TEST_CASE("output directory: flag, then environment, then a local default") {
  ConfigInputs in;
  in.overrides = {"sources=2"};
  ::setenv(kOutDirEnv, "/tmp/vlab_env_root", 1);
  CHECK(parse_config("voronoi", in).out_dir == fs::path("/tmp/vlab_env_root/voronoi"));
  in.out = "/tmp/elsewhere";
  CHECK(parse_config("voronoi", in).out_dir == fs::path("/tmp/elsewhere"));
  ::unsetenv(kOutDirEnv);
  in.out.reset();
  CHECK(parse_config("voronoi", in).out_dir == fs::path("vlab_out/voronoi"));
}

TEST_CASE("colonize with a fixed seed is byte-deterministic and the manifest is complete") {
  const fs::path da = scratch("det_a");
  const fs::path db = scratch("det_b");
  const auto a = run_experiment(parse_config("colonize", small_colonize(da)));
  const auto b = run_experiment(parse_config("colonize", small_colonize(db)));
  const std::string ma = slurp(da / "manifest.json");
  CHECK(!ma.empty());
  CHECK(ma == slurp(db / "manifest.json"));
  CHECK(a.exit_code == b.exit_code);
}

TEST_CASE("manifest hashes match the files on disk") {
  const fs::path dir = scratch("manifest");
  const auto r = run_experiment(parse_config("colonize", small_colonize(dir)));
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["experiment"] == "colonize");
  CHECK(j["config_echo"]["particles"] == "10");
  CHECK_FALSE(j["config_echo"].contains("out"));
  std::set<std::string> listed;
  for (const auto& f : j["files"]) {
    listed.insert(f["name"].get<std::string>());
    CHECK(f["sha256"] == sha256_file(dir / f["name"].get<std::string>()));
  }
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "manifest.json") CHECK(listed.count(e.path().filename().string()) == 1);
  }
  CHECK(listed.count("paths.csv") == 1);
  CHECK(listed.count("metrics.json") == 1);
  CHECK(listed.count("swarm.pgm") == 1);
  REQUIRE(!r.manifest.assertions.empty());
  CHECK(j["assertions"][0]["name"] == "global_fraction");
  const std::string csv = slurp(dir / "paths.csv");
  CHECK(csv.rfind("source,particle,iteration,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 10 * 51);
}

TEST_CASE("transport run writes its report, cell image and samples") {
  const fs::path dir = scratch("transport");
  ConfigInputs in;
  in.overrides = {"sources=3", "samples=2000", "quadrature=128", "lambda=0.5"};
  in.grid = 64;
  in.out = dir;
  const auto r = run_experiment(parse_config("transport", in));
  for (const char* name : {"report.json", "cells.pgm", "samples.csv"}) {
    INFO(name);
    CHECK(std::find(r.manifest.files.begin(), r.manifest.files.end(), name) != r.manifest.files.end());
  }
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["pushforward"]["violations"] == 0);
  CHECK(report["brenier"].size() == 8);
}

TEST_CASE("heat run with an empty admissible range still succeeds") {
  const fs::path dir = scratch("heat_empty");
  ConfigInputs in;
  in.overrides = {"sources=3", "delta=5", "rays=8"};
  in.grid = 32;
  in.out = dir;
  const auto r = run_experiment(parse_config("heat", in));
  CHECK(r.exit_code == 0);
  REQUIRE(!r.manifest.notes.empty());
  CHECK(r.manifest.notes.back().find("empty admissible ray range") != std::string::npos);
  CHECK(slurp(dir / "manifest.json").find("empty admissible ray range") != std::string::npos);
}

TEST_CASE("label images") {
  const Rect box{0, 2, 0, 2};
  const GridSpec g = GridSpec::square(64, box);
  SUBCASE("all-zero grid is a single colour") {
    LabelGrid zero(g);
    const auto bytes = encode_label_ppm(zero, default_palette());
    const std::string header = "P6\n64 64\n255\n";
    REQUIRE(bytes.size() == header.size() + 3 * g.size());
    std::set<std::array<std::uint8_t, 3>> colours;
    for (std::size_t k = header.size(); k < bytes.size(); k += 3) colours.insert({bytes[k], bytes[k + 1], bytes[k + 2]});
    CHECK(colours.size() == 1);
  }
  SUBCASE("four-site Voronoi image matches the stored golden hash") {
    const SiteSet s({{0.4, 0.3}, {1.6, 0.7}, {0.7, 1.5}, {1.3, 1.2}}, box);
    const LabelGrid labels = rasterize_tessellation(s, g);
    const auto counts = label_counts(labels, 4);
    CHECK(std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
    const auto bytes = encode_label_ppm(labels, default_palette());
    CHECK(bytes == encode_label_ppm(rasterize_tessellation(s, g), default_palette()));
    CHECK(sha256_hex(bytes) == "e172cf465ce2373157fa36b5e6ec2a3307f3e934598828a3f3f7287b454a96be");
  }
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("exit");
  const std::string out = " --out '" + dir.string() + "'";
  CHECK(cli("voronoi --override sources=4 --grid 64" + out) == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(cli("transport --override sources=3 --override lambda=1.3" + out) == 1);
  CHECK(cli("colonize --override sources=2 --override particles=5 --override iterations=20 "
            "--override min_fraction=1 --grid 32" + out) == 2);
  CHECK(cli("colonize --config /nonexistent/run.cfg" + out) == 1);
  CHECK(cli("nonsense") == 1);
  const fs::path cfg = write_config(dir, "experiment = voronoi\nsources = 3\nmode = power\nweights = 0.1, 0, -0.1\n");
  CHECK(cli("voronoi --config '" + cfg.string() + "' --grid 32" + out) == 0);
}
