#include "vlab/acceptance.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include "vlab/colonize.hpp"
#include "vlab/eikonal.hpp"
#include "vlab/experiments.hpp"
#include "vlab/harmonic.hpp"
#include "vlab/heatfront.hpp"
#include "vlab/transport.hpp"

namespace vlab {

namespace {

const Rect kBox{0, 2, 0, 2};
const Rect kUnit{0, 1, 0, 1};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Collects failed checks and reported figures for one criterion.
struct Recorder {
  CriterionResult& r;
  void check(bool ok, const std::string& what) {
    if (!ok) r.failures.push_back(what);
  }
  void metric(const std::string& key, double v, const char* f = "%.4g") { r.metrics.push_back(key + "=" + fmt(f, v)); }
  void note(const std::string& s) { r.metrics.push_back(s); }
};

std::string tag(const char* what, std::uint64_t seed) { return std::string(what) + " seed " + std::to_string(seed); }

// ---- instances ----

HeatConfig heat_instance(std::uint64_t seed, bool equal_masses = false) {
  const std::size_t n = 3 + (seed - 1) % 3;
  auto pts = random_sites(n, kBox, 1000 + seed, 0.3, 0.1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back(equal_masses ? 1.0 : u(rng));
  return HeatConfig{SiteSet(std::move(pts), kBox), std::move(w), 1e-3};
}

SiteSet transport_instance(std::uint64_t seed) {
  const std::size_t n = 3 + (seed - 1) % 3;
  auto pts = random_sites(n, kUnit, 2000 + seed, 0.15, 0.05);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back(u(rng));
  return SiteSet(std::move(pts), kUnit, std::move(w));
}

std::vector<Point> interior_points(const SiteSet& s, std::size_t count, double margin, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(s.domain().x0, s.domain().x1);
  std::uniform_real_distribution<double> uy(s.domain().y0, s.domain().y1);
  std::vector<Point> out;
  while (out.size() < count) {
    const double x = ux(rng);
    const Point p{x, uy(rng)};
    if (boundary_distance(p, s, TessellationMode::power) > margin) out.push_back(p);
  }
  return out;
}

// ---- criteria ----

void oracle_identity(Recorder& rec) {
  const GridSpec g = GridSpec::square(256, kBox);
  std::size_t nodes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 2 + (seed - 1) % 5;
    const SiteSet s(random_sites(n, kBox, seed), kBox);
    const auto vor = rasterize_tessellation(s, g).labels;
    const auto eq = rasterize_tessellation(s.with_weights(std::vector<double>(n, 0.37)), g, TessellationMode::power);
    rec.check(eq.labels == vor, tag("equal-weight power differs from Voronoi", seed));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<double> w, shifted;
    for (std::size_t i = 0; i < n; ++i) {
      w.push_back(u(rng));
      shifted.push_back(w.back() + 0.75);
    }
    const auto a = rasterize_tessellation(s.with_weights(w), g, TessellationMode::power).labels;
    const auto b = rasterize_tessellation(s.with_weights(shifted), g, TessellationMode::power).labels;
    rec.check(a == b, tag("weight shift changed labels", seed));
    nodes += 3 * g.size();
  }
  rec.metric("instances", 20);
  rec.metric("nodes_compared", static_cast<double>(nodes), "%.0f");
}

void heat_monotonicity(Recorder& rec) {
  const double delta = 0.02, eps = 0.05, ds = 0.005;
  const auto angles = ray_angles(64);
  std::size_t violations = 0, rays = 0, empty = 0;
  double t_low = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const HeatConfig cfg = heat_instance(seed);
    for (std::size_t i = 0; i < cfg.sites.size(); ++i) {
      for (double a : angles) {
        const RayProbe p = radial_monotonicity_probe(cfg, i, a, delta, eps, ds);
        ++rays;
        if (p.verdict == ProbeVerdict::violated) ++violations;
        if (p.verdict == ProbeVerdict::empty_range) ++empty;
      }
    }
    std::vector<std::size_t> all(cfg.sites.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    EmpiricalTOptions opt;
    opt.ds = ds;
    const EmpiricalT base = empirical_T(cfg, all, angles, delta, eps, opt);
    const EmpiricalT wide_eps = empirical_T(cfg, all, angles, delta, 2 * eps, opt);
    const EmpiricalT wide_delta = empirical_T(cfg, all, angles, 2 * delta, eps, opt);
    rec.check(!base.no_pass && base.time >= 1e-4, tag("empirical T below 1e-4", seed));
    rec.check(wide_eps.time >= base.time - std::max(base.bracket, wide_eps.bracket),
              tag("empirical T decreased when eps doubled", seed));
    rec.check(wide_delta.time >= base.time - std::max(base.bracket, wide_delta.bracket),
              tag("empirical T decreased when delta doubled", seed));
    rec.note("T" + std::to_string(seed) + "=" + fmt("%.3g", base.time) + "/" + fmt("%.3g", wide_eps.time) + "/" +
             fmt("%.3g", wide_delta.time));
    t_low = std::min(t_low, base.time);
  }
  rec.check(violations == 0, std::to_string(violations) + " rays violated monotonicity");
  rec.metric("rays", static_cast<double>(rays), "%.0f");
  rec.metric("violations", static_cast<double>(violations), "%.0f");
  rec.metric("empty_rays", static_cast<double>(empty), "%.0f");
  rec.metric("min_T", t_low);
}

void heat_corollary(Recorder& rec) {
  double worst = 0.0;
  std::size_t segments = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const HeatConfig cfg = heat_instance(seed);
    for (std::size_t i = 0; i < cfg.sites.size(); ++i) {
      for (std::size_t j = i + 1; j < cfg.sites.size(); ++j) {
        const PathMinimum pm = path_minimum_probe(cfg, i, j, 2000);
        ++segments;
        worst = std::max(worst, pm.boundary_distance);
        rec.check(pm.boundary_distance <= 0.05, tag("segment minimum far from the boundary", seed) + " pair " +
                                                    std::to_string(i) + "-" + std::to_string(j));
      }
    }
  }
  rec.metric("segments", static_cast<double>(segments), "%.0f");
  rec.metric("worst_distance", worst);
}

void kernel_identities(Recorder& rec) {
  const GridSpec g = GridSpec::square(256, kBox);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    HeatConfig cfg = heat_instance(seed, true);
    const auto vor = rasterize_tessellation(cfg.sites, g).labels;
    for (double t : {1e-4, 1e-2, 1.0}) {
      cfg.time = t;
      rec.check(dominant_kernel_label(cfg, g).labels == vor,
                tag("dominant label differs from Voronoi", seed) + " t=" + fmt("%g", t));
    }
  }
  double worst_mass = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    HeatConfig cfg = heat_instance(seed);
    const double total = std::accumulate(cfg.masses.begin(), cfg.masses.end(), 0.0);
    for (double t : {1e-3, 1e-2}) {
      cfg.time = t;
      const double err = std::abs(plane_mass_trapezoid(cfg, 10 * std::sqrt(t), std::sqrt(t) / 2) - total) / total;
      worst_mass = std::max(worst_mass, err);
      rec.check(err <= 1e-4, tag("mass quadrature off", seed) + " t=" + fmt("%g", t));
    }
  }
  const double d1 = torus_semigroup_defect(1.0, 128, 0.01, 0.01, {0.3, 0.4}, {0.6, 0.2});
  const double d2 = torus_semigroup_defect(1.0, 128, 0.01, 0.02, {0.1, 0.9}, {0.8, 0.15});
  rec.check(d1 <= 1e-3 && d2 <= 1e-3, "torus semigroup defect above 1e-3");
  rec.metric("mass_rel_err", worst_mass);
  rec.metric("semigroup_defect", std::max(d1, d2));
}

void gap_function(Recorder& rec) {
  const GridSpec g = GridSpec::square(256, kBox);
  double smallest = INFINITY;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SiteSet s(random_sites(4, kBox, 500 + seed, 0.6, 0.1), kBox);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double prev = 0.0;
      for (double eps : {0.05, 0.1, 0.2}) {
        const auto phi = gap_function_phi(s, i, eps, g);
        const std::string where = tag("phi", seed) + " site " + std::to_string(i) + " eps=" + fmt("%g", eps);
        rec.check(phi.has_value(), where + " has no admissible node");
        if (!phi) continue;
        rec.check(phi->phi > 0.0, where + " not positive");
        rec.check(phi->phi >= prev, where + " decreased");
        prev = phi->phi;
        smallest = std::min(smallest, phi->phi);
      }
    }
  }
  rec.metric("min_phi", smallest);
}

double single_source_error(int n) {
  const GridSpec g = GridSpec::square(n, kBox);
  const Point site = g.node(n / 2, n / 2);
  const auto f = fast_march(SiteSet({site}, kBox), g);
  double e = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(f.times.values[k] - norm(g.node(k) - site)));
  return e;
}

void eikonal(Recorder& rec) {
  const double e128 = single_source_error(128);
  const double e256 = single_source_error(256);
  const GridSpec g = GridSpec::square(256, kBox);
  const double h = g.spacing();
  rec.check(e256 <= 2 * h, "single-source error above 2h");
  rec.check(e128 / e256 >= 1.5, "error ratio under halving below 1.5");
  rec.metric("err_over_h", e256 / h);
  rec.metric("ratio", e128 / e256);

  double worst = 0.0;
  std::string per;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto pts = random_sites(2 + seed % 5, kBox, seed, 0.3, 0.05);
    for (auto& p : pts) p = g.node(g.nearest_node(p));
    const SiteSet s(pts, kBox);
    const auto oracle = rasterize_tessellation(s, g);
    const auto f = fast_march(s, g);
    rec.check(mismatch_fraction(f.labels, oracle, 2 * std::sqrt(2.0) * h) == 0.0,
              tag("label mismatch outside the band", seed));
    const auto sing = extract_singular_set(per_source_distance_stack(s, g));
    const double hd = node_set_hausdorff(g, sing.nodes, boundary_nodes(oracle)) / h;
    rec.check(hd <= 3.0, tag("singular set Hausdorff", seed) + " = " + fmt("%.3g", hd) + "h");
    worst = std::max(worst, hd);
    per += (per.empty() ? "" : ",") + fmt("%.3g", hd);
  }
  rec.metric("worst_hausdorff_over_h", worst);
  rec.note("hausdorff_over_h=" + per);
}

void transport(Recorder& rec) {
  std::size_t violations = 0, pairs = 0, decreasing_runs = 0, runs = 0;
  double max_z = 0.0, max_res = 0.0, det_err = 0.0, jump_err = 0.0, cost_err = 0.0;
  double sum_fine = 0.0, sum_half = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SiteSet s = transport_instance(seed);
    const auto pts = interior_points(s, 100, 1e-2, seed);
    for (double lambda : {0.25, 0.5, 0.9}) {
      const TransportConfig cfg{s, lambda, 100000, 512, seed};
      const std::string where = tag("transport", seed) + " lambda=" + fmt("%g", lambda);
      ++runs;

      const PushforwardReport pf = pushforward_check(cfg);
      violations += pf.violations;
      max_z = std::max(max_z, pf.max_abs_z);
      rec.check(pf.violations == 0, where + ": containment violations");
      rec.check(pf.max_abs_z <= 4.0, where + ": cell mass beyond 4 sigma");

      const BrenierResidual fine = brenier_residual(cfg, 512);
      const BrenierResidual half = brenier_residual(cfg, 256);
      for (std::size_t k = 0; k < kMonomialCount; ++k) {
        rec.check(fine.residual[k] <= 5e-3, where + ": residual " + monomial_name(k) + " above 5e-3");
        sum_fine += fine.residual[k];
        sum_half += half.residual[k];
      }
      max_res = std::max(max_res, fine.max_residual);
      if (fine.max_residual < half.max_residual) ++decreasing_runs;

      const HessianReport hr = hessian_determinant_check(s, lambda, pts);
      rec.check(hr.checked == 100 && hr.max_det_error <= 1e-6, where + ": Hessian determinant");
      det_err = std::max(det_err, hr.max_det_error);

      for (auto [i, j] : adjacent_cells(s, cfg.quadrature_grid(256))) {
        const GradientJump gj = gradient_jump(s, lambda, i, j, cfg.quadrature_grid(256));
        ++pairs;
        jump_err = std::max(jump_err, std::abs(gj.jump - gj.expected));
        rec.check(std::abs(gj.jump - gj.expected) <= 1e-4, where + ": gradient jump");
      }

      const LimitCosts c = semidiscrete_limit_cost(cfg, 512);
      const double target = (1 - lambda) * (1 - lambda) * c.cost_zero;
      const double err = std::abs(c.cost_lambda - target) / target;
      cost_err = std::max(cost_err, err);
      rec.check(err <= 1e-3, where + ": cost identity");
    }
  }
  rec.check(sum_fine < sum_half, "aggregate Brenier residual did not decrease under grid halving");

  double ot_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TransportConfig cfg{SiteSet(random_sites(3, kUnit, 3000 + seed, 0.15, 0.05), kUnit), 0.5};
    const DiscreteOt ot = discrete_ot_oracle(cfg.sites, 20, cfg.quadrature_grid());
    const double c0 = semidiscrete_limit_cost(cfg, 512).cost_zero;
    const double err = std::abs(ot.cost - c0) / c0;
    ot_err = std::max(ot_err, err);
    rec.check(ot.atoms == 400 && err <= 0.05, tag("discrete OT", seed));
  }

  rec.metric("violations", static_cast<double>(violations), "%.0f");
  rec.metric("max_abs_z", max_z, "%.3g");
  rec.metric("max_residual", max_res, "%.3g");
  rec.note("residual_sum_256_to_512=" + fmt("%.3g", sum_half) + "->" + fmt("%.3g", sum_fine) + " (" +
           std::to_string(decreasing_runs) + "/" + std::to_string(runs) + " runs decrease individually)");
  rec.metric("det_err", det_err, "%.2g");
  rec.metric("jump_pairs", static_cast<double>(pairs), "%.0f");
  rec.metric("jump_err", jump_err, "%.2g");
  rec.metric("cost_rel_err", cost_err, "%.2g");
  rec.metric("ot_rel_err", ot_err, "%.3g");
}

void colonization(Recorder& rec) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("vlab_accept_" + std::to_string(::getpid()));
  std::string manifests[2];
  for (int k = 0; k < 2; ++k) {
    ConfigInputs in;
    in.overrides = {"sources=4"};
    in.seed = 1;
    in.out = root / (k == 0 ? "a" : "b");
    const ExperimentConfig cfg = parse_config("colonize", in);
    const RunOutcome out = run_experiment(cfg);
    std::ifstream f(cfg.out_dir / "manifest.json", std::ios::binary);
    manifests[k].assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    if (k == 0) {
      for (const auto& a : out.manifest.assertions) {
        if (a.name == "global_fraction") {
          rec.check(a.pass && a.value >= 0.8, "global correct-cell fraction below 0.8");
          rec.metric("global_fraction", a.value);
        }
      }
    }
  }
  fs::remove_all(root);
  rec.check(!manifests[0].empty() && manifests[0] == manifests[1], "repeated run produced a different manifest");

  SimParams small;
  small.n_sources = 2;
  small.particles = 10;
  small.iterations = 50;
  small.seed = 3;
  const ColonizeRun a = run_colonization(small, true);
  small.epsilon = 0.05;
  const ColonizeRun b = run_colonization(small, true);
  rec.check(a.metrics.audit_disagreements == 0 && b.metrics.audit_disagreements == 0,
            "spatial hash disagrees with the exhaustive scan");
  rec.metric("audit_disagreements", static_cast<double>(a.metrics.audit_disagreements + b.metrics.audit_disagreements),
             "%.0f");
  rec.metric("audit_coalitions", static_cast<double>(a.metrics.n_coalitions + b.metrics.n_coalitions), "%.0f");
}

PerforatedProblem disks(std::vector<Point> centres, double radius) {
  const Rect box = truncation_box(centres);
  return PerforatedProblem(SiteSet(std::move(centres), box), radius, GridSpec::square(256, box));
}

void harmonic(Recorder& rec) {
  int sweeps = 0;
  for (const auto& p : {disks({{0, 0}}, 0.3), disks({{-0.5, 0}, {0.5, 0}}, 0.2)}) {
    const HarmonicSolution sol = solve_harmonic(p);
    const MaxPrincipleVerdict mp = maximum_principle_check(sol.u, p);
    const std::string where = std::to_string(p.sites.size()) + "-disk";
    rec.check(mp.pass, where + " maximum principle");
    rec.check(sol.last_update <= p.tol && sol.sweeps < p.max_sweeps, where + " SOR did not converge");
    sweeps = std::max(sweeps, sol.sweeps);
  }
  const HarmonicTessellation t = harmonic_tessellation(disks({{0.2, 0.3}, {0.8, 0.4}, {0.5, 0.9}}, 0.12));
  rec.check(t.unassigned_fraction <= 0.01, "3-disk UNASSIGNED fraction above 0.01");
  rec.check(t.solution.last_update <= 1e-8, "3-disk SOR did not converge");
  sweeps = std::max(sweeps, t.solution.sweeps);

  const SiteSet origin({{0, 0}}, Rect{-4, 4, -4, 4});
  const double v1 = log_superposition_value({1, 0}, origin);
  const double ve = log_superposition_value({0, std::exp(1.0)}, origin);
  rec.check(std::abs(v1) <= 1e-12, "log field at |x|=1");
  rec.check(std::abs(ve - 1.0 / (2 * M_PI)) <= 1e-12, "log field at |x|=e");

  rec.metric("max_sweeps", sweeps, "%.0f");
  rec.metric("unassigned", t.unassigned_fraction);
  rec.metric("mismatch_vs_voronoi", t.mismatch_vs_voronoi);
}

struct Entry {
  CriterionSpec spec;
  std::function<void(Recorder&)> body;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      {{1, "oracle identity", 5}, oracle_identity},
      {{2, "heat monotonicity", 30}, heat_monotonicity},
      {{3, "heat corollary", 30}, heat_corollary},
      {{4, "kernel identities", 60}, kernel_identities},
      {{5, "gap function", 30}, gap_function},
      {{6, "eikonal", 20}, eikonal},
      {{7, "transport", 60}, transport},
      {{8, "colonization", 60}, colonization},
      {{9, "harmonic", 30}, harmonic},
  };
  return e;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void finish(CriterionResult& r) {
  if (r.seconds > r.budget) r.failures.push_back("runtime " + fmt("%.1f", r.seconds) + " s over budget");
  r.pass = r.failures.empty();
}

}  // namespace

const std::vector<CriterionSpec>& acceptance_criteria() {
  static const std::vector<CriterionSpec> specs = [] {
    std::vector<CriterionSpec> out;
    for (const auto& e : entries()) out.push_back(e.spec);
    return out;
  }();
  return specs;
}

CriterionResult run_criterion(int id) {
  const auto& all = entries();
  const auto it = std::find_if(all.begin(), all.end(), [id](const Entry& e) { return e.spec.id == id; });
  if (it == all.end()) throw std::invalid_argument("no acceptance criterion " + std::to_string(id));
  CriterionResult r;
  r.id = id;
  r.name = it->spec.name;
  r.budget = it->spec.budget;
  Recorder rec{r};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    it->body(rec);
  } catch (const std::exception& e) {
    r.failures.push_back(std::string("exception: ") + e.what());
  }
  r.seconds = seconds_since(t0);
  finish(r);
  return r;
}

CriterionResult run_end_to_end(const std::string& cli_path, double budget) {
  CriterionResult r;
  r.id = 10;
  r.name = "end-to-end verify";
  r.budget = budget;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cmd = "'" + cli_path + "' verify 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    r.failures.push_back("could not start " + cli_path);
  } else {
    std::string out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = ::pclose(pipe);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::istringstream lines(out);
    std::string line, last;
    std::size_t passed = 0;
    while (std::getline(lines, line)) {
      if (!line.empty()) last = line;
      if (line.rfind("[PASS]", 0) == 0) ++passed;
    }
    r.metrics.push_back("exit=" + std::to_string(code));
    r.metrics.push_back("rows_passed=" + std::to_string(passed));
    if (code != 0) r.failures.push_back("verify exited with " + std::to_string(code) + ": " + last);
  }
  r.seconds = seconds_since(t0);
  finish(r);
  return r;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << fmt("%.2f", r.seconds) << " s / "
     << fmt("%g", r.budget) << " s)";
  for (const auto& m : r.metrics) os << " " << m;
  const std::size_t shown = std::min<std::size_t>(r.failures.size(), 5);
  for (std::size_t k = 0; k < shown; ++k) os << (k == 0 ? " | failed: " : "; ") << r.failures[k];
  if (r.failures.size() > shown) os << "; +" << (r.failures.size() - shown) << " more";
  return os.str();
}

}  // namespace vlab
