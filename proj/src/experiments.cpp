#include "vlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "vlab/colonize.hpp"
#include "vlab/eikonal.hpp"
#include "vlab/harmonic.hpp"
#include "vlab/heatfront.hpp"
#include "vlab/raster_io.hpp"
#include "vlab/transport.hpp"

namespace vlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Kind { integer, real, text, choice, flag, points, reals };

struct Key {
  std::string name;
  Kind kind;
  std::string def;
  double lo = -kInf;
  double hi = kInf;
  bool open = false;  // both bounds exclusive
  std::vector<std::string> choices = {};
  int count = -1;     // required length of a reals list
};

std::vector<Key> schema(const std::string& e) {
  std::vector<Key> k = {
      {"seed", Kind::integer, "1", 0, 9.0e18},
      {"grid", Kind::integer, "256", 16, 4096},
      {"out", Kind::text, ""},
      {"sources", Kind::integer, "", 1, 64},
  };
  auto add = [&k](std::vector<Key> more) { k.insert(k.end(), more.begin(), more.end()); };
  const Key sites{"sites", Kind::points, ""};
  auto domain = [](const char* def) { return Key{"domain", Kind::reals, def, -kInf, kInf, false, {}, 4}; };
  auto spacing = [](const char* sep, const char* margin) {
    return std::vector<Key>{{"separation", Kind::real, sep, 0, kInf}, {"margin", Kind::real, margin, 0, kInf}};
  };
  if (e == "voronoi") {
    add({sites, domain("0 2 0 2"), {"weights", Kind::reals, ""},
         {"mode", Kind::choice, "voronoi", 0, 0, false, {"voronoi", "power"}}});
    add(spacing("0", "0"));
  } else if (e == "colonize") {
    add({{"particles", Kind::integer, "100", 1, 1e6},
         {"iterations", Kind::integer, "500", 0, 1e7},
         {"step", Kind::real, "0.1", 0, kInf, true},
         {"epsilon", Kind::real, "0.01", 0, kInf, true},
         {"warmup", Kind::integer, "5", 0, 1e9},
         domain("0 2 0 2"),
         {"min_fraction", Kind::real, "0.8", 0, 1},
         {"audit", Kind::flag, "false"},
         {"render_radius", Kind::real, "0", 0, kInf}});
  } else if (e == "heat") {
    add({sites, domain("0 2 0 2"), {"masses", Kind::reals, ""},
         {"time", Kind::real, "0.001", 0, kInf, true},
         {"delta", Kind::real, "0.02", 0, kInf},
         {"eps", Kind::real, "0.05", 0, kInf},
         {"rays", Kind::integer, "64", 1, 1e6},
         {"ds", Kind::real, "0.005", 0, kInf, true},
         {"path_samples", Kind::integer, "2000", 2, 1e7},
         {"empirical_t", Kind::flag, "false"}});
    add(spacing("0.3", "0.1"));
  } else if (e == "eikonal") {
    add({sites, domain("0 2 0 2"), {"tau", Kind::real, "0", 0, kInf}});
    add(spacing("0.3", "0.05"));
  } else if (e == "transport") {
    add({sites, domain("0 1 0 1"), {"weights", Kind::reals, ""},
         {"weight_scale", Kind::real, "0.01", 0, kInf},
         {"lambda", Kind::real, "0.5", 0, 1, true},
         {"samples", Kind::integer, "100000", 1, 1e9},
         {"quadrature", Kind::integer, "512", 16, 8192}});
    add(spacing("0.15", "0.05"));
  } else if (e == "harmonic") {
    add({sites, {"radius", Kind::real, "0.12", 0, kInf, true},
         {"tol", Kind::real, "1e-8", 0, kInf, true},
         {"omega", Kind::real, "1.7", 1, 2, true},
         {"max_sweeps", Kind::integer, "200000", 1, 1e9},
         {"boundary", Kind::choice, "node_mask", 0, 0, false, {"node_mask", "cut_cell"}},
         {"box_factor", Kind::real, "4", 1, kInf, true}});
    add(spacing("0.4", "0.15"));
  } else {
    throw ConfigError("experiment", "unknown experiment '" + e + "'");
  }
  return k;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::optional<double> to_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_reals(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& tok : split(v, ", \t")) {
    const auto x = to_number(tok);
    if (!x) throw ConfigError(key, "'" + tok + "' is not a finite number");
    out.push_back(*x);
  }
  return out;
}

std::vector<Point> parse_points(const std::string& key, const std::string& v) {
  std::vector<Point> out;
  for (const auto& item : split(v, ";")) {
    const auto xy = parse_reals(key, item);
    if (xy.empty()) continue;
    if (xy.size() != 2) throw ConfigError(key, "points are written 'x y; x y; ...'");
    out.push_back({xy[0], xy[1]});
  }
  return out;
}

std::optional<bool> to_flag(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  return std::nullopt;
}

std::string describe_range(const Key& k) {
  std::ostringstream os;
  os << (k.open ? "(" : "[") << k.lo << ", " << k.hi << (k.open ? ")" : "]");
  return os.str();
}

void check_value(const Key& k, const std::string& v) {
  switch (k.kind) {
    case Kind::integer:
    case Kind::real: {
      const auto x = to_number(v);
      if (!x) throw ConfigError(k.name, "'" + v + "' is not a finite number");
      if (k.kind == Kind::integer && *x != std::floor(*x)) throw ConfigError(k.name, "expected an integer");
      const bool inside = k.open ? (*x > k.lo && *x < k.hi) : (*x >= k.lo && *x <= k.hi);
      if (!inside) throw ConfigError(k.name, "value " + v + " outside " + describe_range(k));
      break;
    }
    case Kind::choice:
      if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end()) {
        throw ConfigError(k.name, "'" + v + "' is not one of the allowed values");
      }
      break;
    case Kind::flag:
      if (!to_flag(v)) throw ConfigError(k.name, "expected true or false");
      break;
    case Kind::points:
      parse_points(k.name, v);
      break;
    case Kind::reals: {
      const auto xs = parse_reals(k.name, v);
      if (k.count >= 0 && static_cast<int>(xs.size()) != k.count) {
        throw ConfigError(k.name, "expected " + std::to_string(k.count) + " numbers");
      }
      break;
    }
    case Kind::text:
      break;
  }
}

// ---- experiment helpers ----

Rect domain_of(const ExperimentConfig& c) {
  const auto d = c.reals("domain");
  const Rect r{d[0], d[1], d[2], d[3]};
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) throw ConfigError("domain", "expected x0 < x1 and y0 < y1");
  return r;
}

GridSpec grid_over(const Rect& d, int n) {
  if (d.width() >= d.height()) return GridSpec(n, static_cast<int>(std::lround(n * d.height() / d.width())), d);
  return GridSpec(static_cast<int>(std::lround(n * d.width() / d.height())), n, d);
}

std::vector<Point> site_points(const ExperimentConfig& c, const Rect& d) {
  auto pts = parse_points("sites", c.text("sites"));
  if (pts.empty()) {
    pts = random_sites(static_cast<std::size_t>(c.integer("sources")), d, c.seed(), c.real("separation"),
                       c.real("margin"));
  }
  return pts;
}

std::vector<double> list_or_random(const ExperimentConfig& c, const std::string& key, std::size_t n, double lo,
                                   double hi) {
  auto v = c.reals(key);
  if (v.empty()) {
    std::mt19937_64 rng(c.seed());
    std::uniform_real_distribution<double> u(lo, hi);
    for (std::size_t i = 0; i < n; ++i) v.push_back(u(rng));
  }
  if (v.size() != n) throw ConfigError(key, "expected one value per site");
  return v;
}

json point_json(Point p) { return json::array({p.x, p.y}); }

json points_json(const std::vector<Point>& pts) {
  json a = json::array();
  for (auto p : pts) a.push_back(point_json(p));
  return a;
}

void put_labels(Manifest& m, const fs::path& dir, const std::string& stem, const LabelGrid& g, std::size_t n) {
  write_label_pgm(g, RasterMeta{n}, dir / (stem + ".pgm"));
  m.files.push_back(stem + ".pgm");
  m.files.push_back(stem + ".pgm.hdr");
  write_label_ppm(g, dir / (stem + ".ppm"));
  m.files.push_back(stem + ".ppm");
}

void put_field(Manifest& m, const fs::path& dir, const std::string& stem, const ScalarField& f, std::size_t n) {
  write_scalar_raw(f, RasterMeta{n}, dir / (stem + ".raw"));
  m.files.push_back(stem + ".raw");
  m.files.push_back(stem + ".raw.hdr");
}

void put_json(Manifest& m, const fs::path& dir, const std::string& name, const json& j) {
  write_text_artifact(m, dir, name, j.dump(2) + "\n");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double label_mismatch(const LabelGrid& a, const LabelGrid& b) { return mismatch_fraction(a, b); }

// ---- experiments ----

void run_voronoi(const ExperimentConfig& c, Manifest& m) {
  const Rect d = domain_of(c);
  const auto pts = site_points(c, d);
  auto w = c.reals("weights");
  if (w.empty()) w.assign(pts.size(), 0.0);
  if (w.size() != pts.size()) throw ConfigError("weights", "expected one weight per site");
  const SiteSet s(pts, d, w);
  const GridSpec g = grid_over(d, c.grid());
  const auto mode = c.text("mode") == "power" ? TessellationMode::power : TessellationMode::voronoi;
  const LabelGrid labels = rasterize_tessellation(s, g, mode);
  put_labels(m, c.out_dir, "labels", labels, s.size());

  const LabelGrid vor = rasterize_tessellation(s, g);
  const LabelGrid equal = rasterize_tessellation(s.with_weights(std::vector<double>(s.size(), 0.37)), g,
                                                 TessellationMode::power);
  const LabelGrid pw = rasterize_tessellation(s, g, TessellationMode::power);
  auto shifted = w;
  for (auto& x : shifted) x += 0.75;
  const LabelGrid pws = rasterize_tessellation(s.with_weights(shifted), g, TessellationMode::power);

  json r;
  r["sites"] = points_json(pts);
  r["weights"] = w;
  r["mode"] = c.text("mode");
  r["counts"] = label_counts(labels, s.size());
  put_json(m, c.out_dir, "report.json", r);

  m.assertions.push_back(assert_le("equal_weight_power_vs_voronoi_mismatch", label_mismatch(equal, vor), 0.0));
  m.assertions.push_back(assert_le("weight_shift_mismatch", label_mismatch(pws, pw), 0.0));
}

void run_colonize(const ExperimentConfig& c, Manifest& m) {
  if (c.values.at("sources").empty()) throw ConfigError("sources", "required");
  SimParams p;
  p.n_sources = static_cast<int>(c.integer("sources"));
  p.particles = static_cast<int>(c.integer("particles"));
  p.iterations = static_cast<int>(c.integer("iterations"));
  p.step = c.real("step");
  p.epsilon = c.real("epsilon");
  p.warmup = static_cast<int>(c.integer("warmup"));
  p.domain = domain_of(c);
  p.seed = c.seed();
  p.validate();
  const bool audit = c.flag("audit");
  const ColonizeRun run = run_colonization(p, audit);

  std::string csv = "source,particle,iteration,x,y\n";
  csv.reserve(csv.size() + run.state.paths.size() * (run.state.paths.empty() ? 0 : run.state.paths[0].size()) * 48);
  for (std::size_t slot = 0; slot < run.state.paths.size(); ++slot) {
    const int src = run.state.source_of(slot);
    const auto particle = slot % static_cast<std::size_t>(run.state.particles);
    const auto& path = run.state.paths[slot];
    for (std::size_t t = 0; t < path.size(); ++t) {
      csv += std::to_string(src) + ',' + std::to_string(particle) + ',' + std::to_string(t) + ',' +
             num(path[t].x) + ',' + num(path[t].y) + '\n';
    }
  }
  write_text_artifact(m, c.out_dir, "paths.csv", csv);

  const GridSpec g = grid_over(p.domain, c.grid());
  const double radius = c.real("render_radius") > 0.0 ? c.real("render_radius") : 2.0 * g.spacing();
  put_labels(m, c.out_dir, "swarm", render_swarm(run.state, g, radius), run.sites.size());
  put_labels(m, c.out_dir, "voronoi", rasterize_tessellation(run.sites, g), run.sites.size());

  json j;
  j["sources"] = points_json(run.state.sources);
  j["per_source_fraction"] = run.metrics.per_source_fraction;
  j["global_fraction"] = run.metrics.global_fraction;
  j["n_coalitions"] = run.metrics.n_coalitions;
  j["n_boundary_resets"] = run.metrics.n_boundary_resets;
  j["audit"] = audit;
  j["audit_disagreements"] = run.metrics.audit_disagreements;
  put_json(m, c.out_dir, "metrics.json", j);

  m.assertions.push_back(assert_ge("global_fraction", run.metrics.global_fraction, c.real("min_fraction")));
  if (audit) {
    m.assertions.push_back(
        assert_le("audit_disagreements", static_cast<double>(run.metrics.audit_disagreements), 0.0));
  }
}

void run_heat(const ExperimentConfig& c, Manifest& m) {
  const Rect d = domain_of(c);
  const auto pts = site_points(c, d);
  HeatConfig hc{SiteSet(pts, d), list_or_random(c, "masses", pts.size(), 0.5, 2.0), c.real("time")};
  hc.validate();
  const double delta = c.real("delta");
  const double eps = c.real("eps");
  const double ds = c.real("ds");
  const auto angles = ray_angles(static_cast<std::size_t>(c.integer("rays")));

  std::size_t violations = 0;
  std::size_t empty_total = 0;
  json per_site = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t v = 0, empty = 0, samples = 0;
    for (double a : angles) {
      const RayProbe r = radial_monotonicity_probe(hc, i, a, delta, eps, ds);
      if (r.verdict == ProbeVerdict::violated) ++v;
      if (r.verdict == ProbeVerdict::empty_range) ++empty;
      samples += r.samples.size();
    }
    violations += v;
    empty_total += empty;
    if (empty > 0) {
      m.notes.push_back("site " + std::to_string(i) + ": " + std::to_string(empty) + " of " +
                        std::to_string(angles.size()) + " rays have an empty admissible range");
    }
    per_site.push_back({{"site", i}, {"violated_rays", v}, {"empty_rays", empty}, {"samples", samples}});
  }
  if (empty_total == angles.size() * pts.size()) m.notes.push_back("empty admissible ray range: nothing was checked");

  double worst_path = 0.0;
  json paths = json::array();
  const auto n_path = static_cast<std::size_t>(c.integer("path_samples"));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const PathMinimum pm = path_minimum_probe(hc, i, j, n_path);
      worst_path = std::max(worst_path, pm.boundary_distance);
      paths.push_back({{"i", i}, {"j", j}, {"s", pm.s}, {"point", point_json(pm.point)},
                       {"boundary_distance", pm.boundary_distance}});
    }
  }

  const GridSpec g = grid_over(d, c.grid());
  ScalarField logu(g);
  for (std::size_t k = 0; k < g.size(); ++k) logu.values[k] = log_heat_value(hc, g.node(k));
  put_field(m, c.out_dir, "log_u", logu, pts.size());
  put_labels(m, c.out_dir, "dominant", dominant_kernel_label(hc, g), pts.size());

  json r;
  r["sites"] = points_json(pts);
  r["masses"] = hc.masses;
  r["time"] = hc.time;
  r["rays"] = per_site;
  r["path_minima"] = paths;
  if (c.flag("empirical_t")) {
    std::vector<std::size_t> all(pts.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    EmpiricalTOptions opt;
    opt.ds = ds;
    const EmpiricalT t = empirical_T(hc, all, angles, delta, eps, opt);
    r["empirical_t"] = {{"time", t.time}, {"bracket", t.bracket}, {"no_pass", t.no_pass}, {"all_pass", t.all_pass}};
  }
  put_json(m, c.out_dir, "report.json", r);

  m.assertions.push_back(assert_le("monotonicity_violations", static_cast<double>(violations), 0.0));
  m.assertions.push_back(assert_le("path_minimum_boundary_distance", worst_path, eps));
}

void run_eikonal(const ExperimentConfig& c, Manifest& m) {
  const Rect d = domain_of(c);
  const GridSpec g = grid_over(d, c.grid());
  auto pts = site_points(c, d);
  for (auto& p : pts) p = g.node(g.nearest_node(p));
  const SiteSet s(pts, d);
  const double h = g.spacing();

  const ArrivalField f = fast_march(s, g);
  const LabelGrid oracle = rasterize_tessellation(s, g);
  const auto stack = per_source_distance_stack(s, g);
  const SingularSet sing = extract_singular_set(stack, c.real("tau"));
  LabelGrid sing_img(g);
  std::fill(sing_img.labels.begin(), sing_img.labels.end(), kUnassigned);
  for (auto k : sing.nodes) sing_img.labels[k] = 0;

  put_field(m, c.out_dir, "times", f.times, s.size());
  put_labels(m, c.out_dir, "labels", f.labels, s.size());
  put_labels(m, c.out_dir, "singular", sing_img, 1);
  std::string nodes = "node,i,j,x,y\n";
  for (auto k : sing.nodes) {
    nodes += std::to_string(k) + ',' + std::to_string(g.column(k)) + ',' + std::to_string(g.row(k)) + ',' +
             num(g.node(k).x) + ',' + num(g.node(k).y) + '\n';
  }
  write_text_artifact(m, c.out_dir, "singular.csv", nodes);

  const double mismatch = mismatch_fraction(f.labels, oracle, 2.0 * std::sqrt(2.0) * h);
  const double haus = node_set_hausdorff(g, sing.nodes, boundary_nodes(oracle)) / h;
  json r;
  r["sites"] = points_json(pts);
  r["spacing"] = h;
  r["label_mismatch_outside_band"] = mismatch;
  r["singular_nodes"] = sing.nodes.size();
  r["singular_threshold"] = sing.threshold;
  r["singular_hausdorff_over_h"] = std::isfinite(haus) ? json(haus) : json(nullptr);
  put_json(m, c.out_dir, "report.json", r);

  m.assertions.push_back(assert_le("label_mismatch_outside_band", mismatch, 0.0));
  m.assertions.push_back(assert_le("singular_hausdorff_over_h", haus, 3.0));
}

void run_transport(const ExperimentConfig& c, Manifest& m) {
  const Rect d = domain_of(c);
  const auto pts = site_points(c, d);
  const double ws = c.real("weight_scale");
  TransportConfig tc{SiteSet(pts, d, list_or_random(c, "weights", pts.size(), -ws, ws)), c.real("lambda"),
                     static_cast<std::size_t>(c.integer("samples")), static_cast<int>(c.integer("quadrature")),
                     c.seed()};
  tc.validate();
  const auto samples = draw_transport_samples(tc);
  const PushforwardReport pf = pushforward_check(tc, samples);
  const BrenierResidual br = brenier_residual(tc, tc.quadrature_n);
  const LimitCosts costs = semidiscrete_limit_cost(tc, tc.quadrature_n);
  const double cost_err =
      std::abs(costs.cost_lambda - (1 - tc.lambda) * (1 - tc.lambda) * costs.cost_zero) /
      ((1 - tc.lambda) * (1 - tc.lambda) * costs.cost_zero);

  json r;
  r["sites"] = points_json(pts);
  r["weights"] = tc.sites.weights();
  r["lambda"] = tc.lambda;
  r["pushforward"] = {{"samples", pf.samples},       {"boundary_skipped", pf.boundary_skipped},
                      {"violations", pf.violations}, {"share", pf.share},
                      {"expected_share", pf.expected_share}, {"z_score", pf.z_score},
                      {"density_ratio", pf.density_ratio},   {"max_abs_z", pf.max_abs_z}};
  json res = json::object();
  for (std::size_t k = 0; k < kMonomialCount; ++k) {
    res[monomial_name(k)] = {{"lhs", br.lhs[k]}, {"rhs", br.rhs[k]}, {"residual", br.residual[k]}};
  }
  r["brenier"] = res;
  r["costs"] = {{"cost_lambda", costs.cost_lambda}, {"cost_zero", costs.cost_zero}, {"rel_error", cost_err}};
  put_json(m, c.out_dir, "report.json", r);

  put_labels(m, c.out_dir, "cells", rasterize_tessellation(tc.sites, tc.quadrature_grid(c.grid()),
                                                           TessellationMode::power),
             pts.size());
  std::string csv = "x,y,label,tx,ty,on_boundary\n";
  csv.reserve(samples.size() * 96);
  for (const auto& s : samples) {
    csv += num(s.x.x) + ',' + num(s.x.y) + ',' + std::to_string(s.label) + ',' + num(s.y.x) + ',' + num(s.y.y) +
           ',' + (s.on_boundary ? "1" : "0") + '\n';
  }
  write_text_artifact(m, c.out_dir, "samples.csv", csv);

  m.assertions.push_back(assert_le("containment_violations", static_cast<double>(pf.violations), 0.0));
  m.assertions.push_back(assert_le("max_abs_z", pf.max_abs_z, 4.0));
  m.assertions.push_back(assert_le("brenier_max_residual", br.max_residual, 5e-3));
  m.assertions.push_back(assert_le("cost_identity_rel_error", cost_err, 1e-3));
}

void run_harmonic(const ExperimentConfig& c, Manifest& m) {
  auto pts = parse_points("sites", c.text("sites"));
  if (pts.empty()) {
    pts = random_sites(static_cast<std::size_t>(c.integer("sources")), Rect{0, 1, 0, 1}, c.seed(),
                       c.real("separation"), c.real("margin"));
  }
  const Rect box = truncation_box(pts, c.real("box_factor"));
  PerforatedProblem p(SiteSet(pts, box), c.real("radius"), GridSpec::square(c.grid(), box));
  p.tol = c.real("tol");
  p.omega = c.real("omega");
  p.max_sweeps = static_cast<int>(c.integer("max_sweeps"));
  p.boundary = c.text("boundary") == "cut_cell" ? BoundaryTreatment::cut_cell : BoundaryTreatment::node_mask;
  p.validate();

  const HarmonicTessellation ht = harmonic_tessellation(p);
  const MaxPrincipleVerdict mp = maximum_principle_check(ht.solution.u, p);
  put_field(m, c.out_dir, "u", ht.solution.u, pts.size());
  put_labels(m, c.out_dir, "labels", ht.labels, pts.size());

  json r;
  r["sites"] = points_json(pts);
  r["box"] = {box.x0, box.x1, box.y0, box.y1};
  r["sweeps"] = ht.solution.sweeps;
  r["last_update"] = ht.solution.last_update;
  r["first_update_increase"] = first_update_increase(ht.solution.update_history);
  r["laplacian_residual"] = ht.solution.laplacian_residual;
  r["maximum_principle"] = {{"pass", mp.pass},
                            {"min_interior", mp.min_interior},
                            {"max_interior", mp.max_interior},
                            {"strict_local_maxima", mp.strict_local_maxima}};
  r["unassigned_fraction"] = ht.unassigned_fraction;
  r["mismatch_vs_voronoi"] = ht.mismatch_vs_voronoi;
  put_json(m, c.out_dir, "report.json", r);

  m.assertions.push_back(
      {"maximum_principle", mp.pass, static_cast<double>(mp.strict_local_maxima), 0.0, "=="});
  m.assertions.push_back(assert_le("sor_last_update", ht.solution.last_update, p.tol));
  m.assertions.push_back(assert_le("unassigned_fraction", ht.unassigned_fraction, 0.01));
  m.notes.push_back("mismatch_vs_voronoi = " + num(ht.mismatch_vs_voronoi) + " (reported, not asserted)");
}

}  // namespace

// ---- ExperimentConfig ----

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError(key, "not a key of experiment " + experiment);
  return it->second;
}

double ExperimentConfig::real(const std::string& key) const {
  const auto x = to_number(text(key));
  if (!x) throw ConfigError(key, "required");
  return *x;
}

long ExperimentConfig::integer(const std::string& key) const { return std::lround(real(key)); }

bool ExperimentConfig::flag(const std::string& key) const { return to_flag(text(key)).value_or(false); }

std::vector<double> ExperimentConfig::reals(const std::string& key) const { return parse_reals(key, text(key)); }

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"voronoi", "colonize", "heat", "eikonal", "transport", "harmonic"};
  return names;
}

std::map<std::string, std::string> config_defaults(const std::string& experiment) {
  std::map<std::string, std::string> out;
  for (const auto& k : schema(experiment)) out[k.name] = k.def;
  return out;
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? line : trim(line.substr(0, eq));
    if (eq == std::string::npos || key.empty()) {
      throw ConfigError(key.empty() ? "config" : key,
                        path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError(key, path.string() + ":" + std::to_string(lineno) + ": repeated key");
    }
  }
  return out;
}

ExperimentConfig parse_config(const std::string& experiment, const ConfigInputs& in) {
  const auto keys = schema(experiment);
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  for (const auto& k : keys) cfg.values[k.name] = k.def;

  std::vector<std::pair<std::string, std::string>> given;
  if (in.file) {
    for (auto& [k, v] : read_config_file(*in.file)) {
      if (k == "experiment") {
        if (v != experiment) throw ConfigError("experiment", "file is for '" + v + "', not '" + experiment + "'");
        continue;
      }
      given.emplace_back(k, v);
    }
  }
  for (const auto& o : in.overrides) {
    const auto eq = o.find('=');
    const std::string key = trim(o.substr(0, eq));
    if (eq == std::string::npos || key.empty()) throw ConfigError(key.empty() ? "override" : key, "expected key=value");
    given.emplace_back(key, trim(o.substr(eq + 1)));
  }
  if (in.seed) given.emplace_back("seed", std::to_string(*in.seed));
  if (in.grid) given.emplace_back("grid", std::to_string(*in.grid));
  if (in.out) given.emplace_back("out", in.out->string());

  for (const auto& [k, v] : given) {
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& x) { return x.name == k; });
    if (it == keys.end()) throw ConfigError(k, "unknown key for experiment " + experiment);
    if (!v.empty()) check_value(*it, v);
    cfg.values[k] = v;
  }

  const auto sites = cfg.values.find("sites");
  const bool has_sites = sites != cfg.values.end() && !parse_points("sites", sites->second).empty();
  if (!has_sites && cfg.values["sources"].empty()) throw ConfigError("sources", "required (or give explicit sites)");
  if (has_sites && !cfg.values["sources"].empty() &&
      static_cast<std::size_t>(cfg.integer("sources")) != parse_points("sites", sites->second).size()) {
    throw ConfigError("sources", "disagrees with the number of sites");
  }

  if (!cfg.values["out"].empty()) {
    cfg.out_dir = cfg.values["out"];
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    cfg.out_dir = fs::path(env) / experiment;
  } else {
    cfg.out_dir = fs::path("vlab_out") / experiment;
  }
  return cfg;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  RunOutcome r;
  Manifest& m = r.manifest;
  m.experiment = cfg.experiment;
  m.config_echo = cfg.values;
  m.config_echo.erase("out");  // so runs into different directories compare equal

  const std::string& e = cfg.experiment;
  if (e == "voronoi") run_voronoi(cfg, m);
  else if (e == "colonize") run_colonize(cfg, m);
  else if (e == "heat") run_heat(cfg, m);
  else if (e == "eikonal") run_eikonal(cfg, m);
  else if (e == "transport") run_transport(cfg, m);
  else if (e == "harmonic") run_harmonic(cfg, m);
  else throw ConfigError("experiment", "unknown experiment '" + e + "'");

  std::ofstream out(cfg.out_dir / "manifest.json", std::ios::binary);
  out << manifest_json(m, cfg.out_dir);
  if (!out) throw std::runtime_error("cannot write manifest in " + cfg.out_dir.string());
  r.exit_code = m.all_pass() ? 0 : 2;
  return r;
}

}  // namespace vlab
