#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

struct SimParams {
  int n_sources = 4;
  int particles = 100;    // per source
  int iterations = 500;
  double step = 0.1;      // scale of the Gaussian increment
  double epsilon = 0.01;  // coalition radius
  int warmup = 5;         // coalition checks start once t >= warmup
  Rect domain{0.0, 2.0, 0.0, 2.0};
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

// Particle p of source i lives at slot i * particles + p.
struct SwarmState {
  std::vector<Point> sources;
  int particles = 0;
  int t = 0;
  std::vector<std::vector<Point>> paths;  // positions at iterations 0..t
  std::vector<std::mt19937_64> streams;   // one per particle

  std::size_t slot(int source, int particle) const {
    return static_cast<std::size_t>(source) * static_cast<std::size_t>(particles) + static_cast<std::size_t>(particle);
  }
  int source_of(std::size_t slot) const { return static_cast<int>(slot / static_cast<std::size_t>(particles)); }
  Point position(std::size_t slot) const { return paths[slot].back(); }
};

// Spatial hash of every stored trajectory point, tagged by source.
class CoalitionIndex {
 public:
  explicit CoalitionIndex(double epsilon, Point origin = {});

  void insert(Point p, int source);
  // True when some point of a different source lies strictly within epsilon.
  bool hits_other_source(Point p, int source) const;
  std::size_t size() const { return count_; }

 private:
  // Points of one bucket, grouped by source so a query skips its own
  // source's points (which pile up at the source after resets) in one step.
  struct Group {
    int source;
    std::vector<Point> points;
  };
  std::uint64_t key(long bx, long by) const;
  long bucket(double v, double origin) const;

  double epsilon_;
  double side_;
  Point origin_;
  std::size_t count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Group>> buckets_;
};

// Sources drawn uniformly in the domain; every particle starts at its source.
SwarmState init_swarm(const SimParams& params);
SiteSet swarm_sites(const SwarmState& state, const SimParams& params);
CoalitionIndex build_index(const SwarmState& state, const SimParams& params);

struct StepStats {
  std::size_t coalitions = 0;
  std::size_t boundary_resets = 0;
  std::size_t audited = 0;
  std::size_t audit_disagreements = 0;
};

// Exhaustive scan of all trajectory points (iterations 0..t) of other sources.
bool coalition_by_scan(const SwarmState& state, Point candidate, int source, double epsilon);

// One iteration. Every candidate is tested against the history through
// iteration t; the new positions enter the index after the whole step. With
// `audit`, each hash decision is compared against coalition_by_scan.
StepStats step_swarm(SwarmState& state, const SimParams& params, CoalitionIndex& index, bool audit = false);

struct ColonizeMetrics {
  std::vector<double> per_source_fraction;  // trajectory points inside the own Voronoi cell
  double global_fraction = 0.0;
  std::size_t n_coalitions = 0;
  std::size_t n_boundary_resets = 0;
  std::size_t audit_disagreements = 0;
};

ColonizeMetrics cell_fractions(const SwarmState& state, const SiteSet& sites);

struct ColonizeRun {
  SiteSet sites;
  SwarmState state;
  ColonizeMetrics metrics;
};

ColonizeRun run_colonization(const SimParams& params, bool audit = false);

// Each node takes the source of the nearest trajectory point within `radius`
// (ties to the lower source), else UNASSIGNED.
LabelGrid render_swarm(const SwarmState& state, const GridSpec& g, double radius);

}  // namespace vlab
