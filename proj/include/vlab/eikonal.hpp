#pragma once

#include <cstdint>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

enum class NodeState : std::uint8_t { far, narrow, accepted };

// Arrival times of |grad T| = 1 fronts started at the (snapped) sites,
// together with the upwind provenance label of every node.
struct ArrivalField {
  ScalarField times;
  LabelGrid labels;
  std::vector<NodeState> state;
  // Node indices in acceptance order.
  std::vector<std::size_t> accept_order;
};

// First-order fast marching from every site of a plane SiteSet. Each site is
// snapped to its nearest node and seeded with time 0; a node claimed by two
// sites keeps the lower index.
ArrivalField fast_march(const SiteSet& s, const GridSpec& g);

// One independent fast march per site; field k approximates d(x, x_k).
std::vector<ScalarField> per_source_distance_stack(const SiteSet& s, const GridSpec& g);

struct SingularSet {
  std::vector<std::size_t> nodes;
  double threshold = 0.0;
};

// Nodes within tau/2 of the curve where the two earliest fronts meet. The
// distance is estimated from the gap between the two smallest stack values
// divided by the rate at which that gap grows (|grad T_2 - grad T_1|, central
// differences), so the band has uniform width along the whole curve. Between
// two sites the criterion reduces to gap < tau. A non-positive tau selects the
// default 2h.
SingularSet extract_singular_set(const std::vector<ScalarField>& stack, double tau = 0.0);

// Thresholded front picture at each snapshot time: node k is labeled with the
// argmin field when that minimum is <= T*, UNASSIGNED otherwise.
std::vector<LabelGrid> front_snapshots(const std::vector<ScalarField>& stack,
                                       const std::vector<double>& times);

}  // namespace vlab
