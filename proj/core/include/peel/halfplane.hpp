#pragma once

#include <optional>
#include <vector>

#include "peel/peel_engine.hpp"
#include "peel/planar_map.hpp"
#include "peel/rng.hpp"
#include "peel/simple_series.hpp"
#include "peel/walks.hpp"

namespace peel {

// Core decomposition of a half-plane ball: the simple boundary component
// carrying the root edge plus the finite components dangling from its pinch
// vertices.
struct DanglingComponent {
  std::int32_t attach_vertex = -1;
  int half_perimeter = 0;     // boundary length of the component / 2
  bool realized = false;      // fully explored inside the ball
  int contour_from = 0, contour_to = 0;  // excised span [from, to) in line order
};

struct CoreExtraction {
  bool determinate = false;
  std::vector<std::int32_t> core_contour;  // left-to-right map-side boundary darts
  // position is provisional when its vertices still touch the frontier, so a
  // later pinch could change the picture there
  std::vector<std::uint8_t> provisional;
  int root_pos = -1;                       // index of the root dart in core_contour
  std::vector<DanglingComponent> dangling; // ordered left to right
};

// Walks the boundary contour, detects pinch vertices, and cuts the dangling
// components. Throws IndeterminateError when the root edge cannot be placed
// on the infinite-side component within this ball.
CoreExtraction extract_core(const PlanarMapBall& ball);

struct SimpleStepStats {
  int k = 0;           // half-degree of the peeled face
  int exposure = 0;    // new simple-boundary edges
  int gulp_left = 0;   // old simple-boundary edges swallowed strictly left of the root
  int gulp_right = 0;
};

// Measures the first simple peeling step of the core map purely
// combinatorially: the enclosed region is the face left of the root edge plus
// every finite pocket it separates from infinity. Returns nullopt when the
// ball is too shallow to resolve the region.
std::optional<SimpleStepStats> simple_step_stats(const PlanarMapBall& ball,
                                                 const CoreExtraction& core);

// Like simple_step_stats, but reports what blocks an unresolved measurement:
// frontier darts whose holes must be filled, or the need for a larger radius
// (when the exposed boundary itself is in the way).
struct SimpleStepProbe {
  std::optional<SimpleStepStats> stats;
  std::vector<std::int32_t> blocking;  // unfilled-hole darts (snapshot ids)
  bool needs_radius = false;
};
SimpleStepProbe probe_simple_step(const PlanarMapBall& ball, const CoreExtraction& core);

// Grows one tilde-law exploration until the first simple peel resolves:
// radius extensions when the exposed boundary blocks, targeted hole fills
// otherwise. The schedule never biases the measured law.
struct SimpleStepSample {
  SimpleStepStats stats;
  int radius_used = 0;
};
SimpleStepSample sample_simple_step(const DiskData& disk, const WalkKit& kit, RngStream rng,
                                    int start_radius = 2, int max_radius = 4096);

// Component of the boundary dangling at the far endpoint of the root edge
// (the first pinch slot right of the root), with the free law under the
// tilde measure. half_perimeter 0 means no component there.
struct DanglingSample {
  int half_perimeter = 0;
  int radius_used = 0;
};
DanglingSample sample_root_tip_component(const DiskData& disk, const WalkKit& kit, RngStream rng,
                                         int start_radius = 2, int max_radius = 4096);

// Law of the component at the origin of the relocated root after revealing a
// face of half-degree k: the free perimeter size-biased by
// (2k-1) ^ (2l+1), normalizer Wc * h_up(2k-1). blue_offset is uniform on the
// admissible slots.
struct CRootSample {
  int half_perimeter = 0;
  int blue_offset = 0;
};
CRootSample sample_c_root(const DiskData& disk, const RenewalFunctions& renewal, int k,
                          RngStream& rng);

// Normalizer identity check: sum_l W^(l) c^{-l} ((2k-1) ^ (2l+1)) against
// Wc * h_up(2k-1); returns the relative residual.
double c_root_normalizer_residual(const DiskData& disk, const RenewalFunctions& renewal, int k);

// P(simple gulp > 0) = S^2 / (2 nu(-1)); checked against 1/hat_c within tol
// (ConsistencyError on mismatch).
double prob_gulp_positive(const NuMeasure& nu, double tol = 1e-8);

}  // namespace peel
