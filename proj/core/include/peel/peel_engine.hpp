#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "peel/planar_map.hpp"
#include "peel/rng.hpp"
#include "peel/walks.hpp"
#include "peel/weights.hpp"

namespace peel {

// One lazy-peeling event. Either a new face of half-degree k is revealed, or
// the peeled edge is identified with another frontier edge, splitting off
// holes of half-perimeters k1 and k2 (either may be 0; in half-plane modes
// one side is the infinite region and carries half_right/left = -1).
struct PeelEvent {
  bool new_face = false;
  int k = 0;    // face half-degree for C_k
  int k1 = 0;   // half-perimeter split, clockwise resp. counterclockwise side
  int k2 = 0;
  bool from_tail = false;  // negative jump drawn beyond the exact table
};

// Samples the finite-hole transition: C_k with q_k W^(L+k-1)/W^(L), and
// G_{k1,k2} with W^(k1) W^(k2)/W^(L) for k1+k2 = L-1. Total mass is 1 by the
// disk recursion; checked to 1e-9 when tables are built.
PeelEvent sample_finite_event(const DiskData& disk, int hole_half_perimeter, RngStream& rng);

// Total transition mass at the given hole size (diagnostic; ~1).
double finite_event_mass(const DiskData& disk, int hole_half_perimeter);

// Boundary length of a free Boltzmann map: P(l) = W^(l) c^{-l} / Wc, l >= 0.
int sample_free_perimeter(const DiskData& disk, RngStream& rng);

struct ACoreResult {
  int d_steps = 0;              // number of -1 steps of the exposed-length chain
  int core_half_perimeter = 0;  // (D+1)/2: the core boundary has D+1 edges
  long walk_steps = 0;
};

// Runs the core exploration as the absorbed h-transform walk: the exposed
// length chain started from 1 (the free map conditioned off the vertex map),
// h = h_down, absorbed at 0. D is odd almost surely.
ACoreResult run_a_core(const WalkKit& kit, RngStream rng, long step_budget = 100000000);
// Same walk on a prebuilt chain; use for tight Monte Carlo loops.
ACoreResult run_a_core(const DoobChain& e_chain, RngStream& rng, long step_budget = 100000000);

enum class BallMode { finite, halfplane_general, halfplane_tilde };

struct EngineOptions {
  long step_budget = 500000000;    // per exploration
  bool record_trace = false;
  bool validate_each_step = false; // Euler/linkage sweep after every event
};

struct TraceRecord {
  std::uint8_t kind;   // 0 = C_k, 1 = G split, 2 = beyond-left, 3 = beyond-right
  std::int32_t a;      // k or h
  std::int32_t b;      // peel position or second split size
};

struct ExplorationTrace {
  std::vector<TraceRecord> records;
  long steps = 0;
  long tail_draws = 0;
  std::uint64_t summary_hash() const;
};

// Filled-in exploration engine. One instance = one exploration; independent
// explorations may run concurrently on their own instances and rng streams.
// A session can be grown incrementally: extend the certified radius, or force
// specific unfilled holes to fill completely, without ever rebuilding (the
// law of the underlying infinite map is untouched by the schedule).
class Explorer {
 public:
  Explorer(const DiskData& disk, const WalkKit* kit, EngineOptions opt = {});

  // Builds the ball of the requested radius around the root-edge origin.
  // finite mode: root face of half-perimeter `root_half_perimeter`;
  // half-plane modes ignore it. Every hole whose frontier carries a vertex at
  // distance <= radius is filled, so the ball of `radius` is certified.
  PlanarMapBall build_ball(BallMode mode, int root_half_perimeter, int radius, RngStream rng);

  // session interface
  void start(BallMode mode, int root_half_perimeter, RngStream rng);
  void extend_to_radius(int radius);    // peel until the frontier clears it
  // Completely fills the holes carrying the given frontier darts (ids from
  // the last snapshot), then re-certifies the current radius.
  void fill_frontier(const std::vector<std::int32_t>& snapshot_darts);
  PlanarMapBall snapshot();

  const ExplorationTrace& trace() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Mass table of the half-plane step at exposed length p, peel position l
// (1-based from the left): used by tests and by the tilde-step checks.
// Entries: (description tag, probability). Sums to 1 within 1e-9.
double tilde_step_mass(const WalkKit& kit, int p, int l);

}  // namespace peel
