#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "peel/peel_engine.hpp"
#include "peel/planar_map.hpp"
#include "peel/rng.hpp"
#include "peel/walks.hpp"
#include "peel/weights.hpp"

namespace peel {

enum class PercoKind { site, bond, face };

const char* to_string(PercoKind k);
PercoKind perco_kind_from_string(const std::string& s);

struct ThresholdReport {
  double site = 0, bond = 0, face = 0;
  std::optional<Rat> site_exact, bond_exact, face_exact;
  // ingredients
  double S = 0, nu_minus_1 = 0, gulp = 0;
};

// Closed forms for a critical dilute sequence:
//   p_site = 1 - S^2 / (2 nu(-1) g),  p_bond = 1 - 1/(g+1),
//   p_face = (1 + 1/(2g+1)) / 2.
// Refuses non-critical input (SolverFailure with diagnostics).
ThresholdReport thresholds(const NuMeasure& nu, const CriticalityTolerances& tol = {});

struct ClusterReport {
  std::int64_t size = 0;   // cells in the root cluster within the ball
  bool one_arm = false;    // cluster reaches the depth-r frontier
};

// Colors cells i.i.d. (coupled: one uniform per cell, thresholded at p) and
// extracts the root cluster by union-find. Site: vertex cluster of the root
// origin; bond: vertices joined by black edges; face: the face left of the
// root edge, adjacency across shared edges.
ClusterReport percolate_ball(const PlanarMapBall& ball, PercoKind kind, double p,
                             const RngStream& cell_stream, int radius);

// One-arm indicators for a whole ascending p-grid in a single incremental
// union-find sweep (exactly the coupled coloring at each p).
std::vector<std::uint8_t> percolate_grid(const PlanarMapBall& ball, PercoKind kind,
                                         const std::vector<double>& p_grid,
                                         const RngStream& cell_stream,
                                         const std::vector<int>& radii,
                                         std::vector<std::int64_t>* sizes = nullptr);

struct OneArmCurves {
  std::vector<double> p_grid;
  std::vector<int> radii;
  // freq[ri][pi] = one-arm frequency at radius radii[ri], p_grid[pi]
  std::vector<std::vector<double>> freq;
};

struct ThresholdEstimate {
  double estimate = 0;
  double ci_lo = 0, ci_hi = 0;
  bool quality_warning = false;
  OneArmCurves curves;
};

struct EstimateOptions {
  std::vector<int> radii = {10, 20, 30};
  std::vector<double> p_grid;      // required
  int replicas = 10000;
  std::uint64_t seed = 1;
  int threads = 0;                 // 0 = hardware/PEEL_LAB_THREADS
  int bootstrap = 200;
  BallMode mode = BallMode::halfplane_general;
};

// Builds replica balls of the largest radius, evaluates one-arm curves on the
// grid for every radius, and estimates the threshold as the crossing point of
// consecutive-radius curves with a bootstrap CI over replicas.
ThresholdEstimate estimate_threshold(const DiskData& disk, const WalkKit& kit, PercoKind kind,
                                     const EstimateOptions& opt);

struct InterfaceWalkResult {
  double empirical_drift = 0;
  double drift_stderr = 0;
  long steps_taken = 0;
  bool died = false;          // walk was killed (< 0) before the step budget
  long death_time = -1;
};

// Black-boundary-length walk of the site exploration: increments
// eps - (1-eps) * ((G | G>0) - 1) with eps ~ Bernoulli(p), killed below 0.
// `gulp_sampler` draws from the positive-gulp law.
InterfaceWalkResult site_interface_walk(double p, const std::function<int(RngStream&)>& gulp_sampler,
                                        long steps, RngStream rng);

// Plug-in positive-gulp sampler from closed-form ingredients is deliberately
// not provided; build one from an empirical pool:
std::function<int(RngStream&)> empirical_gulp_sampler(std::vector<int> pool);

}  // namespace peel
