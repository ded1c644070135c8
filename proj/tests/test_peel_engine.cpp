#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "oracle.hpp"
#include "peel/peel_engine.hpp"

using namespace peel;

namespace {

const DiskData& quad_disk() {
  static DiskData d = solve_disk_exact_atom(solve_critical_single_atom(2), 800, 64);
  return d;
}

const WalkKit& quad_kit() {
  static WalkKit kit = WalkKit::build(quad_disk(), 801, 200);
  return kit;
}

}  // namespace

TEST_CASE("finite peel transition masses and the L=1, L=2 probabilities") {
  const DiskData& d = quad_disk();
  for (int L = 1; L <= 40; ++L) CHECK(std::fabs(finite_event_mass(d, L) - 1.0) < 1e-9);
  // L=1: C_2 with (1/12) W2/W1 = 1/4, G(0,0) with W0 W0 / W1 = 3/4
  RngStream rng(7);
  int c2 = 0, g00 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    PeelEvent ev = sample_finite_event(d, 1, rng);
    if (ev.new_face && ev.k == 2) ++c2;
    if (!ev.new_face && ev.k1 == 0 && ev.k2 == 0) ++g00;
  }
  CHECK(c2 + g00 == n);
  CHECK(std::fabs(c2 / double(n) - 0.25) < 3 * std::sqrt(0.25 * 0.75 / n));
  // L=2: mass of C_2 = (1/12) W3/W2 = 1/3
  int c2b = 0;
  for (int i = 0; i < n; ++i) {
    PeelEvent ev = sample_finite_event(d, 2, rng);
    if (ev.new_face) ++c2b;
  }
  CHECK(std::fabs(c2b / double(n) - 1.0 / 3) < 3 * std::sqrt((1.0 / 3) * (2.0 / 3) / n));
}

TEST_CASE("degenerate 2-gon chain weights still sample") {
  // only q_1 > 0: every new face is a 2-gon
  WeightSequence q({{1, Rat(1, 2)}});
  DiskSolveOptions opt;
  opt.L = 64;
  DiskData d = solve_disk_series(q, 8.0, opt);  // admissible growth scale for q_1 = 1/2
  RngStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    PeelEvent ev = sample_finite_event(d, 1, rng);
    if (ev.new_face) CHECK(ev.k == 1);
  }
}

TEST_CASE("free perimeter law") {
  const DiskData& d = quad_disk();
  RngStream rng(11);
  const int n = 200000;
  std::map<int, int> hist;
  for (int i = 0; i < n; ++i) ++hist[sample_free_perimeter(d, rng)];
  double p0 = hist[0] / double(n), p1 = hist[1] / double(n);
  CHECK(std::fabs(p0 - 0.75) < 3 * std::sqrt(0.75 * 0.25 / n));
  CHECK(std::fabs(p1 - 0.125) < 3 * std::sqrt(0.125 * 0.875 / n));
}

TEST_CASE("core exploration walk: absorption, odd D, and P(D=1)") {
  RngStream rng(5);
  DoobChain chain(quad_kit().mu, quad_kit().renewal, DoobChain::H::down);
  const int n = 100000;
  int d1 = 0;
  for (int i = 0; i < n; ++i) {
    RngStream run = rng.child(i);
    ACoreResult res = run_a_core(chain, run);
    CHECK(res.d_steps % 2 == 1);
    if (res.d_steps == 1) ++d1;
  }
  double p = 8.0 / 9.0;
  CHECK(std::fabs(d1 / double(n) - p) < 3 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("finite ball structure and determinism") {
  Explorer ex(quad_disk(), &quad_kit());
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    PlanarMapBall ball = ex.build_ball(BallMode::finite, 1, 6, RngStream(seed));
    CHECK(ball.check_all(1) == "");
    CHECK(ball.root_dart >= 0);
  }
  // deterministic trace replay
  EngineOptions opt;
  opt.record_trace = true;
  Explorer ex1(quad_disk(), &quad_kit(), opt), ex2(quad_disk(), &quad_kit(), opt);
  PlanarMapBall b1 = ex1.build_ball(BallMode::finite, 2, 8, RngStream(42));
  PlanarMapBall b2 = ex2.build_ball(BallMode::finite, 2, 8, RngStream(42));
  CHECK(ex1.trace().summary_hash() == ex2.trace().summary_hash());
  CHECK(b1.dart_count() == b2.dart_count());
  PlanarMapBall b3 = ex1.build_ball(BallMode::finite, 2, 8, RngStream(43));
  CHECK(b3.check_all(2) == "");
}

TEST_CASE("half-plane general ball: structure and first-event law") {
  EngineOptions opt;
  opt.record_trace = true;
  Explorer ex(quad_disk(), &quad_kit(), opt);
  int c2_first = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    PlanarMapBall ball = ex.build_ball(BallMode::halfplane_general, 0, 1, RngStream(1000 + i));
    if (i < 50) {
      std::string bad = ball.check_all();
      CHECK(bad == "");
    }
    const ExplorationTrace& tr = ex.trace();
    REQUIRE(!tr.records.empty());
    if (tr.records[0].kind == 0 && tr.records[0].a == 2) ++c2_first;
  }
  // first peel reveals a square with probability nu(1) = 2/3
  double p = 2.0 / 3.0;
  CHECK(std::fabs(c2_first / double(n) - p) < 3 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("half-plane tilde ball: structure, first event is forced at p=1") {
  EngineOptions opt;
  opt.record_trace = true;
  Explorer ex(quad_disk(), &quad_kit(), opt);
  for (int i = 0; i < 200; ++i) {
    PlanarMapBall ball = ex.build_ball(BallMode::halfplane_tilde, 0, 3, RngStream(7000 + i));
    if (i < 40) CHECK(ball.check_all() == "");
    const ExplorationTrace& tr = ex.trace();
    REQUIRE(!tr.records.empty());
    // at exposed length 1 no gulp is possible: the first event reveals a face
    CHECK(tr.records[0].kind == 0);
    CHECK(tr.records[0].a == 2);
    for (std::int32_t deg : ball.face_degree) CHECK(deg == 4);
  }
}

TEST_CASE("tilde step masses sum to one across exposed lengths and positions") {
  for (int p = 1; p <= 40; ++p)
    for (int l = 1; l <= p; ++l)
      CHECK(std::fabs(tilde_step_mass(quad_kit(), p, l) - 1.0) < 1e-9);
}

TEST_CASE("finite mode: face count stays sane across seeds") {
  Explorer ex(quad_disk(), &quad_kit());
  double mean1 = 0, mean2 = 0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    PlanarMapBall a = ex.build_ball(BallMode::finite, 1, 20, RngStream(100 + i));
    mean1 += static_cast<double>(a.inner_face_count()) / n;
    PlanarMapBall b = ex.build_ball(BallMode::finite, 1, 20, RngStream(5000 + i));
    mean2 += static_cast<double>(b.inner_face_count()) / n;
  }
  CHECK(mean1 > 0.1);
  CHECK(mean2 > 0.1);
  CHECK(std::fabs(mean1 - mean2) < 0.5 * std::max(mean1, mean2));
}
