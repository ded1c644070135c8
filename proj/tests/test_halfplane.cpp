#include <cmath>
#include <map>

#include "doctest.h"
#include "oracle.hpp"
#include "peel/halfplane.hpp"
#include "peel/simple_series.hpp"

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

// Hand-built half-plane fixtures. add_edge creates the dart pair (u -> v,
// v -> u); faces and contours are wired explicitly.
struct Fixture {
  PlanarMapBall ball;

  std::int32_t add_edge(std::int32_t u, std::int32_t v) {
    std::int32_t d = static_cast<std::int32_t>(ball.org.size());
    ball.org.push_back(u);
    ball.org.push_back(v);
    ball.face.push_back(PlanarMapBall::kFrontierFace);
    ball.face.push_back(PlanarMapBall::kFrontierFace);
    ball.fnext.push_back(-1);
    ball.fnext.push_back(-1);
    ball.n_vertices = std::max(ball.n_vertices, std::max(u, v) + 1);
    return d;
  }

  void face_cycle(const std::vector<std::int32_t>& darts) {
    std::int32_t fid = static_cast<std::int32_t>(ball.face_rep.size());
    ball.face_rep.push_back(darts[0]);
    ball.face_degree.push_back(static_cast<std::int32_t>(darts.size()));
    for (std::size_t i = 0; i < darts.size(); ++i) {
      ball.face[darts[i]] = fid;
      ball.fnext[darts[i]] = darts[(i + 1) % darts.size()];
    }
  }

  // line darts (map side, left to right); outer contour stores their twins
  // right to left
  void set_line(const std::vector<std::int32_t>& map_side) {
    for (auto it = map_side.rbegin(); it != map_side.rend(); ++it) {
      ball.face[*it ^ 1] = PlanarMapBall::kOuterFace;
      ball.outer_contour.push_back(*it ^ 1);
    }
    ball.outer_is_cycle = false;
  }

  void finish(std::int32_t root_dart, int radius) {
    ball.root_dart = root_dart;
    ball.vdist.assign(ball.n_vertices, 1);
    ball.vdist[ball.org[root_dart]] = 0;
    ball.certified_radius = radius;
  }
};

}  // namespace

TEST_CASE("core extraction: two boundary edges with a two-edge tree at the root origin") {
  // boundary walk: u -E1- v, spike v-w, w-z (walked down and back), v -E2- x
  Fixture fx;
  std::int32_t u = 0, v = 1, w = 2, z = 3, x = 4;
  std::int32_t e1 = fx.add_edge(u, v);
  std::int32_t t1 = fx.add_edge(v, w);
  std::int32_t t2 = fx.add_edge(w, z);
  std::int32_t e2 = fx.add_edge(v, x);
  // map-side faces for the two genuine boundary edges
  fx.ball.face[e1] = 0;
  fx.ball.face[e2] = 0;
  fx.ball.face_rep.push_back(e1);
  fx.ball.face_degree.push_back(2);
  fx.ball.fnext[e1] = e1;  // not walked by extract_core
  fx.ball.fnext[e2] = e2;
  // contour left to right: e1, t1, t2, t2^1, t1^1, e2
  std::vector<std::int32_t> line{e1, t1, t2, t2 ^ 1, t1 ^ 1, e2};
  // tree edges bound the outer face on both sides
  fx.set_line(line);
  fx.ball.face[t1] = PlanarMapBall::kOuterFace;
  fx.ball.face[t2] = PlanarMapBall::kOuterFace;
  fx.finish(e2, 5);

  CoreExtraction core = extract_core(fx.ball);
  CHECK(core.determinate);
  REQUIRE(core.core_contour.size() == 2);
  CHECK(core.core_contour[0] == e1);
  CHECK(core.core_contour[1] == e2);
  CHECK(core.root_pos == 1);
  REQUIRE(core.dangling.size() == 1);
  CHECK(core.dangling[0].attach_vertex == v);
  CHECK(core.dangling[0].half_perimeter == 2);  // contour length four
  CHECK(core.dangling[0].realized);
}

TEST_CASE("first simple peel on the drawn fixture: exposure 4, gulps 3 and 2") {
  // boundary vertices 0..8 left to right (root edge between 3 and 4); the
  // peeled face is a 10-gon swallowing two edges left and three right of the
  // root, exposing four new edges via three top vertices 9, 10, 11.
  Fixture fx;
  std::vector<std::int32_t> bottom;
  for (int i = 0; i < 8; ++i) bottom.push_back(fx.add_edge(i, i + 1));
  std::int32_t root = bottom[3];
  std::int32_t t1 = fx.add_edge(7, 9);    // v4 -> u1 in contour terms
  std::int32_t t2 = fx.add_edge(9, 10);
  std::int32_t t3 = fx.add_edge(10, 11);
  std::int32_t t4 = fx.add_edge(11, 1);   // back to v_{-2}
  fx.face_cycle({bottom[1], bottom[2], bottom[3], bottom[4], bottom[5], bottom[6], t1, t2, t3, t4});
  // everything above: one outer blob face closed by two far edges via vertex 12
  std::int32_t ta = fx.add_edge(8, 12);
  std::int32_t tb = fx.add_edge(12, 0);
  fx.face_cycle({bottom[0], t4 ^ 1, t3 ^ 1, t2 ^ 1, t1 ^ 1, bottom[7], ta, tb});
  fx.set_line(bottom);
  fx.finish(root, 6);

  CoreExtraction core = extract_core(fx.ball);
  CHECK(core.determinate);
  CHECK(core.root_pos == 3);
  std::optional<SimpleStepStats> st = simple_step_stats(fx.ball, core);
  REQUIRE(st.has_value());
  CHECK(st->k == 5);
  CHECK(st->exposure == 4);
  CHECK(st->gulp_right == 3);
  CHECK(st->gulp_left == 2);
}

TEST_CASE("identity extraction when the boundary is already simple") {
  Fixture fx;
  std::vector<std::int32_t> bottom;
  for (int i = 0; i < 4; ++i) bottom.push_back(fx.add_edge(i, i + 1));
  for (std::int32_t d : bottom) {
    fx.ball.face[d] = 0;
  }
  fx.ball.face_rep.push_back(bottom[0]);
  fx.ball.face_degree.push_back(4);
  for (std::size_t i = 0; i < bottom.size(); ++i)
    fx.ball.fnext[bottom[i]] = bottom[(i + 1) % bottom.size()];
  fx.set_line(bottom);
  fx.finish(bottom[1], 4);
  CoreExtraction core = extract_core(fx.ball);
  CHECK(core.determinate);
  CHECK(core.core_contour.size() == bottom.size());
  CHECK(core.dangling.empty());
}

TEST_CASE("sampled tilde balls extract and measure consistently") {
  RngStream rng(99);
  int resolved = 0;
  for (int i = 0; i < 300; ++i) {
    SimpleStepSample s = sample_simple_step(quad_disk(), quad_kit(), rng.child(i), 2, 64);
    ++resolved;
    CHECK(s.stats.k == 2);  // quadrangulations only reveal squares
    CHECK(s.stats.exposure >= 1);
    CHECK(s.stats.gulp_left >= 0);
    CHECK(s.stats.gulp_right >= 0);
    // boundary balance: a square consumes 1 + gl + gr and exposes e with
    // e - 1 - gl - gr = 2k - 2 - 2*(half-perimeter of the enclosed pockets)
    CHECK((s.stats.exposure - 1 - s.stats.gulp_left - s.stats.gulp_right) % 2 == 0);
    CHECK(s.stats.exposure <= 2 * s.stats.k - 1);
  }
  CHECK(resolved == 300);
}

TEST_CASE("root component law ingredients") {
  // normalizer identity against Wc h_up(2k-1)
  for (int k = 1; k <= 20; ++k)
    CHECK(c_root_normalizer_residual(quad_disk(), quad_kit().renewal, k) < 1e-8);
  // k = 1 reduces to the plain free law; P(vertex map) = 1/Wc
  RngStream rng(123);
  const int n = 100000;
  int dagger1 = 0, dagger2 = 0;
  for (int i = 0; i < n; ++i) {
    if (sample_c_root(quad_disk(), quad_kit().renewal, 1, rng).half_perimeter == 0) ++dagger1;
    if (sample_c_root(quad_disk(), quad_kit().renewal, 2, rng).half_perimeter == 0) ++dagger2;
  }
  double p1 = 0.75;  // 1/Wc
  CHECK(std::fabs(dagger1 / double(n) - p1) < 3 * std::sqrt(p1 * (1 - p1) / n));
  double p2 = 0.5;  // (1/Wc) / h_up(3)
  CHECK(std::fabs(dagger2 / double(n) - p2) < 3 * std::sqrt(p2 * (1 - p2) / n));
  // blue offsets stay within the admissible slots
  for (int i = 0; i < 2000; ++i) {
    CRootSample s = sample_c_root(quad_disk(), quad_kit().renewal, 3, rng);
    CHECK(s.blue_offset >= 0);
    CHECK(s.blue_offset < std::min(5, 2 * s.half_perimeter + 1));
  }
}

TEST_CASE("P(positive gulp) closed form agrees with the hat constant") {
  double p = prob_gulp_positive(quad_kit().nu);
  CHECK(std::fabs(p - 2.0 / 9.0) < 1e-8);
  NuMeasure broken = quad_kit().nu;
  broken.neg[0] *= 1.001;
  CHECK_THROWS_AS(prob_gulp_positive(broken, 1e-8), ConsistencyError);
}
