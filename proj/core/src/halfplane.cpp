#include "peel/halfplane.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "peel/simple_series.hpp"

namespace peel {

namespace {
constexpr std::int32_t kOuter = PlanarMapBall::kOuterFace;
constexpr std::int32_t kFrontier = PlanarMapBall::kFrontierFace;
}  // namespace

// ---------------------------------------------------------------------------
// core extraction

CoreExtraction extract_core(const PlanarMapBall& ball) {
  if (ball.outer_is_cycle)
    throw ConfigError("extract_core expects a half-plane ball");
  CoreExtraction out;
  // the realized boundary contour left to right: outer_contour stores the
  // line darts (outer side, pointing leftward) from right to left
  std::vector<std::int32_t> line(ball.outer_contour.rbegin(), ball.outer_contour.rend());
  const int n = static_cast<int>(line.size());
  // vertices along the walk, left to right: outer darts point leftward, so
  // org is the right endpoint of each boundary edge
  auto vert_at = [&](int i) {  // i = 0..n
    return i == 0 ? ball.org[ball.twin(line[0])] : ball.org[line[i - 1]];
  };
  // root position: the line-side dart of the root edge
  std::int32_t root_line = ball.twin(ball.root_dart);
  int root_pos = -1;
  for (int i = 0; i < n; ++i)
    if (line[i] == root_line) root_pos = i;
  if (root_pos < 0) throw ConsistencyError("root edge is not on the boundary contour");

  // pinch scan with nesting: repeated vertex => excise the enclosed span
  std::unordered_map<std::int32_t, int> last_seen;  // vertex -> position index
  struct Span {
    int from, to;  // [from, to) in line-dart indices
    std::int32_t attach;
  };
  std::vector<Span> spans;
  last_seen[vert_at(0)] = 0;
  for (int i = 1; i <= n; ++i) {
    std::int32_t v = vert_at(i);
    auto it = last_seen.find(v);
    if (it != last_seen.end()) {
      int j = it->second;
      if (j < i) {
        if (root_pos >= j && root_pos < i)
          throw ConsistencyError("root edge enclosed by a pinch: not on the core");
        // merge spans nested inside [j, i)
        while (!spans.empty() && spans.back().from >= j) spans.pop_back();
        spans.push_back({j, i, v});
      }
    }
    last_seen[v] = i;
  }

  // frontier-touching vertices make pinch status provisional
  std::unordered_set<std::int32_t> frontier_verts;
  for (std::int32_t d : ball.frontier_arc) {
    frontier_verts.insert(ball.org[d]);
    frontier_verts.insert(ball.org[ball.twin(d)]);
  }
  for (const auto& hole : ball.holes)
    for (std::int32_t d : hole) {
      frontier_verts.insert(ball.org[d]);
      frontier_verts.insert(ball.org[ball.twin(d)]);
    }

  out.root_pos = -1;
  std::size_t si = 0;
  for (int i = 0; i < n; ++i) {
    if (si < spans.size() && i >= spans[si].from) {
      if (i < spans[si].to) {
        if (i == spans[si].from) {
          DanglingComponent c;
          c.attach_vertex = spans[si].attach;
          c.contour_from = spans[si].from;
          c.contour_to = spans[si].to;
          c.half_perimeter = (spans[si].to - spans[si].from) / 2;
          c.realized = true;
          for (int t = spans[si].from; t < spans[si].to; ++t) {
            std::int32_t m = ball.twin(line[t]);
            if (ball.face[m] == kFrontier) c.realized = false;
            if (frontier_verts.count(ball.org[line[t]]) ||
                frontier_verts.count(ball.org[m]))
              c.realized = false;
          }
          out.dangling.push_back(c);
        }
        if (i == spans[si].to - 1) ++si;
        continue;
      }
    }
    if (line[i] == root_line) out.root_pos = static_cast<int>(out.core_contour.size());
    out.core_contour.push_back(ball.twin(line[i]));  // map-side dart, rightward
  }
  if (out.root_pos < 0) throw ConsistencyError("root edge lost during excision");

  // a core position is provisional when either endpoint still touches the
  // frontier: a later pinch could change the picture there
  out.provisional.resize(out.core_contour.size());
  out.determinate = true;
  for (std::size_t i = 0; i < out.core_contour.size(); ++i) {
    std::int32_t d = out.core_contour[i];
    bool prov = frontier_verts.count(ball.org[d]) > 0 ||
                frontier_verts.count(ball.org[ball.twin(d)]) > 0;
    out.provisional[i] = prov;
    if (prov) out.determinate = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// first simple peel

std::optional<SimpleStepStats> simple_step_stats(const PlanarMapBall& ball,
                                                 const CoreExtraction& core) {
  return probe_simple_step(ball, core).stats;
}

SimpleStepProbe probe_simple_step(const PlanarMapBall& ball, const CoreExtraction& core) {
  const std::vector<std::int32_t>& B = core.core_contour;
  const int nb = static_cast<int>(B.size());
  SimpleStepProbe probe;
  std::int32_t f = ball.face[ball.root_dart];
  if (f < 0) {  // the face left of the root is not revealed yet
    probe.needs_radius = true;
    return probe;
  }
  // frontier vertex incidences, split by arc (radius-bound) vs hole (fillable)
  std::unordered_map<std::int32_t, std::vector<std::int32_t>> hole_at_vertex;
  std::unordered_set<std::int32_t> arc_verts;
  for (std::int32_t d : ball.frontier_arc) {
    arc_verts.insert(ball.org[d]);
    arc_verts.insert(ball.org[ball.twin(d)]);
  }
  for (const auto& hole : ball.holes)
    for (std::int32_t d : hole) {
      hole_at_vertex[ball.org[d]].push_back(d);
      hole_at_vertex[ball.org[ball.twin(d)]].push_back(d);
    }
  auto block_vertex = [&](std::int32_t v) {
    auto it = hole_at_vertex.find(v);
    if (it != hole_at_vertex.end())
      for (std::int32_t d : it->second) probe.blocking.push_back(d);
    if (arc_verts.count(v)) probe.needs_radius = true;
  };

  // positions of core-boundary vertices; each appears once on a simple core
  std::unordered_map<std::int32_t, int> bpos;
  for (int i = 0; i < nb; ++i) bpos[ball.org[B[i]]] = i;
  if (nb > 0) bpos[ball.org[ball.twin(B[nb - 1])]] = nb;

  int lstar = core.root_pos, rstar = core.root_pos + 1;
  {
    std::int32_t d = ball.root_dart, start = d;
    do {
      auto it = bpos.find(ball.org[d]);
      if (it != bpos.end()) {
        lstar = std::min(lstar, it->second);
        rstar = std::max(rstar, it->second);
      }
      d = ball.fnext[d];
    } while (d != start);
  }
  if (lstar == 0 || rstar == nb) {  // may extend past the realized part
    probe.needs_radius = true;
    return probe;
  }
  bool provisional_span = false;
  for (int i = lstar; i < rstar; ++i)
    if (core.provisional[i]) {
      provisional_span = true;
      block_vertex(ball.org[B[i]]);
      block_vertex(ball.org[ball.twin(B[i])]);
    }

  // Classify realized faces as outside (connected to the frontier or to the
  // boundary beyond the swallowed span without crossing f or the boundary
  // line) versus enclosed. Pockets of the first simple peel are whatever is
  // not outside.
  std::unordered_set<std::int32_t> f_edges;
  {
    std::int32_t d = ball.root_dart, start = d;
    do {
      f_edges.insert(d >> 1);
      d = ball.fnext[d];
    } while (d != start);
  }
  std::unordered_set<std::int32_t> boundary_edges;
  for (std::int32_t d : ball.outer_contour) boundary_edges.insert(d >> 1);

  // Unfilled holes are NOT outside seeds: a hole inside the enclosed region
  // only means the sample is unresolved, which the enclosed flood detects.
  std::unordered_set<std::int32_t> outside;
  std::vector<std::int32_t> stack;
  auto seed_outside = [&](std::int32_t fid) {
    if (fid >= 0 && fid != f && outside.insert(fid).second) stack.push_back(fid);
  };
  for (std::int32_t d : ball.frontier_arc) seed_outside(ball.face[ball.twin(d)]);
  for (int i = 0; i < nb; ++i)
    if (i < lstar || i >= rstar) seed_outside(ball.face[B[i]]);
  while (!stack.empty()) {
    std::int32_t fid = stack.back();
    stack.pop_back();
    std::int32_t d = ball.face_rep[fid], start = d;
    do {
      std::int32_t e = d >> 1;
      if (!f_edges.count(e) && !boundary_edges.count(e))
        seed_outside(ball.face[ball.twin(d)]);
      d = ball.fnext[d];
    } while (d != start);
  }

  // the enclosed side must be fully realized: flood it, collecting frontiers
  bool unresolved = provisional_span;
  std::unordered_set<std::int32_t> enclosed;
  enclosed.insert(f);
  stack.push_back(f);
  while (!stack.empty()) {
    std::int32_t fid = stack.back();
    stack.pop_back();
    std::int32_t d = ball.face_rep[fid], start = d;
    do {
      std::int32_t e = d >> 1;
      bool block = boundary_edges.count(e) || (fid == f && f_edges.count(e) &&
                                               [&] {
                                                 std::int32_t o = ball.face[ball.twin(d)];
                                                 return o == kOuter || outside.count(o) > 0;
                                               }());
      if (!block) {
        std::int32_t other = ball.face[ball.twin(d)];
        if (other == kFrontier) {
          unresolved = true;
          probe.blocking.push_back(ball.twin(d));
        } else if (other >= 0 && !outside.count(other) && enclosed.insert(other).second) {
          stack.push_back(other);
        }
      }
      d = ball.fnext[d];
    } while (d != start);
  }
  if (unresolved) return probe;

  SimpleStepStats st;
  st.k = ball.face_degree[f] / 2;
  st.gulp_left = core.root_pos - lstar;
  st.gulp_right = rstar - (core.root_pos + 1);
  int expo = 0;
  {
    std::int32_t d = ball.root_dart, start = d;
    do {
      std::int32_t other = ball.face[ball.twin(d)];
      if (other >= 0 && outside.count(other)) ++expo;
      d = ball.fnext[d];
    } while (d != start);
  }
  st.exposure = expo;
  if (st.exposure < 1) throw ConsistencyError("first simple peel exposed no edges");
  probe.stats = st;
  return probe;
}

SimpleStepSample sample_simple_step(const DiskData& disk, const WalkKit& kit, RngStream rng,
                                    int start_radius, int max_radius) {
  Explorer ex(disk, &kit);
  ex.start(BallMode::halfplane_tilde, 0, rng);
  int r = start_radius;
  ex.extend_to_radius(r);
  for (int attempt = 0; attempt < 300; ++attempt) {
    PlanarMapBall ball = ex.snapshot();
    CoreExtraction core = extract_core(ball);
    SimpleStepProbe probe = probe_simple_step(ball, core);
    if (probe.stats) return {*probe.stats, r};
    if (!probe.blocking.empty()) {
      ex.fill_frontier(probe.blocking);
    } else {
      r *= 2;
      if (r > max_radius)
        throw IndeterminateError("first simple peel unresolved at the radius cap");
      ex.extend_to_radius(r);
    }
  }
  throw IndeterminateError("first simple peel unresolved after many fills");
}

DanglingSample sample_root_tip_component(const DiskData& disk, const WalkKit& kit, RngStream rng,
                                         int start_radius, int max_radius) {
  Explorer ex(disk, &kit);
  ex.start(BallMode::halfplane_tilde, 0, rng);
  int r = start_radius;
  ex.extend_to_radius(r);
  for (int attempt = 0; attempt < 300; ++attempt) {
    PlanarMapBall ball = ex.snapshot();
    CoreExtraction core = extract_core(ball);
    std::int32_t tip = ball.org[ball.twin(ball.root_dart)];
    std::vector<std::int32_t> blocking;
    bool needs_radius = false;
    for (std::int32_t d : ball.frontier_arc)
      if (ball.org[d] == tip || ball.org[ball.twin(d)] == tip) needs_radius = true;
    for (const auto& hole : ball.holes)
      for (std::int32_t d : hole)
        if (ball.org[d] == tip || ball.org[ball.twin(d)] == tip) blocking.push_back(d);
    const DanglingComponent* comp = nullptr;
    for (const DanglingComponent& c : core.dangling)
      if (c.attach_vertex == tip) comp = &c;
    if (comp && !comp->realized) {
      // fill whatever blocks the component span
      std::vector<std::int32_t> line(ball.outer_contour.rbegin(), ball.outer_contour.rend());
      for (int t = comp->contour_from; t < comp->contour_to; ++t) {
        std::int32_t m = ball.twin(line[t]);
        for (const auto& hole : ball.holes)
          for (std::int32_t d : hole)
            if (ball.org[d] == ball.org[m] || ball.org[ball.twin(d)] == ball.org[m] ||
                ball.org[d] == ball.org[line[t]] || ball.org[ball.twin(d)] == ball.org[line[t]])
              blocking.push_back(d);
        if (ball.face[m] == kFrontier) blocking.push_back(m);
        for (std::int32_t d : ball.frontier_arc)
          if (ball.org[d] == ball.org[m] || ball.org[ball.twin(d)] == ball.org[m])
            needs_radius = true;
      }
    }
    if (blocking.empty() && !needs_radius) {
      DanglingSample s;
      s.half_perimeter = comp ? comp->half_perimeter : 0;
      s.radius_used = r;
      return s;
    }
    if (!blocking.empty()) {
      ex.fill_frontier(blocking);
    } else {
      r *= 2;
      if (r > max_radius) throw IndeterminateError("root-tip component unresolved at radius cap");
      ex.extend_to_radius(r);
    }
  }
  throw IndeterminateError("root-tip component unresolved after many fills");
}

// ---------------------------------------------------------------------------
// root component law

CRootSample sample_c_root(const DiskData& disk, const RenewalFunctions& renewal, int k,
                          RngStream& rng) {
  if (k < 1) throw ConfigError("face half-degree must be >= 1");
  // weight w_l = W^(l) c^{-l} ((2k-1) ^ (2l+1)), normalizer Wc h_up(2k-1)
  double z = disk.Wc * renewal.up(2 * k - 1);
  double x = rng.next_unit() * z;
  double acc = 0;
  int l = 0;
  for (; l <= disk.L; ++l) {
    acc += disk.u[l] * std::min(2 * k - 1, 2 * l + 1);
    if (x < acc) break;
  }
  if (l > disk.L) {
    // far tail: all weights saturate at 2k-1
    double v = std::min((x - acc) / std::max(z - acc, 1e-300), 1.0 - 1e-12);
    l = disk.L + 1 + static_cast<int>((disk.L + 0.5) * (std::pow(1.0 - v, -2.0 / 3.0) - 1.0));
  }
  CRootSample s;
  s.half_perimeter = l;
  int slots = std::min(2 * k - 1, 2 * l + 1);
  s.blue_offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(slots)));
  return s;
}

double c_root_normalizer_residual(const DiskData& disk, const RenewalFunctions& renewal, int k) {
  double s = 0;
  for (int l = 0; l <= disk.L; ++l) s += disk.u[l] * std::min(2 * k - 1, 2 * l + 1);
  s += (2 * k - 1) * disk.u_tail_sum(disk.L);
  double z = disk.Wc * renewal.up(2 * k - 1);
  return std::fabs(s - z) / z;
}

double prob_gulp_positive(const NuMeasure& nu, double tol) {
  double p = nu.S * nu.S / (2.0 * nu.at(-1));
  // must agree with 1/hat_c = Wc^2 / c with Wc = c S / 2
  double hat_c_inv = nu.c * nu.S * nu.S / 4.0 / nu.c;  // (cS/2)^2 / c
  hat_c_inv = (nu.c * nu.S / 2.0) * (nu.c * nu.S / 2.0) / nu.c;
  if (std::fabs(p - hat_c_inv) > tol * std::max(1.0, p))
    throw ConsistencyError("P(gulp > 0) does not match 1/hat_c: " + std::to_string(p) + " vs " +
                           std::to_string(hat_c_inv));
  return p;
}

}  // namespace peel
