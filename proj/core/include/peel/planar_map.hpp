#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace peel {

// Rooted bipartite planar map produced by a peeling exploration, immutable
// after construction. Darts come in twin pairs (d, d^1); org[d] is the origin
// vertex and fnext[d] the next dart along the face on d's left. face[d] is
// the id of that face, kOuterFace for the root face, or kFrontierFace when
// d's side is an unfilled hole / the unexplored region.
struct PlanarMapBall {
  static constexpr std::int32_t kOuterFace = -1;
  static constexpr std::int32_t kFrontierFace = -2;

  std::vector<std::int32_t> org;
  std::vector<std::int32_t> face;
  std::vector<std::int32_t> fnext;

  std::vector<std::int32_t> face_rep;     // a dart of each inner face
  std::vector<std::int32_t> face_degree;

  std::int32_t n_vertices = 0;
  std::vector<std::int32_t> vdist;        // graph distance to the root origin

  std::int32_t root_dart = -1;            // map-side dart of the root edge

  // Realized contour of the root face in contour order. A full cycle in
  // finite mode; the realized boundary-line segment (right to left) in the
  // half-plane modes.
  std::vector<std::int32_t> outer_contour;
  bool outer_is_cycle = false;

  // Unfilled holes: each entry is the cyclic dart sequence of one hole.
  std::vector<std::vector<std::int32_t>> holes;
  // Exposed frontier arc (half-plane modes), left to right.
  std::vector<std::int32_t> frontier_arc;

  int certified_radius = 0;

  std::int32_t twin(std::int32_t d) const { return d ^ 1; }
  std::int32_t end(std::int32_t d) const { return org[d ^ 1]; }
  std::int64_t dart_count() const { return static_cast<std::int64_t>(org.size()); }
  std::int64_t edge_count() const { return dart_count() / 2; }
  std::int64_t inner_face_count() const { return static_cast<std::int64_t>(face_rep.size()); }

  // Structural validation.
  bool euler_ok() const;               // V - E + F == 2 with holes closed up
  bool bipartite_ok() const;           // BFS parity two-coloring exists
  bool holes_simple_ok() const;        // every hole contour visits distinct vertices
  bool root_face_degree_ok(int declared_half_perimeter) const;
  std::string check_all(int declared_half_perimeter = -1) const;  // empty when fine

  // Documented edge-list + face-list export (see README for the schema).
  std::string to_json() const;
};

}  // namespace peel
