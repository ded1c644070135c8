#include "peel/planar_map.hpp"

#include <queue>
#include <sstream>
#include <unordered_set>

namespace peel {

bool PlanarMapBall::euler_ok() const {
  // V - E + F on the closed-up sphere: inner faces, one face per unfilled
  // hole, and one face for the root face (in the half-plane case the root
  // face and the unexplored region meet around the boundary ends, so they
  // close up into a single face together).
  std::int64_t V = n_vertices;
  std::int64_t E = edge_count();
  std::int64_t F = inner_face_count() + 1 + static_cast<std::int64_t>(holes.size());
  return V - E + F == 2;
}

bool PlanarMapBall::bipartite_ok() const {
  // head[v] -> chain over darts with that origin
  std::vector<std::int32_t> head(n_vertices, -1), nxt(org.size(), -1);
  for (std::int32_t d = 0; d < dart_count(); ++d) {
    nxt[d] = head[org[d]];
    head[org[d]] = d;
  }
  std::vector<std::int8_t> color(n_vertices, -1);
  std::queue<std::int32_t> q;
  for (std::int32_t s = 0; s < n_vertices; ++s) {
    if (color[s] != -1) continue;
    color[s] = 0;
    q.push(s);
    while (!q.empty()) {
      std::int32_t v = q.front();
      q.pop();
      for (std::int32_t d = head[v]; d != -1; d = nxt[d]) {
        std::int32_t w = end(d);
        if (color[w] == -1) {
          color[w] = static_cast<std::int8_t>(1 - color[v]);
          q.push(w);
        } else if (color[w] == color[v]) {
          return false;
        }
      }
    }
  }
  return true;
}

bool PlanarMapBall::holes_simple_ok() const {
  for (const auto& hole : holes) {
    std::unordered_set<std::int32_t> seen;
    for (std::int32_t d : hole)
      if (!seen.insert(org[d]).second) return false;
  }
  return true;
}

bool PlanarMapBall::root_face_degree_ok(int declared_half_perimeter) const {
  if (!outer_is_cycle) return true;  // half-plane boundary is unbounded
  return static_cast<int>(outer_contour.size()) == 2 * declared_half_perimeter;
}

std::string PlanarMapBall::check_all(int declared_half_perimeter) const {
  std::ostringstream bad;
  if (!euler_ok()) bad << "euler;";
  if (!bipartite_ok()) bad << "bipartite;";
  if (!holes_simple_ok()) bad << "holes-not-simple;";
  for (std::int32_t deg : face_degree)
    if (deg % 2) {
      bad << "odd-face;";
      break;
    }
  if (declared_half_perimeter >= 0 && !root_face_degree_ok(declared_half_perimeter))
    bad << "root-degree;";
  return bad.str();
}

std::string PlanarMapBall::to_json() const {
  std::ostringstream os;
  os << "{\n  \"vertices\": " << n_vertices << ",\n  \"root_dart\": " << root_dart
     << ",\n  \"certified_radius\": " << certified_radius << ",\n  \"edges\": [";
  bool first = true;
  for (std::int32_t d = 0; d < dart_count(); d += 2) {
    if (!first) os << ",";
    first = false;
    os << "[" << org[d] << "," << org[d ^ 1] << "]";
  }
  os << "],\n  \"vertex_distance\": [";
  for (std::int32_t v = 0; v < n_vertices; ++v) {
    if (v) os << ",";
    os << (vdist[v] == INT32_MAX ? -1 : vdist[v]);
  }
  os << "],\n  \"faces\": [";
  for (std::size_t f = 0; f < face_rep.size(); ++f) {
    if (f) os << ",";
    os << "[";
    std::int32_t d = face_rep[f], start = d;
    bool fd = true;
    do {
      if (!fd) os << ",";
      fd = false;
      os << d / 2;  // edge index
      d = fnext[d];
    } while (d != start && d >= 0);
    os << "]";
  }
  os << "],\n  \"holes\": [";
  for (std::size_t h = 0; h < holes.size(); ++h) {
    if (h) os << ",";
    os << holes[h].size();
  }
  os << "]\n}";
  return os.str();
}

}  // namespace peel
