#include "peel/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "peel/peel_engine.hpp"
#include "peel/stats.hpp"

namespace peel {

const char* to_string(PercoKind k) {
  switch (k) {
    case PercoKind::site: return "site";
    case PercoKind::bond: return "bond";
    case PercoKind::face: return "face";
  }
  return "?";
}

PercoKind perco_kind_from_string(const std::string& s) {
  if (s == "site") return PercoKind::site;
  if (s == "bond") return PercoKind::bond;
  if (s == "face") return PercoKind::face;
  throw ConfigError("unknown percolation kind: " + s);
}

// ---------------------------------------------------------------------------
// closed-form thresholds

ThresholdReport thresholds(const NuMeasure& nu, const CriticalityTolerances& tol) {
  CriticalityReport rep = criticality_report(nu, tol);
  if (!rep.critical)
    throw SolverFailure("thresholds need a critical weight sequence; residuals: sum " +
                        std::to_string(rep.normalization_residual) + ", mean " +
                        std::to_string(rep.mean_residual));
  if (!rep.dilute) throw SolverFailure("thresholds need the dilute regime (finite gulp)");
  ThresholdReport out;
  out.S = nu.S;
  out.nu_minus_1 = nu.at(-1);
  out.gulp = nu.gulp;
  out.site = 1.0 - nu.S * nu.S / (2.0 * nu.at(-1) * nu.gulp);
  out.bond = 1.0 - 1.0 / (nu.gulp + 1.0);
  out.face = 0.5 * (1.0 + 1.0 / (2.0 * nu.gulp + 1.0));
  if (nu.S_exact && nu.gulp_exact && !nu.neg_exact.empty()) {
    const Rat& S = *nu.S_exact;
    const Rat& g = *nu.gulp_exact;
    const Rat& nu1 = nu.neg_exact[0];
    out.site_exact = 1 - S * S / (2 * nu1 * g);
    out.bond_exact = 1 - 1 / (g + 1);
    out.face_exact = (1 + 1 / (2 * g + 1)) / 2;
    out.site = to_double(*out.site_exact);
    out.bond = to_double(*out.bond_exact);
    out.face = to_double(*out.face_exact);
  }
  return out;
}

// ---------------------------------------------------------------------------
// direct percolation on balls

namespace {

double cell_uniform(const RngStream& stream, std::uint64_t cell) {
  RngStream s = stream.child(cell);
  return s.next_unit();
}

std::int32_t face_reach(const PlanarMapBall& ball, std::int32_t fid) {
  std::int32_t best = 0;
  std::int32_t d = ball.face_rep[fid], start = d;
  do {
    best = std::max(best, ball.vdist[ball.org[d]]);
    d = ball.fnext[d];
  } while (d != start);
  return best;
}

struct ClusterState {
  std::vector<std::int32_t> parent;
  std::vector<std::int32_t> reach;  // max distance label in the component
  std::vector<std::int64_t> size;

  void init(std::int32_t n) {
    parent.resize(n);
    reach.assign(n, 0);
    size.assign(n, 1);
    for (std::int32_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    reach[a] = std::max(reach[a], reach[b]);
    size[a] += size[b];
  }
};

}  // namespace

std::vector<std::uint8_t> percolate_grid(const PlanarMapBall& ball, PercoKind kind,
                                         const std::vector<double>& p_grid,
                                         const RngStream& cell_stream,
                                         const std::vector<int>& radii,
                                         std::vector<std::int64_t>* sizes) {
  const int np = static_cast<int>(p_grid.size());
  const int nr = static_cast<int>(radii.size());
  for (int r : radii)
    if (r > ball.certified_radius)
      throw Error("filling contract violated: ball certified to radius " +
                  std::to_string(ball.certified_radius) + ", asked " + std::to_string(r));
  for (int i = 1; i < np; ++i)
    if (p_grid[i] < p_grid[i - 1]) throw ConfigError("p grid must be ascending");

  std::vector<std::uint8_t> one_arm(static_cast<std::size_t>(np) * nr, 0);
  if (sizes) sizes->assign(np, 0);

  std::int64_t ncells = 0;
  std::int32_t root_cell = -1;
  switch (kind) {
    case PercoKind::site:
      ncells = ball.n_vertices;
      root_cell = ball.org[ball.root_dart];
      break;
    case PercoKind::bond:
      ncells = ball.edge_count();
      root_cell = ball.org[ball.root_dart];  // vertex component grown by open edges
      break;
    case PercoKind::face:
      ncells = ball.inner_face_count();
      root_cell = ball.face[ball.root_dart];
      if (root_cell < 0)
        throw Error("filling contract violated: the face left of the root edge is unrealized");
      break;
  }

  std::vector<std::vector<std::int32_t>> activate(np);
  for (std::int64_t cell = 0; cell < ncells; ++cell) {
    double u = cell_uniform(cell_stream, static_cast<std::uint64_t>(cell));
    int first =
        static_cast<int>(std::lower_bound(p_grid.begin(), p_grid.end(), u) - p_grid.begin());
    // open at the first grid value strictly above u
    while (first < np && !(u < p_grid[first])) ++first;
    if (first < np) activate[first].push_back(static_cast<std::int32_t>(cell));
  }

  ClusterState cs;
  std::vector<std::uint8_t> open(static_cast<std::size_t>(ncells), 0);

  // vertex -> incident darts (site needs neighbor lookups)
  std::vector<std::int32_t> vhead, vnext;
  if (kind == PercoKind::site) {
    vhead.assign(ball.n_vertices, -1);
    vnext.assign(ball.org.size(), -1);
    for (std::int32_t d = 0; d < ball.dart_count(); ++d) {
      vnext[d] = vhead[ball.org[d]];
      vhead[ball.org[d]] = d;
    }
  }

  if (kind == PercoKind::face) {
    cs.init(static_cast<std::int32_t>(ncells));
    for (std::int32_t f = 0; f < static_cast<std::int32_t>(ncells); ++f)
      cs.reach[f] = face_reach(ball, f);
  } else {
    cs.init(ball.n_vertices);
    for (std::int32_t v = 0; v < ball.n_vertices; ++v) cs.reach[v] = ball.vdist[v];
  }

  for (int pi = 0; pi < np; ++pi) {
    for (std::int32_t cell : activate[pi]) open[cell] = 1;
    for (std::int32_t cell : activate[pi]) {
      switch (kind) {
        case PercoKind::site: {
          for (std::int32_t d = vhead[cell]; d != -1; d = vnext[d]) {
            std::int32_t w = ball.org[ball.twin(d)];
            if (open[w]) cs.unite(cell, w);
          }
          break;
        }
        case PercoKind::bond: {
          cs.unite(ball.org[2 * cell], ball.org[2 * cell + 1]);
          break;
        }
        case PercoKind::face: {
          std::int32_t d = ball.face_rep[cell], start = d;
          do {
            std::int32_t other = ball.face[ball.twin(d)];
            if (other >= 0 && open[other]) cs.unite(cell, other);
            d = ball.fnext[d];
          } while (d != start);
          break;
        }
      }
    }
    bool root_open = kind == PercoKind::bond || open[root_cell];
    std::int32_t reach = 0;
    std::int64_t size = 0;
    if (root_open) {
      std::int32_t r = cs.find(root_cell);
      reach = cs.reach[r];
      size = cs.size[r];
    }
    if (sizes) (*sizes)[pi] = size;
    for (int ri = 0; ri < nr; ++ri)
      one_arm[static_cast<std::size_t>(ri) * np + pi] =
          root_open && reach >= radii[ri] ? 1 : 0;
  }
  return one_arm;
}

ClusterReport percolate_ball(const PlanarMapBall& ball, PercoKind kind, double p,
                             const RngStream& cell_stream, int radius) {
  std::vector<double> grid{p};
  std::vector<int> radii{radius};
  std::vector<std::int64_t> sizes;
  std::vector<std::uint8_t> arm = percolate_grid(ball, kind, grid, cell_stream, radii, &sizes);
  ClusterReport rep;
  rep.one_arm = arm[0] != 0;
  rep.size = sizes[0];
  return rep;
}

// ---------------------------------------------------------------------------
// finite-size threshold estimate

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const char* env = std::getenv("PEEL_LAB_THREADS");
  if (env) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// p where the (nondecreasing) one-arm curve crosses the given level
double level_crossing(const std::vector<double>& p, const std::vector<double>& f, double level,
                      bool* found) {
  *found = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (f[i] >= level) {
      *found = true;
      if (i == 0) return p[0];
      double f0 = f[i - 1], f1 = f[i];
      double t = f1 - f0 > 0 ? (level - f0) / (f1 - f0) : 0.5;
      return p[i - 1] + t * (p[i] - p[i - 1]);
    }
  }
  return 0;
}

}  // namespace

ThresholdEstimate estimate_threshold(const DiskData& disk, const WalkKit& kit, PercoKind kind,
                                     const EstimateOptions& opt) {
  if (opt.p_grid.empty()) throw ConfigError("estimate_threshold needs a p grid");
  const int np = static_cast<int>(opt.p_grid.size());
  const int nr = static_cast<int>(opt.radii.size());
  if (nr < 2) throw ConfigError("estimate_threshold needs at least two radii");
  int rmax = *std::max_element(opt.radii.begin(), opt.radii.end());
  int threads = resolve_threads(opt.threads);

  // per-replica one-arm indicators, deterministic in the replica index
  std::vector<std::uint8_t> arms(static_cast<std::size_t>(opt.replicas) * nr * np, 0);
  RngStream master(opt.seed);

  auto worker = [&](int t) {
    Explorer ex(disk, &kit);
    for (int rep = t; rep < opt.replicas; rep += threads) {
      RngStream rep_stream = master.child(0x706c61ull).child(static_cast<std::uint64_t>(rep));
      PlanarMapBall ball = ex.build_ball(opt.mode, 1, rmax, rep_stream.child(1));
      RngStream cells = rep_stream.child(2).child(static_cast<std::uint64_t>(kind));
      std::vector<std::uint8_t> arm = percolate_grid(ball, kind, opt.p_grid, cells, opt.radii);
      std::copy(arm.begin(), arm.end(),
                arms.begin() + static_cast<std::size_t>(rep) * nr * np);
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  ThresholdEstimate est;
  est.curves.p_grid = opt.p_grid;
  est.curves.radii = opt.radii;
  est.curves.freq.assign(nr, std::vector<double>(np, 0.0));
  for (int rep = 0; rep < opt.replicas; ++rep)
    for (int ri = 0; ri < nr; ++ri)
      for (int pi = 0; pi < np; ++pi)
        est.curves.freq[ri][pi] +=
            arms[static_cast<std::size_t>(rep) * nr * np + static_cast<std::size_t>(ri) * np + pi];
  for (int ri = 0; ri < nr; ++ri)
    for (int pi = 0; pi < np; ++pi) est.curves.freq[ri][pi] /= opt.replicas;

  // One-arm curves for growing radii are nested, so the finite-size signal
  // lives in the per-radius level crossings p_hat(r); those drift toward the
  // threshold like a power of 1/r, which a least-squares fit in 1/r removes.
  auto estimate_from = [&](const std::vector<std::vector<double>>& freq, bool* ok) {
    std::vector<double> xs, ys;
    for (int ri = 0; ri < nr; ++ri) {
      bool found = false;
      double x = level_crossing(opt.p_grid, freq[ri], 0.5, &found);
      if (found) {
        xs.push_back(1.0 / opt.radii[ri]);
        ys.push_back(x);
      }
    }
    *ok = !ys.empty();
    if (ys.empty()) return 0.0;
    if (ys.size() == 1) return ys[0];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double n = static_cast<double>(xs.size());
    double det = n * sxx - sx * sx;
    if (std::fabs(det) < 1e-15) return sy / n;
    return (sy * sxx - sx * sxy) / det;  // intercept at 1/r = 0
  };
  bool ok = false;
  est.estimate = estimate_from(est.curves.freq, &ok);
  if (!ok) {
    est.quality_warning = true;
    // fall back to the p with frequency nearest 1/2 at the largest radius
    const std::vector<double>& f = est.curves.freq[nr - 1];
    int best = 0;
    for (int pi = 0; pi < np; ++pi)
      if (std::fabs(f[pi] - 0.5) < std::fabs(f[best] - 0.5)) best = pi;
    est.estimate = opt.p_grid[best];
  }

  // monotonicity sanity: the coupled coloring is exactly monotone per
  // replica, so any decrease in a frequency curve is a bug
  for (int ri = 0; ri < nr; ++ri)
    for (int pi = 1; pi < np; ++pi)
      if (est.curves.freq[ri][pi] < est.curves.freq[ri][pi - 1] - 1e-12)
        throw ConsistencyError("one-arm curve decreased under the coupled coloring");

  // percentile bootstrap over replicas
  RngStream boot = master.child(0xb007ull);
  std::vector<double> bs;
  bs.reserve(opt.bootstrap);
  std::vector<std::vector<double>> freq(nr, std::vector<double>(np));
  for (int b = 0; b < opt.bootstrap; ++b) {
    for (auto& row : freq) std::fill(row.begin(), row.end(), 0.0);
    for (int i = 0; i < opt.replicas; ++i) {
      int rep = static_cast<int>(boot.below(static_cast<std::uint64_t>(opt.replicas)));
      const std::uint8_t* base = &arms[static_cast<std::size_t>(rep) * nr * np];
      for (int ri = 0; ri < nr; ++ri)
        for (int pi = 0; pi < np; ++pi)
          freq[ri][pi] += base[static_cast<std::size_t>(ri) * np + pi];
    }
    for (auto& row : freq)
      for (double& x : row) x /= opt.replicas;
    bool bok = false;
    double x = estimate_from(freq, &bok);
    if (bok) bs.push_back(x);
  }
  if (bs.size() >= 10) {
    std::sort(bs.begin(), bs.end());
    est.ci_lo = bs[static_cast<std::size_t>(0.025 * (bs.size() - 1))];
    est.ci_hi = bs[static_cast<std::size_t>(0.975 * (bs.size() - 1))];
  } else {
    est.quality_warning = true;
    est.ci_lo = est.ci_hi = est.estimate;
  }
  return est;
}

// ---------------------------------------------------------------------------
// site interface walk

InterfaceWalkResult site_interface_walk(double p, const std::function<int(RngStream&)>& gulp_sampler,
                                        long steps, RngStream rng) {
  if (!gulp_sampler) throw ConfigError("site interface walk needs a positive-gulp sampler");
  InterfaceWalkResult res;
  long double pos = 0;  // black boundary length
  MeanVar drift;
  for (long n = 0; n < steps; ++n) {
    double inc;
    if (rng.bernoulli(p)) {
      inc = 1.0;
    } else {
      int g = gulp_sampler(rng);
      if (g < 1) throw ConfigError("gulp sampler must return values >= 1");
      inc = -static_cast<double>(g - 1);
    }
    drift.add(inc);
    pos += inc;
    ++res.steps_taken;
    if (pos < 0) {
      res.died = true;
      res.death_time = n + 1;
      break;
    }
  }
  res.empirical_drift = drift.mean;
  res.drift_stderr = drift.stderr_mean();
  return res;
}

std::function<int(RngStream&)> empirical_gulp_sampler(std::vector<int> pool) {
  if (pool.empty()) throw ConfigError("empty positive-gulp pool");
  auto shared = std::make_shared<std::vector<int>>(std::move(pool));
  return [shared](RngStream& rng) {
    return (*shared)[rng.below(shared->size())];
  };
}

}  // namespace peel
