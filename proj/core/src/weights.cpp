#include "peel/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace peel {

namespace {

using ld = long double;

// sum_{m > M} m^{-s} by the midpoint rule with the leading curvature term.
double zeta_tail(double s, double M) {
  double m = M + 0.5;
  return std::pow(m, 1.0 - s) / (s - 1.0) + s * std::pow(m, -s - 1.0) / 24.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// WeightSequence

WeightSequence::WeightSequence(std::map<int, Rat> e) {
  for (auto& [k, q] : e) {
    if (k < 1) throw ConfigError("weight index must be >= 1, got " + std::to_string(k));
    if (q < 0) throw ConfigError("negative weight q_" + std::to_string(k));
    if (q > 0) entries.emplace(k, q);
  }
  if (entries.empty()) throw InadmissibleError("invalid weight sequence: empty support");
}

int WeightSequence::support_bound() const { return entries.rbegin()->first; }

double WeightSequence::at(int k) const {
  auto it = entries.find(k);
  return it == entries.end() ? 0.0 : to_double(it->second);
}

const Rat* WeightSequence::at_exact(int k) const {
  auto it = entries.find(k);
  return it == entries.end() ? nullptr : &it->second;
}

WeightSequence WeightSequence::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weight file: " + path);
  std::map<int, Rat> e;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed = line.substr(0, line.find('#'));
    std::istringstream ls(trimmed);
    int k;
    std::string val;
    if (!(ls >> k)) continue;  // blank / comment line
    if (!(ls >> val))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'k q_k'");
    e[k] = parse_rational(val);
  }
  return WeightSequence(std::move(e));
}

std::string WeightSequence::describe() const {
  std::ostringstream os;
  bool first = true;
  for (auto& [k, q] : entries) {
    if (!first) os << ", ";
    os << "q_" << k << "=" << to_fraction_string(q);
    first = false;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Exact critical single atom

CriticalAtom solve_critical_single_atom(int p) {
  if (p < 2) throw ConfigError("single-atom criticality needs half-degree p >= 2");
  // With f(x) = B x^{p-1}, B = q binom(2p-1, p-1), admissibility and zero
  // drift reduce to f(Z) = 1 - 1/Z and Z^2 f'(Z) = 1 with c = 4Z.
  // Eliminating B: (p-1)(Z-1) = 1.
  Rat Z = Rat(p) / Rat(p - 1);
  Rat B = (Z - 1) / rat_pow(Z, p);
  Rat q = B / rat_binomial(2 * p - 1, p - 1);
  CriticalAtom atom{p, q, 4 * Z};
  // verify both equations exactly
  Rat f = B * rat_pow(Z, p - 1);
  if (f != 1 - 1 / Z) throw ConsistencyError("single-atom solve: admissibility equation failed");
  Rat fp = Rat(p - 1) * B * rat_pow(Z, p - 2);
  if (Z * Z * fp != 1) throw ConsistencyError("single-atom solve: drift equation failed");
  return atom;
}

WeightSequence make_2p_angulation(int p) {
  if (p < 2) throw ConfigError("2p-angulation needs p >= 2");
  CriticalAtom atom = solve_critical_single_atom(p);
  std::map<int, Rat> e;
  e[atom.p] = atom.q;
  return WeightSequence(std::move(e));
}

// ---------------------------------------------------------------------------
// DiskData accessors

double DiskData::u_at(double m) const {
  if (m <= L) {
    int i = static_cast<int>(m);
    return u[i];
  }
  return tail_a0 * std::pow(m, -2.5) + tail_a1 * std::pow(m, -3.5);
}

double DiskData::w(int l) const {
  double lg = std::log(u_at(l)) + l * std::log(c);
  if (lg > 700.0) throw TruncationError("W^(l) overflows double at l=" + std::to_string(l));
  return std::exp(lg);
}

double DiskData::w_ratio(int a, int b) const {
  return u_at(a) / u_at(b) * std::pow(c, a - b);
}

double DiskData::u_tail_sum(int from) const {
  return tail_a0 * zeta_tail(2.5, from) + tail_a1 * zeta_tail(3.5, from);
}

double DiskData::u_tail_first_moment(int from) const {
  return tail_a0 * zeta_tail(1.5, from) + tail_a1 * zeta_tail(2.5, from);
}

// ---------------------------------------------------------------------------
// Scaled fixed point with Newton polish

DiskFixedPoint::DiskFixedPoint(const WeightSequence& q, double c, const DiskSolveOptions& opt)
    : c_(c), opt_(opt), q_orig_(q) {
  if (c <= 0) throw ConfigError("growth scale c must be positive");
  for (auto& [k, qk] : q.entries) qk_[k] = to_double(qk) * std::pow(c, k - 1);
  u_.assign(opt.L + 1, 0.0);
  u_[0] = 1.0;
  // tail-fit window and its least-squares coefficient rows. The single-
  // amplitude fit has nonnegative coefficients, keeping the plain iteration
  // entrywise monotone; the two-amplitude fit is used for the Newton polish.
  w0_ = opt.L - opt.L / 3;
  int n = opt.L - w0_ + 1;
  fit_alpha_.assign(n, 0.0);
  fit_beta_.assign(n, 0.0);
  fit_alpha1_.assign(n, 0.0);
  {
    double s11 = 0;
    std::vector<double> f1(n);
    for (int i = 0; i < n; ++i) {
      f1[i] = std::pow(static_cast<double>(w0_ + i), -2.5);
      s11 += f1[i] * f1[i];
    }
    for (int i = 0; i < n; ++i) fit_alpha1_[i] = f1[i] / s11;
  }
  if (n < 6) {
    fit_alpha_ = fit_alpha1_;
  } else {
    double s11 = 0, s12 = 0, s22 = 0;
    std::vector<double> f1(n), f2(n);
    for (int i = 0; i < n; ++i) {
      double m = w0_ + i;
      f1[i] = std::pow(m, -2.5);
      f2[i] = std::pow(m, -3.5);
      s11 += f1[i] * f1[i];
      s12 += f1[i] * f2[i];
      s22 += f2[i] * f2[i];
    }
    double det = s11 * s22 - s12 * s12;
    for (int i = 0; i < n; ++i) {
      fit_alpha_[i] = (f1[i] * s22 - f2[i] * s12) / det;
      fit_beta_[i] = (s11 * f2[i] - s12 * f1[i]) / det;
    }
  }
}

void DiskFixedPoint::fit_tail() {
  a0_ = a1_ = 0;
  if (full_tail_) {
    for (std::size_t i = 0; i < fit_alpha_.size(); ++i) {
      a0_ += fit_alpha_[i] * u_[w0_ + i];
      a1_ += fit_beta_[i] * u_[w0_ + i];
    }
  } else {
    for (std::size_t i = 0; i < fit_alpha1_.size(); ++i) a0_ += fit_alpha1_[i] * u_[w0_ + i];
  }
}

double DiskFixedPoint::tail(double m) const {
  return a0_ * std::pow(m, -2.5) + a1_ * std::pow(m, -3.5);
}

double DiskFixedPoint::at(int m) const { return m <= opt_.L ? u_[m] : tail(m); }

double DiskFixedPoint::rhs(int l) const {
  double v = 0;
  for (auto& [k, qc] : qk_) v += qc * at(l + k - 1);
  ld conv = 0;
  for (int a = 0; a <= l - 1; ++a) conv += static_cast<ld>(u_[a]) * u_[l - 1 - a];
  return v + static_cast<double>(conv) / c_;
}

double DiskFixedPoint::sweep() {
  double del = 0;
  for (int l = 1; l <= opt_.L; ++l) {
    double v = rhs(l);
    del = std::max(del, std::fabs(v - u_[l]));
    u_[l] = v;
  }
  fit_tail();
  return del;
}

void DiskFixedPoint::check_divergence() const {
  for (double v : u_)
    if (!(v < opt_.overflow_guard))
      throw InadmissibleError("disk series diverges (supercritical weight sequence)");
}

void DiskFixedPoint::newton_polish() {
  const int n = opt_.L;
  std::vector<double> J;
  std::vector<int> piv(n);

  auto build_lu = [&]() {
    J.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int l = 1; l <= n; ++l) {
      double* row = &J[static_cast<std::size_t>(l - 1) * n];
      row[l - 1] += 1.0;
      double t1 = 0, t2 = 0;  // d rhs / d(tail amplitudes)
      for (auto& [k, qc] : qk_) {
        int m = l + k - 1;
        if (m <= n) {
          if (m >= 1) row[m - 1] -= qc;
        } else {
          t1 += qc * std::pow(static_cast<double>(m), -2.5);
          t2 += qc * std::pow(static_cast<double>(m), -3.5);
        }
      }
      for (int m = 1; m <= l - 1; ++m) row[m - 1] -= 2.0 / c_ * u_[l - 1 - m];
      if (t1 != 0 || t2 != 0)
        for (std::size_t i = 0; i < fit_alpha_.size(); ++i)
          row[w0_ + static_cast<int>(i) - 1] -= t1 * fit_alpha_[i] + t2 * fit_beta_[i];
    }
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
      int p = col;
      double best = std::fabs(J[static_cast<std::size_t>(col) * n + col]);
      for (int r = col + 1; r < n; ++r) {
        double v = std::fabs(J[static_cast<std::size_t>(r) * n + col]);
        if (v > best) {
          best = v;
          p = r;
        }
      }
      if (best == 0) throw SolverFailure("singular disk Jacobian");
      if (p != col) {
        for (int k2 = 0; k2 < n; ++k2)
          std::swap(J[static_cast<std::size_t>(col) * n + k2],
                    J[static_cast<std::size_t>(p) * n + k2]);
        std::swap(piv[col], piv[p]);
      }
      double d = J[static_cast<std::size_t>(col) * n + col];
      for (int r = col + 1; r < n; ++r) {
        double f = J[static_cast<std::size_t>(r) * n + col] / d;
        if (f == 0) continue;
        J[static_cast<std::size_t>(r) * n + col] = f;
        const double* crow = &J[static_cast<std::size_t>(col) * n];
        double* rrow = &J[static_cast<std::size_t>(r) * n];
        for (int k2 = col + 1; k2 < n; ++k2) rrow[k2] -= f * crow[k2];
      }
    }
  };

  auto lu_solve = [&](const std::vector<double>& b) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[piv[i]];
    for (int i = 0; i < n; ++i) {
      const double* row = &J[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < i; ++j) x[i] -= row[j] * x[j];
    }
    for (int i = n - 1; i >= 0; --i) {
      const double* row = &J[static_cast<std::size_t>(i) * n];
      for (int j = i + 1; j < n; ++j) x[i] -= row[j] * x[j];
      x[i] /= row[i];
    }
    return x;
  };

  full_tail_ = true;
  fit_tail();
  std::vector<double> F(n);
  for (int it = 0; it < opt_.max_newton; ++it) {
    check_divergence();
    build_lu();
    double fnorm = 0;
    for (int l = 1; l <= n; ++l) {
      F[l - 1] = u_[l] - rhs(l);
      fnorm = std::max(fnorm, std::fabs(F[l - 1]));
    }
    if (fnorm < opt_.tol) break;
    std::vector<double> d = lu_solve(F);
    double step = 0;
    for (int l = 1; l <= n; ++l) {
      u_[l] -= d[l - 1];
      step = std::max(step, std::fabs(d[l - 1]));
    }
    fit_tail();
    if (step < opt_.tol) break;
  }
  double fnorm = 0, umax = 1.0;
  for (int l = 1; l <= n; ++l) {
    fnorm = std::max(fnorm, std::fabs(u_[l] - rhs(l)));
    umax = std::max(umax, std::fabs(u_[l]));
  }
  if (fnorm > 1e-10 * umax)
    throw SolverFailure("disk Newton stalled, residual " + std::to_string(fnorm));
  // transient negatives are fine during the iteration but not in the result
  for (int l = 0; l <= n; ++l) {
    if (u_[l] < -1e-9 * umax)
      throw InadmissibleError("disk series went negative at l=" + std::to_string(l));
    if (u_[l] < 0) u_[l] = 0;
  }
  fit_tail();
}

DiskData DiskFixedPoint::finish(std::optional<Rat> c_exact) const {
  DiskData d;
  d.q = q_orig_;
  d.c = c_;
  d.L = opt_.L;
  d.u = u_;
  d.tail_a0 = a0_;
  d.tail_a1 = a1_;
  d.c_exact = std::move(c_exact);
  double s = 0;
  for (int l = opt_.L; l >= 0; --l) s += u_[l];
  d.Wc = s + d.u_tail_sum(opt_.L);
  return d;
}

DiskData solve_disk_series(const WeightSequence& q, double c, const DiskSolveOptions& opt) {
  if (opt.L < 2) throw ConfigError("disk truncation L must be >= 2");
  DiskFixedPoint fp(q, c, opt);
  double prev = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int i = 0; i < opt.warm_sweeps; ++i) {
    double del = fp.sweep();
    fp.check_divergence();
    stall = del >= prev ? stall + 1 : 0;
    prev = del;
  }
  if (stall > 10) {
    // growing updates either mean divergence (supercritical weights) or a
    // transient; keep sweeping until the guard fires or the updates shrink
    int calm = 0;
    for (int i = 0; i < 5000 && calm < 10; ++i) {
      double del = fp.sweep();
      fp.check_divergence();
      calm = del < prev ? calm + 1 : 0;
      prev = del;
    }
    if (calm < 10) throw TruncationError("disk iteration residual not decreasing; raise L");
  }
  fp.newton_polish();
  return fp.finish();
}

// ---------------------------------------------------------------------------
// growth-constant solve

namespace {

struct DiagAtC {
  double nu_sum_minus_1 = 0;
  double mean = 0;
  bool diverged = false;
};

DiagAtC diagnostics_at_c(const WeightSequence& q, double c, const DiskSolveOptions& opt) {
  DiagAtC out;
  DiskData disk;
  try {
    disk = solve_disk_series(q, c, opt);
  } catch (const Error&) {
    // divergence or a stalled solve: the scaled series is blowing up at this
    // scale, which the bracketing logic reads as sum(nu) = +inf
    out.diverged = true;
    return out;
  }
  double pos = 0, mpos = 0;
  for (auto& [k, qk] : q.entries) {
    double nu = to_double(qk) * std::pow(c, k - 1);
    pos += nu;
    mpos += (k - 1) * nu;
  }
  double S = 0, mneg = 0;
  for (int j = disk.L; j >= 0; --j) {
    S += disk.u[j];
    mneg += (j + 1) * disk.u[j];
  }
  S = (S + disk.u_tail_sum(disk.L)) * 2.0 / c;
  mneg = (mneg + disk.u_tail_first_moment(disk.L) + disk.u_tail_sum(disk.L)) * 2.0 / c;
  out.nu_sum_minus_1 = pos + S - 1.0;
  out.mean = mpos - mneg;
  return out;
}

}  // namespace

CSolveResult solve_admissible_c(const WeightSequence& q, const AdmissibleSolveOptions& opt) {
  // mean(nu)(c) is strictly increasing in c; a divergent solve marks the low
  // side. Bracket, bisect on the mean, then judge admissibility by sum(nu).
  auto eval = [&](double c, const DiskSolveOptions& dopt) { return diagnostics_at_c(q, c, dopt); };

  double lo = 0.5, hi = 1.0;
  DiagAtC dhi;
  int guard = 0;
  do {
    hi *= 2.0;
    dhi = eval(hi, opt.disk);
    if (++guard > 60)
      throw SolverFailure("no admissible growth constant: mean(nu) stays negative (supercritical?)");
  } while (dhi.diverged || dhi.mean < 0);
  lo = hi / 2.0;

  // coarse bisection on mean = 0
  double coarse_stop = std::max(opt.c_tol, 1e-7) * hi;
  for (int it = 0; it < 200 && (hi - lo) > coarse_stop; ++it) {
    double mid = 0.5 * (lo + hi);
    DiagAtC d = eval(mid, opt.disk);
    if (d.diverged || d.mean < 0)
      lo = mid;
    else
      hi = mid;
  }

  // Polish at finer truncations. The zero-mean root carries a truncation
  // bias decaying like a power of L, so solve at three levels and kill the
  // leading term by Aitken extrapolation.
  auto refine_root = [&](double center, double span0, int L) -> double {
    DiskSolveOptions fine = opt.disk;
    fine.L = L;
    double flo = center - span0, fhi = center + span0;
    DiagAtC da = eval(flo, fine), db = eval(fhi, fine);
    int widen = 0;
    while ((da.diverged || da.mean >= 0) && ++widen < 8) {
      flo -= span0;
      da = eval(flo, fine);
    }
    widen = 0;
    while (!db.diverged && db.mean < 0 && ++widen < 8) {
      fhi += span0;
      db = eval(fhi, fine);
    }
    if (!(da.diverged || da.mean < 0) || db.diverged || db.mean < 0)
      throw SolverFailure("growth-constant refine lost its bracket");
    double fa = da.diverged ? -1.0 : da.mean, fb = db.mean;
    bool lo_usable = !da.diverged;
    int side = 0;
    for (int it = 0; it < 80 && (fhi - flo) > opt.c_tol * fhi * 0.25; ++it) {
      double mid = lo_usable && std::isfinite(fa) ? (flo * fb - fhi * fa) / (fb - fa)
                                                  : 0.5 * (flo + fhi);
      if (!(mid > flo && mid < fhi)) mid = 0.5 * (flo + fhi);
      DiagAtC d = eval(mid, fine);
      double fm = d.diverged ? -1.0 : d.mean;
      if (fm < 0) {
        flo = mid;
        fa = fm;
        lo_usable = !d.diverged;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        fhi = mid;
        fb = fm;
        if (side == 1 && lo_usable) fa *= 0.5;
        side = 1;
      }
    }
    return 0.5 * (flo + fhi);
  };

  double c = 0.5 * (lo + hi);
  if (opt.refine_L > opt.disk.L) {
    double span = std::max((hi - lo) * 4, 3e-5 * c);
    double c0 = refine_root(c, span, std::max(opt.disk.L, opt.refine_L / 4));
    double c1 = refine_root(c0, span / 4, std::max(opt.disk.L + 1, opt.refine_L / 2));
    double c2 = refine_root(c1, span / 16, opt.refine_L);
    double d1 = c1 - c0, d2 = c2 - c1;
    c = c2;
    if (std::fabs(d1 - d2) > 1e-3 * std::fabs(d2)) {
      double extrap = c2 + d2 * d2 / (d1 - d2);
      if (std::fabs(extrap - c2) < 16 * std::fabs(d2)) c = extrap;
    }
  }
  DiskSolveOptions fine = opt.disk;
  fine.L = std::max(opt.disk.L, opt.refine_L);
  DiagAtC at_root = eval(c, fine);
  CSolveResult res;
  res.c = c;
  res.nu_sum_residual = at_root.nu_sum_minus_1;
  res.mean_residual = at_root.mean;
  res.critical = std::fabs(at_root.nu_sum_minus_1) <= opt.nu_tol;

  if (!res.critical) {
    if (at_root.nu_sum_minus_1 > 0)
      throw SolverFailure("sum(nu) exceeds 1 at the zero-mean root by " +
                          std::to_string(at_root.nu_sum_minus_1) +
                          " (supercritical weight sequence)");
    // Subcritical: nu cannot be normalized at the zero-mean scale. The
    // growth constant is still the ratio limit of the disk series, which is
    // a property of the weights alone; estimate it from the solved series
    // with the leading 1/l ratio correction removed.
    DiskSolveOptions dopt = opt.disk;
    dopt.L = std::max(opt.disk.L, opt.refine_L);
    // Richardson on r_l = c u[l+1]/u[l] = c_q (1 - gamma/l + ...) without
    // assuming the correction exponent: r + (l-1)(r_l - r_{l-1}). Entries
    // below the Newton residual floor are noise, so restrict the window to
    // well-resolved magnitudes; a second pass anchored near the estimate has
    // polynomial decay and a much wider usable window.
    DiskData d = solve_disk_series(q, c, dopt);
    int l_ok = 2;
    for (int l = 2; l <= dopt.L; ++l)
      if (d.u[l] > 1e-12) l_ok = l;
    l_ok = std::min(l_ok, dopt.L - dopt.L / 3);  // stay clear of the tail closure
    int lo_l = std::max(4, l_ok - l_ok / 4), hi_l = l_ok;
    double acc = 0;
    int cnt = 0;
    for (int l = lo_l; l < hi_l; ++l) {
      if (d.u[l - 1] <= 0 || d.u[l] <= 0 || d.u[l + 1] <= 0) continue;
      double r1 = c * d.u[l] / d.u[l - 1];
      double r2 = c * d.u[l + 1] / d.u[l];
      acc += r2 + (l - 1) * (r2 - r1);
      ++cnt;
    }
    if (cnt == 0)
      throw SolverFailure("subcritical ratio estimate failed: series too short");
    res.c = acc / cnt;
    // the informative diagnostics: the mass deficit at the zero-mean scale
    // and the drift at the ratio-limit scale
    res.nu_sum_residual = at_root.nu_sum_minus_1;
    DiagAtC at_est = eval(res.c, opt.disk);
    res.mean_residual = at_est.diverged ? at_root.mean : at_est.mean;
  }
  return res;
}

// ---------------------------------------------------------------------------
// nu measure

NuMeasure nu_measure(const DiskData& disk, int K) {
  if (K > disk.L + 1)
    throw ConfigError("nu truncation K must be <= L+1 (" + std::to_string(disk.L + 1) + ")");
  NuMeasure nu;
  nu.c = disk.c;
  nu.K = K;
  for (auto& [k, qk] : disk.q.entries) nu.pos[k - 1] = to_double(qk) * std::pow(disk.c, k - 1);
  nu.neg.resize(K);
  for (int k = 1; k <= K; ++k) nu.neg[k - 1] = 2.0 * disk.u[k - 1] / disk.c;
  // keep the disk tail amplitudes; nu(-k) = (2/c) u(k-1)
  nu.tail_a0 = disk.tail_a0;
  nu.tail_a1 = disk.tail_a1;

  double s = 0, m1 = 0;
  for (int k = K; k >= 1; --k) {
    s += nu.neg[k - 1];
    m1 += k * nu.neg[k - 1];
  }
  // mass beyond K: disk table up to L, model beyond; nu(-k) = (2/c) u(k-1)
  double tail_mass = 0, tail_m1 = 0;
  for (int j = disk.L; j >= K; --j) {
    tail_mass += disk.u[j];
    tail_m1 += (j + 1) * disk.u[j];
  }
  tail_mass = 2.0 / disk.c * (tail_mass + disk.u_tail_sum(disk.L));
  tail_m1 = 2.0 / disk.c * (tail_m1 + disk.u_tail_first_moment(disk.L) + disk.u_tail_sum(disk.L));
  nu.S = s + tail_mass;
  double mpos = 0, epos = 0;
  for (auto& [k, v] : nu.pos) {
    mpos += k * v;
    epos += (2 * k + 1) * v;
  }
  nu.mean = mpos - (m1 + tail_m1);
  nu.gulp = (m1 + tail_m1) - nu.S / 2.0;
  nu.exposure = epos;

  if (disk.c_exact && !disk.w_exact.empty()) {
    nu.c_exact = disk.c_exact;
    const Rat& c = *disk.c_exact;
    Rat pos_sum(0), mpos_e(0), epos_e(0);
    for (auto& [k, qk] : disk.q.entries) {
      Rat v = qk * rat_pow(c, k - 1);
      nu.pos_exact[k - 1] = v;
      pos_sum += v;
      mpos_e += (k - 1) * v;
      epos_e += (2 * k - 1) * v;
    }
    nu.neg_exact.reserve(disk.w_exact.size());
    for (std::size_t j = 0; j < disk.w_exact.size(); ++j)
      nu.neg_exact.push_back(2 * disk.w_exact[j] / rat_pow(c, static_cast<long>(j) + 1));
    nu.S_exact = 1 - pos_sum;
    // zero mean turns the negative first moment into the positive one
    nu.gulp_exact = mpos_e - *nu.S_exact / 2;
    nu.exposure_exact = epos_e;
  }
  return nu;
}

double NuMeasure::at(int k) const {
  if (k >= 0) {
    auto it = pos.find(k);
    return it == pos.end() ? 0.0 : it->second;
  }
  int j = -k;
  if (j <= K) return neg[j - 1];
  double m = j - 1;  // nu(-j) = (2/c) u(j-1)
  return 2.0 / c * (tail_a0 * std::pow(m, -2.5) + tail_a1 * std::pow(m, -3.5));
}

double NuMeasure::neg_tail_mass(int beyond) const {
  // sum_{k > beyond} nu(-k) = (2/c) sum_{m > beyond-1} u(m)
  if (beyond < K) {
    double s = 0;
    for (int k = K; k > beyond; --k) s += neg[k - 1];
    return s + neg_tail_mass(K);
  }
  return 2.0 / c *
         (tail_a0 * zeta_tail(2.5, beyond - 1) + tail_a1 * zeta_tail(3.5, beyond - 1));
}

double NuMeasure::neg_tail_first_moment(int beyond) const {
  // sum_{k > beyond} k nu(-k) = (2/c) sum_{m > beyond-1} (m+1) u(m)
  if (beyond < K) {
    double s = 0;
    for (int k = K; k > beyond; --k) s += k * neg[k - 1];
    return s + neg_tail_first_moment(K);
  }
  double m0 = tail_a0 * zeta_tail(2.5, beyond - 1) + tail_a1 * zeta_tail(3.5, beyond - 1);
  double m1 = tail_a0 * zeta_tail(1.5, beyond - 1) + tail_a1 * zeta_tail(2.5, beyond - 1);
  return 2.0 / c * (m1 + m0);
}

Rat NuMeasure::exact_neg_tail_mass(int beyond) const {
  if (!S_exact || static_cast<std::size_t>(beyond) > neg_exact.size())
    throw ConfigError("exact nu tail: no exact channel to depth " + std::to_string(beyond));
  Rat s = *S_exact;
  for (int k = 1; k <= beyond; ++k) s -= neg_exact[k - 1];
  return s;
}

// ---------------------------------------------------------------------------
// criticality report

CriticalityReport criticality_report(const NuMeasure& nu, const CriticalityTolerances& tol) {
  CriticalityReport rep;
  double pos_sum = 0;
  for (auto& [k, v] : nu.pos) pos_sum += v;
  rep.normalization_residual = pos_sum + nu.S - 1.0;
  rep.mean_residual = nu.mean;

  int check = std::min(nu.K - 1, 64);
  rep.tutte_checked_up_to = check;
  for (int l = 1; l <= check; ++l) {
    double rhs = 0;
    for (auto& [j, v] : nu.pos) rhs += v * nu.at(-(l + j + 1));
    double conv = 0;
    for (int i = 1; i <= l; ++i) conv += nu.at(-i) * nu.at(-(l + 1 - i));
    rhs += 0.5 * conv;
    rep.tutte_residual_max = std::max(rep.tutte_residual_max, std::fabs(nu.at(-l - 1) - rhs));
  }

  // log-log slope over the upper half of the table
  int k0 = std::max(2, nu.K / 2), k1 = nu.K;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = k0; k <= k1; ++k) {
    if (nu.neg[k - 1] <= 0) continue;
    double x = std::log(static_cast<double>(k)), y = std::log(nu.neg[k - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  rep.tail_exponent = n > 1 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;

  rep.admissible = std::fabs(rep.normalization_residual) <= tol.normalization;
  rep.critical = rep.admissible && std::fabs(rep.mean_residual) <= tol.mean;
  rep.dilute = std::isfinite(nu.gulp);
  return rep;
}

// ---------------------------------------------------------------------------
// exact single-atom series

bool exact_series_supported(int p) { return p >= 2 && p <= 4; }

namespace {

// Coefficient vector of the polynomial
//   Dt(x) = x^{2p-2} - 2a x^{p-1} + a^2 - 2 nu1 x^{2p-1}
//           + 2a sum_{m=1..p} nu_m x^{p-1+m},
// split into a known part and one column per unknown nu_2..nu_p.
struct ContactSystem {
  std::vector<Rat> base;                 // degree 2p-1
  std::vector<std::vector<Rat>> cols;    // unknown m = 2..p
};

ContactSystem build_contact(const CriticalAtom& atom) {
  int p = atom.p;
  Rat a = atom.q * rat_pow(atom.c, p - 1);
  Rat nu1 = 2 / atom.c;
  ContactSystem sys;
  sys.base.assign(2 * p, Rat(0));
  sys.base[2 * p - 2] += 1;
  sys.base[p - 1] += -2 * a;
  sys.base[0] += a * a;
  sys.base[2 * p - 1] += -2 * nu1;
  sys.base[p] += 2 * a * nu1;  // m = 1 term
  for (int m = 2; m <= p; ++m) {
    std::vector<Rat> col(2 * p, Rat(0));
    col[p - 1 + m] = 2 * a;
    sys.cols.push_back(std::move(col));
  }
  return sys;
}

// value of the d-th derivative at x = 1
Rat deriv_at_one(const std::vector<Rat>& poly, int d) {
  Rat s(0);
  for (std::size_t i = d; i < poly.size(); ++i) {
    Rat f(1);
    for (int t = 0; t < d; ++t) f *= static_cast<long>(i) - t;
    s += f * poly[i];
  }
  return s;
}

}  // namespace

std::vector<Rat> exact_neg_seeds(const CriticalAtom& atom) {
  int p = atom.p;
  if (!exact_series_supported(p))
    throw ConfigError("exact seed solve supports half-degree 2..4, got " + std::to_string(p));
  Rat nu1 = 2 / atom.c;
  if (p == 2) {
    // single unknown from the first contact condition, others verified below
    ContactSystem sys = build_contact(atom);
    Rat b0 = deriv_at_one(sys.base, 0), c0 = deriv_at_one(sys.cols[0], 0);
    if (c0 == 0) throw ConsistencyError("degenerate contact system");
    Rat nu2 = -b0 / c0;
    std::vector<Rat> seeds{nu1, nu2};
    for (int d = 1; d <= 2; ++d) {
      Rat v = deriv_at_one(sys.base, d) + nu2 * deriv_at_one(sys.cols[0], d);
      if (v != 0) throw ConsistencyError("contact conditions inconsistent: weights not critical");
    }
    return seeds;
  }
  // p unknowns - 1 in a 3-row linear system; solve and verify all rows
  ContactSystem sys = build_contact(atom);
  int un = p - 1;
  std::vector<std::vector<Rat>> A(3, std::vector<Rat>(un));
  std::vector<Rat> b(3);
  for (int d = 0; d < 3; ++d) {
    b[d] = -deriv_at_one(sys.base, d);
    for (int j = 0; j < un; ++j) A[d][j] = deriv_at_one(sys.cols[j], d);
  }
  // Gaussian elimination on the first `un` rows (un <= 3)
  std::vector<std::vector<Rat>> M = A;
  std::vector<Rat> rhs = b;
  std::vector<int> used;
  std::vector<Rat> x(un, Rat(0));
  int row = 0;
  for (int col = 0; col < un && row < 3; ++col) {
    int pr = -1;
    for (int r = row; r < 3; ++r)
      if (M[r][col] != 0) {
        pr = r;
        break;
      }
    if (pr < 0) throw ConsistencyError("contact system rank deficient");
    std::swap(M[row], M[pr]);
    std::swap(rhs[row], rhs[pr]);
    for (int r = row + 1; r < 3; ++r) {
      if (M[r][col] == 0) continue;
      Rat f = M[r][col] / M[row][col];
      for (int cc = col; cc < un; ++cc) M[r][cc] -= f * M[row][cc];
      rhs[r] -= f * rhs[row];
    }
    used.push_back(col);
    ++row;
  }
  for (int r = row; r < 3; ++r) {
    bool all_zero = true;
    for (int cc = 0; cc < un; ++cc) all_zero = all_zero && M[r][cc] == 0;
    if (all_zero && rhs[r] != 0)
      throw ConsistencyError("contact conditions inconsistent: weights not critical");
  }
  for (int i = row - 1; i >= 0; --i) {
    int col = used[i];
    Rat s = rhs[i];
    for (int cc = col + 1; cc < un; ++cc) s -= M[i][cc] * x[cc];
    x[col] = s / M[i][col];
  }
  // verify every contact condition on the solution
  for (int d = 0; d < 3; ++d) {
    Rat v = -b[d];
    for (int j = 0; j < un; ++j) v += A[d][j] * x[j];
    if (v != 0) throw ConsistencyError("contact verification failed: weights not critical");
  }
  std::vector<Rat> seeds;
  seeds.push_back(nu1);
  for (int j = 0; j < un; ++j) seeds.push_back(x[j]);
  return seeds;
}

std::vector<Rat> exact_nu_negative(const CriticalAtom& atom, int K) {
  std::vector<Rat> nu = exact_neg_seeds(atom);  // nu(-1..-p)
  int p = atom.p;
  Rat a = atom.q * rat_pow(atom.c, p - 1);
  nu.reserve(K);
  // disk recursion solved for its deepest index:
  // nu(-l-p) = [ nu(-l-1) - (1/2) sum_{i+j=l+1} nu(-i) nu(-j) ] / a
  for (int l = 1; static_cast<int>(nu.size()) < K; ++l) {
    Rat conv(0);
    for (int i = 1; i <= l; ++i) conv += nu[i - 1] * nu[l + 1 - i - 1];
    Rat next = (nu[l] - conv / 2) / a;
    if (next <= 0) throw ConsistencyError("exact nu recursion lost positivity at depth " +
                                          std::to_string(l + p));
    nu.push_back(std::move(next));
  }
  nu.resize(K);
  return nu;
}

DiskData solve_disk_exact_atom(const CriticalAtom& atom, int L, int exact_len) {
  std::map<int, Rat> e;
  e[atom.p] = atom.q;
  WeightSequence q(std::move(e));
  DiskSolveOptions opt;
  opt.L = L;
  DiskData disk = solve_disk_series(q, to_double(atom.c), opt);
  disk.c_exact = atom.c;
  if (exact_len > 0 && exact_series_supported(atom.p)) {
    std::vector<Rat> nu = exact_nu_negative(atom, exact_len);
    disk.w_exact.reserve(exact_len);
    for (int l = 0; l < exact_len; ++l)
      disk.w_exact.push_back(nu[l] * rat_pow(atom.c, l + 1) / 2);
    Rat a = atom.q * rat_pow(atom.c, atom.p - 1);
    disk.Wc_exact = atom.c * (1 - a) / 2;
  }
  return disk;
}

}  // namespace peel
