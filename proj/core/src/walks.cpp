#include "peel/walks.hpp"

#include <algorithm>
#include <cmath>

namespace peel {

namespace {

double zeta_tail(double s, double M) {
  double m = M + 0.5;
  return std::pow(m, 1.0 - s) / (s - 1.0) + s * std::pow(m, -s - 1.0) / 24.0;
}

// smallest k with nu(-k) included in h_down(l): k >= 1 + l/2
int kmin_of(int l) { return (l + 3) / 2; }

}  // namespace

// ---------------------------------------------------------------------------
// mu

MuMeasure mu_measure(const NuMeasure& nu) {
  MuMeasure mu;
  for (auto& [k, v] : nu.pos) mu.pos_even[2 * k] = v;
  mu.minus_one = nu.S / 2.0;
  mu.K = nu.K;
  mu.neg_even.resize(nu.K);
  for (int k = 1; k <= nu.K; ++k) mu.neg_even[k - 1] = nu.neg[k - 1] / 2.0;
  mu.tail_a0 = nu.tail_a0 / nu.c;  // half of (2/c) a0
  mu.tail_a1 = nu.tail_a1 / nu.c;
  if (nu.c_exact && !nu.neg_exact.empty() && nu.S_exact) {
    for (auto& [k, v] : nu.pos_exact) mu.pos_even_exact[2 * k] = v;
    mu.minus_one_exact = *nu.S_exact / 2;
    mu.neg_even_exact.reserve(nu.neg_exact.size());
    for (auto& v : nu.neg_exact) mu.neg_even_exact.push_back(v / 2);
  }
  return mu;
}

double MuMeasure::at(int j) const {
  if (j == -1) return minus_one;
  if (j >= 0) {
    if (j % 2) return 0.0;
    auto it = pos_even.find(j);
    return it == pos_even.end() ? 0.0 : it->second;
  }
  if (j % 2) return 0.0;
  int k = -j / 2;
  if (k <= K) return neg_even[k - 1];
  double m = k - 1;
  return tail_a0 * std::pow(m, -2.5) + tail_a1 * std::pow(m, -3.5);
}

double MuMeasure::tail_mass_beyond_table() const {
  return tail_a0 * zeta_tail(2.5, K - 1) + tail_a1 * zeta_tail(3.5, K - 1);
}

double MuMeasure::total_mass() const {
  double s = minus_one;
  for (auto& [j, v] : pos_even) s += v;
  for (double v : neg_even) s += v;
  return s + tail_mass_beyond_table();
}

double MuMeasure::lower_tail_mass(int m) const {
  // mass of mu on (-inf, -m]
  double s = m <= 1 ? minus_one : 0.0;
  int kstart = std::max(1, (m + 1) / 2);
  for (int k = kstart; k <= K; ++k) s += neg_even[k - 1];
  return s + tail_mass_beyond_table();
}

// ---------------------------------------------------------------------------
// renewal functions

std::vector<double> h_down(const NuMeasure& nu, const DiskData& disk, int M, double tol) {
  // disk-series expression via suffix sums of the scaled series
  std::vector<double> suffix(disk.L + 2, 0.0);
  suffix[disk.L + 1] = disk.u_tail_sum(disk.L);
  for (int j = disk.L; j >= 0; --j) suffix[j] = suffix[j + 1] + disk.u[j];
  auto w_expr = [&](int l) -> double {
    int j0 = (l + 1) / 2;
    double s = j0 <= disk.L ? suffix[j0] : disk.u_tail_sum(j0 - 1);
    return s / disk.Wc;
  };
  // nu-tail expression
  std::vector<double> nu_suffix(nu.K + 2, 0.0);
  nu_suffix[nu.K + 1] = nu.neg_tail_mass(nu.K);
  for (int k = nu.K; k >= 1; --k) nu_suffix[k] = nu_suffix[k + 1] + nu.neg[k - 1];
  auto nu_expr = [&](int l) -> double {
    int k0 = kmin_of(l);
    double t = k0 <= nu.K + 1 ? nu_suffix[k0] : nu.neg_tail_mass(k0 - 1);
    return t / nu.S;
  };

  std::vector<double> h(M + 1);
  for (int l = 0; l <= M; ++l) {
    double a = w_expr(l), b = nu_expr(l);
    if (std::fabs(a - b) > tol * std::max(1.0, std::fabs(a)))
      throw ConsistencyError("h_down expressions disagree at l=" + std::to_string(l) + ": " +
                             std::to_string(a) + " vs " + std::to_string(b));
    h[l] = b;
  }
  h[0] = 1.0;  // full mass; both expressions give 1 up to rounding
  return h;
}

std::vector<double> h_up(const std::vector<double>& h_down) {
  std::vector<double> up(h_down.size() + 1, 0.0);
  for (std::size_t l = 1; l < up.size(); ++l) up[l] = up[l - 1] + h_down[l - 1];
  return up;
}

RenewalFunctions renewal_functions(const NuMeasure& nu, const DiskData& disk, int M) {
  RenewalFunctions r;
  r.M = std::max(M, 2 * nu.K + 2);  // table covers everything the nu table resolves
  r.h_down = h_down(nu, disk, r.M);
  r.h_up = h_up(r.h_down);
  r.nu_c = nu.c;
  r.nu_S = nu.S;
  r.tail_a0 = nu.tail_a0;
  r.tail_a1 = nu.tail_a1;

  // limit of h_up: remaining sum of h_down beyond the table
  double S = nu.S;
  auto T_sumsum = [&](int t0) {
    // sum_{t >= t0} T(t) with T(t) = sum_{k >= t} nu(-k)
    return nu.neg_tail_first_moment(t0 - 1) - (t0 - 1) * nu.neg_tail_mass(t0 - 1);
  };
  int l0 = r.M + 1;
  double rem;
  if (l0 % 2 == 1) {  // pairs (l0, l0+1) start cleanly at k* = (l0+3)/2
    rem = 2.0 * T_sumsum((l0 + 3) / 2) / S;
  } else {
    int jj = l0 / 2 + 1;
    rem = (2.0 * T_sumsum(jj + 1) + nu.neg_tail_mass(jj - 1)) / S;
  }
  r.h_up_limit = r.h_up[r.M + 1] + rem;

  // exact channel when the nu table carries one deep enough
  if (nu.S_exact && !nu.neg_exact.empty()) {
    int depth = static_cast<int>(nu.neg_exact.size());
    int m_exact = std::min(r.M, 2 * depth - 3);
    if (m_exact >= 0) {
      std::vector<Rat> suff(depth + 1, Rat(0));
      Rat full = *nu.S_exact;
      std::vector<Rat> partial(depth + 1, Rat(0));
      for (int k = 1; k <= depth; ++k) partial[k] = partial[k - 1] + nu.neg_exact[k - 1];
      r.h_down_exact.resize(m_exact + 1);
      for (int l = 0; l <= m_exact; ++l) {
        int k0 = kmin_of(l);
        r.h_down_exact[l] = (*nu.S_exact - partial[k0 - 1]) / *nu.S_exact;
      }
      r.h_up_exact.resize(m_exact + 2);
      r.h_up_exact[0] = 0;
      for (int l = 1; l <= m_exact + 1; ++l)
        r.h_up_exact[l] = r.h_up_exact[l - 1] + r.h_down_exact[l - 1];
      (void)full;
      (void)suff;
    }
  }
  return r;
}

double RenewalFunctions::down(int l) const {
  if (l < 0) return 0.0;
  if (l <= M) return h_down[l];
  // beyond the table the whole sum is model tail: T(k*) / S
  int k0 = kmin_of(l);
  double t = 2.0 / nu_c *
             (tail_a0 * zeta_tail(2.5, k0 - 2) + tail_a1 * zeta_tail(3.5, k0 - 2));
  return t / nu_S;
}

double RenewalFunctions::up(int l) const {
  if (l <= 0) return 0.0;
  if (l <= M + 1) return h_up[l];
  // saturate through the model remainder
  double s = h_up[M + 1];
  for (int m = M + 1; m < l; ++m) s += down(m);
  return s;
}

const Rat* RenewalFunctions::down_exact(int l) const {
  if (l < 0 || static_cast<std::size_t>(l) >= h_down_exact.size()) return nullptr;
  return &h_down_exact[l];
}

const Rat* RenewalFunctions::up_exact(int l) const {
  if (l < 0 || static_cast<std::size_t>(l) >= h_up_exact.size()) return nullptr;
  return &h_up_exact[l];
}

// ---------------------------------------------------------------------------
// identity checks

HIdentityReport check_H_identities(const MuMeasure& mu, const RenewalFunctions& renewal,
                                   const NuMeasure& nu, int p_max) {
  HIdentityReport rep;
  int max_up = nu.pos.empty() ? 0 : 2 * nu.pos.rbegin()->first;
  bool exact_ok = nu.S_exact && !nu.neg_exact.empty() && mu.minus_one_exact &&
                  static_cast<int>(renewal.h_up_exact.size()) > p_max + max_up &&
                  static_cast<int>(renewal.h_down_exact.size()) > p_max + max_up &&
                  static_cast<int>(nu.neg_exact.size()) > p_max / 2 + 2;
  if (exact_ok) {
    // fully rational evaluation: residuals are exact
    auto down_e = [&](int l) -> Rat {
      return l < 0 ? Rat(0) : renewal.h_down_exact[l];
    };
    std::vector<Rat> partial(nu.neg_exact.size() + 1, Rat(0));
    for (std::size_t k = 1; k < partial.size(); ++k)
      partial[k] = partial[k - 1] + nu.neg_exact[k - 1];
    auto T_e = [&](int k0) -> Rat { return *nu.S_exact - partial[k0 - 1]; };
    for (int x = 1; x <= p_max; ++x) {
      Rat s = *mu.minus_one_exact * down_e(x - 1);
      for (auto& [j, v] : mu.pos_even_exact) s += v * down_e(x + j);
      for (int k = 1; 2 * k <= x; ++k) s += nu.neg_exact[k - 1] / 2 * down_e(x - 2 * k);
      double res = std::fabs(to_double(s - down_e(x)));
      rep.harmonicity_residual_max = std::max(rep.harmonicity_residual_max, res);
    }
    auto up_e = [&](int l) -> Rat { return l <= 0 ? Rat(0) : renewal.h_up_exact[l]; };
    for (int p = 1; p <= p_max; ++p) {
      for (int l = 1; l <= p; ++l) {
        Rat s(0);
        for (auto& [k, v] : nu.pos_exact) s += v * up_e(p + 2 * k);
        for (int side = 0; side < 2; ++side) {
          int fl = side == 0 ? p - l : l - 1;
          int j = 1;
          for (; p - 2 * j > fl; ++j) s += nu.neg_exact[j - 1] / 2 * up_e(p - 2 * j);
          s += T_e(j) / 2 * up_e(fl);
        }
        double res = std::fabs(to_double(s - up_e(p)));
        if (res > rep.transition_residual_max) {
          rep.transition_residual_max = res;
          rep.worst_p = p;
          rep.worst_peel = l;
        }
      }
    }
    return rep;
  }

  // (a) mu-harmonicity of h_down on the positive integers
  for (int x = 1; x <= p_max; ++x) {
    double s = mu.minus_one * renewal.down(x - 1);
    for (auto& [j, v] : mu.pos_even) s += v * renewal.down(x + j);
    for (int k = 1; 2 * k <= x; ++k) s += mu.at(-2 * k) * renewal.down(x - 2 * k);
    double res = std::fabs(s - renewal.down(x));
    if (res > rep.harmonicity_residual_max) rep.harmonicity_residual_max = res;
  }
  // (b) peel-position transition identity for h_up
  std::vector<double> nu_suffix(nu.K + 2, 0.0);
  nu_suffix[nu.K + 1] = nu.neg_tail_mass(nu.K);
  for (int k = nu.K; k >= 1; --k) nu_suffix[k] = nu_suffix[k + 1] + nu.neg[k - 1];
  auto T = [&](int k0) { return k0 <= nu.K + 1 ? nu_suffix[k0] : nu.neg_tail_mass(k0 - 1); };

  for (int p = 1; p <= p_max; ++p) {
    for (int l = 1; l <= p; ++l) {
      double s = 0;
      for (auto& [k, v] : nu.pos) s += v * renewal.up(p + 2 * k);
      // left gulps: floor at p - l; right gulps: floor at l - 1
      for (int side = 0; side < 2; ++side) {
        int fl = side == 0 ? p - l : l - 1;
        // explicit small jumps, then the saturated tail in one lump
        int j = 1;
        for (; p - 2 * j > fl; ++j) s += 0.5 * nu.at(-j) * renewal.up(p - 2 * j);
        s += 0.5 * T(j) * renewal.up(fl);
      }
      double res = std::fabs(s - renewal.up(p));
      if (res > rep.transition_residual_max) {
        rep.transition_residual_max = res;
        rep.worst_p = p;
        rep.worst_peel = l;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Doob chain

DoobChain::DoobChain(const MuMeasure& mu, const RenewalFunctions& renewal, H which,
                     double mass_tol)
    : mu_(&mu), renewal_(&renewal), which_(which), mass_tol_(mass_tol) {
  cache_.resize(std::min(renewal.M, 4096) + 1);
}

double DoobChain::h(int l) const {
  switch (which_) {
    case H::down:
      return renewal_->down(l);
    case H::up:
      return renewal_->up(l);
    case H::constant:
      return 1.0;
  }
  return 0.0;
}

const DoobChain::Table& DoobChain::table_for(int x) const {
  auto build = [&](int state) {
    Table t;
    double hx = h(state);
    if (hx <= 0) throw ConsistencyError("doob step from a state with h = 0");
    double cum = 0;
    auto push = [&](int target, double mass) {
      if (mass <= 0) return;
      cum += mass;
      t.target.push_back(target);
      t.cum.push_back(cum);
    };
    for (auto& [j, v] : mu_->pos_even) push(state + j, v * h(state + j) / hx);
    push(state - 1, mu_->minus_one * h(state - 1) / hx);
    int kcap = which_ == H::constant ? mu_->K : state / 2 + 1;
    for (int k = 1; k <= kcap; ++k) {
      int target = state - 2 * k;
      push(target, mu_->at(-2 * k) * h(target) / hx);
    }
    if (which_ == H::constant) {
      // lump the modeled tail beyond the table into one pseudo-jump
      push(INT_MIN, mu_->tail_mass_beyond_table());
    }
    double mass = cum;
    // deep states lean on the model tails of h and mu; the mass identity is
    // exact only to the model accuracy out there
    double tol = state <= renewal_->M / 2 ? mass_tol_ : std::max(mass_tol_, 1e-6);
    if (std::fabs(mass - 1.0) > tol)
      throw ConsistencyError("doob transition mass at x=" + std::to_string(state) + " is " +
                             std::to_string(mass) + " (h not harmonic or tables too short)");
    return t;
  };
  if (x < static_cast<int>(cache_.size())) {
    if (cache_[x].cum.empty()) cache_[x] = build(x);
    return cache_[x];
  }
  auto it = far_cache_.find(x);
  if (it == far_cache_.end()) it = far_cache_.emplace(x, build(x)).first;
  return it->second;
}

int DoobChain::step(int x, RngStream& rng) const {
  const Table& t = table_for(x);
  double u = rng.next_unit() * t.cum.back();
  auto it = std::lower_bound(t.cum.begin(), t.cum.end(), u);
  int idx = static_cast<int>(it - t.cum.begin());
  int target = t.target[idx];
  if (target == INT_MIN) {
    // far tail of the constant chain: sample k from the -5/2 model
    double v = rng.next_unit();
    int k = 1 + static_cast<int>(std::ceil((mu_->K - 1) * std::pow(1.0 - v, -2.0 / 3.0)));
    return x - 2 * k;
  }
  return target;
}

double DoobChain::mass_at(int x) const { return table_for(x).cum.back(); }

std::vector<std::pair<int, double>> DoobChain::transitions(int x) const {
  const Table& t = table_for(x);
  std::vector<std::pair<int, double>> out;
  double prev = 0;
  for (std::size_t i = 0; i < t.cum.size(); ++i) {
    out.emplace_back(t.target[i], t.cum[i] - prev);
    prev = t.cum[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

WalkKit WalkKit::build(const DiskData& disk, int K, int M) {
  WalkKit kit;
  kit.nu = nu_measure(disk, K);
  kit.mu = mu_measure(kit.nu);
  kit.renewal = renewal_functions(kit.nu, disk, M);
  return kit;
}

}  // namespace peel
