#pragma once

#include <map>
#include <optional>
#include <vector>

#include "peel/rng.hpp"
#include "peel/weights.hpp"

namespace peel {

// Auxiliary step measure: mu(2l) = nu(l) for l >= 0, mu(-1) = nu(Z_<0)/2,
// mu(-2l) = nu(-l)/2 for l > 0. Half of every negative nu-jump is folded
// into the single -1 atom.
struct MuMeasure {
  std::map<int, double> pos_even;     // key 2l -> nu(l), l >= 0
  double minus_one = 0;               // mu(-1)
  std::vector<double> neg_even;       // neg_even[i] = mu(-2(i+1))
  int K = 0;                          // table depth of neg_even
  // mu(-2k) = tail_a0 (k-1)^{-5/2} + tail_a1 (k-1)^{-7/2} for k > K
  double tail_a0 = 0, tail_a1 = 0;

  std::map<int, Rat> pos_even_exact;
  std::optional<Rat> minus_one_exact;
  std::vector<Rat> neg_even_exact;

  double at(int j) const;
  double total_mass() const;
  double tail_mass_beyond_table() const;  // sum_{k > K} mu(-2k)
  // Mass of mu on (-inf, -m] for m >= 1 (tail model included).
  double lower_tail_mass(int m) const;
};

MuMeasure mu_measure(const NuMeasure& nu);

// Absorption and renewal functions of the mu-walk.
// h_down(l) = P(free boundary perimeter >= l); h_up = prefix sums of h_down.
struct RenewalFunctions {
  int M = 0;
  std::vector<double> h_down;   // l = 0..M
  std::vector<double> h_up;     // l = 0..M+1
  double h_up_limit = 0;        // lim h_up (finite in the dilute regime)
  double nu_c = 0, nu_S = 1;    // scale of the nu tail driving h_down beyond M
  double tail_a0 = 0, tail_a1 = 0;

  std::vector<Rat> h_down_exact, h_up_exact;

  double down(int l) const;     // 0 for l < 0, tail-extended beyond M
  double up(int l) const;       // 0 for l <= 0, saturating beyond M
  const Rat* down_exact(int l) const;  // nullptr if outside the exact table
  const Rat* up_exact(int l) const;
};

// Computes h_down from the disk-series expression
//   h_down(l) = (1/Wc) sum_{2j >= l} W^(j) c^{-j}
// and verifies it against the nu-tail expression
//   h_down(l) = nu((-inf, -1-l/2]) / nu(Z_<0)
// within `tol` (ConsistencyError on disagreement).
std::vector<double> h_down(const NuMeasure& nu, const DiskData& disk, int M, double tol = 1e-10);

std::vector<double> h_up(const std::vector<double>& h_down);

RenewalFunctions renewal_functions(const NuMeasure& nu, const DiskData& disk, int M);

struct HIdentityReport {
  double harmonicity_residual_max = 0;  // mu-harmonicity of h_down on Z_>0
  double transition_residual_max = 0;   // one-step mass identity for h_up
  int worst_p = 0, worst_peel = 0;
  bool pass(double tol) const {
    return harmonicity_residual_max <= tol && transition_residual_max <= tol;
  }
};

// Residuals of (a) sum_j mu(j) h_down(x+j) = h_down(x) for 1 <= x <= p_max,
// (b) the peel-position identity
//   sum_{k>=0} nu(k) h_up(p+2k)
//     + sum_{k<=-1} nu(k)/2 [ h_up((p+2k) v (p-l)) + h_up((p+2k) v (l-1)) ]
//   = h_up(p)          for all 1 <= l <= p <= p_max.
HIdentityReport check_H_identities(const MuMeasure& mu, const RenewalFunctions& renewal,
                                   const NuMeasure& nu, int p_max);

// Doob h-transform of the mu-walk: q(x, y) = h(y) mu(y-x) / h(x). States with
// h = 0 are absorbing. Transition tables are built lazily per state and the
// total transformed mass is checked against 1.
class DoobChain {
 public:
  enum class H { down, up, constant };
  DoobChain(const MuMeasure& mu, const RenewalFunctions& renewal, H which,
            double mass_tol = 1e-9);

  // Samples the next state from x (x >= 1); absorbing states return x.
  int step(int x, RngStream& rng) const;
  double mass_at(int x) const;          // total transformed mass from x
  // (jump, probability) rows of the transition table at x.
  std::vector<std::pair<int, double>> transitions(int x) const;

 private:
  struct Table {
    std::vector<int> target;
    std::vector<double> cum;
  };
  const Table& table_for(int x) const;
  double h(int l) const;

  const MuMeasure* mu_;
  const RenewalFunctions* renewal_;
  H which_;
  double mass_tol_;
  mutable std::vector<Table> cache_;
  mutable std::map<int, Table> far_cache_;
};

// Everything the exploration engines need from the walk layer.
struct WalkKit {
  NuMeasure nu;
  MuMeasure mu;
  RenewalFunctions renewal;

  static WalkKit build(const DiskData& disk, int K, int M);
};

}  // namespace peel
