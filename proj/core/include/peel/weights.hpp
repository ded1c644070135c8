#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peel/errors.hpp"
#include "peel/rational.hpp"

namespace peel {

// Face weights q_k indexed by half-degree k >= 1. Finite support, all
// entries positive (zeros are dropped on construction).
struct WeightSequence {
  std::map<int, Rat> entries;

  WeightSequence() = default;
  explicit WeightSequence(std::map<int, Rat> e);

  int support_bound() const;          // max k with q_k > 0
  double at(int k) const;             // q_k as double, 0 when absent
  const Rat* at_exact(int k) const;   // nullptr when absent
  bool single_atom() const { return entries.size() == 1; }

  // Reads UTF-8 lines "k q_k" where q_k is a decimal or "num/den".
  static WeightSequence from_file(const std::string& path);
  std::string describe() const;
};

// Exact critical single-atom data: weight q_p on half-degree p and the
// growth constant c.
struct CriticalAtom {
  int p = 0;
  Rat q;
  Rat c;
};

// Solves the criticality system for a single-atom sequence exactly in
// rational arithmetic. The system { sum(nu) = 1, mean(nu) = 0 } reduces for
// one atom to two polynomial equations in (q_p, Z) with c = 4Z; both
// equations are verified exactly on the result.
CriticalAtom solve_critical_single_atom(int p);

// Critical weight sequence for 2p-angulations, p >= 2.
WeightSequence make_2p_angulation(int p);

struct DiskSolveOptions {
  int L = 800;                 // series truncation
  double tol = 1e-15;          // sup-norm Newton step tolerance (scaled units)
  int warm_sweeps = 40;        // monotone sweeps before Newton
  int max_newton = 40;
  double overflow_guard = 1e9; // scaled iterates above this signal inadmissibility
};

// Disk series solved at growth scale c. All stored values are scaled:
// u[l] = W^(l) c^{-l}, which decays like l^{-5/2} at criticality. The tail
// beyond L follows u[m] ~ tail_a0 m^{-5/2} + tail_a1 m^{-7/2}.
struct DiskData {
  WeightSequence q;
  double c = 0;
  int L = 0;
  std::vector<double> u;
  double tail_a0 = 0, tail_a1 = 0;
  double Wc = 0;  // W(1/c) = sum_l u[l] including tail

  // Exact channel, present for single-atom critical sequences.
  std::optional<Rat> c_exact;
  std::vector<Rat> w_exact;        // W^(0..) exact, possibly shorter than L
  std::optional<Rat> Wc_exact;

  double u_at(double m) const;     // tail-extended scaled value
  double w(int l) const;           // W^(l) as long-double-ranged double; throws on overflow
  // W^(a) / W^(b) via scaled values: u[a]/u[b] * c^(a-b).
  double w_ratio(int a, int b) const;
  // Analytic tail sums: sum_{m > from} u(m) and sum_{m > from} m * u(m).
  double u_tail_sum(int from) const;
  double u_tail_first_moment(int from) const;
};

// Minimal nonnegative solution of the disk recursion
//   W^(l) = sum_k q_k W^(l+k-1) + sum_{a+b=l-1} W^(a) W^(b),   W^(0) = 1,
// computed in scaled variables by monotone iteration plus a Newton polish
// with the tail model closing the truncated system.
DiskData solve_disk_series(const WeightSequence& q, double c, const DiskSolveOptions& opt = {});

// Low-level monotone iteration state, exposed so the entrywise-monotone
// property of the plain fixed point can be observed directly.
class DiskFixedPoint {
 public:
  DiskFixedPoint(const WeightSequence& q, double c, const DiskSolveOptions& opt);
  double sweep();                      // one ascending update; returns sup-norm change
  const std::vector<double>& current() const { return u_; }
  void newton_polish();
  void check_divergence() const;       // throws InadmissibleError past the guard
  DiskData finish(std::optional<Rat> c_exact = std::nullopt) const;

 private:
  void fit_tail();
  double rhs(int l) const;
  double tail(double m) const;
  double at(int m) const;

  std::map<int, double> qk_;           // q_k c^{k-1}
  double c_;
  DiskSolveOptions opt_;
  std::vector<double> u_;
  int w0_;                             // tail-fit window start
  std::vector<double> fit_alpha_, fit_beta_, fit_alpha1_;
  bool full_tail_ = false;             // one amplitude while sweeping, two for Newton
  double a0_ = 0, a1_ = 0;
  WeightSequence q_orig_;
};

struct AdmissibleSolveOptions {
  AdmissibleSolveOptions() { disk.L = 400; }
  DiskSolveOptions disk;
  int refine_L = 1600;       // finer truncation for the final root polish
  double c_tol = 1e-10;
  double nu_tol = 1e-7;      // |sum(nu)-1| beyond this at the zero-mean root => subcritical
};

struct CSolveResult {
  double c = 0;
  double nu_sum_residual = 0;   // sum(nu) - 1 at the root
  double mean_residual = 0;
  bool critical = false;
};

// Finds the growth constant: bisection on mean(nu)(c) = 0, which is strictly
// increasing in c. For critical sequences the zero-mean root is c_q and
// sum(nu) = 1 there; for subcritical sequences the sum(nu) = 1 crossing left
// of the zero-mean root is returned with critical = false. Throws
// SolverFailure with the bracket signs when no root exists.
CSolveResult solve_admissible_c(const WeightSequence& q, const AdmissibleSolveOptions& opt = {});

// Step measure of the boundary walk. Positive atoms nu(k) = q_{k+1} c^k live
// on 0..support_bound-1; the negative side nu(-k) = 2 W^(k-1) c^{-k} is
// tabulated to K with the polynomial tail model beyond.
struct NuMeasure {
  double c = 0;
  int K = 0;
  std::map<int, double> pos;
  std::vector<double> neg;   // neg[i] = nu(-(i+1))
  // disk tail amplitudes: nu(-k) = (2/c)(a0 (k-1)^{-5/2} + a1 (k-1)^{-7/2}) for k > K
  double tail_a0 = 0, tail_a1 = 0;

  double S = 0;       // nu(Z_<0), tail included
  double mean = 0;
  double gulp = 0;    // g_q = (1/2) sum nu(-k)(2k-1); see gulp_unhalved()
  double exposure = 0;

  // Exact channel (single-atom critical path).
  std::optional<Rat> c_exact;
  std::map<int, Rat> pos_exact;
  std::vector<Rat> neg_exact;
  std::optional<Rat> S_exact, gulp_exact, exposure_exact;

  double at(int k) const;                  // tail-extended
  double neg_tail_mass(int beyond) const;  // sum_{k > beyond} nu(-k)
  double neg_tail_first_moment(int beyond) const;
  // Sum of the displayed (unhalved) gulp series; kept for audit against the
  // halved convention used everywhere else in this library.
  double gulp_unhalved() const { return 2.0 * gulp; }
  Rat exact_neg_tail_mass(int beyond) const;  // S_exact - partial sums
};

NuMeasure nu_measure(const DiskData& disk, int K);

struct CriticalityReport {
  double normalization_residual = 0;  // sum(nu) - 1
  double mean_residual = 0;
  double tutte_residual_max = 0;      // nu-form disk equation, 1 <= l <= checked
  int tutte_checked_up_to = 0;
  double tail_exponent = 0;           // log-log slope of nu(-k), expect -5/2
  bool admissible = false;
  bool critical = false;
  bool dilute = false;
};

struct CriticalityTolerances {
  double normalization = 1e-8;
  double mean = 1e-6;
  double tutte = 1e-8;
};

CriticalityReport criticality_report(const NuMeasure& nu, const CriticalityTolerances& tol = {});

// ---- exact single-atom series -------------------------------------------

// True when the exact seed solve below supports half-degree p.
bool exact_series_supported(int p);

// Exact negative-side seeds nu(-1..-p) for a critical atom: the generating
// function of the negative side satisfies a quadratic whose discriminant
// must factor through (1-x)^3; the contact conditions are linear in the
// seeds and are solved (and fully verified) in rational arithmetic.
std::vector<Rat> exact_neg_seeds(const CriticalAtom& atom);

// Extends the seeds through the disk recursion solved for its top index:
//   nu(-l-p) = [ nu(-l-1) - (1/2) sum_{i+j=l+1} nu(-i)nu(-j) ] / nu(p-1),
// exact and triangular. Returns nu(-1..-K).
std::vector<Rat> exact_nu_negative(const CriticalAtom& atom, int K);

// Full exact+numeric disk data for a critical atom: numeric scaled series at
// truncation L plus the exact channel (W exact to min(L, exact_len)).
DiskData solve_disk_exact_atom(const CriticalAtom& atom, int L, int exact_len);

}  // namespace peel
