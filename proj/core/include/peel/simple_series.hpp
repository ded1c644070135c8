#pragma once

#include <optional>
#include <vector>

#include "peel/weights.hpp"

namespace peel {

// Simple-boundary disk weights in scaled form: hat_u[l] = hatW^(l) hat_c^{-l}
// where hatW^(l) is the total weight of maps whose root face is simple with
// perimeter 2l, and hat_c = c / Wc^2 is the growth constant of that family.
struct SimpleDiskData {
  std::vector<double> hat_u;
  double hat_c = 0;
  double Wc = 0;
  // hat_u[l] ~ tail_a0 l^{-5/2} + tail_a1 l^{-7/2} beyond the computed order
  double tail_a0 = 0, tail_a1 = 0;
  std::vector<Rat> hat_w_exact;   // unscaled exact hatW^(0..)
  std::optional<Rat> hat_c_exact;

  double hat_w(int l) const;            // unscaled value; throws on double overflow
  double ratio(int l) const;            // hatW^(l) / hatW^(l-1)
  // sum_l hatW^(l) x^l for 0 < x <= 1/hat_c, tail model included
  double eval(double x) const;
  double tail_sum(double r, int beyond) const;  // sum_{l > beyond} hat_u[l] r^l
};

// Order-by-order compositional inversion: with y(z) = z W(z)^2, solves
// hat_W(y(z)) = W(z) for the hat coefficients. The system is unitriangular
// since y = z + O(z^2). Exact coefficients are produced as far as the exact
// channel of `disk` reaches (capped at exact_cap to keep bignum cost down).
SimpleDiskData invert_boundary(const DiskData& disk, int L, int exact_cap = 64);

double hat_c(const DiskData& disk);
std::optional<Rat> hat_c_exact(const DiskData& disk);

// Law of the core perimeter of a free map: p_l = hatW^(l) hat_c^{-l} / Wc.
struct CorePerimeterPmf {
  std::vector<double> p;   // l = 0..lmax
  double tail_mass = 0;
  bool truncation_warning = false;  // tail mass above 1%
};

CorePerimeterPmf core_perimeter_pmf(const SimpleDiskData& sdisk, int lmax);

struct RatioDiagnostics {
  std::vector<double> ratios;   // consecutive-term ratios
  double last = 0;
  double deviation = 0;         // |last - target|
};

RatioDiagnostics ratio_diagnostics(const std::vector<double>& series, double target);

}  // namespace peel
