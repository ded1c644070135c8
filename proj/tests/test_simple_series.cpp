#include <cmath>

#include "doctest.h"
#include "oracle.hpp"
#include "peel/simple_series.hpp"

using namespace peel;

namespace {

const DiskData& quad_disk() {
  static DiskData d = solve_disk_exact_atom(solve_critical_single_atom(2), 800, 528);
  return d;
}

const SimpleDiskData& quad_simple() {
  static SimpleDiskData s = invert_boundary(quad_disk(), 520, 16);
  return s;
}

}  // namespace

TEST_CASE("hat growth constant") {
  CHECK(std::fabs(hat_c(quad_disk()) - 4.5) < 1e-8);
  REQUIRE(hat_c_exact(quad_disk()).has_value());
  CHECK(*hat_c_exact(quad_disk()) == Rat(9, 2));
  CHECK(*hat_c_exact(quad_disk()) * Rat(4, 3) * Rat(4, 3) == Rat(8));
}

TEST_CASE("boundary inversion reproduces the oracle hat series exactly") {
  const SimpleDiskData& s = quad_simple();
  std::vector<Rat> ref = oracle::quad_hat_w4();
  REQUIRE(s.hat_w_exact.size() >= 4);
  for (int l = 0; l < 4; ++l) CHECK(s.hat_w_exact[l] == ref[l]);
  CHECK(s.hat_w_exact[0] == Rat(1));
  CHECK(s.hat_w_exact[1] == quad_disk().w_exact[1]);  // 2-gon boundaries are simple
  // numeric channel agrees
  for (int l = 0; l < 4; ++l) {
    double scaled = to_double(ref[l] * rat_pow(Rat(9, 2), -l));
    CHECK(std::fabs(s.hat_u[l] - scaled) < 5e-15);
  }
}

TEST_CASE("round trip: composing hat with y reproduces the disk series") {
  const DiskData& d = quad_disk();
  const SimpleDiskData& s = quad_simple();
  // rebuild scaled W from hat via hat_W(y(z)) in the sigma-scaled variables
  int n = 40;
  std::vector<long double> w(n), w2(n, 0.0L);
  for (int l = 0; l < n; ++l) w[l] = d.u[l];
  for (int m = 0; m < n; ++m)
    for (int a = 0; a <= m; ++a) w2[m] += w[a] * w[m - a];
  long double wc2 = (long double)d.Wc * d.Wc;
  std::vector<long double> Y(n, 0.0L);
  {
    long double f = 1.0L;
    for (int l = 1; l < n; ++l) {
      Y[l] = w2[l - 1] * f;
      f /= wc2;
    }
  }
  std::vector<long double> acc(n, 0.0L), p(n, 0.0L);
  p[0] = 1.0L;
  long double hscale = 1.0L;  // Wc^{-4j}
  for (int j = 0; j < n; ++j) {
    if (j > 0) {
      std::vector<long double> np(n, 0.0L);
      for (int a = 0; a < n; ++a) {
        if (p[a] == 0) continue;
        for (int b = 1; a + b < n; ++b) np[a + b] += p[a] * Y[b];
      }
      p.swap(np);
      hscale /= wc2 * wc2;
    }
    for (int l = 0; l < n; ++l) acc[l] += s.hat_u[j] * hscale * p[l];
  }
  for (int l = 0; l < n; ++l) {
    long double target = w[l] / powl(wc2, l);
    CHECK(std::fabs((double)(acc[l] - target)) < 1e-12 + 4e-9 * (double)target);
  }
}

TEST_CASE("hat series is positive and its ratios approach the hat constant") {
  const SimpleDiskData& s = quad_simple();
  for (double v : s.hat_u) CHECK(v > 0);
  CHECK(std::fabs(s.ratio(200) - 4.5) < 0.1);
  CHECK(std::fabs(s.ratio(500) - 4.5) < 0.05);
}

TEST_CASE("hat series evaluates back to Wc") {
  // sum_l hatW^(l) (2/9)^l = W(1/8) = 4/3
  CHECK(std::fabs(quad_simple().eval(2.0 / 9.0) - 4.0 / 3.0) < 1e-6);
}

TEST_CASE("core perimeter law") {
  CorePerimeterPmf pmf = core_perimeter_pmf(quad_simple(), 500);
  CHECK(std::fabs(pmf.p[0] - 0.75) < 2e-9);                 // vertex map: 1/Wc
  CHECK(std::fabs(pmf.p[1] - 2.0 / 9.0) < 2e-9);
  CHECK(std::fabs(pmf.p[2] - 4.0 / 243.0) < 2e-9);
  CHECK(std::fabs(pmf.p[3] - 32.0 / 6561.0) < 2e-9);
  CorePerimeterPmf pmf200 = core_perimeter_pmf(quad_simple(), 200);
  double sum = pmf200.tail_mass;
  for (int l = 0; l <= 200; ++l) sum += pmf200.p[l];
  CHECK(std::fabs(sum - 1.0) < 1e-6);
  CHECK_FALSE(pmf.truncation_warning);
}

TEST_CASE("ratio diagnostics") {
  const DiskData& d = quad_disk();
  std::vector<double> wseries;  // unscaled ratios equal scaled ratios times c
  for (int l = 0; l <= 200; ++l) wseries.push_back(d.u[l]);
  RatioDiagnostics rd = ratio_diagnostics(wseries, 1.0);
  CHECK(std::fabs(rd.last * 8.0 - 8.0) < 0.15);  // W-ratio near c

  std::vector<double> constant(12, 3.14);
  RatioDiagnostics rc = ratio_diagnostics(constant, 2.0);
  CHECK(rc.last == 1.0);
  CHECK(rc.deviation == 1.0);
}
