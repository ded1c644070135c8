#include "peel/simple_series.hpp"

#include <cmath>

namespace peel {

double hat_c(const DiskData& disk) { return disk.c / (disk.Wc * disk.Wc); }

std::optional<Rat> hat_c_exact(const DiskData& disk) {
  if (!disk.c_exact || !disk.Wc_exact) return std::nullopt;
  return *disk.c_exact / (*disk.Wc_exact * *disk.Wc_exact);
}

double SimpleDiskData::hat_w(int l) const {
  double lg = std::log(hat_u[l]) + l * std::log(hat_c);
  if (lg > 700.0) throw TruncationError("hatW^(l) overflows double at l=" + std::to_string(l));
  return std::exp(lg);
}

double SimpleDiskData::ratio(int l) const { return hat_u[l] / hat_u[l - 1] * hat_c; }

double SimpleDiskData::tail_sum(double r, int beyond) const {
  if (r >= 1.0 - 1e-12) {
    // at the radius: polynomial tail summed by the midpoint rule
    auto zt = [&](double s) {
      double m = beyond + 0.5;
      return std::pow(m, 1.0 - s) / (s - 1.0) + s * std::pow(m, -s - 1.0) / 24.0;
    };
    return tail_a0 * zt(2.5) + tail_a1 * zt(3.5);
  }
  double s = 0, f = std::pow(r, beyond + 1);
  for (int l = beyond + 1; l < beyond + 200000; ++l) {
    double term = (tail_a0 * std::pow(l, -2.5) + tail_a1 * std::pow(l, -3.5)) * f;
    s += term;
    if (term < 1e-18 * (1.0 + std::fabs(s))) break;
    f *= r;
  }
  return s;
}

double SimpleDiskData::eval(double x) const {
  double r = x * hat_c;  // hat_u[l] * (x hat_c)^l
  if (r > 1.0 + 1e-6) throw ConfigError("hat series evaluated beyond its radius");
  double s = 0, f = 1;
  for (std::size_t l = 0; l < hat_u.size(); ++l) {
    s += hat_u[l] * f;
    f *= r;
  }
  return s + tail_sum(r, static_cast<int>(hat_u.size()) - 1);
}

namespace {

// Numeric depth cap: the forward elimination loses a factor ~ Wc^{2j} of
// precision by order j, so long double is trustworthy only to moderate
// orders. Deeper series go through the exact rational route.
constexpr int kNumericInversionCap = 48;

void fit_hat_tail(SimpleDiskData& out) {
  int n = static_cast<int>(out.hat_u.size());
  int w0 = std::max(2, n - std::max(4, n / 3));
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (int m = w0; m < n; ++m) {
    double f1 = std::pow(m, -2.5), f2 = std::pow(m, -3.5);
    s11 += f1 * f1;
    s12 += f1 * f2;
    s22 += f2 * f2;
    b1 += out.hat_u[m] * f1;
    b2 += out.hat_u[m] * f2;
  }
  double det = s11 * s22 - s12 * s12;
  if (n - w0 >= 6 && det != 0) {
    out.tail_a0 = (b1 * s22 - b2 * s12) / det;
    out.tail_a1 = (s11 * b2 - s12 * b1) / det;
  } else if (s11 > 0) {
    out.tail_a0 = b1 / s11;
    out.tail_a1 = 0;
  }
}

std::vector<Rat> invert_exact(const std::vector<Rat>& we, int n) {
  std::vector<Rat> y(n, Rat(0));
  for (int l = 1; l < n; ++l) {
    Rat s(0);
    for (int a = 0; a <= l - 1; ++a) s += we[a] * we[l - 1 - a];
    y[l] = s;
  }
  std::vector<Rat> hw(n, Rat(0)), pw(n, Rat(0)), res(we.begin(), we.begin() + n);
  pw[0] = 1;
  hw[0] = res[0];
  res[0] = 0;
  for (int j = 1; j < n; ++j) {
    std::vector<Rat> np(n, Rat(0));
    for (int a = n - 2; a >= j - 1; --a) {
      if (pw[a] == 0) continue;
      for (int b = 1; a + b < n; ++b) np[a + b] += pw[a] * y[b];
    }
    pw.swap(np);
    hw[j] = res[j] / pw[j];
    for (int l = j; l < n; ++l) res[l] -= hw[j] * pw[l];
  }
  return hw;
}

}  // namespace

SimpleDiskData invert_boundary(const DiskData& disk, int L, int exact_cap) {
  if (disk.L < L) throw ConfigError("invert_boundary: disk series shorter than requested order");
  SimpleDiskData out;
  out.Wc = disk.Wc;
  out.hat_c = hat_c(disk);
  out.hat_c_exact = hat_c_exact(disk);
  const int n = L + 1;

  bool exact_covers = disk.c_exact && static_cast<int>(disk.w_exact.size()) >= n;
  if (!exact_covers && L > kNumericInversionCap)
    throw TruncationError(
        "boundary inversion beyond order " + std::to_string(kNumericInversionCap) +
        " needs the exact series channel (numeric elimination is unstable that deep)");

  if (exact_covers) {
    int m = std::min<int>(std::max(exact_cap + 1, n), static_cast<int>(disk.w_exact.size()));
    std::vector<Rat> hw = invert_exact(disk.w_exact, m);
    const Rat hc = *out.hat_c_exact;
    out.hat_u.resize(n);
    Rat f(1);
    for (int j = 0; j < n; ++j) {
      out.hat_u[j] = to_double(hw[j] * f);
      f /= hc;
    }
    out.hat_w_exact = std::move(hw);
    out.hat_w_exact.resize(std::min<int>(m, exact_cap + 1));
    fit_hat_tail(out);
    return out;
  }

  // numeric route, as in invert_exact but in the sigma-scaled variables
  // (sigma = 1/(c Wc^2)) so every series decays geometrically
  using ld = long double;
  std::vector<ld> w(n);
  for (int l = 0; l < n; ++l) w[l] = disk.u[l];
  std::vector<ld> w2(n, 0.0L);
  for (int m = 0; m < n; ++m) {
    ld s = 0;
    for (int a = 0; a <= m; ++a) s += w[a] * w[m - a];
    w2[m] = s;
  }
  const ld wc2 = static_cast<ld>(disk.Wc) * disk.Wc;
  std::vector<ld> Y(n, 0.0L);
  {
    ld f = 1.0L;
    for (int l = 1; l < n; ++l) {
      Y[l] = w2[l - 1] * f;
      f /= wc2;
    }
  }
  std::vector<ld> target(n);
  {
    ld f = 1.0L;
    for (int l = 0; l < n; ++l) {
      target[l] = w[l] * f;
      f /= wc2;
    }
  }
  std::vector<ld> hv(n, 0.0L), p(n, 0.0L), resid = target;
  p[0] = 1.0L;
  hv[0] = resid[0];
  resid[0] = 0;
  for (int j = 1; j < n; ++j) {
    std::vector<ld> np(n, 0.0L);
    for (int a = n - 2; a >= j - 1; --a) {
      if (p[a] == 0) continue;
      ld pa = p[a];
      for (int b = 1; a + b < n; ++b) np[a + b] += pa * Y[b];
    }
    p.swap(np);
    hv[j] = resid[j] / p[j];
    for (int l = j; l < n; ++l) resid[l] -= hv[j] * p[l];
  }
  out.hat_u.resize(n);
  {
    ld f = 1.0L;  // Wc^{4j}
    for (int j = 0; j < n; ++j) {
      out.hat_u[j] = static_cast<double>(hv[j] * f);
      f *= wc2 * wc2;
    }
  }
  fit_hat_tail(out);
  return out;
}

CorePerimeterPmf core_perimeter_pmf(const SimpleDiskData& sdisk, int lmax) {
  if (lmax + 1 > static_cast<int>(sdisk.hat_u.size()))
    throw ConfigError("core_perimeter_pmf: lmax beyond the computed hat series");
  CorePerimeterPmf pmf;
  pmf.p.resize(lmax + 1);
  for (int l = 0; l <= lmax; ++l) pmf.p[l] = sdisk.hat_u[l] / sdisk.Wc;
  pmf.tail_mass = sdisk.tail_sum(1.0, lmax) / sdisk.Wc;
  pmf.truncation_warning = pmf.tail_mass > 0.01;
  return pmf;
}

RatioDiagnostics ratio_diagnostics(const std::vector<double>& series, double target) {
  if (series.size() < 2) throw ConfigError("ratio_diagnostics: need at least two terms");
  RatioDiagnostics d;
  d.ratios.reserve(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) d.ratios.push_back(series[i] / series[i - 1]);
  d.last = d.ratios.back();
  d.deviation = std::fabs(d.last - target);
  return d;
}

}  // namespace peel
