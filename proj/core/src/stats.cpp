#include "peel/stats.hpp"

#include <algorithm>
#include <cmath>

namespace peel {

double MeanVar::stderr_mean() const { return n > 1 ? std::sqrt(variance() / n) : 0.0; }

double tv_distance(const std::map<int, std::int64_t>& counts, std::int64_t n,
                   const std::vector<double>& pmf, double pmf_tail_mass) {
  double tv = 0;
  double emp_covered = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    auto it = counts.find(static_cast<int>(i));
    double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    emp_covered += emp;
    tv += std::fabs(emp - pmf[i]);
  }
  // everything beyond the pmf support on either side
  tv += std::fabs((1.0 - emp_covered) - pmf_tail_mass);
  return tv / 2.0;
}

namespace {

// regularized upper incomplete gamma Q(a, x)
double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) return 1.0;
  if (x == 0) return 1.0;
  double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // series for P(a,x)
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    double p = sum * std::exp(-x + a * std::log(x) - gln);
    return 1.0 - p;
  }
  // continued fraction for Q(a,x)
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double chi_square_sf(double x, int dof) { return gamma_q(0.5 * dof, 0.5 * x); }

double chi_square_gof_pvalue(const std::vector<std::int64_t>& observed,
                             const std::vector<double>& expected_prob, std::int64_t n) {
  // pool bins until every expected count is at least 5
  std::vector<double> exp_pooled;
  std::vector<double> obs_pooled;
  double acc_e = 0, acc_o = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    acc_e += expected_prob[i] * n;
    acc_o += static_cast<double>(observed[i]);
    if (acc_e >= 5.0) {
      exp_pooled.push_back(acc_e);
      obs_pooled.push_back(acc_o);
      acc_e = acc_o = 0;
    }
  }
  if (acc_e > 0 || acc_o > 0) {
    if (!exp_pooled.empty()) {
      exp_pooled.back() += acc_e;
      obs_pooled.back() += acc_o;
    } else {
      exp_pooled.push_back(acc_e);
      obs_pooled.push_back(acc_o);
    }
  }
  if (exp_pooled.size() < 2) return 1.0;
  double stat = 0;
  for (std::size_t i = 0; i < exp_pooled.size(); ++i) {
    double d = obs_pooled[i] - exp_pooled[i];
    stat += d * d / exp_pooled[i];
  }
  return chi_square_sf(stat, static_cast<int>(exp_pooled.size()) - 1);
}

double chi_square_two_sample_pvalue(const std::map<int, std::int64_t>& a,
                                    const std::map<int, std::int64_t>& b) {
  if (a.empty() || b.empty()) return 1.0;
  int hi = std::max(a.rbegin()->first, b.rbegin()->first);
  int lo = std::min(a.begin()->first, b.begin()->first);
  std::int64_t na = 0, nb = 0;
  for (auto& [k, v] : a) na += v;
  for (auto& [k, v] : b) nb += v;
  // shared binning with pooling so every expected cell is >= 5
  double stat = 0;
  int cells = 0;
  std::int64_t ca = 0, cb = 0;
  auto flush = [&](bool force) {
    double tot = static_cast<double>(ca + cb);
    if (tot == 0) return;
    double ea = tot * na / static_cast<double>(na + nb);
    double eb = tot * nb / static_cast<double>(na + nb);
    if (!force && (ea < 5.0 || eb < 5.0)) return;
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
    ++cells;
    ca = cb = 0;
  };
  for (int k = lo; k <= hi; ++k) {
    auto ia = a.find(k);
    auto ib = b.find(k);
    ca += ia == a.end() ? 0 : ia->second;
    cb += ib == b.end() ? 0 : ib->second;
    flush(false);
  }
  flush(true);
  if (cells < 2) return 1.0;
  return chi_square_sf(stat, cells - 1);
}

}  // namespace peel
