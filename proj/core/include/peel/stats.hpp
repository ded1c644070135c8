#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace peel {

struct MeanVar {
  long n = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double stderr_mean() const;
};

// Total variation distance between an empirical histogram and a reference
// pmf; reference indices beyond the histogram contribute their full mass.
double tv_distance(const std::map<int, std::int64_t>& counts, std::int64_t n,
                   const std::vector<double>& pmf, double pmf_tail_mass);

// Upper tail of the chi-square distribution with k degrees of freedom.
double chi_square_sf(double x, int dof);

// Pearson chi-square statistic of observed counts vs expected probabilities
// (bins with tiny expectation are pooled); returns the p-value.
double chi_square_gof_pvalue(const std::vector<std::int64_t>& observed,
                             const std::vector<double>& expected_prob, std::int64_t n);

// Two-sample chi-square on binned counts (shared binning, tail pooled).
double chi_square_two_sample_pvalue(const std::map<int, std::int64_t>& a,
                                    const std::map<int, std::int64_t>& b);

// Percentile bootstrap CI of a statistic over replica values.
struct BootstrapCI {
  double lo = 0, hi = 0;
};

}  // namespace peel
