// Independent closed-form reference data for critical quadrangulations
// (q_2 = 1/12, c = 8) and friends, used as the oracle side of the tests.
//
// The negative-side generating function of the boundary-walk measure for
// quadrangulations is
//     N(x) = (x - 2/3 + (2/3)(1-x)^{3/2}) / x,
// so nu(-k) = (2/3) * [x^{k+1}] (1-x)^{3/2}, and the binomial coefficients of
// (1-x)^{3/2} obey the exact rational recursion g_j = g_{j-1} (2j-5)/(2j).
// Everything else here is produced by direct summation from that series.
#pragma once

#include <vector>

#include "peel/rational.hpp"

namespace oracle {

using peel::Rat;

// nu(-1..-K) for critical quadrangulations
inline std::vector<Rat> quad_nu_neg(int K) {
  std::vector<Rat> g(K + 2);
  g[0] = 1;
  for (int j = 1; j <= K + 1; ++j) g[j] = g[j - 1] * peel::rat(2 * j - 5, 2 * j);
  std::vector<Rat> nu(K);
  for (int k = 1; k <= K; ++k) nu[k - 1] = Rat(2, 3) * g[k + 1];
  return nu;
}

// W^(0..L-1) for critical quadrangulations: W^(l) = nu(-l-1) c^{l+1} / 2
inline std::vector<Rat> quad_w(int L) {
  std::vector<Rat> nu = quad_nu_neg(L + 1);
  std::vector<Rat> w(L);
  Rat cpow = 8;
  for (int l = 0; l < L; ++l) {
    w[l] = nu[l] * cpow / 2;
    cpow *= 8;
  }
  return w;
}

inline Rat quad_c() { return Rat(8); }
inline Rat quad_q2() { return Rat(1, 12); }
inline Rat quad_Wc() { return Rat(4, 3); }
inline Rat quad_hat_c() { return Rat(9, 2); }
inline Rat quad_S() { return Rat(1, 3); }
inline Rat quad_gulp() { return Rat(1, 2); }
inline Rat quad_exposure() { return Rat(2); }

// hatW^(0..3) from inverting the composition order by order
inline std::vector<Rat> quad_hat_w4() {
  return {Rat(1), Rat(4, 3), Rat(4, 9), Rat(16, 27)};
}

// h_down(0..9) by tail sums of the oracle nu
inline std::vector<Rat> quad_h_down10() {
  std::vector<Rat> nu = quad_nu_neg(16);
  Rat S = quad_S();
  std::vector<Rat> h(10);
  for (int l = 0; l <= 9; ++l) {
    int kmin = (l + 3) / 2;
    Rat t = S;
    for (int k = 1; k < kmin; ++k) t -= nu[k - 1];
    h[l] = t / S;
  }
  return h;
}

// 6-angulations (q_3 = 2/135, c = 6), derived by the same functional
// equation worked in closed form and cross-checked numerically
inline Rat hex_c() { return Rat(6); }
inline Rat hex_q3() { return Rat(2, 135); }
inline Rat hex_S() { return Rat(7, 15); }
inline Rat hex_gulp() { return Rat(5, 6); }
inline Rat hex_exposure() { return Rat(8, 3); }
inline std::vector<Rat> hex_nu_neg4() {
  return {Rat(1, 3), Rat(1, 16), Rat(1, 40), Rat(5, 384)};
}

// 8-angulations (q_4 = 27/8960, c = 16/3)
inline Rat oct_c() { return Rat(16, 3); }
inline Rat oct_q4() { return Rat(27, 8960); }
inline Rat oct_S() { return Rat(19, 35); }
inline Rat oct_gulp() { return Rat(11, 10); }
inline Rat oct_exposure() { return Rat(16, 5); }

}  // namespace oracle
