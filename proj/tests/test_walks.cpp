#include <cmath>
#include <map>

#include "doctest.h"
#include "oracle.hpp"
#include "peel/walks.hpp"

using namespace peel;

namespace {

const DiskData& quad_disk() {
  static DiskData d = solve_disk_exact_atom(solve_critical_single_atom(2), 800, 256);
  return d;
}

const WalkKit& quad_kit() {
  static WalkKit kit = WalkKit::build(quad_disk(), 801, 256);
  return kit;
}

}  // namespace

TEST_CASE("mu = nu with half the negative jumps folded to -1") {
  const MuMeasure& mu = quad_kit().mu;
  CHECK(std::fabs(mu.at(2) - 2.0 / 3.0) < 1e-14);
  CHECK(std::fabs(mu.at(-1) - 1.0 / 6.0) < 1e-8);   // S/2
  CHECK(std::fabs(mu.at(-2) - 1.0 / 8.0) < 1e-10);  // nu(-1)/2
  CHECK(std::fabs(mu.at(-4) - 1.0 / 48.0) < 1e-10);
  CHECK(mu.at(1) == 0.0);
  CHECK(mu.at(-3) == 0.0);
  CHECK(std::fabs(mu.total_mass() - 1.0) < 1e-7);
}

TEST_CASE("h_down matches the oracle and both defining expressions") {
  const RenewalFunctions& r = quad_kit().renewal;
  std::vector<Rat> ref = oracle::quad_h_down10();
  CHECK(ref[0] == Rat(1));
  CHECK(ref[1] == Rat(1, 4));
  CHECK(ref[2] == Rat(1, 4));
  CHECK(ref[3] == Rat(1, 8));
  CHECK(ref[4] == Rat(1, 8));
  CHECK(ref[5] == Rat(5, 64));
  CHECK(ref[7] == Rat(7, 128));
  CHECK(ref[9] == Rat(21, 512));
  for (int l = 0; l <= 9; ++l) CHECK(std::fabs(r.down(l) - to_double(ref[l])) < 2e-9);
  // pairwise ties h(2j-1) = h(2j)
  for (int j = 1; j <= 40; ++j) CHECK(r.down(2 * j - 1) == r.down(2 * j));
  // nonincreasing, vanishing for l < 0
  for (int l = 1; l <= 100; ++l) CHECK(r.down(l) <= r.down(l - 1) + 1e-15);
  CHECK(r.down(-3) == 0.0);
  // exact channel
  REQUIRE(r.h_down_exact.size() >= 10);
  for (int l = 0; l <= 9; ++l) CHECK(r.h_down_exact[l] == ref[l]);
}

TEST_CASE("h_up prefix sums and the first-step normalization") {
  const RenewalFunctions& r = quad_kit().renewal;
  CHECK(r.up(0) == 0.0);
  CHECK(r.up(1) == 1.0);
  CHECK(std::fabs(r.up(2) - 1.25) < 2e-9);
  CHECK(std::fabs(r.up(3) - 1.5) < 2e-9);
  CHECK(std::fabs(r.up(4) - 13.0 / 8) < 2e-9);
  CHECK(std::fabs(r.up(5) - 1.75) < 2e-9);
  // sum_k q_k c^{k-1} h_up(2k-1) = 1: for quadrangulations (1/12)*8*h_up(3)
  double s = (1.0 / 12) * 8 * r.up(3);
  CHECK(std::fabs(s - 1.0) < 2e-9);
  REQUIRE(r.up_exact(3) != nullptr);
  CHECK(Rat(1, 12) * 8 * *r.up_exact(3) == Rat(1));
  // strictly increasing while h_down > 0, saturating limit beyond the table
  for (int l = 1; l < 200; ++l) CHECK(r.up(l + 1) > r.up(l));
  CHECK(r.h_up_limit > r.up(r.M + 1));
}

TEST_CASE("h identities: harmonicity and the peel-position sum rule") {
  HIdentityReport rep = check_H_identities(quad_kit().mu, quad_kit().renewal, quad_kit().nu, 40);
  CHECK(rep.harmonicity_residual_max < 1e-10);
  CHECK(rep.transition_residual_max < 1e-10);
}

TEST_CASE("perturbing nu breaks the identities detectably") {
  WalkKit kit = WalkKit::build(quad_disk(), 801, 256);
  kit.nu.neg[0] += 1e-3;
  kit.nu.S_exact.reset();       // force the numeric route; the perturbation
  kit.nu.neg_exact.clear();     // must not be masked by the exact channel
  kit.mu = mu_measure(kit.nu);
  HIdentityReport rep = check_H_identities(kit.mu, kit.renewal, kit.nu, 40);
  CHECK(rep.transition_residual_max > 1e-4);
}

TEST_CASE("doob chain: E-chain transition probabilities at 1 and 3") {
  DoobChain chain(quad_kit().mu, quad_kit().renewal, DoobChain::H::down);
  auto t1 = chain.transitions(1);
  std::map<int, double> p1(t1.begin(), t1.end());
  CHECK(std::fabs(p1[3] - 1.0 / 3.0) < 5e-9);
  CHECK(std::fabs(p1[0] - 2.0 / 3.0) < 1e-8);
  auto t3 = chain.transitions(3);
  std::map<int, double> p3(t3.begin(), t3.end());
  CHECK(std::fabs(p3[5] - 5.0 / 12.0) < 5e-9);
  CHECK(std::fabs(p3[2] - 1.0 / 3.0) < 1e-8);
  CHECK(std::fabs(p3[1] - 1.0 / 4.0) < 5e-9);
}

TEST_CASE("doob chain masses sum to one for both h functions") {
  DoobChain down(quad_kit().mu, quad_kit().renewal, DoobChain::H::down);
  DoobChain up(quad_kit().mu, quad_kit().renewal, DoobChain::H::up);
  for (int x = 1; x <= 64; ++x) {
    CHECK(std::fabs(down.mass_at(x) - 1.0) < 1e-9);
    CHECK(std::fabs(up.mass_at(x) - 1.0) < 1e-9);
  }
}

TEST_CASE("constant h reduces the chain to the base walk") {
  DoobChain base(quad_kit().mu, quad_kit().renewal, DoobChain::H::constant, 1e-6);
  auto t = base.transitions(10);
  double m2 = 0, m1 = 0, mneg2 = 0;
  for (auto& [target, p] : t) {
    if (target == 12) m2 = p;
    if (target == 9) m1 = p;
    if (target == 8) mneg2 = p;
  }
  CHECK(std::fabs(m2 - 2.0 / 3.0) < 1e-12);
  CHECK(std::fabs(m1 - 1.0 / 6.0) < 1e-7);
  CHECK(std::fabs(mneg2 - 1.0 / 8.0) < 1e-10);
}

TEST_CASE("absorbed E-chain hits zero in every simulated run") {
  DoobChain chain(quad_kit().mu, quad_kit().renewal, DoobChain::H::down);
  RngStream rng(20240801);
  for (int run = 0; run < 2000; ++run) {
    int x = 1 + static_cast<int>(rng.below(8));
    long guard = 0;
    while (x != 0) {
      x = chain.step(x, rng);
      REQUIRE(++guard < 2000000);
    }
    CHECK(x == 0);
  }
}
