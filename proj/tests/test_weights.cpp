#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "oracle.hpp"
#include "peel/weights.hpp"

using namespace peel;

namespace {

const DiskData& quad_disk() {
  static DiskData d = [] {
    CriticalAtom atom = solve_critical_single_atom(2);
    return solve_disk_exact_atom(atom, 800, 128);
  }();
  return d;
}

const NuMeasure& quad_nu() {
  static NuMeasure nu = nu_measure(quad_disk(), 801);
  return nu;
}

}  // namespace

TEST_CASE("critical 2p-angulation weights are exact") {
  CriticalAtom quad = solve_critical_single_atom(2);
  CHECK(quad.q == Rat(1, 12));
  CHECK(quad.c == Rat(8));
  CriticalAtom hex = solve_critical_single_atom(3);
  CHECK(hex.q == oracle::hex_q3());
  CHECK(hex.c == oracle::hex_c());
  CriticalAtom oct = solve_critical_single_atom(4);
  CHECK(oct.q == oracle::oct_q4());
  CHECK(oct.c == oracle::oct_c());

  WeightSequence q = make_2p_angulation(2);
  CHECK(q.entries.size() == 1);
  CHECK(*q.at_exact(2) == Rat(1, 12));
}

TEST_CASE("exposure closed form and the gulp identity, p = 2..6") {
  for (int p = 2; p <= 6; ++p) {
    CriticalAtom atom = solve_critical_single_atom(p);
    // e = (2p-1) q_p c^{p-1}; the zero-mean normalization pins S and g
    Rat a = atom.q * rat_pow(atom.c, p - 1);
    Rat e = Rat(2 * p - 1) * a;
    Rat expected = rat_pow(Rat(4), p - 1) / rat_binomial(2 * p - 2, p - 1);
    CHECK(e == expected);
    Rat S = 1 - a;
    Rat g = Rat(p - 1) * a - S / 2;  // first moment balance at criticality
    CHECK(e == 2 * g + 1);
  }
}

TEST_CASE("weight sequence validation and file parsing") {
  CHECK_THROWS_AS(WeightSequence(std::map<int, Rat>{}), InadmissibleError);
  CHECK_THROWS_AS(WeightSequence(std::map<int, Rat>{{1, Rat(0)}}), InadmissibleError);
  CHECK_THROWS_AS(WeightSequence(std::map<int, Rat>{{0, Rat(1)}}), ConfigError);
  CHECK_THROWS_AS(WeightSequence(std::map<int, Rat>{{2, Rat(-1)}}), ConfigError);

  std::string path = "test_weights_tmp.txt";
  {
    std::ofstream out(path);
    out << "# comment line\n2 1/12\n3 0.5\n\n";
  }
  WeightSequence q = WeightSequence::from_file(path);
  CHECK(*q.at_exact(2) == Rat(1, 12));
  CHECK(*q.at_exact(3) == Rat(1, 2));
  CHECK(q.support_bound() == 3);
  std::remove(path.c_str());
}

TEST_CASE("disk series matches the closed-form oracle") {
  const DiskData& d = quad_disk();
  std::vector<Rat> w = oracle::quad_w(6);
  CHECK(w[0] == Rat(1));
  CHECK(w[1] == Rat(4, 3));
  CHECK(w[2] == Rat(4));
  CHECK(w[3] == Rat(16));
  CHECK(w[4] == Rat(224, 3));
  for (int l = 0; l <= 4; ++l)
    CHECK(std::fabs(d.u[l] * std::pow(8.0, l) - to_double(w[l])) <
          1e-10 * to_double(w[l]));
  // exact channel reproduces the oracle series identically
  REQUIRE(d.w_exact.size() >= 6);
  for (int l = 0; l < 6; ++l) CHECK(d.w_exact[l] == w[l]);
  CHECK(std::fabs(d.Wc - 4.0 / 3.0) < 1e-8);
  REQUIRE(d.Wc_exact.has_value());
  CHECK(*d.Wc_exact == Rat(4, 3));
}

TEST_CASE("plain fixed-point iterates increase entrywise") {
  DiskSolveOptions opt;
  opt.L = 60;
  DiskFixedPoint fp(make_2p_angulation(2), 8.0, opt);
  std::vector<double> prev = fp.current();
  for (int i = 0; i < 25; ++i) {
    fp.sweep();
    const std::vector<double>& cur = fp.current();
    for (std::size_t l = 0; l < cur.size(); ++l) CHECK(cur[l] >= prev[l] - 1e-18);
    prev = cur;
  }
}

TEST_CASE("supercritical weights are flagged") {
  WeightSequence heavy({{2, Rat(1, 11)}});
  DiskSolveOptions opt;
  opt.L = 200;
  CHECK_THROWS_AS(solve_disk_series(heavy, 8.0, opt), InadmissibleError);
}

TEST_CASE("growth constant for quadrangulations")
{
  CSolveResult res = solve_admissible_c(make_2p_angulation(2));
  CHECK(res.critical);
  CHECK(std::fabs(res.c - 8.0) < 1e-8);
  CHECK(std::fabs(res.nu_sum_residual) < 1e-8);
}

TEST_CASE("subcritical weights yield the ratio-limit constant and critical=false") {
  WeightSequence light({{2, Rat(1, 13)}});
  AdmissibleSolveOptions opt;
  opt.refine_L = 0;
  CSolveResult res = solve_admissible_c(light, opt);
  CHECK_FALSE(res.critical);
  CHECK(res.nu_sum_residual < -1e-3);  // mass deficit is the subcritical signal
  // ratio limit: Z = (1 - sqrt(1/13)) 13/6, c = 4Z = 6.2634...
  CHECK(std::fabs(res.c - 6.263419) < 0.02);
}

TEST_CASE("nu measure of quadrangulations against the oracle") {
  const NuMeasure& nu = quad_nu();
  CHECK(std::fabs(nu.at(1) - 2.0 / 3.0) < 1e-14);
  std::vector<Rat> neg = oracle::quad_nu_neg(8);
  CHECK(neg[0] == Rat(1, 4));
  CHECK(neg[1] == Rat(1, 24));
  CHECK(neg[2] == Rat(1, 64));
  CHECK(neg[3] == Rat(1, 128));
  for (int k = 1; k <= 4; ++k) CHECK(std::fabs(nu.at(-k) - to_double(neg[k - 1])) < 1e-10);
  CHECK(std::fabs(nu.S - 1.0 / 3.0) < 1e-8);
  CHECK(std::fabs(nu.mean) < 1e-6);
  CHECK(std::fabs(nu.gulp - 0.5) < 2e-6);
  CHECK(std::fabs(nu.exposure - 2.0) < 1e-12);
  CHECK(std::fabs(nu.gulp_unhalved() - 1.0) < 4e-6);
  // exact channel
  REQUIRE(nu.S_exact.has_value());
  CHECK(*nu.S_exact == Rat(1, 3));
  CHECK(*nu.gulp_exact == Rat(1, 2));
  CHECK(*nu.exposure_exact == Rat(2));
  CHECK(nu.neg_exact[0] * Rat(8) == Rat(2));  // nu(-1) c = 2
}

TEST_CASE("eight-angulation gulp and exposure") {
  CriticalAtom atom = solve_critical_single_atom(4);
  DiskData d = solve_disk_exact_atom(atom, 400, 64);
  NuMeasure nu = nu_measure(d, 401);
  CHECK(std::fabs(nu.gulp - 1.1) < 5e-5);
  CHECK(std::fabs(nu.exposure - 3.2) < 1e-12);
  CHECK(*nu.gulp_exact == oracle::oct_gulp());
  CHECK(*nu.exposure_exact == oracle::oct_exposure());
  CHECK(*nu.S_exact == oracle::oct_S());
}

TEST_CASE("criticality report for quadrangulations") {
  CriticalityReport rep = criticality_report(quad_nu());
  CHECK(rep.admissible);
  CHECK(rep.critical);
  CHECK(rep.dilute);
  CHECK(std::fabs(rep.normalization_residual) < 1e-8);
  CHECK(std::fabs(rep.mean_residual) < 1e-6);
  CHECK(rep.tutte_residual_max < 1e-8);
  CHECK(std::fabs(rep.tail_exponent + 2.5) < 0.05 * 2.5);
}

TEST_CASE("near-critical but subcritical weights report critical=false") {
  WeightSequence light({{2, Rat(1, 13)}});
  AdmissibleSolveOptions copt;
  copt.refine_L = 0;
  CSolveResult res = solve_admissible_c(light, copt);
  DiskSolveOptions dopt;
  dopt.L = 400;
  DiskData d = solve_disk_series(light, res.c, dopt);
  NuMeasure nu = nu_measure(d, 401);
  CriticalityReport rep = criticality_report(nu);
  CHECK_FALSE(rep.critical);
}

TEST_CASE("exact seed solve agrees with the oracle for p = 2, 3") {
  std::vector<Rat> quad = exact_nu_negative(solve_critical_single_atom(2), 40);
  std::vector<Rat> ref = oracle::quad_nu_neg(40);
  for (int i = 0; i < 40; ++i) CHECK(quad[i] == ref[i]);

  std::vector<Rat> hex = exact_nu_negative(solve_critical_single_atom(3), 4);
  std::vector<Rat> href = oracle::hex_nu_neg4();
  for (int i = 0; i < 4; ++i) CHECK(hex[i] == href[i]);
}

TEST_CASE("exact series for p = 4 matches the numeric route") {
  CriticalAtom atom = solve_critical_single_atom(4);
  std::vector<Rat> nu = exact_nu_negative(atom, 30);
  DiskData d = solve_disk_series(make_2p_angulation(4), to_double(atom.c),
                                 [] {
                                   DiskSolveOptions o;
                                   o.L = 600;
                                   return o;
                                 }());
  for (int k = 1; k <= 30; ++k) {
    double numeric = 2.0 * d.u[k - 1] / d.c;
    CHECK(std::fabs(numeric - to_double(nu[k - 1])) < 1e-11);
  }
}

TEST_CASE("exact seeds refuse non-critical weights") {
  CriticalAtom bad = solve_critical_single_atom(2);
  bad.q = Rat(1, 13);
  CHECK_THROWS_AS(exact_neg_seeds(bad), ConsistencyError);
}
