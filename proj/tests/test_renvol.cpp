#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rvh/renvol.hpp"
#include "rvh/surfaces.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace rvh;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd circle_pts(int P, double R) {
  Eigen::MatrixXd pts(P, 2);
  for (int i = 0; i < P; ++i) {
    double t = 2.0 * M_PI * i / P;
    pts(i, 0) = R * std::cos(t);
    pts(i, 1) = R * std::sin(t);
  }
  return pts;
}

Eigen::MatrixXd ellipse_pts(int P, double a, double b) {
  Eigen::MatrixXd pts(P, 2);
  for (int i = 0; i < P; ++i) {
    double t = 2.0 * M_PI * i / P;
    pts(i, 0) = a * std::cos(t);
    pts(i, 1) = b * std::sin(t);
  }
  return pts;
}

GraphExpansion hemisphere_graph(double R, int m, int N) {
  BoundaryManifold b = BoundaryManifold::round_sphere(R, m);
  // The hemisphere's normal-derivative data at order m+1: zero for even m,
  // the continuation of sqrt(R^2 - x^2) - R for odd m.
  double nu = (m % 2 == 1) ? [](int m_, double R_) {
    double a = 1.0;
    for (int j = 1; 2 * j <= m_ + 1; ++j) a *= (2.0 * j - 3.0) / (2.0 * j);
    return a * std::pow(R_, double(-m_));
  }(m, R) : 0.0;
  return expand_minimal_graph(b, m, m, {Coeff(nu)}, N);
}

double fit_coefficient(const FinitePartResult& r, const std::string& name) {
  for (size_t i = 0; i < r.basis.size(); ++i)
    if (r.basis[i] == name) return r.fit[i];
  FAIL("missing basis column ", name);
  return 0.0;
}

}  // namespace

TEST_CASE("adaptive simpson integrates smooth and log-singular profiles") {
  double cubic = adaptive_simpson([](double x) { return x * x * x; }, 0.0, 1.0, 1e-12);
  CHECK(cubic == doctest::Approx(0.25).epsilon(1e-12));
  auto xlog = [](double x) { return x <= 0.0 ? 0.0 : x * std::log(x); };
  double v = adaptive_simpson(xlog, 0.0, 1.0, 1e-11);
  CHECK(v == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(adaptive_simpson(xlog, 1.0, 1.0, 1e-11) == 0.0);
}

TEST_CASE("pure pole weights read off the assembled ledger entry") {
  BoundaryManifold b = BoundaryManifold::curve(circle_pts(64, 1.0));
  const int m = 2;
  // Arrange [b q]_{m+j-1} = 7 for j = 0: the boundary has length 2 pi.
  Series one = Series::constant(Coeff(1.0), m + 3, m, true);
  Series q = Series::constant(Coeff(1.0), m + 3, m, true);
  q.set_coeff(1, false, Coeff(7.0 / (2.0 * kPi)));
  q.set_coeff(2, false, Coeff(-3.0));
  q.set_coeff(2, true, Coeff(0.25 / (2.0 * kPi)));

  FinitePartResult r1 = finite_part(b, one, q, m, 0, 1, nullptr, 0.0);
  CHECK(r1.value == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(r1.c[0] == doctest::Approx(2.0 * kPi).epsilon(1e-12));

  // j = 1 moves the pole to order m, where the log ledger engages.
  FinitePartResult r2 = finite_part(b, one, q, m, 1, 2, nullptr, 0.0);
  CHECK(r2.value == doctest::Approx(-0.25).epsilon(1e-12));
  // Below the log threshold the weight-2 pole has no log ledger to read.
  FinitePartResult r3 = finite_part(b, one, q, m, 0, 2, nullptr, 0.0);
  CHECK(r3.value == 0.0);
  // Weight three and higher kills everything.
  for (int p = 3; p <= 5; ++p)
    CHECK(finite_part(b, one, q, m, 0, p, nullptr, 0.0).value == 0.0);
}

TEST_CASE("finite part is linear in the density factor") {
  BoundaryManifold b = BoundaryManifold::curve(ellipse_pts(64, 1.0, 0.7));
  const int m = 2;
  const int P = b.sample_count();
  auto bump = [&](double amp, int k) {
    Series s = Series::constant(Coeff(1.0), m + 3, m, true);
    Eigen::ArrayXd g = amp * (2.0 * M_PI * Eigen::ArrayXd::LinSpaced(P, 0, P - 1) / P).cos();
    s.set_coeff(k, false, Coeff(g));
    s.set_coeff(m + 1, true, Coeff(0.1 * amp));
    return s;
  };
  Series q = Series::constant(Coeff(1.0), m + 3, m, true);
  q.set_coeff(2, false, Coeff(-0.4));
  Series b1 = bump(1.3, 1), b2 = bump(-0.8, 3);
  const double lam = 2.75;
  for (int p : {1, 2}) {
    for (int j : {0, 1, 2}) {
      double va = finite_part(b, b1, q, m, j, p, nullptr, 0.0).value;
      double vb = finite_part(b, b2, q, m, j, p, nullptr, 0.0).value;
      Series mix = add(b1, scale(b2, Coeff(lam)));
      double vm = finite_part(b, mix, q, m, j, p, nullptr, 0.0).value;
      CHECK(vm == doctest::Approx(va + lam * vb).epsilon(1e-12));
    }
  }
  // p = 0 with a null tail volume: the assembly is still linear in b.
  TailProvider zero;
  zero.tail = [](double) { return 0.0; };
  double va = finite_part(b, b1, q, m, 0, 0, &zero, 0.1).value;
  double vb = finite_part(b, b2, q, m, 0, 0, &zero, 0.1).value;
  Series mix = add(b1, scale(b2, Coeff(lam)));
  double vm = finite_part(b, mix, q, m, 0, 0, &zero, 0.1).value;
  CHECK(vm == doctest::Approx(va + lam * vb).epsilon(1e-11));
}

TEST_CASE("coefficients above order m+2 never reach the result") {
  BoundaryManifold b = BoundaryManifold::curve(circle_pts(64, 1.0));
  const int m = 3;
  Series base = Series::constant(Coeff(1.0), m + 4, m, true);
  base.set_coeff(2, false, Coeff(0.6));
  Series q = Series::constant(Coeff(1.0), m + 4, m, true);
  q.set_coeff(m, true, Coeff(0.3));
  Series bumped = base;
  bumped.set_coeff(m + 3, false, Coeff(123.0));
  bumped.set_coeff(m + 4, true, Coeff(-48.0));
  TailProvider zero;
  zero.tail = [](double) { return 0.0; };
  for (int p : {0, 1, 2}) {
    FinitePartResult ra = finite_part(b, base, q, m, 0, p, &zero, 0.1);
    FinitePartResult rb = finite_part(b, bumped, q, m, 0, p, &zero, 0.1);
    CHECK(ra.value == rb.value);  // bitwise: the high orders are never read
  }
}

TEST_CASE("riesz volume of the hemisphere in H^3 is -2 pi at every radius") {
  for (double R : {1.0, 2.0, 0.7}) {
    GraphExpansion g = hemisphere_graph(R, 2, 8);
    FinitePartResult r = riesz_rv(g, hemisphere_tail(R, 2), 0.1);
    CHECK(r.value == doctest::Approx(-2.0 * kPi).epsilon(1e-8));
    CHECK(r.method == "riesz");
    CHECK(r.c[0] == doctest::Approx(2.0 * kPi * R).epsilon(1e-12));
    CHECK(std::abs(r.c[1]) < 1e-12);  // no pole: the volume stays anomaly-free
    // The area element is exactly 1, so the near-boundary remainder vanishes.
    CHECK(std::abs(r.remainder) < 1e-12);
  }
}

TEST_CASE("riesz volume is stable under the assembly cutoff") {
  for (int m : {2, 3, 4}) {
    GraphExpansion g = hemisphere_graph(1.0, m, m + 6);
    TailProvider tail = hemisphere_tail(1.0, m);
    double base = riesz_rv(g, tail, 0.1).value;
    for (double d : {0.05, 0.2, 0.4}) {
      double v = riesz_rv(g, tail, d).value;
      CHECK(std::abs(v - base) < 1e-6 * std::max(1.0, std::abs(base)));
    }
  }
}

TEST_CASE("odd hemispheres carry the radius anomaly -2 pi log R") {
  // Unit value derived from the Beta-function continuation of
  // 4 pi int_0^1 sqrt(1-t^2) t^{z-3} dt.
  const double unit = -kPi * (1.0 + 2.0 * std::log(2.0));
  for (double R : {1.0, 2.0}) {
    GraphExpansion g = hemisphere_graph(R, 3, 9);
    FinitePartResult r = riesz_rv(g, hemisphere_tail(R, 3), 0.1);
    CHECK(r.value == doctest::Approx(unit - 2.0 * kPi * std::log(R)).epsilon(1e-8));
    // The pole residue is the boundary area density deficit.
    CHECK(r.c[2] == doctest::Approx(-2.0 * kPi).epsilon(1e-10));
  }
}

TEST_CASE("H^5 hemisphere: riesz value and cross-method agreement") {
  GraphExpansion g = hemisphere_graph(1.0, 4, 10);
  TailProvider tail = hemisphere_tail(1.0, 4);
  FinitePartResult riesz = riesz_rv(g, tail, 0.1);
  CHECK(riesz.value == doctest::Approx(4.0 * kPi * kPi / 3.0).epsilon(1e-8));
  FinitePartResult had = hadamard_rv(tail.tail, 4);
  CHECK(std::abs(had.value - riesz.value) < 1e-5);
  // Radius independence: even m has no anomaly.
  GraphExpansion g2 = hemisphere_graph(1.7, 4, 10);
  CHECK(riesz_rv(g2, hemisphere_tail(1.7, 4), 0.1).value ==
        doctest::Approx(riesz.value).epsilon(1e-8));
}

TEST_CASE("hadamard fit recovers an exact even ladder") {
  auto area = [](double eps) { return 2.0 * kPi / eps - 2.0 * kPi; };
  FinitePartResult r = hadamard_rv(area, 2);
  CHECK(r.method == "hadamard");
  CHECK(fit_coefficient(r, "eps^-1") == doctest::Approx(2.0 * kPi).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(-2.0 * kPi).epsilon(1e-9));
  CHECK(std::abs(fit_coefficient(r, "eps")) < 1e-7);
  CHECK(std::abs(fit_coefficient(r, "eps^2")) < 1e-6);

  auto flat = [](double) { return 0.125; };
  FinitePartResult c = hadamard_rv(flat, 2);
  CHECK(c.value == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(std::abs(fit_coefficient(c, "eps^-1")) < 1e-12);
}

TEST_CASE("hadamard fit isolates the log ledger for odd m") {
  TailProvider tail = hemisphere_tail(1.0, 3);
  FinitePartResult r = hadamard_rv(tail.tail, 3);
  const double unit = -kPi * (1.0 + 2.0 * std::log(2.0));
  CHECK(r.value == doctest::Approx(unit).epsilon(1e-6));
  CHECK(fit_coefficient(r, "eps^-2") == doctest::Approx(2.0 * kPi).epsilon(1e-8));
  CHECK(fit_coefficient(r, "log(1/eps)") == doctest::Approx(-2.0 * kPi).epsilon(1e-6));
}

TEST_CASE("flat cylinder: the pole ledger is exact and the volume vanishes") {
  BoundaryManifold b = BoundaryManifold::curve(circle_pts(128, 1.0));
  std::vector<Series> u{Series(8, 2, true)};
  GraphExpansion g = graph_from_data(b, 2, 2, u);
  FinitePartResult r = riesz_rv(g, cylinder_tail(2.0 * kPi, 2), 0.1);
  CHECK(r.c[0] == doctest::Approx(2.0 * kPi).epsilon(1e-13));
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(r.c[size_t(k)]) < 1e-12);
  CHECK(std::abs(r.cstar[0]) < 1e-14);
  CHECK(std::abs(r.value) < 1e-10);
}

TEST_CASE("a convergent integrand reproduces its plain integral") {
  // b = x^2 on the unit hemisphere in H^3: the integral converges to
  // 2 pi R^2 and the finite part must agree at every cutoff.
  const double R = 1.3;
  GraphExpansion g = hemisphere_graph(R, 2, 8);
  Series b2 = Series::monomial(Coeff(1.0), 2, false, g.q.order(), 2, true);
  TailProvider t;
  t.tail = [R](double d) { return 2.0 * kPi * R * (R - d); };
  t.density = [R](double) { return 2.0 * kPi * R; };
  for (double d : {0.05, 0.1, 0.3}) {
    FinitePartResult r = finite_part(g.boundary, b2, g.q, 2, 0, 0, &t, d);
    CHECK(r.value == doctest::Approx(2.0 * kPi * R * R).epsilon(1e-10));
  }
}

TEST_CASE("the near-boundary remainder absorbs what the series head misses") {
  // For m = 3 the hemisphere area element continues past order m+2; with the
  // exact density the remainder catches the difference, without it the value
  // picks up the documented O(delta^4) bias.
  GraphExpansion g = hemisphere_graph(1.0, 3, 9);
  TailProvider full = hemisphere_tail(1.0, 3);
  TailProvider headless = full;
  headless.density = nullptr;
  double with_density = riesz_rv(g, full, 0.2).value;
  double without = riesz_rv(g, headless, 0.2).value;
  CHECK(std::abs(with_density - without) > 1e-6);
  CHECK(std::abs(with_density - without) < 1e-3);
  CHECK(riesz_rv(g, headless, 0.2).remainder == 0.0);
}

TEST_CASE("equivalence audit passes on even hemispheres") {
  for (int m : {2, 4}) {
    GraphExpansion g = hemisphere_graph(1.0, m, m + 6);
    EquivalenceReport rep = check_equivalence(g, hemisphere_tail(1.0, m), 1e-6);
    CHECK(rep.pass);
    CHECK(rep.even);
    CHECK(std::abs(rep.hadamard - rep.riesz) < 1e-6);
    CHECK(std::abs(rep.defect_localized) < 1e-10);
    CHECK(std::abs(rep.defect_sampled) < 1e-4);
    CHECK(rep.fp_xy == doctest::Approx(rep.fp_x).epsilon(1e-10));
  }
}

TEST_CASE("odd hemispheres show the bdf defect pi at every radius") {
  for (double R : {1.0, 2.0}) {
    GraphExpansion g = hemisphere_graph(R, 3, 9);
    EquivalenceReport rep = check_equivalence(g, hemisphere_tail(R, 3), 1e-6);
    CHECK(rep.pass);
    CHECK_FALSE(rep.even);
    // Localized defect: the order-2 slot of omega q integrates to pi.
    CHECK(rep.defect_localized == doctest::Approx(kPi).epsilon(1e-9));
    CHECK(rep.defect_sampled == doctest::Approx(kPi).epsilon(1e-4));
    CHECK(rep.fp_xy == doctest::Approx(rep.fp_x + kPi).epsilon(1e-10));
    CHECK(rep.delta_drift < 1e-6);
    // Hadamard and riesz still agree for odd m once the log column is split off.
    CHECK(std::abs(rep.hadamard - rep.riesz) < 1e-5);
  }
}

TEST_CASE("grid boundaries: bdf defect parity for even m") {
  BoundaryManifold b = BoundaryManifold::curve(ellipse_pts(96, 1.0, 0.8));
  GraphExpansion g = expand_minimal_graph(b, 2, 2, NormalField{Coeff(0.0)}, 8);
  FinitePartResult lin = finite_part(g.boundary, g.omega, g.q, 2, 0, 1, nullptr, 0.0);
  // [omega q]_1 pairs even against even at an odd slot, so it vanishes.
  CHECK(std::abs(lin.value) < 1e-9);
  Series oh = g.omega.truncated(4);
  FinitePartResult quad =
      finite_part(g.boundary, scale(mul(oh, oh), Coeff(0.5)), g.q, 2, 0, 2, nullptr, 0.0);
  CHECK(quad.value == 0.0);
}

TEST_CASE("input and configuration guards") {
  BoundaryManifold b = BoundaryManifold::curve(circle_pts(64, 1.0));
  Series ok = Series::constant(Coeff(1.0), 5, 2, true);
  Series shallow = Series::constant(Coeff(1.0), 3, 2, true);
  TailProvider zero;
  zero.tail = [](double) { return 0.0; };
  CHECK_THROWS(finite_part(b, shallow, ok, 2, 0, 1, nullptr, 0.0));
  CHECK_THROWS(finite_part(b, ok, ok, 2, 3, 1, nullptr, 0.0));
  CHECK_THROWS(finite_part(b, ok, ok, 2, -1, 1, nullptr, 0.0));
  CHECK_THROWS(finite_part(b, ok, ok, 2, 0, 0, nullptr, 0.1));   // no tail
  CHECK_THROWS(finite_part(b, ok, ok, 2, 0, 0, &zero, 0.0));     // bad delta
  Series logged = ok;
  logged.set_coeff(1, true, Coeff(1.0));
  CHECK_THROWS(finite_part(b, logged, ok, 2, 0, 1, nullptr, 0.0));

  HadamardOptions narrow;
  narrow.eps_hi = 1e-1;
  narrow.eps_lo = 1e-1 * (1.0 - 1e-7);
  CHECK_THROWS(hadamard_rv([](double e) { return 1.0 / e; }, 2, narrow));
  HadamardOptions short_ladder;
  short_ladder.points = 5;
  CHECK_THROWS(hadamard_rv([](double e) { return 1.0 / e; }, 2, short_ladder));
}

TEST_CASE("tail error estimates flow into the report") {
  GraphExpansion g = hemisphere_graph(1.0, 2, 8);
  TailProvider t = hemisphere_tail(1.0, 2);
  t.tail_abs_err = 3e-11;
  FinitePartResult r = riesz_rv(g, t, 0.1);
  CHECK(r.tail_error == 3e-11);
  CHECK(r.delta == 0.1);
}

TEST_CASE("reports serialize deterministically") {
  GraphExpansion g = hemisphere_graph(1.0, 2, 8);
  FinitePartResult r = riesz_rv(g, hemisphere_tail(1.0, 2), 0.1);
  std::string a = finite_part_to_json(r);
  std::string bj = finite_part_to_json(riesz_rv(g, hemisphere_tail(1.0, 2), 0.1));
  CHECK(a == bj);
  CHECK(a.find("\"method\": \"riesz\"") != std::string::npos);
  CHECK(a.find("pole_ledger") != std::string::npos);

  EquivalenceReport rep = check_equivalence(g, hemisphere_tail(1.0, 2));
  std::string e = equivalence_to_json(rep);
  CHECK(e.find("\"pass\": true") != std::string::npos);

  FinitePartResult h = hadamard_rv(hemisphere_tail(1.0, 2).tail, 2);
  std::string hj = finite_part_to_json(h);
  CHECK(hj.find("\"method\": \"hadamard\"") != std::string::npos);
  CHECK(hj.find("basis") != std::string::npos);
}
