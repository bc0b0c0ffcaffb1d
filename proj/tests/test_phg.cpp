#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rvh/phg.hpp"

#include <cmath>
#include <random>

using namespace rvh;

namespace {

// Largest coefficient difference between two series over the shared order.
double max_diff(const Series& a, const Series& b) {
  int N = std::min(a.order(), b.order());
  double mx = 0.0;
  for (int k = 0; k <= N; ++k)
    for (bool lg : {false, true})
      mx = std::max(mx, (a.coeff(k, lg) - b.coeff(k, lg)).max_abs());
  return mx;
}

Series random_series(std::mt19937& rng, int order, int m, bool grid_mode,
                     bool positive_leading, int P = 16) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Series s(order, m, false);
  for (int k = 0; k <= order; ++k) {
    if (grid_mode) {
      Eigen::ArrayXd g(P);
      for (int i = 0; i < P; ++i) g[i] = U(rng);
      s.set_coeff(k, false, Coeff(g));
    } else {
      s.set_coeff(k, false, Coeff(U(rng)));
    }
  }
  if (positive_leading) s.set_coeff(0, false, Coeff(2.0));
  return s;
}

}  // namespace

TEST_CASE("add: additive inverse and disjoint supports") {
  Series a = Series::monomial(1.0, 2, false, 4, 2, false);
  Series na = Series::monomial(-1.0, 2, false, 4, 2, false);
  CHECK(add(a, na).empty());

  Series one_x2(4, 2, false);
  one_x2.set_coeff(0, false, 1.0);
  one_x2.set_coeff(2, false, 1.0);
  Series x3 = Series::monomial(1.0, 3, false, 4, 2, false);
  Series s = add(one_x2, x3);
  CHECK(s.coeff(0).scalar() == 1.0);
  CHECK(s.coeff(2).scalar() == 1.0);
  CHECK(s.coeff(3).scalar() == 1.0);
  CHECK(s.coeff(1).max_abs() == 0.0);
}

TEST_CASE("add: grid coefficients sum pointwise") {
  const int P = 64;
  Eigen::ArrayXd ga(P), gb(P);
  for (int i = 0; i < P; ++i) {
    double s = 2.0 * M_PI * i / P;
    ga[i] = std::sin(s);
    gb[i] = std::cos(2.0 * s);
  }
  Series a = Series::monomial(Coeff(ga), 1, false, 3, 2, false);
  Series b = Series::monomial(Coeff(gb), 1, false, 3, 2, false);
  Series s = add(a, b);
  const Eigen::ArrayXd& g = s.coeff(1).grid();
  for (int i = 0; i < P; ++i) CHECK(g[i] == ga[i] + gb[i]);
}

TEST_CASE("add/mul: grid length mismatch is an error") {
  Series a = Series::monomial(Coeff(Eigen::ArrayXd::Ones(8)), 0, false, 2, 2, false);
  Series b = Series::monomial(Coeff(Eigen::ArrayXd::Ones(9)), 0, false, 2, 2, false);
  CHECK_THROWS(add(a, b));
  CHECK_THROWS(mul(a, b));
}

TEST_CASE("mul: truncation and simple products") {
  Series a(4, 2, false), b(4, 2, false);
  a.set_coeff(0, false, 1.0);
  a.set_coeff(2, false, 1.0);
  b.set_coeff(0, false, 1.0);
  b.set_coeff(2, false, -1.0);
  Series p = mul(a, b);
  CHECK(p.order() == 4);
  CHECK(p.coeff(0).scalar() == 1.0);
  CHECK(p.coeff(2).max_abs() == 0.0);
  CHECK(p.coeff(4).scalar() == -1.0);

  // exponents and log powers add
  Series xm_log = Series::monomial(1.0, 2, true, 5, 2, true);
  Series x1 = Series::monomial(1.0, 1, false, 5, 2, true);
  Series q = mul(xm_log, x1);
  CHECK(q.coeff(3, true).scalar() == 1.0);
  CHECK(q.coeff(3, false).max_abs() == 0.0);

  // result order is the min of the operand orders, never higher
  Series wide(7, 2, false);
  wide.set_coeff(0, false, 1.0);
  Series narrow(3, 2, false);
  narrow.set_coeff(0, false, 1.0);
  CHECK(mul(wide, narrow).order() == 3);
  CHECK(add(wide, narrow).order() == 3);
}

TEST_CASE("mul: log-bearing product against frozen oracle") {
  // (1 + x^2/2 + 2 x^3 log x - x^4)(2 - x + 3 x^2 log x + x^4/4) at N=4
  Series A(4, 2, true), B(4, 2, true);
  A.set_coeff(0, false, 1.0);
  A.set_coeff(2, false, 0.5);
  A.set_coeff(3, true, 2.0);
  A.set_coeff(4, false, -1.0);
  B.set_coeff(0, false, 2.0);
  B.set_coeff(1, false, -1.0);
  B.set_coeff(2, true, 3.0);
  B.set_coeff(4, false, 0.25);
  Series P = mul(A, B);
  CHECK(P.coeff(0, false).scalar() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(P.coeff(1, false).scalar() == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(P.coeff(2, false).scalar() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(P.coeff(2, true).scalar() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(P.coeff(3, false).scalar() == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(P.coeff(3, true).scalar() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(P.coeff(4, false).scalar() == doctest::Approx(-1.75).epsilon(1e-14));
  CHECK(P.coeff(4, true).scalar() == doctest::Approx(-0.5).epsilon(1e-14));

  // the same factors tracked one order further put 6 x^5 log^2 x in range
  Series A5 = Series(5, 2, true), B5 = Series(5, 2, true);
  for (const auto& [key, c] : A.terms()) A5.set_coeff(key.first, key.second == 1, c);
  for (const auto& [key, c] : B.terms()) B5.set_coeff(key.first, key.second == 1, c);
  CHECK_THROWS_WITH_AS(mul(A5, B5), doctest::Contains("log^2"), std::runtime_error);
}

TEST_CASE("invert: geometric series and frozen oracle") {
  Series a(4, 2, false);
  a.set_coeff(0, false, 1.0);
  a.set_coeff(2, false, 1.0);
  Series inv = invert(a);
  CHECK(inv.coeff(0).scalar() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(inv.coeff(2).scalar() == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(inv.coeff(4).scalar() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(inv.coeff(1).max_abs() == 0.0);
  CHECK(inv.coeff(3).max_abs() == 0.0);

  // 1/(1 + 0.7x - 0.3x^2 + 0.2x^3 - 0.05x^4) through x^6
  Series b(6, 2, false);
  b.set_coeff(0, false, 1.0);
  b.set_coeff(1, false, 0.7);
  b.set_coeff(2, false, -0.3);
  b.set_coeff(3, false, 0.2);
  b.set_coeff(4, false, -0.05);
  Series ib = invert(b);
  const double oracle[] = {1.0, -0.7, 0.79, -0.963, 1.1011, -1.25267, 1.439299};
  for (int k = 0; k <= 6; ++k)
    CHECK(ib.coeff(k).scalar() == doctest::Approx(oracle[k]).epsilon(1e-13));

  Series bad(2, 2, false);
  bad.set_coeff(0, false, -1.0);
  CHECK_THROWS(invert(bad));
  Series zero_lead(2, 2, false);
  zero_lead.set_coeff(1, false, 1.0);
  CHECK_THROWS(invert(zero_lead));
}

TEST_CASE("sqrt: Taylor oracles") {
  Series one = Series::constant(1.0, 4, 2, false);
  CHECK(max_diff(sqrt_series(one), one) == 0.0);

  // sqrt(1 - x^2) = 1 - x^2/2 - x^4/8 - x^6/16 + ...
  Series a(6, 2, false);
  a.set_coeff(0, false, 1.0);
  a.set_coeff(2, false, -1.0);
  Series r = sqrt_series(a);
  CHECK(r.coeff(0).scalar() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.coeff(2).scalar() == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(r.coeff(4).scalar() == doctest::Approx(-0.125).epsilon(1e-14));
  CHECK(r.coeff(6).scalar() == doctest::Approx(-0.0625).epsilon(1e-14));

  // sqrt(1 + 0.7x - 0.3x^2 + 0.2x^3 - 0.05x^4) through x^6
  Series b(6, 2, false);
  b.set_coeff(0, false, 1.0);
  b.set_coeff(1, false, 0.7);
  b.set_coeff(2, false, -0.3);
  b.set_coeff(3, false, 0.2);
  b.set_coeff(4, false, -0.05);
  Series rb = sqrt_series(b);
  const double oracle[] = {1.0, 0.35, -0.21125, 0.1739375, -0.10819140625,
                           0.0746112890625, -0.0640965126953125};
  for (int k = 0; k <= 6; ++k)
    CHECK(rb.coeff(k).scalar() == doctest::Approx(oracle[k]).epsilon(1e-13));
}

TEST_CASE("ring laws on random series") {
  std::mt19937 rng(20260816);
  for (int trial = 0; trial < 20; ++trial) {
    bool grids = trial % 2 == 1;
    Series a = random_series(rng, 6, 2, grids, false);
    Series b = random_series(rng, 6, 2, grids, false);
    Series c = random_series(rng, 6, 2, grids, false);
    CHECK(max_diff(add(a, b), add(b, a)) == 0.0);
    CHECK(max_diff(mul(a, b), mul(b, a)) < 1e-12);
    CHECK(max_diff(mul(mul(a, b), c), mul(a, mul(b, c))) < 1e-12);
    CHECK(max_diff(mul(add(a, b), c), add(mul(a, c), mul(b, c))) < 1e-12);
  }
}

TEST_CASE("invert and sqrt round trips on random positive-leading series") {
  std::mt19937 rng(7);
  Series one = Series::constant(1.0, 6, 2, false);
  for (int trial = 0; trial < 20; ++trial) {
    Series a = random_series(rng, 6, 2, trial % 2 == 1, true);
    CHECK(max_diff(mul(a, invert(a)), one) < 1e-10);
    Series r = sqrt_series(a);
    CHECK(max_diff(mul(r, r), a) < 1e-10);
  }
}

TEST_CASE("x_dx") {
  Series x3 = Series::monomial(2.0, 3, false, 5, 2, false);
  CHECK(x_dx(x3).coeff(3).scalar() == 6.0);

  Series xl = Series::monomial(1.0, 3, true, 5, 3, true);
  Series d = x_dx(xl);
  CHECK(d.coeff(3, true).scalar() == 3.0);
  CHECK(d.coeff(3, false).scalar() == 1.0);

  Series cst = Series::constant(4.0, 3, 2, false);
  CHECK(x_dx(cst).empty());

  // Leibniz rule and support preservation
  std::mt19937 rng(11);
  Series a = random_series(rng, 5, 2, false, false);
  Series b = random_series(rng, 5, 2, false, false);
  Series lhs = x_dx(mul(a, b));
  Series rhs = add(mul(x_dx(a), b), mul(a, x_dx(b)));
  CHECK(max_diff(lhs, rhs) < 1e-12);
  Series da = x_dx(a);
  for (const auto& [key, cc] : da.terms()) CHECK(a.coeff(key.first, false).max_abs() > 0.0);
}

TEST_CASE("coeff access") {
  Series s(3, 2, false);
  s.set_coeff(2, false, 3.0);
  CHECK(s.coeff(2).scalar() == 3.0);
  CHECK(s.coeff(1).max_abs() == 0.0);
  CHECK_THROWS(s.coeff(4));
  CHECK_THROWS(s.set_coeff(4, false, 1.0));

  Series ml = Series::monomial(1.0, 2, true, 4, 2, true);
  CHECK(ml.coeff(2, true).scalar() == 1.0);
}

TEST_CASE("parity: codim >= 2 spec cases at m = 4") {
  Series even(6, 4, false);
  even.set_coeff(2, false, 1.0);
  even.set_coeff(4, false, 1.0);
  CHECK(parity(even) == Parity::Even);

  Series odd(6, 4, false);
  odd.set_coeff(1, false, 1.0);
  odd.set_coeff(3, false, 1.0);
  CHECK(parity(odd) == Parity::Odd);

  Series mixed(6, 4, false);
  mixed.set_coeff(2, false, 1.0);
  mixed.set_coeff(3, false, 1.0);
  CHECK(parity(mixed) == Parity::Undefined);

  // terms above the threshold do not matter
  Series tail(6, 4, false);
  tail.set_coeff(2, false, 1.0);
  tail.set_coeff(5, false, 100.0);
  CHECK(parity(tail) == Parity::Even);

  // vanishing through the threshold is the zero class
  Series high = Series::monomial(1.0, 5, false, 6, 4, false);
  CHECK(parity(high) == Parity::Zero);

  // any log through the threshold leaves the classification
  Series logged(6, 4, false);
  logged.set_coeff(2, false, 1.0);
  logged.set_coeff(4, true, 1.0);
  CHECK(parity(logged) == Parity::Undefined);
}

TEST_CASE("parity: codim-1 log slots") {
  // m even: a log is tolerated only at exactly x^m
  Series a(6, 4, true);
  a.set_coeff(0, false, 1.0);
  a.set_coeff(2, false, 0.5);
  a.set_coeff(4, true, 2.0);
  CHECK(parity(a) == Parity::Even);
  a.set_coeff(2, true, 1e-3);
  CHECK(parity(a) == Parity::Undefined);

  // m odd: threshold sits at m+1 and the slot is x^{m+1} log x
  Series b(6, 3, true);
  b.set_coeff(1, false, 1.0);
  b.set_coeff(3, false, -0.25);
  CHECK(parity(b) == Parity::Odd);
  b.set_coeff(4, true, 1.0);  // slot content has even exponent parity
  CHECK(parity(b) == Parity::Undefined);

  Series c(6, 3, true);
  c.set_coeff(2, false, 1.0);
  c.set_coeff(4, true, 0.5);
  CHECK(parity(c) == Parity::Even);
}

TEST_CASE("parity: relative tolerance") {
  Series s(4, 2, false);
  s.set_coeff(2, false, 1.0);
  s.set_coeff(1, false, 1e-12);  // noise far below 1e-9 * max
  CHECK(parity(s) == Parity::Even);
  s.set_coeff(1, false, 1e-6);
  CHECK(parity(s) == Parity::Undefined);
}

TEST_CASE("parity is multiplicative") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto make = [&](int par) {
    Series s(8, 4, false);
    for (int k = par; k <= 8; k += 2) s.set_coeff(k, false, U(rng));
    return s;
  };
  for (int trial = 0; trial < 10; ++trial) {
    Series e1 = make(0), e2 = make(0), o1 = make(1), o2 = make(1);
    CHECK(parity(mul(e1, e2)) == Parity::Even);
    CHECK(parity(mul(o1, o2)) == Parity::Even);
    CHECK(parity(mul(e1, o1)) == Parity::Odd);
    CHECK(parity(mul(o2, e2)) == Parity::Odd);
  }
}

TEST_CASE("evaluate") {
  Series s(3, 2, false);
  s.set_coeff(0, false, 1.0);
  s.set_coeff(2, false, 3.0);
  CHECK(s.evaluate(0.5).scalar() == doctest::Approx(1.75).epsilon(1e-14));
  CHECK(s.evaluate(0.0).scalar() == 1.0);

  Series lg = Series::monomial(1.0, 2, true, 3, 2, true);
  double x = 0.3;
  CHECK(lg.evaluate(x).scalar() == doctest::Approx(x * x * std::log(x)).epsilon(1e-14));
  CHECK(lg.evaluate(0.0).max_abs() == 0.0);
}

TEST_CASE("shifted") {
  Series s = Series::monomial(2.0, 1, true, 3, 2, true);
  Series up = s.shifted(2);
  CHECK(up.order() == 5);
  CHECK(up.coeff(3, true).scalar() == 2.0);
  Series down = up.shifted(-3);
  CHECK(down.coeff(0, true).scalar() == 2.0);
  CHECK_THROWS(s.shifted(-2));
}

TEST_CASE("JSON round trip is exact and deterministic") {
  Series s(4, 3, true);
  s.set_coeff(0, false, 1.0);
  s.set_coeff(1, false, -0.123456789012345);
  s.set_coeff(4, true, 0.25);
  Eigen::ArrayXd g(3);
  g << 1.5, -2.5, 1e-7;
  s.set_coeff(2, false, Coeff(g));

  std::string j1 = to_json(s);
  Series back = series_from_json(j1);
  CHECK(back.order() == 4);
  CHECK(back.m() == 3);
  CHECK(back.codim1());
  CHECK(max_diff(back, s) == 0.0);
  CHECK(back.coeff(2).grid().size() == 3);
  CHECK(to_json(back) == j1);

  CHECK_THROWS(series_from_json("{\"order\": 2}"));
}
