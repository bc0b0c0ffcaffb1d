#include "rvh/phg.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace rvh {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

Coeff checked(Coeff c, const char* what) {
  if (!c.finite()) throw std::runtime_error(std::string(what) + " produced a non-finite coefficient");
  return c;
}

}  // namespace

double Coeff::scalar() const {
  if (!is_scalar()) throw std::runtime_error("coefficient is a grid, not a scalar");
  return std::get<double>(v_);
}

const Eigen::ArrayXd& Coeff::grid() const& {
  if (is_scalar()) throw std::runtime_error("coefficient is a scalar, not a grid");
  return std::get<Eigen::ArrayXd>(v_);
}

Eigen::ArrayXd Coeff::grid() && {
  if (is_scalar()) throw std::runtime_error("coefficient is a scalar, not a grid");
  return std::move(std::get<Eigen::ArrayXd>(v_));
}

Eigen::ArrayXd Coeff::as_grid(Eigen::Index P) const {
  if (is_scalar()) return Eigen::ArrayXd::Constant(P, scalar());
  if (grid().size() != P) throw std::runtime_error("grid coefficient has wrong number of samples");
  return grid();
}

double Coeff::max_abs() const {
  if (is_scalar()) return std::abs(scalar());
  return grid().size() == 0 ? 0.0 : grid().abs().maxCoeff();
}

bool Coeff::all_positive() const {
  if (is_scalar()) return scalar() > 0.0;
  return (grid() > 0.0).all();
}

bool Coeff::finite() const {
  if (is_scalar()) return std::isfinite(scalar());
  return grid().isFinite().all();
}

Coeff Coeff::cwise_invert() const {
  if (is_scalar()) return Coeff(1.0 / scalar());
  return Coeff(Eigen::ArrayXd(grid().inverse()));
}

Coeff Coeff::cwise_sqrt() const {
  if (is_scalar()) return Coeff(std::sqrt(scalar()));
  return Coeff(Eigen::ArrayXd(grid().sqrt()));
}

namespace {

template <typename Op>
Coeff binary(const Coeff& a, const Coeff& b, Op op, const char* what) {
  Coeff out;
  if (a.is_scalar() && b.is_scalar()) {
    out = Coeff(op(a.scalar(), b.scalar()));
  } else {
    Eigen::Index P = a.is_grid() ? a.grid().size() : b.grid().size();
    if (a.is_grid() && b.is_grid() && a.grid().size() != b.grid().size())
      throw std::runtime_error("grid coefficients have mismatched sample counts");
    Eigen::ArrayXd ga = a.as_grid(P), gb = b.as_grid(P);
    out = Coeff(Eigen::ArrayXd(op(ga, gb)));
  }
  return checked(std::move(out), what);
}

}  // namespace

Coeff operator+(const Coeff& a, const Coeff& b) {
  return binary(a, b, [](const auto& x, const auto& y) { return x + y; }, "add");
}
Coeff operator-(const Coeff& a, const Coeff& b) {
  return binary(a, b, [](const auto& x, const auto& y) { return x - y; }, "sub");
}
Coeff operator*(const Coeff& a, const Coeff& b) {
  return binary(a, b, [](const auto& x, const auto& y) { return x * y; }, "mul");
}
Coeff operator-(const Coeff& a) { return Coeff(-1.0) * a; }

Series Series::constant(const Coeff& c, int order, int m, bool codim1) {
  Series s(order, m, codim1);
  s.set_coeff(0, false, c);
  return s;
}

Series Series::monomial(const Coeff& c, int k, bool log_term, int order, int m, bool codim1) {
  Series s(order, m, codim1);
  s.set_coeff(k, log_term, c);
  return s;
}

int Series::lowest() const {
  int lo = order_ + 1;
  for (const auto& [key, c] : terms_) lo = std::min(lo, key.first);
  return lo;
}

double Series::max_abs() const {
  double mx = 0.0;
  for (const auto& [key, c] : terms_) mx = std::max(mx, c.max_abs());
  return mx;
}

Coeff Series::coeff(int k, bool log_term) const {
  if (k < 0) throw std::invalid_argument("negative exponent");
  if (k > order_)
    throw std::invalid_argument("coefficient at order " + std::to_string(k) +
                                " requested from a series tracked through order " + std::to_string(order_));
  auto it = terms_.find({k, log_term ? 1 : 0});
  return it == terms_.end() ? Coeff(0.0) : it->second;
}

void Series::set_coeff(int k, bool log_term, const Coeff& c) {
  if (k < 0) throw std::invalid_argument("negative exponent");
  if (k > order_)
    throw std::invalid_argument("cannot set coefficient beyond the tracked order");
  if (!c.finite()) throw std::runtime_error("non-finite coefficient");
  if (c.max_abs() == 0.0)
    terms_.erase({k, log_term ? 1 : 0});
  else
    terms_[{k, log_term ? 1 : 0}] = c;
}

void Series::add_to_coeff(int k, bool log_term, const Coeff& c) {
  set_coeff(k, log_term, coeff(k, log_term) + c);
}

Series Series::truncated(int new_order) const {
  if (new_order > order_)
    throw std::invalid_argument("truncation cannot raise the tracked order");
  Series out(new_order, m_, codim1_);
  for (const auto& [key, c] : terms_)
    if (key.first <= new_order) out.terms_[key] = c;
  return out;
}

Series Series::with_tags(int m, bool codim1) const {
  Series out = *this;
  out.m_ = m;
  out.codim1_ = codim1;
  return out;
}

Series Series::shifted(int j) const {
  Series out(order_ + j, m_, codim1_);
  for (const auto& [key, c] : terms_) {
    if (key.first + j < 0)
      throw std::runtime_error("shift would create a negative exponent");
    out.terms_[{key.first + j, key.second}] = c;
  }
  return out;
}

Coeff Series::evaluate(double x) const {
  if (x < 0.0) throw std::invalid_argument("series evaluated at negative x");
  Coeff acc(0.0);
  for (const auto& [key, c] : terms_) {
    double w;
    if (x == 0.0) {
      if (key.first == 0 && key.second == 1)
        throw std::runtime_error("log term at order zero cannot be evaluated at x = 0");
      w = (key.first == 0 && key.second == 0) ? 1.0 : 0.0;
    } else {
      w = std::pow(x, key.first) * (key.second == 1 ? std::log(x) : 1.0);
    }
    if (w != 0.0) acc += Coeff(w) * c;
  }
  return acc;
}

Series add(const Series& a, const Series& b) {
  Series out(std::min(a.order_, b.order_), a.m_, a.codim1_);
  for (const auto& [key, c] : a.terms_)
    if (key.first <= out.order_) out.terms_[key] = c;
  for (const auto& [key, c] : b.terms_)
    if (key.first <= out.order_) out.set_coeff(key.first, key.second == 1, out.coeff(key.first, key.second == 1) + c);
  return out;
}

Series sub(const Series& a, const Series& b) {
  return add(a, scale(b, Coeff(-1.0)));
}

Series mul(const Series& a, const Series& b) {
  Series out(std::min(a.order_, b.order_), a.m_, a.codim1_);
  for (const auto& [ka, ca] : a.terms_) {
    for (const auto& [kb, cb] : b.terms_) {
      int k = ka.first + kb.first;
      if (k > out.order_) continue;
      int t = ka.second + kb.second;
      Coeff prod = ca * cb;
      if (t >= 2) {
        if (prod.max_abs() > 0.0)
          throw std::runtime_error("product has a log^2 term at order " + std::to_string(k) +
                                   ", inside the tracked range");
        continue;
      }
      out.set_coeff(k, t == 1, out.coeff(k, t == 1) + prod);
    }
  }
  return out;
}

Series scale(const Series& a, const Coeff& c) {
  Series out(a.order_, a.m_, a.codim1_);
  for (const auto& [key, ca] : a.terms_) out.set_coeff(key.first, key.second == 1, ca * c);
  return out;
}

/* Triangular solve for b with a*b = 1. The constant term of a must be
 * strictly positive pointwise and free of a log factor; coefficients of b
 * at order k depend only on orders below k. */
Series invert(const Series& a) {
  require(a.coeff(0, true).max_abs() == 0.0, "invert: log term at order zero");
  Coeff a0 = a.coeff(0, false);
  require(a0.max_abs() > 0.0 && a0.all_positive(), "invert: constant term must be strictly positive");
  Coeff inv0 = checked(a0.cwise_invert(), "invert");

  Series b(a.order_, a.m_, a.codim1_);
  b.set_coeff(0, false, inv0);
  for (int k = 1; k <= a.order_; ++k) {
    for (int t : {1, 0}) {
      // [a*b]_{k,t} = 0: isolate the a0 * b_{k,t} term.
      Coeff rhs(0.0);
      for (const auto& [ka, ca] : a.terms_) {
        int j = k - ka.first;
        if (j < 0 || (ka.first == 0 && ka.second == 0)) continue;
        for (int u : {0, 1}) {
          int tt = ka.second + u;
          Coeff bj = b.coeff(j, u == 1);
          if (bj.max_abs() == 0.0) continue;
          if (tt >= 2) {
            if ((ca * bj).max_abs() > 0.0)
              throw std::runtime_error("invert: log^2 term inside the tracked range");
            continue;
          }
          if (tt == t) rhs += ca * bj;
        }
      }
      Coeff val = checked(-rhs * inv0, "invert");
      b.set_coeff(k, t == 1, val);
    }
  }
  return b;
}

/* Triangular solve for b with b*b = a; the constant term of a must be
 * strictly positive pointwise. */
Series sqrt_series(const Series& a) {
  require(a.coeff(0, true).max_abs() == 0.0, "sqrt: log term at order zero");
  Coeff a0 = a.coeff(0, false);
  require(a0.max_abs() > 0.0 && a0.all_positive(), "sqrt: constant term must be strictly positive");
  Coeff b0 = checked(a0.cwise_sqrt(), "sqrt");
  Coeff half_inv_b0 = checked(Coeff(0.5) * b0.cwise_invert(), "sqrt");

  Series b(a.order_, a.m_, a.codim1_);
  b.set_coeff(0, false, b0);
  for (int k = 1; k <= a.order_; ++k) {
    for (int t : {1, 0}) {
      // [b*b]_{k,t} = a_{k,t}: the unknown appears as 2 b0 b_{k,t}, and the
      // rest is an ordered sum over interior pairs already solved.
      Coeff rhs(0.0);
      for (int i = 1; i <= k - 1; ++i) {
        int j = k - i;
        for (int s : {0, 1}) {
          Coeff bi = b.coeff(i, s == 1);
          if (bi.max_abs() == 0.0) continue;
          for (int u : {0, 1}) {
            Coeff bj = b.coeff(j, u == 1);
            if (bj.max_abs() == 0.0) continue;
            if (s + u >= 2)
              throw std::runtime_error("sqrt: log^2 term inside the tracked range");
            if (s + u == t) rhs += bi * bj;
          }
        }
      }
      Coeff val = checked((a.coeff(k, t == 1) - rhs) * half_inv_b0, "sqrt");
      b.set_coeff(k, t == 1, val);
    }
  }
  return b;
}

Series x_dx(const Series& a) {
  Series out(a.order_, a.m_, a.codim1_);
  for (const auto& [key, c] : a.terms_) {
    out.add_to_coeff(key.first, key.second == 1, Coeff(double(key.first)) * c);
    if (key.second == 1) out.add_to_coeff(key.first, false, c);
  }
  return out;
}

Series d_x(const Series& a) {
  if (a.order() == 0) throw std::invalid_argument("cannot differentiate a series tracked only at order zero");
  Series out(a.order() - 1, a.m(), a.codim1());
  for (const auto& [key, c] : a.terms()) {
    if (key.first == 0 && key.second == 0) continue;
    if (key.first == 0 && key.second == 1)
      throw std::runtime_error("d_x of a log term at order zero leaves the series class");
    if (key.first - 1 <= out.order()) {
      out.add_to_coeff(key.first - 1, key.second == 1, Coeff(double(key.first)) * c);
      if (key.second == 1) out.add_to_coeff(key.first - 1, false, c);
    }
  }
  return out;
}

/* Parity of a series against the threshold set by its dimension tags.
 *
 *   codim >= 2:          threshold m,    no log slot allowed through m
 *   codim 1, m even:     threshold m,    log slot allowed only at k = m
 *   codim 1, m odd:      threshold m+1,  log slot allowed only at k = m+1
 *
 * An allowed log slot contributes the parity of its exponent (always even).
 * Coefficients are compared against tol times the largest coefficient
 * magnitude anywhere in the series.
 */
Parity parity(const Series& a, double tol) {
  int T = a.codim1() ? (a.m() % 2 == 0 ? a.m() : a.m() + 1) : a.m();
  int log_slot = a.codim1() ? T : -1;
  if (T > a.order())
    throw std::invalid_argument("series is not tracked through its parity threshold");

  double scale = a.max_abs();
  if (scale == 0.0) return Parity::Zero;
  double cut = tol * scale;

  bool evens = false, odds = false;
  for (const auto& [key, c] : a.terms()) {
    auto [k, t] = key;
    if (k > T || c.max_abs() <= cut) continue;
    if (t == 1 && k != log_slot) return Parity::Undefined;
    (k % 2 == 0 ? evens : odds) = true;
  }
  if (evens && odds) return Parity::Undefined;
  if (!evens && !odds) return Parity::Zero;
  return evens ? Parity::Even : Parity::Odd;
}

const char* parity_name(Parity p) {
  switch (p) {
    case Parity::Zero: return "0";
    case Parity::Even: return "+1";
    case Parity::Odd: return "-1";
    default: return "undefined";
  }
}

std::string to_json(const Series& a) {
  nlohmann::ordered_json j;
  j["order"] = a.order();
  j["m"] = a.m();
  j["codim1"] = a.codim1();
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& [key, c] : a.terms()) {
    nlohmann::ordered_json t;
    t["k"] = key.first;
    t["log"] = key.second == 1;
    if (c.is_scalar()) {
      t["coeff"] = c.scalar();
    } else {
      auto arr = nlohmann::ordered_json::array();
      for (Eigen::Index i = 0; i < c.grid().size(); ++i) arr.push_back(c.grid()[i]);
      t["coeff"] = std::move(arr);
    }
    j["terms"].push_back(std::move(t));
  }
  return j.dump(2);
}

Series series_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  require(j.contains("order") && j.contains("m") && j.contains("codim1") && j.contains("terms"),
          "series JSON is missing a required field");
  Series s(j["order"].get<int>(), j["m"].get<int>(), j["codim1"].get<bool>());
  for (const auto& t : j["terms"]) {
    int k = t.at("k").get<int>();
    bool lg = t.at("log").get<bool>();
    const auto& c = t.at("coeff");
    if (c.is_array()) {
      Eigen::ArrayXd g(c.size());
      for (size_t i = 0; i < c.size(); ++i) g[Eigen::Index(i)] = c[i].get<double>();
      s.set_coeff(k, lg, Coeff(std::move(g)));
    } else {
      s.set_coeff(k, lg, Coeff(c.get<double>()));
    }
  }
  return s;
}

}  // namespace rvh
