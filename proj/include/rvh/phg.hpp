#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace rvh {

// Coefficient of one series term: either a real scalar or a function on the
// boundary sampled at P grid points. Scalars broadcast against grids.
class Coeff {
public:
  Coeff() : v_(0.0) {}
  Coeff(double v) : v_(v) {}
  explicit Coeff(Eigen::ArrayXd g) : v_(std::move(g)) {}

  bool is_scalar() const { return std::holds_alternative<double>(v_); }
  bool is_grid() const { return !is_scalar(); }
  double scalar() const;
  const Eigen::ArrayXd& grid() const&;
  Eigen::ArrayXd grid() &&;  // rvalue access hands back an owned array
  Eigen::Index size() const { return is_scalar() ? 1 : grid().size(); }
  Eigen::ArrayXd as_grid(Eigen::Index P) const;

  double max_abs() const;
  bool is_zero() const { return max_abs() == 0.0; }
  bool all_positive() const;
  bool finite() const;

  Coeff cwise_invert() const;
  Coeff cwise_sqrt() const;

  friend Coeff operator+(const Coeff& a, const Coeff& b);
  friend Coeff operator-(const Coeff& a, const Coeff& b);
  friend Coeff operator*(const Coeff& a, const Coeff& b);
  friend Coeff operator-(const Coeff& a);
  Coeff& operator+=(const Coeff& b) { *this = *this + b; return *this; }
  Coeff& operator-=(const Coeff& b) { *this = *this - b; return *this; }

private:
  std::variant<double, Eigen::ArrayXd> v_;
};

enum class Parity { Zero = 0, Even = 1, Odd = -1, Undefined = 2 };

// Truncated polyhomogeneous series sum_{k<=N} (c_k + c*_k log x) x^k.
// Log powers are capped at one; producing log^2 inside the tracked range
// is an error. The dimension tag m and the codim-1 flag select which
// parity classification applies; they are metadata and propagate from the
// left operand through arithmetic.
class Series {
public:
  Series() = default;
  Series(int order, int m, bool codim1) : order_(order), m_(m), codim1_(codim1) {
    if (order < 0) throw std::invalid_argument("series order must be nonnegative");
  }

  static Series constant(const Coeff& c, int order, int m, bool codim1);
  static Series monomial(const Coeff& c, int k, bool log_term, int order, int m, bool codim1);

  int order() const { return order_; }
  int m() const { return m_; }
  bool codim1() const { return codim1_; }

  // Lowest exponent carrying a nonzero coefficient; order()+1 when empty.
  int lowest() const;
  bool empty() const { return terms_.empty(); }
  double max_abs() const;

  const std::map<std::pair<int, int>, Coeff>& terms() const { return terms_; }

  Coeff coeff(int k, bool log_term = false) const;
  void set_coeff(int k, bool log_term, const Coeff& c);
  void add_to_coeff(int k, bool log_term, const Coeff& c);

  // Restrict the truncation order (never raises it silently).
  Series truncated(int new_order) const;
  Series with_tags(int m, bool codim1) const;

  // Multiply by x^j; j may be negative when no surviving term would drop
  // below exponent zero.
  Series shifted(int j) const;

  Coeff evaluate(double x) const;

private:
  friend Series add(const Series&, const Series&);
  friend Series sub(const Series&, const Series&);
  friend Series mul(const Series&, const Series&);
  friend Series scale(const Series&, const Coeff&);
  friend Series invert(const Series&);
  friend Series sqrt_series(const Series&);
  friend Series x_dx(const Series&);

  int order_ = 0;
  int m_ = 2;
  bool codim1_ = false;
  std::map<std::pair<int, int>, Coeff> terms_;
};

Series add(const Series& a, const Series& b);
Series sub(const Series& a, const Series& b);
Series mul(const Series& a, const Series& b);
Series scale(const Series& a, const Coeff& c);
Series invert(const Series& a);
Series sqrt_series(const Series& a);
Series x_dx(const Series& a);

// d/dx as a series map: drops the truncation order by one.
Series d_x(const Series& a);

// Termwise map over coefficients (used for tangential derivatives).
template <typename F>
Series map_coeffs(const Series& a, F&& f) {
  Series out(a.order(), a.m(), a.codim1());
  for (const auto& [key, c] : a.terms()) out.set_coeff(key.first, key.second == 1, f(c));
  return out;
}

Parity parity(const Series& a, double tol = 1e-9);
const char* parity_name(Parity p);

std::string to_json(const Series& a);
Series series_from_json(const std::string& text);

}  // namespace rvh
