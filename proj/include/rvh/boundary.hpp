#pragma once

#include "rvh/phg.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rvh {

enum class BoundaryMode { Curve, RoundSphere };
enum class DerivStencil { Spectral, Central4 };

// Components of a section of the boundary normal bundle, one Coeff per
// frame direction (a single scalar entry in RoundSphere mode).
using NormalField = std::vector<Coeff>;

/* Discretized boundary geometry. Curve mode holds a closed curve in R^n
 * resampled to uniform arclength with a rotation-minimizing normal frame;
 * RoundSphere mode represents S^{n-1}_R in R^n by symmetry, with every
 * sampled function reduced to a single scalar.
 *
 * Sign convention: normals point outward. A circle of radius R has mean
 * curvature -1/R on the outward component, and S^{n-1}_R has -(n-1)/R.
 */
class BoundaryManifold {
public:
  BoundaryManifold() = default;  // empty placeholder; build via the factories
  static BoundaryManifold curve(const Eigen::MatrixXd& samples, int P = 0,
                                DerivStencil stencil = DerivStencil::Spectral);
  static BoundaryManifold round_sphere(double R, int n);

  BoundaryMode mode() const { return mode_; }
  bool is_sphere() const { return mode_ == BoundaryMode::RoundSphere; }
  int ambient_dim() const { return n_; }    // dimension of the flat boundary R^n
  int normal_rank() const { return is_sphere() ? 1 : n_ - 1; }
  int sample_count() const { return is_sphere() ? 1 : P_; }

  double length() const;                    // curve length, or sphere volume
  double radius() const;                    // RoundSphere only

  // Quadrature with the stored weights; scalars integrate as constants.
  double integrate(const Coeff& f) const;
  double l2_inner(const Coeff& f, const Coeff& g) const;

  // Tangential derivative of a sampled function (zero for scalars).
  Eigen::ArrayXd d_s(const Eigen::ArrayXd& f) const;
  Coeff d_s(const Coeff& f) const;

  // Mean curvature components in the stored normal frame.
  NormalField mean_curvature() const;

  const Eigen::MatrixXd& points() const;
  const Eigen::MatrixXd& tangent() const;
  const Eigen::MatrixXd& normal(int i) const;
  Eigen::ArrayXd curvature_component(int i) const;

  std::string report_json() const;

private:
  BoundaryMode mode_ = BoundaryMode::Curve;
  int n_ = 2;
  int P_ = 0;
  double length_ = 0.0;          // curve circumference
  double R_ = 1.0;               // sphere radius
  Eigen::MatrixXd pts_;          // P x n
  Eigen::MatrixXd tan_;          // P x n
  std::vector<Eigen::MatrixXd> frame_;  // n-1 matrices, each P x n
  Eigen::MatrixXd kappa_;        // P x (n-1), curvature in the frame
  Eigen::MatrixXd dmat_;         // P x P tangential derivative (FinDiff)
  bool spectral_ = true;
  Eigen::MatrixXcd dft_;         // P x P analysis, spectral stencil only
  Eigen::MatrixXcd dsyn_;        // P x P derivative synthesis
};

// Termwise tangential derivative of every series coefficient.
Series d_s(const Series& a, const BoundaryManifold& b);

}  // namespace rvh
