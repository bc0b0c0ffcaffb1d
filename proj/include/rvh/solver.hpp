#pragma once

#include <limits>
#include <string>
#include <vector>

#include "rvh/expansion.hpp"
#include "rvh/renvol.hpp"

namespace rvh {

/* Mesh and tolerance knobs for the rotational profile solver.  The profile
 * is integrated in three charts: graded x-charts hugging each boundary end
 * between x_floor and x_chart, and an arclength chart through the interior
 * where the graph over the boundary cylinder may degenerate. */
struct MeshConfig {
  double x_floor = 1e-5;        // closest approach to the boundary
  double x_chart = 2e-2;        // height of the chart switch
  double fit_lo = 1e-4;         // coefficient-fit window
  double fit_hi = 2e-2;
  int samples_per_decade = 24;  // graded sampling density near the ends
  double abs_tol = 1e-12;       // adaptive integrator tolerances
  double rel_tol = 1e-12;
  double sigma_step = 1e-4;     // uniform arclength resampling step
  double sigma_cap = 2e-4;      // step-size cap in the arclength chart
  double sigma_max = 60.0;      // runaway guard
};

struct FamilyParams {
  double R = 1.0;        // hemisphere radius, or catenoid scale sqrt(R1 R2)
  int n = 2;             // ambient H^{n+1} for hemispheres and caps (m = n)
  double separation = 0.0;  // catenoid: log(R2 / R1)
  // Catenoid shooting parameter (the inner u_3).  NaN means "solve for the
  // separation"; a number means "integrate this family member directly".
  double neumann = std::numeric_limits<double>::quiet_NaN();
};

/* Asymptotic fit of one boundary end: r(x) ~ radius + sum values[i] x^powers[i]
 * (+ log_coeff x^{m+1} log x for odd m). */
struct CoefficientFit {
  double radius = 0.0;
  std::vector<int> powers;
  std::vector<double> values;
  bool has_log = false;
  double log_coeff = 0.0;
  double condition = 0.0;
  double residual = 0.0;  // rms misfit over the window
  // One-sigma estimates from the fit covariance, aligned with values.
  std::vector<double> std_errors;
  double radius_stderr = 0.0;
  double log_stderr = 0.0;
};

struct BoundaryEnd {
  double radius = 0.0;        // boundary sphere radius (refined by the fit)
  std::vector<double> x, r;   // graded samples in the x-chart
  CoefficientFit fit;
  // Raw fitted x^{m+1} coefficient.  For catenoids fit.values keeps the
  // sharper first-integral value; this records what the window fit saw.
  double neumann_fit = 0.0;
};

struct ProfileSolution {
  std::string family;  // "hemisphere" (= cap) or "catenoid"
  int m = 2;
  double R = 1.0;
  double R1 = 0.0, R2 = 0.0;    // catenoid boundary radii
  double separation = 0.0;
  double neumann_start = 0.0;   // catenoid inner u_3 actually used
  bool converged = false;
  std::string message;
  double residual = 0.0;  // ODE defect of the arclength samples (collocation audit)
  double x_max = 0.0;     // crest height of the profile
  // Conserved momentum of the scaling symmetry, r x^{-2} (r cos a + x sin a).
  // Vanishes on hemispheres; equals 3 R1^2 u3(inner) = -3 R2^2 u3(outer) on
  // catenoids, which pins the cubic coefficients far more sharply than the
  // window fit and is used to refine them.
  double scale_invariant = 0.0;
  double scale_invariant_drift = 0.0;  // spread across the arclength samples
  std::vector<double> sigma, r, x, alpha;  // uniform arclength samples
  std::vector<BoundaryEnd> ends;           // hemisphere: 1, catenoid: 2 (inner, outer)
  MeshConfig mesh;
};

/* Integrate the rotationally symmetric minimal-surface profile.  Families:
 * "hemisphere" and "cap" (radius R in H^{n+1}), "catenoid" (two concentric
 * boundary circles R e^{-s/2}, R e^{s/2} in H^3).  A catenoid beyond the
 * existence threshold comes back with converged = false and a message, not
 * an exception.  Coefficient fits for all ends are populated on success. */
ProfileSolution solve_rotational(const std::string& family,
                                 const FamilyParams& params,
                                 const MeshConfig& mesh = {});

/* Least-squares fit of each end's samples in the window [fit_lo, fit_hi]
 * against {1, x^2, x^4, ..., x^{m+1}} plus x^{m+1} log x for odd m (parity
 * decides the log column, never the data).  Refreshes p.ends[*].fit and
 * returns the fits. */
std::vector<CoefficientFit> extract_coefficients(ProfileSolution& p, int m);

/* Volume of {x >= delta} weighted by x^z over the solved surface, by
 * re-integration of the profile with the area as augmented state and the
 * delta crossings split to machine precision. */
double tail_volume(const ProfileSolution& p, double delta, double z = 0.0);

TailProvider solver_tail(const ProfileSolution& p, double z = 0.0);

/* Renormalized volume of a solved catenoid: per-end series assemblies at
 * the cutoff plus the solver tail. */
double catenoid_rv(const ProfileSolution& p, double delta = 0.02, int order = 8);

/* Mesh-refinement study for the fixed-step RK4 variant of the arclength
 * leg on the exact hemisphere: returns (h, |u2 error|) pairs feeding the
 * order-of-accuracy check. */
std::vector<std::pair<double, double>> hemisphere_order_study(
    double R, int m, const std::vector<double>& steps);

std::string profile_to_json(const ProfileSolution& p);
std::string profile_to_csv(const ProfileSolution& p);

}  // namespace rvh
