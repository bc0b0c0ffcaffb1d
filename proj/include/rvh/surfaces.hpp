#pragma once

#include "rvh/renvol.hpp"

namespace rvh {

/* Exact volume data for the geodesic m-hemisphere of boundary radius R in
 * H^{m+1}: area element (1 - x^2/R^2)^{(m-2)/2} against the round boundary
 * sphere, with closed-form tails for m = 2 and m = 4 and adaptive
 * quadrature otherwise. */
TailProvider hemisphere_tail(double R, int m);

/* Exact volume data for the vertical cylinder x >= 0 over a boundary of
 * the given volume (the graph u = 0, not minimal unless the boundary is a
 * geodesic): the area element is exactly 1. */
TailProvider cylinder_tail(double boundary_volume, int m);

}  // namespace rvh
