#pragma once

// Boundary-ring stencils shared by the grid operators and the fused solver
// update. Interior nodes go through the simd row kernels.

#include "frontlab/grid.hpp"

namespace frontlab::detail {

double upwind_boundary(const ScalarField& u, int i, int j, bool expanding);
double curvature_boundary(const ScalarField& u, int i, int j, double eps2);
double first_derivative(const ScalarField& u, int i, int j, int axis);

}  // namespace frontlab::detail
