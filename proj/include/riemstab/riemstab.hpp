#pragma once

// Numerical laboratory for stable solutions of symmetric elliptic systems
// -Lap_g u_i = H_i(u) on chart-described Riemannian manifolds: pointwise
// metric calculus, discrete Laplace-Beltrami operators, solvers, spectral
// stability classification, and the experiment battery that confronts the
// stability / Poincare inequalities and Liouville-type statements with
// computation.

#include "riemstab/chart.hpp"
#include "riemstab/common.hpp"
#include "riemstab/config.hpp"
#include "riemstab/contour.hpp"
#include "riemstab/densemat.hpp"
#include "riemstab/distance.hpp"
#include "riemstab/experiments.hpp"
#include "riemstab/geometry.hpp"
#include "riemstab/grid.hpp"
#include "riemstab/krylov.hpp"
#include "riemstab/nonlinearity.hpp"
#include "riemstab/operators.hpp"
#include "riemstab/report.hpp"
#include "riemstab/runner.hpp"
#include "riemstab/solve.hpp"
#include "riemstab/sparse.hpp"
#include "riemstab/stability.hpp"
#include "riemstab/testfun.hpp"
