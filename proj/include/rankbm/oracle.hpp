// SPDX-License-Identifier: Apache-2.0
//
// Reference Skorokhod solver that works one grid time at a time. At t_k it
// solves the finite-dimensional fixed point
//     u = max( y(t_{k-1}), (u Q - x(t_k))_+ )
// by Gauss-Seidel sweeps in the original (unscaled) coordinates. It shares
// no code with the whole-path iteration and is used to check it.
#pragma once

#include "rankbm/core.hpp"
#include "rankbm/skorokhod.hpp"

namespace rankbm::oracle {

struct StepSolution {
    GridPath y;
    GridPath z;
    std::size_t max_sweeps = 0;
};

/// `tol` bounds the last sweep's largest change at each grid time.
StepSolution solve_per_step(const GridPath& x, const Matrix& q, double tol = 1e-15);

}  // namespace rankbm::oracle
