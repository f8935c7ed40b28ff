// SPDX-License-Identifier: Apache-2.0
#include "rankbm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rankbm::oracle {

StepSolution solve_per_step(const GridPath& x, const Matrix& q, double tol) {
    const std::size_t d = x.dim();
    if (q.size() != d) throw std::invalid_argument("solve_per_step: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) {
        if (x(0, i) < 0.0) throw std::invalid_argument("solve_per_step: x(0) < 0");
    }
    StepSolution out{GridPath(x.grid(), d), GridPath(x.grid(), d), 0};
    std::vector<double> u(d, 0.0), floor(d, 0.0);
    const double scale = 1.0 + norm_tmax(x);
    const std::size_t max_sweeps = 1000000;

    for (std::size_t k = 0; k < x.points(); ++k) {
        floor = u;
        std::size_t sweeps = 0;
        for (;;) {
            double change = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double push = -x(k, j);
                for (std::size_t i = 0; i < d; ++i) push += u[i] * q(i, j);
                const double next = std::max(floor[j], std::max(push, 0.0));
                change = std::max(change, std::abs(next - u[j]));
                u[j] = next;
            }
            ++sweeps;
            if (change <= tol * scale) break;
            if (sweeps >= max_sweeps) throw std::runtime_error("solve_per_step: no fixed point");
        }
        out.max_sweeps = std::max(out.max_sweeps, sweeps);
        for (std::size_t j = 0; j < d; ++j) out.y(k, j) = u[j];
        for (std::size_t j = 0; j < d; ++j) {
            double z = x(k, j) + u[j];
            for (std::size_t i = 0; i < d; ++i) z -= q(i, j) * u[i];
            out.z(k, j) = z;
        }
    }
    return out;
}

}  // namespace rankbm::oracle
