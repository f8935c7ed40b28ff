// SPDX-License-Identifier: Apache-2.0
//
// Time grids, multi-component sampled paths and the path norms used
// throughout the library.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rankbm {

/// Uniform grid t_k = k * dt, k = 0..steps, on [0, horizon].
class TimeGrid {
  public:
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    double dt() const noexcept { return dt_; }
    /// Number of grid points (steps + 1).
    std::size_t size() const noexcept { return steps_ + 1; }

    /// The last point is returned as the horizon itself so that t_steps == T
    /// exactly.
    double time(std::size_t k) const noexcept {
        return k == steps_ ? horizon_ : static_cast<double>(k) * dt_;
    }
    std::vector<double> times() const;

    /// Grid keeping every `stride`-th point. `stride` must divide steps.
    TimeGrid coarsened(std::size_t stride) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

  private:
    double horizon_;
    std::size_t steps_;
    double dt_;
};

/// Checked constructor taking a signed step count, for callers parsing input.
TimeGrid make_grid(double horizon, long long steps);

/// d-dimensional path sampled on a TimeGrid, stored time-major:
/// value(k, i) is component i at grid point t_k.
class GridPath {
  public:
    GridPath(TimeGrid grid, std::size_t dim);
    GridPath(TimeGrid grid, std::size_t dim, std::vector<double> values);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t points() const noexcept { return grid_.size(); }

    double operator()(std::size_t k, std::size_t i) const noexcept {
        return values_[k * dim_ + i];
    }
    double& operator()(std::size_t k, std::size_t i) noexcept {
        return values_[k * dim_ + i];
    }

    std::span<const double> row(std::size_t k) const noexcept {
        return {values_.data() + k * dim_, dim_};
    }
    std::span<double> row(std::size_t k) noexcept {
        return {values_.data() + k * dim_, dim_};
    }

    std::vector<double> component(std::size_t i) const;
    std::span<const double> values() const noexcept { return values_; }

    /// Keep grid points 0, stride, 2*stride, ...
    GridPath subsampled(std::size_t stride) const;

    GridPath& operator+=(const GridPath& other);
    GridPath& operator-=(const GridPath& other);
    GridPath& operator*=(double s) noexcept;

    friend bool operator==(const GridPath&, const GridPath&) = default;

  private:
    void check_compatible(const GridPath& other) const;

    TimeGrid grid_;
    std::size_t dim_;
    std::vector<double> values_;
};

GridPath operator+(GridPath a, const GridPath& b);
GridPath operator-(GridPath a, const GridPath& b);
GridPath operator*(double s, GridPath a);

/// sqrt( (1/d) * sum_i sup_k p_i(t_k)^2 ).
double norm_t2(const GridPath& p);
/// max_i sup_k |p_i(t_k)|.
double norm_tmax(const GridPath& p);

/// Standard normal density.
double normal_pdf(double y);
/// 1 - Phi(y), from erfc so that the far tail keeps full relative precision.
double normal_sf(double y);

struct TailValue {
    double y;
    double upper;
    double lower;
    double value;
};

/// Phi-bar(y) together with the bracket
/// 2 phi(y) / (y + sqrt(y^2 + 4)) <= Phi-bar(y) <= phi(y) / y  for y > 0.
/// For y <= 0 the bracket collapses onto the value.
TailValue gaussian_tail(double y);

/// CSV with header `t,c1,...,cd`, one row per grid point, 17 significant
/// digits. Each entry of `comments` is written as a leading `# ` line.
void write_csv(std::ostream& out, const GridPath& p,
               const std::vector<std::string>& comments = {});
void write_csv_file(const std::string& path, const GridPath& p,
                    const std::vector<std::string>& comments = {});

/// Inverse of write_csv. Lines starting with '#' are skipped. The grid is
/// rebuilt from the row count and the last time stamp and must be uniform.
GridPath read_csv(std::istream& in);
GridPath read_csv_file(const std::string& path);

/// "%.17g" formatting shared by every CSV writer in the project.
std::string format_real(double v);

}  // namespace rankbm
