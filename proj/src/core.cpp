// SPDX-License-Identifier: Apache-2.0
#include "rankbm/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rankbm {

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps), dt_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    }
    if (steps < 1) {
        throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }
    dt_ = horizon / static_cast<double>(steps);
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> t(size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
    return t;
}

TimeGrid TimeGrid::coarsened(std::size_t stride) const {
    if (stride == 0 || steps_ % stride != 0) {
        throw std::invalid_argument("TimeGrid::coarsened: stride must divide steps");
    }
    return TimeGrid(horizon_, steps_ / stride);
}

TimeGrid make_grid(double horizon, long long steps) {
    if (steps < 1) throw std::invalid_argument("make_grid: steps must be >= 1");
    return TimeGrid(horizon, static_cast<std::size_t>(steps));
}

GridPath::GridPath(TimeGrid grid, std::size_t dim)
    : grid_(grid), dim_(dim), values_(grid.size() * dim, 0.0) {
    if (dim == 0) throw std::invalid_argument("GridPath: dimension must be >= 1");
}

GridPath::GridPath(TimeGrid grid, std::size_t dim, std::vector<double> values)
    : grid_(grid), dim_(dim), values_(std::move(values)) {
    if (dim == 0) throw std::invalid_argument("GridPath: dimension must be >= 1");
    if (values_.size() != grid_.size() * dim_) {
        throw std::invalid_argument("GridPath: values must hold (steps+1)*dim entries");
    }
}

std::vector<double> GridPath::component(std::size_t i) const {
    if (i >= dim_) throw std::out_of_range("GridPath::component: index out of range");
    std::vector<double> c(points());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = (*this)(k, i);
    return c;
}

GridPath GridPath::subsampled(std::size_t stride) const {
    TimeGrid coarse = grid_.coarsened(stride);
    GridPath out(coarse, dim_);
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        auto src = row(k * stride);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

void GridPath::check_compatible(const GridPath& other) const {
    if (other.dim_ != dim_ || other.grid_ != grid_) {
        throw std::invalid_argument("GridPath: paths live on different grids or dimensions");
    }
}

GridPath& GridPath::operator+=(const GridPath& other) {
    check_compatible(other);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
    return *this;
}

GridPath& GridPath::operator-=(const GridPath& other) {
    check_compatible(other);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
    return *this;
}

GridPath& GridPath::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

GridPath operator+(GridPath a, const GridPath& b) { return a += b; }
GridPath operator-(GridPath a, const GridPath& b) { return a -= b; }
GridPath operator*(double s, GridPath a) { return a *= s; }

namespace {

std::vector<double> componentwise_sup_abs(const GridPath& p) {
    std::vector<double> sup(p.dim(), 0.0);
    for (std::size_t k = 0; k < p.points(); ++k) {
        auto r = p.row(k);
        for (std::size_t i = 0; i < r.size(); ++i) sup[i] = std::max(sup[i], std::abs(r[i]));
    }
    return sup;
}

}  // namespace

double norm_t2(const GridPath& p) {
    double acc = 0.0;
    for (double s : componentwise_sup_abs(p)) acc += s * s;
    return std::sqrt(acc / static_cast<double>(p.dim()));
}

double norm_tmax(const GridPath& p) {
    auto sup = componentwise_sup_abs(p);
    return *std::max_element(sup.begin(), sup.end());
}

double normal_pdf(double y) {
    return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_sf(double y) { return 0.5 * std::erfc(y / std::numbers::sqrt2); }

TailValue gaussian_tail(double y) {
    const double value = normal_sf(y);
    if (!(y > 0.0)) return {y, value, value, value};
    const double phi = normal_pdf(y);
    return {y, phi / y, 2.0 * phi / (y + std::sqrt(y * y + 4.0)), value};
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& out, const GridPath& p, const std::vector<std::string>& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << 't';
    for (std::size_t i = 1; i <= p.dim(); ++i) out << ",c" << i;
    out << '\n';
    for (std::size_t k = 0; k < p.points(); ++k) {
        out << format_real(p.grid().time(k));
        for (double v : p.row(k)) out << ',' << format_real(v);
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const GridPath& p,
                    const std::vector<std::string>& comments) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(out, p, comments);
    if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return fields;
}

double parse_real(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("read_csv: bad number '" + s + "' on line " +
                                 std::to_string(line_no));
    }
}

}  // namespace

GridPath read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        header = split_fields(line);
        break;
    }
    if (header.size() < 2 || header[0] != "t") {
        throw std::runtime_error("read_csv: expected header 't,c1,...,cd'");
    }
    const std::size_t dim = header.size() - 1;
    for (std::size_t i = 1; i <= dim; ++i) {
        if (header[i] != "c" + std::to_string(i)) {
            throw std::runtime_error("read_csv: unexpected column name '" + header[i] + "'");
        }
    }

    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (fields.size() != dim + 1) {
            throw std::runtime_error("read_csv: wrong field count on line " +
                                     std::to_string(line_no));
        }
        times.push_back(parse_real(fields[0], line_no));
        for (std::size_t i = 1; i <= dim; ++i) values.push_back(parse_real(fields[i], line_no));
    }
    if (times.size() < 2) throw std::runtime_error("read_csv: need at least two grid points");
    if (times.front() != 0.0) throw std::runtime_error("read_csv: grid must start at t = 0");

    TimeGrid grid(times.back(), times.size() - 1);
    const double slack = 1e-9 * grid.horizon();
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::abs(times[k] - grid.time(k)) > slack) {
            throw std::runtime_error("read_csv: time stamps are not a uniform grid");
        }
    }
    return GridPath(grid, dim, std::move(values));
}

GridPath read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in);
}

}  // namespace rankbm
