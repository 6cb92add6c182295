#include "nashpde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nashpde {

namespace detail {

void require_same_grid(const Grid& a, const Grid& b, const char* op) {
    if (a != b) {
        throw StructuralError(std::string(op) + ": grids do not match");
    }
}

void require_finite(std::span<const double> values, const char* op) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw StructuralError(std::string(op) + ": non-finite value in grid function");
        }
    }
}

}  // namespace detail

Grid::Grid(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
           std::array<int, 2> points)
    : dim_(dim), min_(lo), max_(hi), points_(points) {
    for (int axis = 0; axis < dim_; ++axis) {
        if (points_[axis] < 3) {
            throw StructuralError("Grid: need at least 3 points per axis");
        }
        if (!(max_[axis] > min_[axis])) {
            throw StructuralError("Grid: extent must have positive length");
        }
    }
}

Grid Grid::line(double a, double b, int points) {
    return Grid(1, {a, 0.0}, {b, 0.0}, {points, 0});
}

Grid Grid::box(double ax, double bx, int points_x,
               double ay, double by, int points_y) {
    return Grid(2, {ax, ay}, {bx, by}, {points_x, points_y});
}

int Grid::interior_count() const {
    int n = 1;
    for (int axis = 0; axis < dim_; ++axis) n *= interior_points(axis);
    return n;
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int axis = 0; axis < dim_; ++axis) v *= spacing(axis);
    return v;
}

std::array<double, 2> Grid::node(int idx) const {
    if (dim_ == 1) {
        return {min_[0] + spacing(0) * (idx + 1), 0.0};
    }
    const int nx = interior_points(0);
    const int ix = idx % nx;
    const int iy = idx / nx;
    return {min_[0] + spacing(0) * (ix + 1), min_[1] + spacing(1) * (iy + 1)};
}

bool Grid::operator==(const Grid& other) const {
    if (dim_ != other.dim_) return false;
    for (int axis = 0; axis < dim_; ++axis) {
        if (min_[axis] != other.min_[axis] || max_[axis] != other.max_[axis] ||
            points_[axis] != other.points_[axis]) {
            return false;
        }
    }
    return true;
}

GridFunction::GridFunction(const Grid& grid)
    : grid_(grid), values_(static_cast<std::size_t>(grid.interior_count()), 0.0) {}

GridFunction::GridFunction(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.interior_count()) {
        throw StructuralError("GridFunction: value count does not match grid");
    }
    detail::require_finite(values_, "GridFunction");
}

GridFunction GridFunction::constant(const Grid& grid, double value) {
    return GridFunction(grid, std::vector<double>(
        static_cast<std::size_t>(grid.interior_count()), value));
}

GridFunction GridFunction::operator+(const GridFunction& other) const {
    detail::require_same_grid(grid_, other.grid_, "operator+");
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] + other.values_[i];
    return GridFunction(grid_, std::move(out));
}

GridFunction GridFunction::operator-(const GridFunction& other) const {
    detail::require_same_grid(grid_, other.grid_, "operator-");
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] - other.values_[i];
    return GridFunction(grid_, std::move(out));
}

GridFunction GridFunction::operator-() const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = -values_[i];
    return GridFunction(grid_, std::move(out));
}

GridFunction GridFunction::operator*(double s) const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = s * values_[i];
    return GridFunction(grid_, std::move(out));
}

double inner_product(const GridFunction& f, const GridFunction& g) {
    detail::require_same_grid(f.grid(), g.grid(), "inner_product");
    double sum = 0.0;
    const auto fv = f.values();
    const auto gv = g.values();
    for (std::size_t i = 0; i < fv.size(); ++i) sum += fv[i] * gv[i];
    return sum * f.grid().cell_volume();
}

double l2_norm(const GridFunction& f) {
    return std::sqrt(inner_product(f, f));
}

double max_abs(const GridFunction& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

GridFunction multiply(const GridFunction& f, const GridFunction& g) {
    detail::require_same_grid(f.grid(), g.grid(), "multiply");
    std::vector<double> out(f.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f[static_cast<int>(i)] * g[static_cast<int>(i)];
    return GridFunction(f.grid(), std::move(out));
}

GridFunction clamp(const GridFunction& f, const GridFunction& lo, const GridFunction& hi) {
    detail::require_same_grid(f.grid(), lo.grid(), "clamp");
    detail::require_same_grid(f.grid(), hi.grid(), "clamp");
    std::vector<double> out(f.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int j = static_cast<int>(i);
        out[i] = std::min(std::max(f[j], lo[j]), hi[j]);
    }
    return GridFunction(f.grid(), std::move(out));
}

}  // namespace nashpde
