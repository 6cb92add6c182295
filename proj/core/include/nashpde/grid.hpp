#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nashpde/errors.hpp"

namespace nashpde {

/// Uniform tensor grid on a box in R^1 or R^2 with homogeneous Dirichlet
/// boundary. Fields are stored on interior nodes only; the boundary value 0
/// is implicit.
class Grid {
public:
    static Grid line(double a, double b, int points);
    static Grid box(double ax, double bx, int points_x,
                    double ay, double by, int points_y);

    int dim() const { return dim_; }
    double extent_min(int axis) const { return min_[axis]; }
    double extent_max(int axis) const { return max_[axis]; }
    int points(int axis) const { return points_[axis]; }
    double spacing(int axis) const { return (max_[axis] - min_[axis]) / (points_[axis] - 1); }

    int interior_points(int axis) const { return points_[axis] - 2; }
    int interior_count() const;

    /// Quadrature weight of one node: the product of the spacings.
    double cell_volume() const;

    /// Coordinates of the interior node with the given linear index.
    /// In 2D the index runs x-fastest: idx = iy * interior_points(0) + ix.
    std::array<double, 2> node(int idx) const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    Grid(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
         std::array<int, 2> points);

    int dim_;
    std::array<double, 2> min_;
    std::array<double, 2> max_;
    std::array<int, 2> points_;
};

/// Scalar field sampled on the interior nodes of a Grid. Immutable after
/// construction; all operations return new values.
class GridFunction {
public:
    explicit GridFunction(const Grid& grid);  // zero field
    GridFunction(const Grid& grid, std::vector<double> values);

    static GridFunction constant(const Grid& grid, double value);

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[i]; }

    GridFunction operator+(const GridFunction& other) const;
    GridFunction operator-(const GridFunction& other) const;
    GridFunction operator-() const;
    GridFunction operator*(double s) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

inline GridFunction operator*(double s, const GridFunction& f) { return f * s; }

/// Composite-rectangle quadrature of the L2(Omega) pairing: sum of nodal
/// products times the cell volume. Boundary nodes contribute nothing since
/// both factors vanish there.
double inner_product(const GridFunction& f, const GridFunction& g);

double l2_norm(const GridFunction& f);

double max_abs(const GridFunction& f);

/// Node-wise product f*g.
GridFunction multiply(const GridFunction& f, const GridFunction& g);

/// Node-wise clamp of f to [lo, hi].
GridFunction clamp(const GridFunction& f, const GridFunction& lo, const GridFunction& hi);

namespace detail {
void require_same_grid(const Grid& a, const Grid& b, const char* op);
void require_finite(std::span<const double> values, const char* op);
}  // namespace detail

}  // namespace nashpde
