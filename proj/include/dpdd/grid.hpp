#pragma once

#include <string>
#include <vector>

#include "dpdd/common.hpp"

namespace dpdd {

/// Uniform axis with n >= 2 points including both ends.
struct Axis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t n = 2;

    double spacing() const { return (upper - lower) / static_cast<double>(n - 1); }
    double point(std::size_t i) const;
    bool operator==(const Axis&) const = default;
};

/// Tensor grid with at most three axes; flat index runs over the last axis fastest.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes);

    int dim() const { return static_cast<int>(axes_.size()); }
    std::size_t size() const;
    const std::vector<Axis>& axes() const { return axes_; }
    Vector point(std::size_t flat) const;
    /// d x P matrix of all grid points.
    Matrix points() const;
    /// Tensor trapezoid weights, one per point.
    Vector trapezoid_weights() const;

    bool operator==(const Grid& other) const { return axes_ == other.axes_; }

private:
    std::vector<Axis> axes_;
};

/// Tensor trapezoid rule of the values over the grid.
double grid_integral(const Grid& grid, const Vector& values);

struct FieldInfo {
    double mass = 0.0;          ///< grid integral before any clipping
    double max_imag = 0.0;      ///< largest discarded imaginary part
    double renorm_factor = 1.0; ///< multiplier applied after clipping negatives
    double min_value = 0.0;
};

/// Density values on a grid at ascending times.
struct DensityField {
    Grid grid;
    std::vector<double> times;
    std::vector<Vector> values;
    std::string producer;  ///< dpdd | df | fpe | ensemble | analytic
    std::vector<FieldInfo> info;
    std::vector<std::string> warnings;

    void validate() const;
    /// Appends one time slice; times must stay strictly ascending.
    void push(double t, Vector v, FieldInfo fi = {});
};

/// Linear interpolation of a 1-D field onto another 1-D grid (zero outside the source range).
DensityField resample_1d(const DensityField& field, const Grid& target);

} // namespace dpdd
