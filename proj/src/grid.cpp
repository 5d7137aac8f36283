#include "dpdd/grid.hpp"

#include <algorithm>
#include <cmath>

namespace dpdd {

double Axis::point(std::size_t i) const {
    if (i + 1 == n) return upper;
    return lower + static_cast<double>(i) * spacing();
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 3) throw InputError("grids have between one and three axes");
    for (const auto& a : axes_) {
        if (!(a.lower < a.upper) || !std::isfinite(a.lower) || !std::isfinite(a.upper))
            throw InputError("grid axis needs lower < upper");
        if (a.n < 2) throw InputError("grid axis needs at least two points");
    }
}

std::size_t Grid::size() const {
    std::size_t s = axes_.empty() ? 0 : 1;
    for (const auto& a : axes_) s *= a.n;
    return s;
}

Vector Grid::point(std::size_t flat) const {
    Vector x(dim());
    for (int j = dim() - 1; j >= 0; --j) {
        const auto& a = axes_[static_cast<std::size_t>(j)];
        x[j] = a.point(flat % a.n);
        flat /= a.n;
    }
    return x;
}

Matrix Grid::points() const {
    Matrix P(dim(), static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) P.col(static_cast<Eigen::Index>(i)) = point(i);
    return P;
}

Vector Grid::trapezoid_weights() const {
    Vector w = Vector::Ones(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) {
        std::size_t flat = i;
        double weight = 1.0;
        for (int j = dim() - 1; j >= 0; --j) {
            const auto& a = axes_[static_cast<std::size_t>(j)];
            const std::size_t k = flat % a.n;
            flat /= a.n;
            weight *= (k == 0 || k + 1 == a.n) ? 0.5 * a.spacing() : a.spacing();
        }
        w[static_cast<Eigen::Index>(i)] = weight;
    }
    return w;
}

double grid_integral(const Grid& grid, const Vector& values) {
    if (static_cast<std::size_t>(values.size()) != grid.size())
        throw InputError("grid_integral: value count does not match the grid");
    return grid.trapezoid_weights().dot(values);
}

void DensityField::validate() const {
    if (times.size() != values.size()) throw InputError("density field: times and values differ in count");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || times[k] < 0.0)
            throw InputError("density field: times must be finite and nonnegative");
        if (k > 0 && !(times[k] > times[k - 1]))
            throw InputError("density field: times must be strictly ascending");
        if (static_cast<std::size_t>(values[k].size()) != grid.size())
            throw InputError("density field: value count does not match the grid");
        if (!values[k].allFinite()) throw InputError("density field: non-finite values");
    }
}

void DensityField::push(double t, Vector v, FieldInfo fi) {
    if (!times.empty() && !(t > times.back()))
        throw InputError("density field: times must be strictly ascending");
    times.push_back(t);
    values.push_back(std::move(v));
    info.push_back(fi);
}

DensityField resample_1d(const DensityField& field, const Grid& target) {
    if (field.grid.dim() != 1 || target.dim() != 1) throw InputError("resample_1d needs 1-D grids");
    const Axis& src = field.grid.axes()[0];
    DensityField out;
    out.grid = target;
    out.producer = field.producer;
    for (std::size_t k = 0; k < field.times.size(); ++k) {
        Vector v(static_cast<Eigen::Index>(target.size()));
        for (std::size_t i = 0; i < target.size(); ++i) {
            const double x = target.axes()[0].point(i);
            const double s = (x - src.lower) / src.spacing();
            if (s < -1e-12 || s > static_cast<double>(src.n - 1) + 1e-12) {
                v[static_cast<Eigen::Index>(i)] = 0.0;
                continue;
            }
            const auto lo = static_cast<std::size_t>(
                std::clamp(std::floor(s), 0.0, static_cast<double>(src.n - 2)));
            const double f = std::clamp(s - static_cast<double>(lo), 0.0, 1.0);
            const auto& vals = field.values[k];
            v[static_cast<Eigen::Index>(i)] =
                (1.0 - f) * vals[static_cast<Eigen::Index>(lo)] + f * vals[static_cast<Eigen::Index>(lo + 1)];
        }
        out.push(field.times[k], std::move(v), k < field.info.size() ? field.info[k] : FieldInfo{});
    }
    return out;
}

} // namespace dpdd
