#include "nsda/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nsda/errors.hpp"

namespace nsda {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

GridSpec GridSpec::make(int n) {
    if (n < 16 || !is_power_of_two(n)) {
        throw ParameterError("grid size must be a power of two >= 16, got " + std::to_string(n));
    }
    GridSpec g;
    g.n = n;
    g.h = 1.0 / static_cast<double>(n);
    g.area = 1.0;
    return g;
}

ScalarField::ScalarField(GridSpec grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw ParameterError("field value count does not match grid");
    }
}

ScalarField ScalarField::from_function(GridSpec grid, const std::function<double(double, double)>& fn) {
    ScalarField f(grid);
    for (int i = 0; i < grid.n; ++i) {
        for (int j = 0; j < grid.n; ++j) {
            f(i, j) = fn(i * grid.h, j * grid.h);
        }
    }
    return f;
}

bool ScalarField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

void ScalarField::zero_boundary_ring() {
    const int n = grid_.n;
    for (int k = 0; k < n; ++k) {
        (*this)(0, k) = 0.0;
        (*this)(n - 1, k) = 0.0;
        (*this)(k, 0) = 0.0;
        (*this)(k, n - 1) = 0.0;
    }
}

bool ScalarField::boundary_clean() const {
    const int n = grid_.n;
    for (int k = 0; k < n; ++k) {
        if ((*this)(0, k) != 0.0 || (*this)(n - 1, k) != 0.0 || (*this)(k, 0) != 0.0 || (*this)(k, n - 1) != 0.0) {
            return false;
        }
    }
    return true;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * o.values_[k];
    return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField ddx(const ScalarField& f) {
    const int n = f.n();
    const double c = 0.5 / f.h();
    ScalarField out(f.grid());
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            out(i, j) = c * (f(i + 1, j) - f(i - 1, j));
        }
    }
    return out;
}

ScalarField ddy(const ScalarField& f) {
    const int n = f.n();
    const double c = 0.5 / f.h();
    ScalarField out(f.grid());
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            out(i, j) = c * (f(i, j + 1) - f(i, j - 1));
        }
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const int n = f.n();
    const double c = 1.0 / (f.h() * f.h());
    ScalarField out(f.grid());
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            out(i, j) = c * (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j));
        }
    }
    return out;
}

Velocity velocity_from_stream(const ScalarField& psi) {
    Velocity vel{ddy(psi), ddx(psi)};
    vel.v *= -1.0;
    return vel;
}

ScalarField vorticity_from_stream(const ScalarField& psi) {
    ScalarField w = laplacian(psi);
    w *= -1.0;
    return w;
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner_product(f, f)); }

double inner_product(const ScalarField& f, const ScalarField& g) {
    auto a = f.values();
    auto b = g.values();
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s * f.h() * f.h();
}

double taper_ramp(int d, int width) {
    if (d <= 0) return 0.0;
    if (d >= width) return 1.0;
    const double s = std::sin(std::numbers::pi * d / (2.0 * width));
    return s * s;
}

ScalarField apply_taper(const ScalarField& f, int width) {
    const int n = f.n();
    if (width < 0 || width > n / 4) {
        throw ParameterError("taper width must lie in [0, n/4], got " + std::to_string(width));
    }
    std::vector<double> ramp(n);
    for (int i = 0; i < n; ++i) ramp[i] = taper_ramp(std::min(i, n - 1 - i), width);
    ScalarField out(f.grid());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = f(i, j) * ramp[i] * ramp[j];
        }
    }
    return out;
}

}  // namespace nsda
