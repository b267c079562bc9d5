#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nsda {

/// Uniform grid on the unit square. Node (i, j) sits at (x, y) = (i h, j h),
/// i, j = 0..n-1, with h = 1/n, so x = 1 is the periodic image of x = 0.
struct GridSpec {
    int n = 256;
    double h = 1.0 / 256.0;
    double area = 1.0;

    /// Throws ParameterError unless n >= 16 and n is a power of two.
    static GridSpec make(int n);

    std::size_t size() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }
    bool operator==(const GridSpec& o) const { return n == o.n; }
};

bool is_power_of_two(int n);

/// Real samples of a function on the grid. Storage is row-major in i (the x
/// index): value(i, j) lives at values()[i * n + j].
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridSpec grid, double fill = 0.0);
    ScalarField(GridSpec grid, std::vector<double> values);

    static ScalarField from_function(GridSpec grid, const std::function<double(double, double)>& fn);

    const GridSpec& grid() const { return grid_; }
    int n() const { return grid_.n; }
    double h() const { return grid_.h; }
    bool empty() const { return values_.empty(); }

    double& operator()(int i, int j) { return values_[index(i, j)]; }
    double operator()(int i, int j) const { return values_[index(i, j)]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool all_finite() const;
    double max_abs() const;
    double min() const;
    double max() const;

    /// Zero the outermost ring of nodes (i or j equal to 0 or n-1).
    void zero_boundary_ring();
    /// True when every node on the outermost ring is exactly zero.
    bool boundary_clean() const;

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double s);
    /// this += s * o
    ScalarField& axpy(double s, const ScalarField& o);

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_.n) + static_cast<std::size_t>(j);
    }

    GridSpec grid_{};
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Centered first differences; the boundary ring of the result is zero.
ScalarField ddx(const ScalarField& f);
ScalarField ddy(const ScalarField& f);

/// Five-point Laplacian; the boundary ring of the result is zero.
ScalarField laplacian(const ScalarField& f);

struct Velocity {
    ScalarField u;
    ScalarField v;
};

/// u = psi_y, v = -psi_x.
Velocity velocity_from_stream(const ScalarField& psi);

/// omega = -laplacian(psi).
ScalarField vorticity_from_stream(const ScalarField& psi);

/// Riemann approximation sqrt(h^2 sum f^2) of the L2 norm over the unit square.
double l2_norm(const ScalarField& f);

/// h^2 sum f g.
double inner_product(const ScalarField& f, const ScalarField& g);

/// Multiply by a separable raised-cosine ramp sin^2(pi d / (2 width)), d the
/// node distance to the nearest edge, reaching 1 at d >= width. The outer ring
/// is always zero. Throws ParameterError unless 0 <= width <= n/4.
ScalarField apply_taper(const ScalarField& f, int width);

/// Ramp factor used by apply_taper at node distance d from the edge.
double taper_ramp(int d, int width);

}  // namespace nsda
