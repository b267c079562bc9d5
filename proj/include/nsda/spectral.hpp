#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "nsda/fields.hpp"

namespace nsda {

using Complex = std::complex<double>;

/// Fourier coefficients of a grid field, normalized so that the (0,0)
/// coefficient is the mean of the field. Wavenumbers run over
/// {-n/2, ..., n/2-1} in each direction; j pairs with x, k with y.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(GridSpec grid);

    const GridSpec& grid() const { return grid_; }
    int n() const { return grid_.n; }

    Complex& at(int j, int k) { return coeffs_[slot(j, k)]; }
    const Complex& at(int j, int k) const { return coeffs_[slot(j, k)]; }

    std::vector<Complex>& raw() { return coeffs_; }
    const std::vector<Complex>& raw() const { return coeffs_; }

    /// Wavenumber of FFT-order index r (0..n-1) in the centered convention.
    static int wavenumber(int r, int n) { return r < n / 2 ? r : r - n; }

private:
    std::size_t slot(int j, int k) const {
        const int n = grid_.n;
        const int r = j < 0 ? j + n : j;
        const int c = k < 0 ? k + n : k;
        return static_cast<std::size_t>(r) * n + c;
    }

    GridSpec grid_{};
    std::vector<Complex> coeffs_;
};

/// Smoothing-operator parameters (gamma, p, nu, |dt|).
struct SmootherConfig {
    double gamma = 0.0;
    double p = 3.25;
    double nu = 0.01;
    double dt_abs = 1e-6;

    void validate() const;
};

/// Constant advection (a, b) and viscosity of the linear model operator
/// L w = nu lap w - a w_x - b w_y.
struct LinearSymbolConfig {
    double a = 0.0;
    double b = 0.0;
    double nu = 0.01;

    void validate() const;
};

SpectralField forward_transform(const ScalarField& f);

/// Throws SymmetryError when the synthesized field carries an imaginary part
/// above 1e-10 relative to its norm.
ScalarField inverse_transform(const SpectralField& c);

/// 4 pi^2 nu (j^2 + k^2)
double lambda_coeff(int j, int k, double nu);
/// 4 pi^2 nu s for a squared radius s = j^2 + k^2.
double lambda_of_radius2(long s, double nu);

/// exp(-gamma |dt| lambda^p)
double smoothing_factor(int j, int k, const SmootherConfig& cfg);

/// -(4 pi^2 nu (j^2+k^2) + 2 pi i (a j + b k))
Complex linear_symbol(int j, int k, const LinearSymbolConfig& cfg);

/// Symbol of the linear operator as realized on an n-point periodic grid: the
/// Nyquist wavenumber -n/2 carries no advection term, so real fields stay real.
Complex grid_symbol(int j, int k, const LinearSymbolConfig& cfg, int n);

/// Precomputed real-to-real spectral multiplier on the half spectrum of an
/// n x n grid. Multipliers must satisfy m(-j,-k) = conj(m(j,k)).
class SpectralMultiplier {
public:
    SpectralMultiplier() = default;
    SpectralMultiplier(GridSpec grid, const std::function<Complex(int, int)>& m);

    ScalarField apply(const ScalarField& f) const;
    const GridSpec& grid() const { return grid_; }

private:
    GridSpec grid_{};
    std::vector<Complex> table_;  // n x (n/2 + 1)
};

/// The smoothing operator S as a cached multiplier.
SpectralMultiplier make_smoother(GridSpec grid, const SmootherConfig& cfg);
/// The operator P (multiplier lambda^p).
SpectralMultiplier make_P(GridSpec grid, double p, double nu);
/// The constant-coefficient operator L applied through its grid symbol.
SpectralMultiplier make_linear_operator(GridSpec grid, const LinearSymbolConfig& cfg);

ScalarField apply_S(const ScalarField& f, const SmootherConfig& cfg);
ScalarField apply_P(const ScalarField& f, double p, double nu);
ScalarField apply_L(const ScalarField& f, const LinearSymbolConfig& cfg);

struct LambdaJ {
    long J = 0;
    double lambda_J = 0.0;
};

/// Smallest positive J, scanned over the grid's squared radii, such that
///   max_{j^2+k^2 <= J} |g_jk| <= 2 lambda_J  and
///   |g_jk| <= 2 lambda_jk for all j^2+k^2 > J,
/// with lambda_J = 4 pi^2 nu J. Throws InfeasibleSymbolError if none exists.
LambdaJ select_lambda_J(const LinearSymbolConfig& cfg, const GridSpec& grid);

/// 4 lambda_J^(1-p)
double gamma_floor(double lambda_J, double p);

struct StabilityReport {
    double max_amplification = 0.0;  // max over modes of sigma (1 + 2|dt||g|)
    double bound = 1.0;              // 1 + 4 |dt| lambda_J
    bool pass = true;
    int worst_j = 0;
    int worst_k = 0;
    long J = 0;
    double lambda_J = 0.0;
    long failing_modes = 0;
    std::string note;  // set when no admissible J exists

    double margin() const { return bound - max_amplification; }
    /// key = value lines
    std::string to_text() const;
};

/// Exhaustive per-mode check of sigma_jk (1 + 2|dt||g_jk|) <= 1 + 4|dt| lambda_J.
/// lambda_J comes from select_lambda_J. `cfg.nu` and `sym.nu` must agree.
StabilityReport verify_lemma1(const SmootherConfig& cfg, const LinearSymbolConfig& sym, const GridSpec& grid);

}  // namespace nsda
