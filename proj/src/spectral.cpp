#include "nsda/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "nsda/errors.hpp"

namespace nsda {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kFourPi2 = 4.0 * kPi * kPi;
}  // namespace

SpectralField::SpectralField(GridSpec grid) : grid_(grid), coeffs_(grid.size()) {}

void SmootherConfig::validate() const {
    if (!(gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
    if (!(p > 1.0)) throw ParameterError("p must be > 1");
    if (!(nu > 0.0)) throw ParameterError("nu must be > 0");
    if (!(dt_abs > 0.0)) throw ParameterError("|dt| must be > 0");
}

void LinearSymbolConfig::validate() const {
    if (!(nu > 0.0)) throw ParameterError("nu must be > 0");
    if (!std::isfinite(a) || !std::isfinite(b)) throw ParameterError("advection coefficients must be finite");
}

SpectralField forward_transform(const ScalarField& f) {
    const int n = f.n();
    const std::size_t count = f.grid().size();
    detail::FftwBuffer<detail::Complex> in(count);
    detail::FftwBuffer<detail::Complex> out(count);
    auto v = f.values();
    for (std::size_t k = 0; k < count; ++k) in[k] = v[k];
    detail::c2c_2d(n, in.data(), out.data(), FFTW_FORWARD);

    SpectralField c(f.grid());
    const double scale = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) c.raw()[k] = out[k] * scale;
    return c;
}

ScalarField inverse_transform(const SpectralField& c) {
    const int n = c.n();
    const std::size_t count = c.grid().size();
    detail::FftwBuffer<detail::Complex> in(count);
    detail::FftwBuffer<detail::Complex> out(count);
    for (std::size_t k = 0; k < count; ++k) in[k] = c.raw()[k];
    detail::c2c_2d(n, in.data(), out.data(), FFTW_BACKWARD);

    ScalarField f(c.grid());
    auto v = f.values();
    double re2 = 0.0;
    double im2 = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        v[k] = out[k].real();
        re2 += out[k].real() * out[k].real();
        im2 += out[k].imag() * out[k].imag();
    }
    if (std::sqrt(im2) > 1e-10 * std::max(std::sqrt(re2), 1e-300) && im2 > 0.0) {
        std::ostringstream msg;
        msg << "coefficients are not conjugate symmetric: imaginary residue " << std::sqrt(im2 / count)
            << " (rms) against field rms " << std::sqrt(re2 / count);
        throw SymmetryError(msg.str());
    }
    return f;
}

double lambda_coeff(int j, int k, double nu) {
    return kFourPi2 * nu * (static_cast<double>(j) * j + static_cast<double>(k) * k);
}

double lambda_of_radius2(long s, double nu) { return kFourPi2 * nu * static_cast<double>(s); }

double smoothing_factor(int j, int k, const SmootherConfig& cfg) {
    const double lam = lambda_coeff(j, k, cfg.nu);
    if (lam == 0.0 || cfg.gamma == 0.0) return 1.0;
    return std::exp(-cfg.gamma * cfg.dt_abs * std::pow(lam, cfg.p));
}

Complex linear_symbol(int j, int k, const LinearSymbolConfig& cfg) {
    return -Complex(lambda_coeff(j, k, cfg.nu), 2.0 * kPi * (cfg.a * j + cfg.b * k));
}

Complex grid_symbol(int j, int k, const LinearSymbolConfig& cfg, int n) {
    const int ja = (j == -n / 2) ? 0 : j;
    const int ka = (k == -n / 2) ? 0 : k;
    return -Complex(lambda_coeff(j, k, cfg.nu), 2.0 * kPi * (cfg.a * ja + cfg.b * ka));
}

SpectralMultiplier::SpectralMultiplier(GridSpec grid, const std::function<Complex(int, int)>& m) : grid_(grid) {
    const int n = grid.n;
    const int nh = n / 2 + 1;
    table_.resize(static_cast<std::size_t>(n) * nh);
    for (int r = 0; r < n; ++r) {
        const int j = SpectralField::wavenumber(r, n);
        for (int c = 0; c < nh; ++c) {
            const int k = SpectralField::wavenumber(c, n);
            table_[static_cast<std::size_t>(r) * nh + c] = m(j, k);
        }
    }
}

ScalarField SpectralMultiplier::apply(const ScalarField& f) const {
    const int n = grid_.n;
    const std::size_t count = grid_.size();
    const std::size_t half = table_.size();
    detail::FftwBuffer<double> real(count);
    detail::FftwBuffer<detail::Complex> spec(half);
    auto v = f.values();
    std::copy(v.begin(), v.end(), real.data());
    detail::r2c_2d(n, real.data(), spec.data());
    const double scale = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < half; ++k) spec[k] *= table_[k] * scale;
    detail::c2r_2d(n, spec.data(), real.data());

    ScalarField out(grid_);
    auto o = out.values();
    std::copy(real.data(), real.data() + count, o.begin());
    return out;
}

SpectralMultiplier make_smoother(GridSpec grid, const SmootherConfig& cfg) {
    cfg.validate();
    return SpectralMultiplier(grid, [&](int j, int k) { return Complex(smoothing_factor(j, k, cfg), 0.0); });
}

SpectralMultiplier make_P(GridSpec grid, double p, double nu) {
    return SpectralMultiplier(grid, [&](int j, int k) {
        const double lam = lambda_coeff(j, k, nu);
        return Complex(lam == 0.0 ? 0.0 : std::pow(lam, p), 0.0);
    });
}

SpectralMultiplier make_linear_operator(GridSpec grid, const LinearSymbolConfig& cfg) {
    cfg.validate();
    return SpectralMultiplier(grid, [&](int j, int k) { return grid_symbol(j, k, cfg, grid.n); });
}

ScalarField apply_S(const ScalarField& f, const SmootherConfig& cfg) { return make_smoother(f.grid(), cfg).apply(f); }

ScalarField apply_P(const ScalarField& f, double p, double nu) { return make_P(f.grid(), p, nu).apply(f); }

ScalarField apply_L(const ScalarField& f, const LinearSymbolConfig& cfg) {
    return make_linear_operator(f.grid(), cfg).apply(f);
}

LambdaJ select_lambda_J(const LinearSymbolConfig& cfg, const GridSpec& grid) {
    cfg.validate();
    const int n = grid.n;
    const long s_max = 2L * (n / 2) * (n / 2);
    // Largest |g| on each squared radius.
    std::vector<double> ring_max(static_cast<std::size_t>(s_max) + 1, -1.0);
    for (int j = -n / 2; j < n / 2; ++j) {
        for (int k = -n / 2; k < n / 2; ++k) {
            const long s = static_cast<long>(j) * j + static_cast<long>(k) * k;
            ring_max[s] = std::max(ring_max[s], std::abs(linear_symbol(j, k, cfg)));
        }
    }
    long last_violation = 0;
    for (long s = 1; s <= s_max; ++s) {
        if (ring_max[s] >= 0.0 && ring_max[s] > 2.0 * lambda_of_radius2(s, cfg.nu)) last_violation = s;
    }
    double running = 0.0;
    for (long s = 0; s < std::max(1L, last_violation); ++s) running = std::max(running, ring_max[s]);
    for (long J = std::max(1L, last_violation); J <= s_max; ++J) {
        running = std::max(running, ring_max[J]);
        const double lam_J = lambda_of_radius2(J, cfg.nu);
        if (running <= 2.0 * lam_J) return {J, lam_J};
    }
    std::ostringstream msg;
    msg << "no J <= " << s_max << " satisfies the mode conditions (a=" << cfg.a << ", b=" << cfg.b
        << ", nu=" << cfg.nu << "): advection dominates diffusion at every resolvable scale";
    throw InfeasibleSymbolError(msg.str());
}

double gamma_floor(double lambda_J, double p) { return 4.0 * std::pow(lambda_J, 1.0 - p); }

std::string StabilityReport::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "pass = " << (pass ? "true" : "false") << '\n'
       << "J = " << J << '\n'
       << "lambda_J = " << lambda_J << '\n'
       << "max_amplification = " << max_amplification << '\n'
       << "bound = " << bound << '\n'
       << "margin = " << margin() << '\n'
       << "worst_mode = " << worst_j << ',' << worst_k << '\n'
       << "failing_modes = " << failing_modes << '\n';
    if (!note.empty()) os << "note = " << note << '\n';
    return os.str();
}

StabilityReport verify_lemma1(const SmootherConfig& cfg, const LinearSymbolConfig& sym, const GridSpec& grid) {
    cfg.validate();
    StabilityReport rep;
    LambdaJ lj;
    try {
        lj = select_lambda_J(sym, grid);
    } catch (const InfeasibleSymbolError& e) {
        rep.pass = false;
        rep.note = e.what();
        return rep;
    }
    rep.J = lj.J;
    rep.lambda_J = lj.lambda_J;
    rep.bound = 1.0 + 4.0 * cfg.dt_abs * lj.lambda_J;
    const int n = grid.n;
    double worst_excess = -1e300;
    for (int j = -n / 2; j < n / 2; ++j) {
        for (int k = -n / 2; k < n / 2; ++k) {
            const double amp = smoothing_factor(j, k, cfg) * (1.0 + 2.0 * cfg.dt_abs * std::abs(linear_symbol(j, k, sym)));
            if (amp > rep.bound) ++rep.failing_modes;
            if (amp - rep.bound > worst_excess) {
                worst_excess = amp - rep.bound;
                rep.max_amplification = amp;
                rep.worst_j = j;
                rep.worst_k = k;
            }
        }
    }
    rep.pass = rep.failing_modes == 0;
    return rep;
}

}  // namespace nsda
