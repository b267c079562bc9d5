#include "nsda/poisson.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "nsda/errors.hpp"

namespace nsda {

void MultigridConfig::validate() const {
    if (!(tol > 0.0)) throw ParameterError("multigrid tol must be > 0");
    if (coarsest_n < 2 || !is_power_of_two(coarsest_n)) throw ParameterError("coarsest_n must be a power of two >= 2");
    if (pre_smooth < 1 || post_smooth < 1) throw ParameterError("multigrid sweeps must be >= 1");
    if (max_cycles < 1) throw ParameterError("max_cycles must be >= 1");
}

namespace {

// One multigrid level: N intervals, nodes 0..N with Dirichlet values on the
// outer nodes. Arrays are (N+1)^2, row-major in i.
struct Level {
    int N;
    double h;
    std::vector<double> u, f, r;

    explicit Level(int intervals)
        : N(intervals), h(1.0 / intervals), u(sz(), 0.0), f(sz(), 0.0), r(sz(), 0.0) {}

    std::size_t sz() const { return static_cast<std::size_t>(N + 1) * (N + 1); }
    std::size_t at(int i, int j) const { return static_cast<std::size_t>(i) * (N + 1) + j; }
};

void smooth_rbgs(Level& L, int sweeps) {
    const int N = L.N;
    const int s = N + 1;
    const double h2 = L.h * L.h;
    double* u = L.u.data();
    const double* f = L.f.data();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int color = 0; color < 2; ++color) {
            for (int i = 1; i < N; ++i) {
                const int j0 = 1 + ((i + 1 + color) & 1);
                for (int j = j0; j < N; j += 2) {
                    const int c = i * s + j;
                    u[c] = 0.25 * (h2 * f[c] + u[c - s] + u[c + s] + u[c - 1] + u[c + 1]);
                }
            }
        }
    }
}

// r = f - A u with A = -lap_h; returns sum r^2.
double compute_residual(Level& L) {
    const int N = L.N;
    const int s = N + 1;
    const double inv_h2 = 1.0 / (L.h * L.h);
    const double* u = L.u.data();
    const double* f = L.f.data();
    double* r = L.r.data();
    double sum = 0.0;
    for (int i = 1; i < N; ++i) {
        for (int j = 1; j < N; ++j) {
            const int c = i * s + j;
            const double res = f[c] - inv_h2 * (4.0 * u[c] - u[c - s] - u[c + s] - u[c - 1] - u[c + 1]);
            r[c] = res;
            sum += res * res;
        }
    }
    return sum;
}

void restrict_full_weighting(const Level& fine, Level& coarse) {
    const int Nc = coarse.N;
    const int sf = fine.N + 1;
    const double* r = fine.r.data();
    for (int I = 1; I < Nc; ++I) {
        for (int J = 1; J < Nc; ++J) {
            const int c = (2 * I) * sf + 2 * J;
            coarse.f[coarse.at(I, J)] =
                (4.0 * r[c] + 2.0 * (r[c - sf] + r[c + sf] + r[c - 1] + r[c + 1]) + r[c - sf - 1] + r[c - sf + 1] +
                 r[c + sf - 1] + r[c + sf + 1]) /
                16.0;
        }
    }
}

// fine.u += P coarse.u (bilinear)
void prolong_add(const Level& coarse, Level& fine) {
    const int Nc = coarse.N;
    const int sf = fine.N + 1;
    const auto& e = coarse.u;
    double* u = fine.u.data();
    for (int I = 0; I < Nc; ++I) {
        for (int J = 0; J < Nc; ++J) {
            const double e00 = e[coarse.at(I, J)];
            const double e10 = e[coarse.at(I + 1, J)];
            const double e01 = e[coarse.at(I, J + 1)];
            const double e11 = e[coarse.at(I + 1, J + 1)];
            const int c = (2 * I) * sf + 2 * J;
            if (I > 0 && J > 0) u[c] += e00;
            if (J > 0) u[c + sf] += 0.5 * (e00 + e10);
            if (I > 0) u[c + 1] += 0.5 * (e00 + e01);
            u[c + sf + 1] += 0.25 * (e00 + e10 + e01 + e11);
        }
    }
}

class Hierarchy {
public:
    Hierarchy(int n, const MultigridConfig& cfg) : cfg_(cfg) {
        for (int N = n; N >= cfg.coarsest_n && N >= 2; N /= 2) levels_.emplace_back(N);
    }

    Level& finest() { return levels_.front(); }

    void vcycle(std::size_t l = 0) {
        Level& L = levels_[l];
        if (l + 1 == levels_.size()) {
            // Coarsest level: a handful of unknowns, iterate to convergence.
            smooth_rbgs(L, 8 * L.N * L.N + 20);
            return;
        }
        smooth_rbgs(L, cfg_.pre_smooth);
        compute_residual(L);
        Level& C = levels_[l + 1];
        restrict_full_weighting(L, C);
        std::fill(C.u.begin(), C.u.end(), 0.0);
        vcycle(l + 1);
        prolong_add(C, L);
        smooth_rbgs(L, cfg_.post_smooth);
    }

private:
    MultigridConfig cfg_;
    std::vector<Level> levels_;
};

}  // namespace

double rhs_norm(const ScalarField& omega) {
    const int n = omega.n();
    double sum = 0.0;
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) sum += omega(i, j) * omega(i, j);
    return std::sqrt(sum) * omega.h();
}

double residual(const ScalarField& psi, const ScalarField& omega) {
    const int n = psi.n();
    const double inv_h2 = 1.0 / (psi.h() * psi.h());
    auto val = [&](int i, int j) { return (i >= n || j >= n) ? 0.0 : psi(i, j); };
    double sum = 0.0;
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            const double lap = inv_h2 * (val(i + 1, j) + val(i - 1, j) + val(i, j + 1) + val(i, j - 1) - 4.0 * psi(i, j));
            const double r = lap + omega(i, j);
            sum += r * r;
        }
    }
    return std::sqrt(sum) * psi.h();
}

ScalarField solve_poisson_multigrid(const ScalarField& omega, const MultigridConfig& cfg,
                                    const ScalarField* initial_guess, PoissonStats* stats) {
    cfg.validate();
    const int n = omega.n();
    if (!omega.all_finite()) throw ParameterError("Poisson right-hand side is not finite");

    Hierarchy mg(n, cfg);
    Level& L = mg.finest();
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            L.f[L.at(i, j)] = omega(i, j);
            if (initial_guess) L.u[L.at(i, j)] = (*initial_guess)(i, j);
        }
    }

    const double scale = rhs_norm(omega);
    PoissonStats local;
    PoissonStats& st = stats ? *stats : local;
    st = PoissonStats{};

    ScalarField psi(omega.grid());
    if (scale == 0.0) {
        st.history.push_back(0.0);
        return psi;
    }
    double rel = std::sqrt(compute_residual(L)) * L.h / scale;
    st.history.push_back(rel);
    while (rel > cfg.tol) {
        if (st.cycles >= cfg.max_cycles) {
            std::ostringstream msg;
            msg << "multigrid did not reach relative residual " << cfg.tol << " in " << cfg.max_cycles
                << " cycles (achieved " << rel << ")";
            throw NonConvergenceError(msg.str(), rel, st.cycles);
        }
        mg.vcycle();
        ++st.cycles;
        rel = std::sqrt(compute_residual(L)) * L.h / scale;
        st.history.push_back(rel);
    }
    st.relative_residual = rel;

    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) psi(i, j) = L.u[L.at(i, j)];
    return psi;
}

ScalarField solve_poisson_spectral(const ScalarField& omega) {
    const int n = omega.n();
    const int m = n - 1;
    const std::size_t count = static_cast<std::size_t>(m) * m;
    detail::FftwBuffer<double> a(count);
    detail::FftwBuffer<double> b(count);
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) a[static_cast<std::size_t>(i - 1) * m + (j - 1)] = omega(i, j);
    detail::dst1_2d(m, a.data(), b.data());

    const double h = omega.h();
    std::vector<double> eig(m);
    for (int p = 1; p <= m; ++p) {
        const double s = std::sin(std::numbers::pi * p / (2.0 * n));
        eig[p - 1] = 4.0 * s * s / (h * h);
    }
    const double norm = 1.0 / (4.0 * n * static_cast<double>(n));  // (2(m+1))^-2
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) b[static_cast<std::size_t>(p) * m + q] *= norm / (eig[p] + eig[q]);
    detail::dst1_2d(m, b.data(), a.data());

    ScalarField psi(omega.grid());
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) psi(i, j) = a[static_cast<std::size_t>(i - 1) * m + (j - 1)];
    return psi;
}

}  // namespace nsda
