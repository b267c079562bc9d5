#include "fft.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace nsda::detail {
namespace {

enum class Kind { r2c, c2r, c2c_fwd, c2c_bwd, dst1 };

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan get_plan(Kind kind, int n) {
    static std::map<std::tuple<Kind, int>, fftw_plan> cache;
    std::lock_guard lock(planner_mutex());
    auto key = std::make_tuple(kind, n);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const std::size_t full = static_cast<std::size_t>(n) * n;
    const std::size_t half = static_cast<std::size_t>(n) * (n / 2 + 1);
    fftw_plan plan = nullptr;
    switch (kind) {
        case Kind::r2c: {
            FftwBuffer<double> in(full);
            FftwBuffer<fftw_complex> out(half);
            plan = fftw_plan_dft_r2c_2d(n, n, in.data(), out.data(), FFTW_ESTIMATE);
            break;
        }
        case Kind::c2r: {
            FftwBuffer<fftw_complex> in(half);
            FftwBuffer<double> out(full);
            plan = fftw_plan_dft_c2r_2d(n, n, in.data(), out.data(), FFTW_ESTIMATE);
            break;
        }
        case Kind::c2c_fwd:
        case Kind::c2c_bwd: {
            FftwBuffer<fftw_complex> in(full);
            FftwBuffer<fftw_complex> out(full);
            plan = fftw_plan_dft_2d(n, n, in.data(), out.data(), kind == Kind::c2c_fwd ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE);
            break;
        }
        case Kind::dst1: {
            FftwBuffer<double> in(full);
            FftwBuffer<double> out(full);
            plan = fftw_plan_r2r_2d(n, n, in.data(), out.data(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
            break;
        }
    }
    cache.emplace(key, plan);
    return plan;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void r2c_2d(int n, double* in, Complex* out) { fftw_execute_dft_r2c(get_plan(Kind::r2c, n), in, as_fftw(out)); }

void c2r_2d(int n, Complex* in, double* out) { fftw_execute_dft_c2r(get_plan(Kind::c2r, n), as_fftw(in), out); }

void c2c_2d(int n, Complex* in, Complex* out, int sign) {
    fftw_execute_dft(get_plan(sign == FFTW_FORWARD ? Kind::c2c_fwd : Kind::c2c_bwd, n), as_fftw(in), as_fftw(out));
}

void dst1_2d(int m, double* in, double* out) { fftw_execute_r2r(get_plan(Kind::dst1, m), in, out); }

}  // namespace nsda::detail
