#pragma once

// Thin FFTW wrapper. Plans are created once per size under a lock (FFTW's
// planner is not thread-safe) with FFTW_ESTIMATE so results do not depend on
// timing measurements; execution goes through the new-array interface on
// fftw_malloc'd buffers, which is safe from any thread.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>

namespace nsda::detail {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <class T>
class FftwBuffer {
public:
    explicit FftwBuffer(std::size_t count)
        : ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * (count == 0 ? 1 : count)))), size_(count) {
        if (!ptr_) throw std::bad_alloc();
    }
    T* data() { return ptr_.get(); }
    const T* data() const { return ptr_.get(); }
    T& operator[](std::size_t k) { return ptr_.get()[k]; }
    const T& operator[](std::size_t k) const { return ptr_.get()[k]; }
    std::size_t size() const { return size_; }

private:
    std::unique_ptr<T, FftwFree> ptr_;
    std::size_t size_;
};

using Complex = std::complex<double>;

/// 2-D n x n transforms. Unnormalized, FFTW sign conventions.
void r2c_2d(int n, double* in, Complex* out);
void c2r_2d(int n, Complex* in, double* out);  // destroys `in`
void c2c_2d(int n, Complex* in, Complex* out, int sign);

/// 2-D (m x m) DST-I (RODFT00), unnormalized; applying it twice scales by (2(m+1))^2.
void dst1_2d(int m, double* in, double* out);

}  // namespace nsda::detail
