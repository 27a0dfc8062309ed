// Thin wrapper around FFTW: cached plans, thread-safe execution.
#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace cmcindex::detail {

// FFTW planning is not thread safe; execution through fftw_execute_dft is,
// as long as each call uses its own arrays. Plans are created once per
// (nx, ny, direction) with FFTW_ESTIMATE | FFTW_UNALIGNED so they can run on
// arbitrary std::vector storage and stay deterministic run to run.
class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    fftw_plan get(int nx, int ny, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(nx, ny, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> dummy(static_cast<size_t>(nx) * ny);
        auto* ptr = reinterpret_cast<fftw_complex*>(dummy.data());
        // dims: slow index ny (k), fast index nx (j), matching values[k*nx+j]
        fftw_plan plan = fftw_plan_dft_2d(ny, nx, ptr, ptr, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    FftPlanCache(const FftPlanCache&) = delete;
    FftPlanCache& operator=(const FftPlanCache&) = delete;

private:
    FftPlanCache() = default;
    ~FftPlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

// In-place unnormalized DFT of a row-major (k slow, j fast) complex array.
inline void fft2(std::vector<std::complex<double>>& data, int nx, int ny,
                 int sign) {
    fftw_plan plan = FftPlanCache::instance().get(nx, ny, sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

inline void fft2_forward(std::vector<std::complex<double>>& data, int nx, int ny) {
    fft2(data, nx, ny, FFTW_FORWARD);
}

// Inverse including the 1/(nx*ny) normalization.
inline void fft2_inverse(std::vector<std::complex<double>>& data, int nx, int ny) {
    fft2(data, nx, ny, FFTW_BACKWARD);
    const double scale = 1.0 / (static_cast<double>(nx) * ny);
    for (auto& c : data) c *= scale;
}

}  // namespace cmcindex::detail
