#pragma once

// Thin RAII layer over FFTW: aligned buffers and a process-wide plan cache.
// Plans are created once per (kind, shape) under a mutex; execution uses the
// new-array interface, which FFTW documents as thread-safe.

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <tuple>
#include <vector>

#include <fftw3.h>

namespace pmp::fft {

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using Buffer = std::unique_ptr<T[], FftwDeleter>;

inline Buffer<double> real_buffer(std::size_t n) {
    auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * (n ? n : 1)));
    if (!p) throw std::bad_alloc();
    return Buffer<double>(p);
}

inline Buffer<fftw_complex> complex_buffer(std::size_t n) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n ? n : 1)));
    if (!p) throw std::bad_alloc();
    return Buffer<fftw_complex>(p);
}

/// Smallest m >= n of the form 2^a, 3 * 2^a or 9 * 2^a. Estimated FFTW plans
/// for lengths with factors 5, 7 or high powers of 3 measured several times
/// slower per element.
inline std::size_t smooth_size(std::size_t n) {
    std::size_t best = 0;
    for (std::size_t f : {1, 3, 9}) {
        std::size_t m = f;
        while (m < n) m *= 2;
        if (best == 0 || m < best) best = m;
    }
    return best;
}

enum class PlanKind { r2c, c2r, dst1 };

class PlanCache {
public:
    PlanCache() = default;
    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(PlanKind kind, const std::vector<int>& dims) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(kind, dims);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        std::size_t real_n = 1;
        for (int d : dims) real_n *= static_cast<std::size_t>(d);
        const std::size_t complex_n = real_n / static_cast<std::size_t>(dims.back()) *
                                      (static_cast<std::size_t>(dims.back()) / 2 + 1);
        const int rank = static_cast<int>(dims.size());

        fftw_plan plan = nullptr;
        switch (kind) {
            case PlanKind::r2c: {
                auto in = real_buffer(real_n);
                auto out = complex_buffer(complex_n);
                plan = fftw_plan_dft_r2c(rank, dims.data(), in.get(), out.get(), FFTW_ESTIMATE);
                break;
            }
            case PlanKind::c2r: {
                auto in = complex_buffer(complex_n);
                auto out = real_buffer(real_n);
                plan = fftw_plan_dft_c2r(rank, dims.data(), in.get(), out.get(), FFTW_ESTIMATE);
                break;
            }
            case PlanKind::dst1: {
                auto in = real_buffer(real_n);
                auto out = real_buffer(real_n);
                std::vector<fftw_r2r_kind> kinds(dims.size(), FFTW_RODFT00);
                plan = fftw_plan_r2r(rank, dims.data(), in.get(), out.get(), kinds.data(),
                                     FFTW_ESTIMATE);
                break;
            }
        }
        if (!plan) throw std::bad_alloc();
        plans_.emplace(std::move(key), plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<PlanKind, std::vector<int>>, fftw_plan> plans_;
};

inline PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace pmp::fft
