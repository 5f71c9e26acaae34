#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "pmp/error.hpp"
#include "pmp/fft.hpp"
#include "pmp/tensor.hpp"

namespace pmp {

namespace detail {

inline void check_convolution_shapes(const Tensor& kernel, const Tensor& signal) {
    if (kernel.counts() != signal.counts())
        throw InvalidArgument("convolution: kernel counts " + format_counts(kernel.counts()) +
                              " differ from signal counts " + format_counts(signal.counts()));
    if (kernel.rank() == 0) throw InvalidArgument("convolution: rank-0 tensor");
    if (!all_odd(kernel.counts()))
        throw InvalidArgument("convolution: counts must be odd, got " +
                              format_counts(kernel.counts()));
}

inline void check_centered_shapes(const Tensor& kernel, const Tensor& signal) {
    if (kernel.rank() == 0 || kernel.rank() != signal.rank())
        throw InvalidArgument("convolution: kernel rank " + std::to_string(kernel.rank()) +
                              " does not match signal rank " + std::to_string(signal.rank()));
    for (std::size_t a = 0; a < kernel.rank(); ++a)
        if (kernel.counts()[a] % 2 == 0 || kernel.counts()[a] > 2 * signal.counts()[a] - 1)
            throw InvalidArgument("convolution: kernel counts " + format_counts(kernel.counts()) +
                                  " must be odd and at most 2N-1 for signal counts " +
                                  format_counts(signal.counts()));
}

}  // namespace detail

/**
 * "Same"-mode N-dimensional convolution by direct summation.
 *
 * The kernel is laid out like a reshaped transition-matrix row: with
 * h = (K - 1) / 2 per axis, the element at multi-index k holds the transition
 * density for index offset h - k. Hence
 *
 *     out(d) = sum_e kernel(h - d + e) * signal(e),
 *
 * with out-of-range kernel indices contributing zero. Kernel counts K must be
 * odd and at most 2N - 1 per axis; K = 2N - 1 covers every offset between two
 * grid points. O(N * K); used as the reference for convolve_fft_centered.
 */
inline Tensor convolve_direct_centered(const Tensor& kernel, const Tensor& signal) {
    detail::check_centered_shapes(kernel, signal);
    const auto& counts = signal.counts();
    const auto& kcounts = kernel.counts();
    const auto n = counts.size();
    Tensor out(counts);

    std::vector<std::size_t> d(n, 0), e(n), k(n);
    std::size_t out_lin = 0;
    do {
        double acc = 0.0;
        std::fill(e.begin(), e.end(), 0);
        std::size_t e_lin = 0;
        do {
            bool valid = true;
            for (std::size_t a = 0; a < n; ++a) {
                const auto h = static_cast<long long>((kcounts[a] - 1) / 2);
                const long long idx = h - static_cast<long long>(d[a]) + static_cast<long long>(e[a]);
                if (idx < 0 || idx >= static_cast<long long>(kcounts[a])) {
                    valid = false;
                    break;
                }
                k[a] = static_cast<std::size_t>(idx);
            }
            if (valid) acc += kernel.at(k) * signal[e_lin];
            ++e_lin;
        } while (next_index(e, counts));
        out[out_lin++] = acc;
    } while (next_index(d, counts));
    return out;
}

/// convolve_direct_centered with kernel counts equal to the signal counts.
inline Tensor convolve_direct_nd(const Tensor& kernel, const Tensor& signal) {
    detail::check_convolution_shapes(kernel, signal);
    return convolve_direct_centered(kernel, signal);
}

/**
 * Same result as convolve_direct_centered in O(M log M).
 *
 * Each axis is zero-padded to a length M_i >= 2N_i - 1 of the form {1,3,9} * 2^a. The
 * axis-reversed kernel is cyclically convolved with the signal and the window
 * starting at h = (K_i - 1) / 2 is returned; with K_i <= 2N_i - 1 no wrapped
 * term reaches that window.
 */
inline Tensor convolve_fft_centered(const Tensor& kernel, const Tensor& signal) {
    detail::check_centered_shapes(kernel, signal);
    const auto& counts = signal.counts();
    const auto& kcounts = kernel.counts();
    const auto n = counts.size();

    std::vector<int> dims(n);
    std::vector<std::size_t> stride(n);
    std::size_t real_n = 1;
    for (std::size_t a = n; a-- > 0;) {
        const auto len = fft::smooth_size(2 * counts[a] - 1);
        dims[a] = static_cast<int>(len);
        stride[a] = real_n;
        real_n *= len;
    }
    const auto last = static_cast<std::size_t>(dims.back());
    const std::size_t complex_n = real_n / last * (last / 2 + 1);

    auto kbuf = fft::real_buffer(real_n);
    auto sbuf = fft::real_buffer(real_n);
    std::fill_n(kbuf.get(), real_n, 0.0);
    std::fill_n(sbuf.get(), real_n, 0.0);

    const std::size_t N = signal.size();
    std::vector<std::size_t> d(n, 0);
    for (std::size_t lin = 0; lin < N; ++lin) {
        std::size_t pos = 0;
        for (std::size_t a = 0; a < n; ++a) pos += d[a] * stride[a];
        sbuf[pos] = signal[lin];
        next_index(d, counts);
    }
    // Reversing the linear index reverses every axis at once.
    const std::size_t K = kernel.size();
    std::fill(d.begin(), d.end(), 0);
    for (std::size_t lin = 0; lin < K; ++lin) {
        std::size_t pos = 0;
        for (std::size_t a = 0; a < n; ++a) pos += d[a] * stride[a];
        kbuf[pos] = kernel[K - 1 - lin];
        next_index(d, kcounts);
    }

    auto kspec = fft::complex_buffer(complex_n);
    auto sspec = fft::complex_buffer(complex_n);
    auto& cache = fft::plan_cache();
    fftw_plan forward = cache.get(fft::PlanKind::r2c, dims);
    fftw_plan backward = cache.get(fft::PlanKind::c2r, dims);
    fftw_execute_dft_r2c(forward, kbuf.get(), kspec.get());
    fftw_execute_dft_r2c(forward, sbuf.get(), sspec.get());

    for (std::size_t i = 0; i < complex_n; ++i) {
        const double re = kspec[i][0] * sspec[i][0] - kspec[i][1] * sspec[i][1];
        const double im = kspec[i][0] * sspec[i][1] + kspec[i][1] * sspec[i][0];
        kspec[i][0] = re;
        kspec[i][1] = im;
    }
    fftw_execute_dft_c2r(backward, kspec.get(), sbuf.get());

    const double scale = 1.0 / static_cast<double>(real_n);
    Tensor out(counts);
    std::fill(d.begin(), d.end(), 0);
    for (std::size_t lin = 0; lin < N; ++lin) {
        std::size_t pos = 0;
        for (std::size_t a = 0; a < n; ++a) pos += (d[a] + (kcounts[a] - 1) / 2) * stride[a];
        out[lin] = sbuf[pos] * scale;
        next_index(d, counts);
    }
    return out;
}

/// convolve_fft_centered with kernel counts equal to the signal counts.
inline Tensor convolve_fft_nd(const Tensor& kernel, const Tensor& signal) {
    detail::check_convolution_shapes(kernel, signal);
    return convolve_fft_centered(kernel, signal);
}

/// Type-I DST applied along every axis:
/// out(i_1..i_n) = sum_k t(k_1..k_n) prod_a sin(i_a k_a pi / (N_a + 1)), 1-based i, k.
/// Applying it twice and scaling by prod_a 2 / (N_a + 1) is the identity.
inline Tensor dst1_nd(const Tensor& t) {
    if (t.rank() == 0) throw InvalidArgument("dst1_nd: rank-0 tensor");
    std::vector<int> dims;
    dims.reserve(t.rank());
    for (auto c : t.counts()) {
        if (c == 0) throw InvalidArgument("dst1_nd: zero-length axis");
        dims.push_back(static_cast<int>(c));
    }
    const std::size_t N = t.size();
    auto in = fft::real_buffer(N);
    auto out = fft::real_buffer(N);
    std::copy(t.values().begin(), t.values().end(), in.get());

    // FFTW's RODFT00 carries an extra factor 2 per axis.
    fftw_execute_r2r(fft::plan_cache().get(fft::PlanKind::dst1, dims), in.get(), out.get());
    const double scale = std::ldexp(1.0, -static_cast<int>(t.rank()));
    Tensor result(t.counts());
    for (std::size_t i = 0; i < N; ++i) result[i] = out[i] * scale;
    return result;
}

/// out(i) = sum_k v(k) sin(i k pi / (N + 1)), i, k = 1..N.
inline std::vector<double> dst1_1d(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("dst1_1d: empty input");
    Counts counts{v.size()};
    return std::move(dst1_nd(Tensor(std::move(counts), std::move(v)))).release();
}

}  // namespace pmp
