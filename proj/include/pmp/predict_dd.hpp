#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmp/error.hpp"
#include "pmp/grid.hpp"
#include "pmp/models.hpp"
#include "pmp/parallel.hpp"
#include "pmp/tensor.hpp"
#include "pmp/transforms.hpp"

namespace pmp {

/// Reshaped middle row of the transition matrix.
struct TransitionKernel {
    Tensor tensor;       // p_W(x'_m - F x_d) * delta at multi-index d
    double cell_volume;  // delta of the source grid
};

/// Predictive grid x'_i = F x_i: same counts, basis F*B, center F*c.
inline LatticeGrid dd_new_grid(const LatticeGrid& grid, const Eigen::MatrixXd& F) {
    const auto n = static_cast<Eigen::Index>(grid.dimension());
    if (F.rows() != n || F.cols() != n)
        throw InvalidArgument("dd_new_grid: F must be " + std::to_string(n) + "x" +
                              std::to_string(n));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(F);
    if (!lu.isInvertible()) throw InvalidArgument("dd_new_grid: F is singular");
    return LatticeGrid(grid.counts(), F * grid.basis(), F * grid.center());
}

namespace detail {

inline void check_model_dimension(const DiscreteDynamicsModel& model, const LatticeGrid& grid) {
    if (model.dimension() != grid.dimension())
        throw InvalidArgument("discrete prediction: model dimension " +
                              std::to_string(model.dimension()) + " != grid dimension " +
                              std::to_string(grid.dimension()));
}

/// F x_i for every point of the grid, row-major (N x n).
inline std::vector<double> mapped_points(const LatticeGrid& grid, const Eigen::MatrixXd& F) {
    const auto n = grid.dimension();
    auto pts = grid.all_points();
    std::vector<double> out(pts.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double* x = pts.data() + i * n;
        double* y = out.data() + i * n;
        for (std::size_t r = 0; r < n; ++r) {
            double v = 0.0;
            for (std::size_t c = 0; c < n; ++c)
                v += F(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x[c];
            y[r] = v;
        }
    }
    return out;
}

/// p_W(target - source), the transition density between two points.
inline double transition_density(const NoiseDensity& noise, const double* target,
                                 const double* source, std::span<double> scratch) {
    for (std::size_t r = 0; r < scratch.size(); ++r) scratch[r] = target[r] - source[r];
    return noise(scratch);
}

}  // namespace detail

/// Dense transition matrix T(j, i) = p_W(x_to(j) - F x_from(i)) * delta_from.
inline Eigen::MatrixXd build_tpm(const DiscreteDynamicsModel& model, const LatticeGrid& from,
                                 const LatticeGrid& to) {
    detail::check_model_dimension(model, from);
    detail::check_model_dimension(model, to);
    const auto n = from.dimension();
    const auto source = detail::mapped_points(from, model.F());
    const auto target = to.all_points();
    const double delta = from.cell_volume();
    Eigen::MatrixXd T(static_cast<Eigen::Index>(to.size()), static_cast<Eigen::Index>(from.size()));
    std::vector<double> scratch(n);
    for (std::size_t j = 0; j < to.size(); ++j)
        for (std::size_t i = 0; i < from.size(); ++i)
            T(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                detail::transition_density(model.noise(), target.data() + j * n,
                                           source.data() + i * n, scratch) *
                delta;
    return T;
}

/**
 * Standard O(N^2) prediction onto the grid F*x, before renormalization.
 *
 * Evaluates the transition matrix row by row without storing it, so it also
 * runs for grids whose full matrix would not fit in memory.
 */
inline PointMassDensity standard_dd_propagate(const PointMassDensity& pmd,
                                              const DiscreteDynamicsModel& model) {
    const auto& grid = pmd.grid();
    detail::check_model_dimension(model, grid);
    LatticeGrid next = dd_new_grid(grid, model.F());
    const auto n = grid.dimension();
    const auto N = grid.size();
    const auto source = detail::mapped_points(grid, model.F());
    const auto target = next.all_points();
    const auto w = pmd.weights();
    const double delta = grid.cell_volume();
    const auto& noise = model.noise();

    std::vector<double> out(N, 0.0);
    parallel_for(N, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scratch(n);
        for (std::size_t j = begin; j < end; ++j) {
            const double* xj = target.data() + j * n;
            double acc = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                acc += detail::transition_density(noise, xj, source.data() + i * n, scratch) * w[i];
            out[j] = acc * delta;
        }
    });
    return PointMassDensity(std::move(next), std::move(out));
}

inline PointMassDensity standard_dd_predict(const PointMassDensity& pmd,
                                            const DiscreteDynamicsModel& model) {
    return normalize(standard_dd_propagate(pmd, model));
}

/// Row m = (N-1)/2 (0-based) of build_tpm(model, grid, dd_new_grid(grid, F)),
/// reshaped to the grid axes. Requires odd counts so that m is the grid center.
inline TransitionKernel middle_row_kernel(const DiscreteDynamicsModel& model,
                                          const LatticeGrid& grid) {
    detail::check_model_dimension(model, grid);
    if (!grid.counts_odd())
        throw InvalidArgument("middle_row_kernel: counts must be odd, got " +
                              format_counts(grid.counts()));
    const LatticeGrid next = dd_new_grid(grid, model.F());
    const auto n = grid.dimension();
    const auto N = grid.size();
    const auto source = detail::mapped_points(grid, model.F());
    const Eigen::VectorXd middle = next.point_at((N - 1) / 2);
    const double delta = grid.cell_volume();

    Tensor kernel(grid.counts());
    std::vector<double> scratch(n);
    for (std::size_t i = 0; i < N; ++i)
        kernel[i] =
            detail::transition_density(model.noise(), middle.data(), source.data() + i * n, scratch) *
            delta;
    return {std::move(kernel), delta};
}

/**
 * Transition densities for every index offset between two grid points:
 * counts 2N_i - 1, the element at multi-index k holds offset (N - 1) - k.
 *
 * Row m alone only reaches offsets up to (N_i - 1) / 2, so it reproduces the
 * full matrix only when the noise density vanishes beyond half the grid span.
 * The central N_1 x ... x N_n window of this tensor is the middle row.
 */
inline TransitionKernel offset_kernel(const DiscreteDynamicsModel& model, const LatticeGrid& grid) {
    detail::check_model_dimension(model, grid);
    if (!grid.counts_odd())
        throw InvalidArgument("offset_kernel: counts must be odd, got " +
                              format_counts(grid.counts()));
    Counts wide(grid.counts().size());
    for (std::size_t a = 0; a < wide.size(); ++a) wide[a] = 2 * grid.counts()[a] - 1;
    // Same center and basis, so wide point k sits at index offset k - (N - 1).
    const LatticeGrid extended(wide, grid.basis(), grid.center());
    const auto n = grid.dimension();
    const auto source = detail::mapped_points(extended, model.F());
    const Eigen::VectorXd middle = dd_new_grid(grid, model.F()).point_at((grid.size() - 1) / 2);
    const double delta = grid.cell_volume();

    Tensor kernel(wide);
    std::vector<double> scratch(n);
    for (std::size_t i = 0; i < kernel.size(); ++i)
        kernel[i] =
            detail::transition_density(model.noise(), middle.data(), source.data() + i * n, scratch) *
            delta;
    return {std::move(kernel), delta};
}

/// FFT-convolution prediction onto the grid F*x, before renormalization.
inline PointMassDensity efficient_dd_propagate(const PointMassDensity& pmd,
                                               const DiscreteDynamicsModel& model) {
    const auto& grid = pmd.grid();
    const TransitionKernel kernel = offset_kernel(model, grid);
    Tensor signal = reshape_to_physical({pmd.weights().begin(), pmd.weights().end()}, grid.counts());
    auto w = reshape_to_linear(convolve_fft_centered(kernel.tensor, signal));
    detail::clamp_roundoff(w);
    return PointMassDensity(dd_new_grid(grid, model.F()), std::move(w));
}

inline PointMassDensity efficient_dd_predict(const PointMassDensity& pmd,
                                             const DiscreteDynamicsModel& model) {
    return normalize(efficient_dd_propagate(pmd, model));
}

/// Resamples the density onto a source grid enlarged so that the predictive
/// grid also covers `coverage` noise standard deviations. Returns the input
/// unchanged when no enlargement is needed.
inline PointMassDensity inflate_for_noise(const PointMassDensity& pmd,
                                          const DiscreteDynamicsModel& model,
                                          double coverage = 3.0) {
    detail::check_model_dimension(model, pmd.grid());
    // Noise seen in the source frame: the predictive basis is F*B.
    const Eigen::MatrixXd Finv = model.F().inverse();
    Eigen::MatrixXd cov = Finv * model.noise().covariance() * Finv.transpose();
    cov = 0.5 * (cov + cov.transpose());
    LatticeGrid inflated = inflated_grid(pmd.grid(), cov, coverage);
    if (inflated.counts() == pmd.grid().counts()) return pmd;
    return resample_onto(pmd, inflated);
}

inline PointMassDensity propagate_with_noise_inflation(const PointMassDensity& pmd,
                                                       const DiscreteDynamicsModel& model,
                                                       double coverage = 3.0) {
    return efficient_dd_propagate(inflate_for_noise(pmd, model, coverage), model);
}

inline PointMassDensity predict_with_noise_inflation(const PointMassDensity& pmd,
                                                     const DiscreteDynamicsModel& model,
                                                     double coverage = 3.0) {
    return normalize(propagate_with_noise_inflation(pmd, model, coverage));
}

}  // namespace pmp
