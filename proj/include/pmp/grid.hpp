#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmp/error.hpp"
#include "pmp/tensor.hpp"

namespace pmp {

/**
 * Affine lattice of prod(counts) points.
 *
 * The point with multi-index d has coordinates center + basis * (d - d_mid),
 * where d_mid,i = (N_i - 1) / 2. Column i of the basis is the lattice step
 * along axis i in state units. Linear indices follow the row-major order of
 * tensor.hpp, so weights and kernels share one layout.
 */
class LatticeGrid {
public:
    LatticeGrid(Counts counts, Eigen::MatrixXd basis, Eigen::VectorXd center)
        : counts_(std::move(counts)), basis_(std::move(basis)), center_(std::move(center)) {
        const auto n = counts_.size();
        if (n == 0) throw InvalidArgument("grid: state dimension must be positive");
        if (static_cast<std::size_t>(basis_.rows()) != n ||
            static_cast<std::size_t>(basis_.cols()) != n)
            throw InvalidArgument("grid: basis must be " + std::to_string(n) + "x" +
                                  std::to_string(n));
        if (static_cast<std::size_t>(center_.size()) != n)
            throw InvalidArgument("grid: center must have " + std::to_string(n) + " entries");
        for (auto c : counts_)
            if (c == 0) throw InvalidArgument("grid: every count must be positive");
        if (!basis_.allFinite() || !center_.allFinite())
            throw InvalidArgument("grid: non-finite basis or center");
        Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_);
        if (!lu.isInvertible()) throw InvalidArgument("grid: basis is singular");
        volume_ = std::abs(lu.determinant());
        inverse_basis_ = lu.inverse();
    }

    /// Grid whose basis is diag(steps).
    static LatticeGrid axis_aligned(Counts counts, std::span<const double> steps,
                                    Eigen::VectorXd center) {
        if (steps.size() != counts.size())
            throw InvalidArgument("grid: steps must match counts");
        Eigen::VectorXd diag(static_cast<Eigen::Index>(steps.size()));
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (!(steps[i] > 0.0)) throw InvalidArgument("grid: steps must be positive");
            diag[static_cast<Eigen::Index>(i)] = steps[i];
        }
        return LatticeGrid(std::move(counts), diag.asDiagonal(), std::move(center));
    }

    std::size_t dimension() const noexcept { return counts_.size(); }
    const Counts& counts() const noexcept { return counts_; }
    std::size_t size() const noexcept { return element_count(counts_); }
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    const Eigen::MatrixXd& inverse_basis() const noexcept { return inverse_basis_; }
    const Eigen::VectorXd& center() const noexcept { return center_; }

    /// delta = |det B|, the volume of one lattice cell.
    double cell_volume() const noexcept { return volume_; }

    double mid_index(std::size_t axis) const {
        return (static_cast<double>(counts_[axis]) - 1.0) / 2.0;
    }

    /// Euclidean length of the lattice step along an axis.
    double step_length(std::size_t axis) const {
        return basis_.col(static_cast<Eigen::Index>(axis)).norm();
    }

    bool counts_odd() const { return all_odd(counts_); }

    Eigen::VectorXd point_at(std::size_t linear_index) const {
        if (linear_index >= size())
            throw InvalidArgument("point_at: index " + std::to_string(linear_index) +
                                  " out of range for " + std::to_string(size()) + " points");
        std::vector<std::size_t> d(dimension());
        delinearize(linear_index, counts_, d);
        Eigen::VectorXd x(static_cast<Eigen::Index>(dimension()));
        write_point(d, x.data());
        return x;
    }

    /// All points as a row-major (size() x dimension()) coordinate array.
    std::vector<double> all_points() const {
        const auto n = dimension();
        std::vector<double> out(size() * n);
        std::vector<std::size_t> d(n, 0);
        std::size_t i = 0;
        do {
            write_point(d, out.data() + i * n);
            ++i;
        } while (next_index(d, counts_));
        return out;
    }

    /// Continuous multi-index of x: B^-1 (x - c) + d_mid.
    Eigen::VectorXd lattice_coordinates(const Eigen::VectorXd& x) const {
        Eigen::VectorXd u = inverse_basis_ * (x - center_);
        for (std::size_t a = 0; a < dimension(); ++a)
            u[static_cast<Eigen::Index>(a)] += mid_index(a);
        return u;
    }

    friend bool operator==(const LatticeGrid& a, const LatticeGrid& b) {
        return a.counts_ == b.counts_ && a.basis_ == b.basis_ && a.center_ == b.center_;
    }

private:
    void write_point(std::span<const std::size_t> d, double* out) const {
        const auto n = static_cast<Eigen::Index>(dimension());
        for (Eigen::Index r = 0; r < n; ++r) {
            double v = center_[r];
            for (Eigen::Index a = 0; a < n; ++a)
                v += basis_(r, a) * (static_cast<double>(d[static_cast<std::size_t>(a)]) -
                                     mid_index(static_cast<std::size_t>(a)));
            out[r] = v;
        }
    }

    Counts counts_;
    Eigen::MatrixXd basis_;
    Eigen::VectorXd center_;
    Eigen::MatrixXd inverse_basis_;
    double volume_ = 0.0;
};

namespace detail {

/// Transform round-off can leave weights of order -1e-17 * max; zero them.
inline void clamp_roundoff(std::vector<double>& w) {
    for (auto& v : w) v = std::max(v, 0.0);
}

}  // namespace detail

inline Eigen::VectorXd point_at(const LatticeGrid& grid, std::size_t linear_index) {
    return grid.point_at(linear_index);
}

/// Piecewise-constant density: one nonnegative weight (density value) per grid point.
class PointMassDensity {
public:
    PointMassDensity(LatticeGrid grid, std::vector<double> weights)
        : grid_(std::move(grid)), weights_(std::move(weights)) {
        if (weights_.size() != grid_.size())
            throw InvalidArgument("point-mass density: " + std::to_string(weights_.size()) +
                                  " weights for " + std::to_string(grid_.size()) + " points");
        for (auto w : weights_)
            if (!(w >= 0.0) || !std::isfinite(w))
                throw InvalidArgument("point-mass density: weights must be finite and >= 0");
    }

    const LatticeGrid& grid() const noexcept { return grid_; }
    std::span<const double> weights() const noexcept { return weights_; }

    /// delta * sum(weights); 1 for a normalized density.
    double mass() const {
        double s = 0.0;
        for (auto w : weights_) s += w;
        return s * grid_.cell_volume();
    }

    std::vector<double> release_weights() && { return std::move(weights_); }

private:
    LatticeGrid grid_;
    std::vector<double> weights_;
};

inline PointMassDensity normalize(const PointMassDensity& pmd) {
    const double total = pmd.mass();
    if (!(total > 0.0) || !std::isfinite(total))
        throw InvalidArgument("normalize: density has zero or non-finite total mass");
    std::vector<double> w(pmd.weights().begin(), pmd.weights().end());
    for (auto& v : w) v /= total;
    return PointMassDensity(pmd.grid(), std::move(w));
}

template <typename F>
concept EvaluableDensity = std::regular_invocable<const F&, const Eigen::VectorXd&>;

/// Samples f at every grid point and normalizes the result.
template <EvaluableDensity F>
PointMassDensity pmd_from_density(const F& f, const LatticeGrid& grid) {
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = f(grid.point_at(i));
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidArgument("pmd_from_density: density is negative or non-finite at point " +
                                  std::to_string(i));
        w[i] = v;
    }
    return normalize(PointMassDensity(grid, std::move(w)));
}

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Midpoint-rule mean and covariance.
///
/// Sums run in lattice coordinates with mirrored points paired, so a density
/// symmetric about the grid center has mean equal to the center exactly.
inline Moments moments(const PointMassDensity& pmd) {
    const auto& g = pmd.grid();
    const auto n = g.dimension();
    const auto N = g.size();
    const auto w = pmd.weights();
    const double delta = g.cell_volume();
    const auto ni = static_cast<Eigen::Index>(n);

    std::vector<std::size_t> d(n, 0);
    Eigen::VectorXd off(ni);
    auto offsets = [&](std::size_t lin) {
        delinearize(lin, g.counts(), d);
        for (std::size_t a = 0; a < n; ++a)
            off[static_cast<Eigen::Index>(a)] = static_cast<double>(d[a]) - g.mid_index(a);
    };

    // The central reflection of linear index i is N-1-i.
    Eigen::VectorXd m_lat = Eigen::VectorXd::Zero(ni);
    for (std::size_t i = 0; i < N / 2; ++i) {
        const double diff = w[i] - w[N - 1 - i];
        if (diff == 0.0) continue;
        offsets(i);
        m_lat += diff * off;
    }
    m_lat *= delta;

    Eigen::MatrixXd c_lat = Eigen::MatrixXd::Zero(ni, ni);
    for (std::size_t i = 0; i < N; ++i) {
        if (w[i] == 0.0) continue;
        offsets(i);
        off -= m_lat;
        c_lat.noalias() += w[i] * off * off.transpose();
    }
    c_lat *= delta;

    Moments out;
    out.mean = g.center() + g.basis() * m_lat;
    Eigen::MatrixXd cov = g.basis() * c_lat * g.basis().transpose();
    out.covariance = 0.5 * (cov + cov.transpose());
    return out;
}

/**
 * Value of the piecewise-constant density at x.
 *
 * Cells are half-open in lattice coordinates: cell d covers
 * [d - 1/2, d + 1/2) along every axis. Points outside the hull give 0.
 */
inline double evaluate(const PointMassDensity& pmd, const Eigen::VectorXd& x) {
    const auto& g = pmd.grid();
    const Eigen::VectorXd u = g.lattice_coordinates(x);
    std::vector<std::size_t> d(g.dimension());
    for (std::size_t a = 0; a < g.dimension(); ++a) {
        const double cell = std::floor(u[static_cast<Eigen::Index>(a)] + 0.5);
        if (!(cell >= 0.0) || cell >= static_cast<double>(g.counts()[a])) return 0.0;
        d[a] = static_cast<std::size_t>(cell);
    }
    return pmd.weights()[linearize(d, g.counts())];
}

/**
 * Enlarges an odd-count grid so the hull also covers `coverage` noise standard
 * deviations. Spacing, directions and center are unchanged; each axis gains
 * ceil(coverage * sigma_i) points on both sides, with sigma_i measured in
 * lattice steps.
 */
inline LatticeGrid inflated_grid(const LatticeGrid& grid, const Eigen::MatrixXd& noise_cov,
                                 double coverage = 3.0) {
    const auto n = static_cast<Eigen::Index>(grid.dimension());
    if (!grid.counts_odd()) throw InvalidArgument("inflated_grid: counts must be odd");
    if (!(coverage > 0.0)) throw InvalidArgument("inflated_grid: coverage must be positive");
    if (noise_cov.rows() != n || noise_cov.cols() != n)
        throw InvalidArgument("inflated_grid: noise covariance has wrong shape");
    if (!noise_cov.allFinite() || (noise_cov - noise_cov.transpose()).norm() >
                                      1e-12 * std::max(1.0, noise_cov.norm()))
        throw InvalidArgument("inflated_grid: noise covariance must be finite and symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(noise_cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, noise_cov.norm()))
        throw InvalidArgument("inflated_grid: noise covariance is not positive semidefinite");

    const Eigen::MatrixXd lattice_cov =
        grid.inverse_basis() * noise_cov * grid.inverse_basis().transpose();
    Counts counts = grid.counts();
    for (Eigen::Index a = 0; a < n; ++a) {
        const double sigma = std::sqrt(std::max(0.0, lattice_cov(a, a)));
        // Tolerance keeps exact products such as 3 * 1.0 from rounding up a step.
        const double extra = std::ceil(coverage * sigma - 1e-9);
        if (extra > 0.0) counts[static_cast<std::size_t>(a)] += 2 * static_cast<std::size_t>(extra);
    }
    return LatticeGrid(std::move(counts), grid.basis(), grid.center());
}

/// Multilinear interpolation of the source weights onto the target points,
/// zero outside the source hull, then renormalized on the target grid.
inline PointMassDensity resample_onto(const PointMassDensity& pmd, const LatticeGrid& target) {
    const auto& src = pmd.grid();
    const auto n = src.dimension();
    if (target.dimension() != n)
        throw InvalidArgument("resample_onto: target grid dimension differs from source");

    const auto w = pmd.weights();
    const auto pts = target.all_points();
    std::vector<double> out(target.size(), 0.0);
    std::vector<std::size_t> lo(n), corner(n);
    std::vector<double> frac(n);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));

    for (std::size_t t = 0; t < out.size(); ++t) {
        for (std::size_t a = 0; a < n; ++a) x[static_cast<Eigen::Index>(a)] = pts[t * n + a];
        const Eigen::VectorXd u = src.lattice_coordinates(x);
        bool inside = true;
        for (std::size_t a = 0; a < n && inside; ++a) {
            double ua = u[static_cast<Eigen::Index>(a)];
            const double r = std::round(ua);
            if (std::abs(ua - r) < 1e-9) ua = r;
            const double top = static_cast<double>(src.counts()[a] - 1);
            if (ua < 0.0 || ua > top) {
                inside = false;
                break;
            }
            double base = std::floor(ua);
            if (base == top && top > 0.0) base -= 1.0;
            lo[a] = static_cast<std::size_t>(base);
            frac[a] = ua - base;
        }
        if (!inside) continue;

        double v = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            double c = 1.0;
            for (std::size_t a = 0; a < n && c != 0.0; ++a) {
                const bool up = (mask >> a) & 1U;
                c *= up ? frac[a] : 1.0 - frac[a];
                corner[a] = lo[a] + (up ? 1 : 0);
            }
            if (c == 0.0) continue;
            v += c * w[linearize(corner, src.counts())];
        }
        out[t] = v;
    }
    return normalize(PointMassDensity(target, std::move(out)));
}

}  // namespace pmp
