#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmp/error.hpp"
#include "pmp/grid.hpp"
#include "pmp/models.hpp"
#include "pmp/tensor.hpp"
#include "pmp/transforms.hpp"

namespace pmp {

/// Product of the per-substep eigenvalue tensors of F_diff over one sampling period.
struct SpectralDiffusionOperator {
    Tensor lambda_pow;
    std::size_t substeps;
    LatticeGrid final_grid;
};

/// Grid moved by the flow of dx = A x dt over dt: basis and center mapped by exp(A dt).
inline LatticeGrid cd_substep_grid(const LatticeGrid& grid, const Eigen::MatrixXd& A, double dt) {
    const Eigen::MatrixXd phi = matrix_exponential(A, dt);
    return LatticeGrid(grid.counts(), phi * grid.basis(), phi * grid.center());
}

namespace detail {

inline LatticeGrid move_grid(const LatticeGrid& grid, const Eigen::MatrixXd& phi) {
    return LatticeGrid(grid.counts(), phi * grid.basis(), phi * grid.center());
}

inline void check_model_dimension(const ContinuousDynamicsModel& model, const LatticeGrid& grid) {
    if (model.dimension() != grid.dimension())
        throw InvalidArgument("continuous prediction: model dimension " +
                              std::to_string(model.dimension()) + " != grid dimension " +
                              std::to_string(grid.dimension()));
}

/// b_i = dt * Q_ii / (2 step_i^2), the off-diagonal of the 1D operator S_i.
inline std::vector<double> coupling(const ContinuousDynamicsModel& model, const LatticeGrid& grid) {
    std::vector<double> b(grid.dimension());
    const double dt = model.substep_length();
    for (std::size_t a = 0; a < b.size(); ++a) {
        const double h = grid.step_length(a);
        b[a] = dt * model.diffusion()[static_cast<Eigen::Index>(a)] / (2.0 * h * h);
    }
    return b;
}

/// Per-axis ratio dt*Q_ii/step_i^2 must not exceed 1/2; their sum must not exceed 1.
inline void check_stability(const ContinuousDynamicsModel& model, const LatticeGrid& grid,
                            std::size_t substep, double margin = 1.0) {
    const auto b = coupling(model, grid);
    double total = 0.0;
    std::size_t worst = 0;
    for (std::size_t a = 0; a < b.size(); ++a) {
        const double ratio = 2.0 * b[a];
        total += ratio;
        if (ratio > 2.0 * b[worst]) worst = a;
        if (ratio > margin * 0.5 * (1.0 + 1e-12)) throw StabilityError(a, substep, ratio);
    }
    if (total > margin * (1.0 + 1e-12)) throw StabilityError(worst, substep, 2.0 * b[worst]);
}

}  // namespace detail

/// Rejects the model/grid pair if any substep of the schedule violates the
/// explicit-scheme stability condition. Throws StabilityError naming the axis.
inline void check_cd_stability(const ContinuousDynamicsModel& model, const LatticeGrid& grid) {
    detail::check_model_dimension(model, grid);
    const Eigen::MatrixXd phi = matrix_exponential(model.A(), model.substep_length());
    LatticeGrid g = grid;
    for (std::size_t s = 0; s < model.substeps(); ++s) {
        detail::check_stability(model, g, s);
        if (s + 1 < model.substeps()) g = detail::move_grid(g, phi);
    }
}

/// Smallest substep count whose schedule satisfies the stability condition
/// with the given margin (0.8 leaves 20% headroom).
inline std::size_t default_substeps(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                    const LatticeGrid& grid, double sampling_period = 1.0,
                                    double margin = 0.8, std::size_t max_substeps = 1'000'000) {
    auto stable = [&](std::size_t l) {
        const ContinuousDynamicsModel model(A, Q, l, sampling_period);
        const Eigen::MatrixXd phi = matrix_exponential(A, model.substep_length());
        LatticeGrid g = grid;
        try {
            for (std::size_t s = 0; s < l; ++s) {
                detail::check_stability(model, g, s, margin);
                if (s + 1 < l) g = detail::move_grid(g, phi);
            }
        } catch (const StabilityError&) {
            return false;
        }
        return true;
    };
    std::size_t hi = 1;
    while (!stable(hi)) {
        if (hi >= max_substeps)
            throw InvalidArgument("default_substeps: no stable schedule within " +
                                  std::to_string(max_substeps) + " substeps");
        hi = std::min(hi * 2, max_substeps);
    }
    std::size_t lo = hi / 2;  // unstable (or 0)
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (stable(mid) ? hi : lo) = mid;
    }
    return hi;
}

/**
 * Dense finite-difference operator for one substep on the given (current) grid:
 *
 *     F_diff = (1 - dt tr A) I + S_1 (+) ... (+) S_n,
 *     S_i    = dt / step_i^2 * tridiag(Q_ii / 2, -Q_ii, Q_ii / 2),
 *
 * where (+) is the Kronecker sum in the row-major axis order.
 */
inline Eigen::MatrixXd build_fdiff(const ContinuousDynamicsModel& model, const LatticeGrid& grid) {
    detail::check_model_dimension(model, grid);
    detail::check_stability(model, grid, 0);
    const auto& counts = grid.counts();
    const auto n = counts.size();
    const auto N = static_cast<Eigen::Index>(grid.size());
    const auto b = detail::coupling(model, grid);
    const double base = 1.0 - model.substep_length() * model.A().trace();

    std::vector<std::size_t> stride(n);
    std::size_t s = 1;
    for (std::size_t a = n; a-- > 0;) {
        stride[a] = s;
        s *= counts[a];
    }

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    std::vector<std::size_t> d(n, 0);
    for (Eigen::Index i = 0; i < N; ++i) {
        double diag = base;
        for (std::size_t a = 0; a < n; ++a) {
            diag -= 2.0 * b[a];
            const auto st = static_cast<Eigen::Index>(stride[a]);
            if (d[a] > 0) M(i, i - st) = b[a];
            if (d[a] + 1 < counts[a]) M(i, i + st) = b[a];
        }
        M(i, i) = diag;
        next_index(d, counts);
    }
    return M;
}

/// Closed-form spectrum of build_fdiff(model, grid) laid out on the grid axes:
/// entry (k_1-1, ..., k_n-1) is a + sum_i 2 b_i cos(k_i pi / (N_i + 1)).
inline Tensor fdiff_eigenvalues(const ContinuousDynamicsModel& model, const LatticeGrid& grid) {
    detail::check_model_dimension(model, grid);
    detail::check_stability(model, grid, 0);
    const auto& counts = grid.counts();
    const auto n = counts.size();
    const auto b = detail::coupling(model, grid);
    double a0 = 1.0 - model.substep_length() * model.A().trace();
    for (auto v : b) a0 -= 2.0 * v;

    std::vector<std::vector<double>> axis_terms(n);
    for (std::size_t a = 0; a < n; ++a) {
        axis_terms[a].resize(counts[a]);
        for (std::size_t k = 0; k < counts[a]; ++k)
            axis_terms[a][k] = 2.0 * b[a] *
                               std::cos(static_cast<double>(k + 1) * std::numbers::pi /
                                        static_cast<double>(counts[a] + 1));
    }

    Tensor lambda(counts);
    std::vector<std::size_t> d(n, 0);
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        double v = a0;
        for (std::size_t a = 0; a < n; ++a) v += axis_terms[a][d[a]];
        lambda[i] = v;
        next_index(d, counts);
    }
    return lambda;
}

/// Accumulates the eigenvalue tensors of every substep while moving the grid.
inline SpectralDiffusionOperator build_spectral_operator(const ContinuousDynamicsModel& model,
                                                         const LatticeGrid& grid) {
    check_cd_stability(model, grid);
    const Eigen::MatrixXd phi = matrix_exponential(model.A(), model.substep_length());
    Tensor pow(grid.counts());
    std::fill(pow.values().begin(), pow.values().end(), 1.0);
    LatticeGrid g = grid;
    for (std::size_t s = 0; s < model.substeps(); ++s) {
        const Tensor lambda = fdiff_eigenvalues(model, g);
        for (std::size_t i = 0; i < pow.size(); ++i) pow[i] *= lambda[i];
        g = detail::move_grid(g, phi);
    }
    return {std::move(pow), model.substeps(), std::move(g)};
}

/// Explicit finite-difference stepping with the moving grid, before
/// renormalization. Each substep assembles the dense N x N operator.
inline PointMassDensity standard_cd_propagate(const PointMassDensity& pmd,
                                              const ContinuousDynamicsModel& model) {
    check_cd_stability(model, pmd.grid());
    const Eigen::MatrixXd phi = matrix_exponential(model.A(), model.substep_length());
    const auto N = static_cast<Eigen::Index>(pmd.grid().size());
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(pmd.weights().data(), N);
    Eigen::VectorXd next(N);
    LatticeGrid g = pmd.grid();
    for (std::size_t s = 0; s < model.substeps(); ++s) {
        next.noalias() = build_fdiff(model, g) * w;
        w.swap(next);
        g = detail::move_grid(g, phi);
    }
    std::vector<double> out(w.data(), w.data() + N);
    detail::clamp_roundoff(out);
    return PointMassDensity(std::move(g), std::move(out));
}

inline PointMassDensity standard_cd_predict(const PointMassDensity& pmd,
                                            const ContinuousDynamicsModel& model) {
    return normalize(standard_cd_propagate(pmd, model));
}

/// Applies a prepared spectral operator: S(lambda_pow . S(w)) * prod 2/(N_i+1).
inline PointMassDensity apply_spectral_operator(const PointMassDensity& pmd,
                                                const SpectralDiffusionOperator& op) {
    const auto& counts = pmd.grid().counts();
    if (op.lambda_pow.counts() != counts)
        throw InvalidArgument("spectral operator: counts do not match the density grid");
    Tensor coeffs = dst1_nd(reshape_to_physical({pmd.weights().begin(), pmd.weights().end()}, counts));
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= op.lambda_pow[i];
    Tensor back = dst1_nd(coeffs);
    double scale = 1.0;
    for (auto c : counts) scale *= 2.0 / static_cast<double>(c + 1);
    auto w = reshape_to_linear(std::move(back));
    for (auto& v : w) v *= scale;
    detail::clamp_roundoff(w);
    return PointMassDensity(op.final_grid, std::move(w));
}

/// Sine-transform prediction over one sampling period, before renormalization.
inline PointMassDensity efficient_cd_propagate(const PointMassDensity& pmd,
                                               const ContinuousDynamicsModel& model) {
    return apply_spectral_operator(pmd, build_spectral_operator(model, pmd.grid()));
}

inline PointMassDensity efficient_cd_predict(const PointMassDensity& pmd,
                                             const ContinuousDynamicsModel& model) {
    return normalize(efficient_cd_propagate(pmd, model));
}

/// Describes how exp(A dt) shears the lattice, or nullopt when the angles
/// between basis columns are preserved. Per-axis diffusion is only an
/// approximation of the true diffusion on a sheared lattice.
inline std::optional<std::string> shear_diagnostic(const ContinuousDynamicsModel& model,
                                                   const LatticeGrid& grid) {
    detail::check_model_dimension(model, grid);
    const Eigen::MatrixXd phi = matrix_exponential(model.A(), model.sampling_period());
    const Eigen::MatrixXd before = grid.basis();
    const Eigen::MatrixXd after = phi * before;
    double worst = 0.0;
    std::size_t wa = 0, wb = 0;
    for (Eigen::Index a = 0; a < before.cols(); ++a)
        for (Eigen::Index c = a + 1; c < before.cols(); ++c) {
            const double cos0 = before.col(a).dot(before.col(c)) / (before.col(a).norm() * before.col(c).norm());
            const double cos1 = after.col(a).dot(after.col(c)) / (after.col(a).norm() * after.col(c).norm());
            if (std::abs(cos1 - cos0) > worst) {
                worst = std::abs(cos1 - cos0);
                wa = static_cast<std::size_t>(a);
                wb = static_cast<std::size_t>(c);
            }
        }
    if (worst <= 1e-9) return std::nullopt;
    std::ostringstream msg;
    msg << "{\"warning\":\"lattice_shear\",\"axes\":[" << wa << "," << wb
        << "],\"cosine_change\":" << worst << "}";
    return msg.str();
}

}  // namespace pmp
