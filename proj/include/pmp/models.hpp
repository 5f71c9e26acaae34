#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmp/error.hpp"

namespace pmp {

/// exp(A t) by scaling and squaring with a truncated Taylor series.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A, double t) {
    if (A.rows() != A.cols()) throw InvalidArgument("matrix_exponential: matrix must be square");
    if (!A.allFinite() || !std::isfinite(t))
        throw InvalidArgument("matrix_exponential: non-finite input");
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd M = A * t;

    const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    M /= std::ldexp(1.0, squarings);

    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 30; ++k) {
        term = term * M / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-18 * result.cwiseAbs().maxCoeff()) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

/// Multivariate normal density N(w; 0, cov).
inline double gaussian_density(const Eigen::VectorXd& w, const Eigen::MatrixXd& cov) {
    if (cov.rows() != w.size() || cov.cols() != w.size())
        throw InvalidArgument("gaussian_density: covariance shape does not match vector");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw InvalidArgument("gaussian_density: covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(w);
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const double n = static_cast<double>(w.size());
    return std::exp(-0.5 * z.squaredNorm() - 0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det));
}

/// State-noise density p_W(w) for discrete dynamics.
class NoiseDensity {
public:
    virtual ~NoiseDensity() = default;
    virtual std::size_t dimension() const = 0;
    virtual double operator()(std::span<const double> w) const = 0;
    /// Covariance of the noise; drives grid inflation.
    virtual Eigen::MatrixXd covariance() const = 0;
};

class GaussianNoise final : public NoiseDensity {
public:
    explicit GaussianNoise(Eigen::MatrixXd cov) : cov_(std::move(cov)) {
        if (cov_.rows() != cov_.cols() || cov_.rows() == 0)
            throw InvalidArgument("gaussian noise: covariance must be square and non-empty");
        Eigen::LLT<Eigen::MatrixXd> llt(cov_);
        if (!cov_.allFinite() || llt.info() != Eigen::Success)
            throw InvalidArgument("gaussian noise: covariance is not positive definite");
        n_ = static_cast<std::size_t>(cov_.rows());
        const Eigen::MatrixXd L = llt.matrixL();
        const Eigen::MatrixXd Linv =
            L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.rows()));
        inv_chol_.resize(n_ * n_);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c)
                inv_chol_[r * n_ + c] = Linv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        const double log_det = 2.0 * L.diagonal().array().log().sum();
        norm_ = std::exp(-0.5 * (static_cast<double>(n_) * std::log(2.0 * std::numbers::pi) + log_det));
    }

    std::size_t dimension() const override { return n_; }

    double operator()(std::span<const double> w) const override {
        double q = 0.0;
        for (std::size_t r = 0; r < n_; ++r) {
            const double* row = inv_chol_.data() + r * n_;
            double z = 0.0;
            for (std::size_t c = 0; c <= r; ++c) z += row[c] * w[c];
            q += z * z;
        }
        return norm_ * std::exp(-0.5 * q);
    }

    Eigen::MatrixXd covariance() const override { return cov_; }

private:
    Eigen::MatrixXd cov_;
    std::size_t n_ = 0;
    std::vector<double> inv_chol_;  // row-major L^-1, lower triangular
    double norm_ = 0.0;
};

/// Independent Laplace components: prod_i exp(-|w_i| / b_i) / (2 b_i).
class LaplaceNoise final : public NoiseDensity {
public:
    explicit LaplaceNoise(std::vector<double> scales) : scales_(std::move(scales)) {
        if (scales_.empty()) throw InvalidArgument("laplace noise: no scales given");
        norm_ = 1.0;
        for (auto b : scales_) {
            if (!(b > 0.0) || !std::isfinite(b))
                throw InvalidArgument("laplace noise: scales must be positive");
            norm_ /= 2.0 * b;
        }
    }

    std::size_t dimension() const override { return scales_.size(); }

    double operator()(std::span<const double> w) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < scales_.size(); ++i) s += std::abs(w[i]) / scales_[i];
        return norm_ * std::exp(-s);
    }

    Eigen::MatrixXd covariance() const override {
        Eigen::VectorXd v(static_cast<Eigen::Index>(scales_.size()));
        for (std::size_t i = 0; i < scales_.size(); ++i)
            v[static_cast<Eigen::Index>(i)] = 2.0 * scales_[i] * scales_[i];
        return v.asDiagonal();
    }

    const std::vector<double>& scales() const noexcept { return scales_; }

private:
    std::vector<double> scales_;
    double norm_ = 1.0;
};

/// Wraps an arbitrary callable density together with its covariance.
class FunctionNoise final : public NoiseDensity {
public:
    using Fn = std::function<double(std::span<const double>)>;

    FunctionNoise(Fn fn, Eigen::MatrixXd cov) : fn_(std::move(fn)), cov_(std::move(cov)) {
        if (!fn_) throw InvalidArgument("function noise: empty callable");
        if (cov_.rows() != cov_.cols() || cov_.rows() == 0)
            throw InvalidArgument("function noise: covariance must be square and non-empty");
    }

    std::size_t dimension() const override { return static_cast<std::size_t>(cov_.rows()); }
    double operator()(std::span<const double> w) const override { return fn_(w); }
    Eigen::MatrixXd covariance() const override { return cov_; }

private:
    Fn fn_;
    Eigen::MatrixXd cov_;
};

/// x_{k+1} = F x_k + w_k.
class DiscreteDynamicsModel {
public:
    DiscreteDynamicsModel(Eigen::MatrixXd F, std::shared_ptr<const NoiseDensity> noise)
        : F_(std::move(F)), noise_(std::move(noise)) {
        if (F_.rows() != F_.cols() || F_.rows() == 0)
            throw InvalidArgument("discrete model: F must be square and non-empty");
        if (!F_.allFinite()) throw InvalidArgument("discrete model: F has non-finite entries");
        Eigen::FullPivLU<Eigen::MatrixXd> lu(F_);
        if (!lu.isInvertible()) throw InvalidArgument("discrete model: F is singular");
        if (!noise_) throw InvalidArgument("discrete model: missing noise density");
        if (noise_->dimension() != dimension())
            throw InvalidArgument("discrete model: noise dimension does not match F");
    }

    static DiscreteDynamicsModel gaussian(Eigen::MatrixXd F, Eigen::MatrixXd Q) {
        auto noise = std::make_shared<GaussianNoise>(std::move(Q));
        return DiscreteDynamicsModel(std::move(F), std::move(noise));
    }

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(F_.rows()); }
    const Eigen::MatrixXd& F() const noexcept { return F_; }
    const NoiseDensity& noise() const noexcept { return *noise_; }
    const std::shared_ptr<const NoiseDensity>& noise_ptr() const noexcept { return noise_; }

private:
    Eigen::MatrixXd F_;
    std::shared_ptr<const NoiseDensity> noise_;
};

/// dx = A x dt + dW with diagonal diffusion matrix Q, integrated over one
/// sampling period in `substeps` explicit steps.
class ContinuousDynamicsModel {
public:
    ContinuousDynamicsModel(Eigen::MatrixXd A, const Eigen::MatrixXd& Q, std::size_t substeps,
                            double sampling_period = 1.0)
        : A_(std::move(A)), substeps_(substeps), period_(sampling_period) {
        if (A_.rows() != A_.cols() || A_.rows() == 0)
            throw InvalidArgument("continuous model: A must be square and non-empty");
        if (!A_.allFinite()) throw InvalidArgument("continuous model: A has non-finite entries");
        if (Q.rows() != A_.rows() || Q.cols() != A_.cols())
            throw InvalidArgument("continuous model: Q must have the same shape as A");
        for (Eigen::Index r = 0; r < Q.rows(); ++r)
            for (Eigen::Index c = 0; c < Q.cols(); ++c)
                if (r != c && Q(r, c) != 0.0)
                    throw InvalidArgument(
                        "continuous model: Q must be diagonal (off-diagonal entry at " +
                        std::to_string(r) + "," + std::to_string(c) + ")");
        diffusion_ = Q.diagonal();
        for (Eigen::Index i = 0; i < diffusion_.size(); ++i)
            if (!(diffusion_[i] >= 0.0) || !std::isfinite(diffusion_[i]))
                throw InvalidArgument("continuous model: Q diagonal must be finite and >= 0");
        if (substeps_ == 0) throw InvalidArgument("continuous model: substeps must be positive");
        if (!(period_ > 0.0) || !std::isfinite(period_))
            throw InvalidArgument("continuous model: sampling period must be positive");
    }

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(A_.rows()); }
    const Eigen::MatrixXd& A() const noexcept { return A_; }
    /// Diagonal of Q.
    const Eigen::VectorXd& diffusion() const noexcept { return diffusion_; }
    Eigen::MatrixXd Q() const { return diffusion_.asDiagonal(); }
    std::size_t substeps() const noexcept { return substeps_; }
    double sampling_period() const noexcept { return period_; }
    double substep_length() const noexcept { return period_ / static_cast<double>(substeps_); }

private:
    Eigen::MatrixXd A_;
    Eigen::VectorXd diffusion_;
    std::size_t substeps_;
    double period_;
};

}  // namespace pmp
