#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pmp/models.hpp"

namespace pmp {
namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    return A;
}

TEST(MatrixExponential, ClosedForms) {
    EXPECT_TRUE(matrix_exponential(Eigen::MatrixXd::Zero(3, 3), 2.0).isApprox(Eigen::MatrixXd::Identity(3, 3), 0.0));

    const Eigen::Vector3d a(-0.7, 0.2, 1.3);
    const Eigen::MatrixXd E = matrix_exponential(a.asDiagonal(), 1.7);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(E(i, i), std::exp(a[i] * 1.7), 1e-12 * std::exp(a[i] * 1.7));
        for (int j = 0; j < 3; ++j)
            if (i != j) {
                EXPECT_EQ(E(i, j), 0.0);
            }
    }

    Eigen::MatrixXd N(2, 2);
    N << 0, 1, 0, 0;
    const Eigen::MatrixXd En = matrix_exponential(N, 1.0);
    EXPECT_NEAR(En(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(En(0, 1), 1.0, 1e-15);
    EXPECT_NEAR(En(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(En(1, 1), 1.0, 1e-15);
}

TEST(MatrixExponential, LargeNormDiagonalAccuracy) {
    const Eigen::Vector2d a(-9.0, 4.0);
    const Eigen::MatrixXd E = matrix_exponential(a.asDiagonal(), 1.0);
    EXPECT_NEAR(E(0, 0), std::exp(-9.0), 1e-12 * std::exp(-9.0) + 1e-16);
    EXPECT_NEAR(E(1, 1), std::exp(4.0), 1e-12 * std::exp(4.0));
}

TEST(MatrixExponential, RotationGenerator) {
    Eigen::MatrixXd J(2, 2);
    J << 0, -1, 1, 0;
    const Eigen::MatrixXd R = matrix_exponential(J, 0.9);
    EXPECT_NEAR(R(0, 0), std::cos(0.9), 1e-14);
    EXPECT_NEAR(R(0, 1), -std::sin(0.9), 1e-14);
    EXPECT_NEAR(R(1, 0), std::sin(0.9), 1e-14);
}

TEST(MatrixExponential, SemigroupAndDeterminant) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 5;
        const Eigen::MatrixXd A = random_matrix(rng, n, 0.8);
        const double s = 0.3 + 0.05 * trial, t = 0.45;
        const Eigen::MatrixXd lhs = matrix_exponential(A, s) * matrix_exponential(A, t);
        const Eigen::MatrixXd rhs = matrix_exponential(A, s + t);
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
        const double det = matrix_exponential(A, t).determinant();
        EXPECT_NEAR(det, std::exp(t * A.trace()), 1e-10 * std::exp(t * A.trace()));
    }
}

TEST(MatrixExponential, RejectsNonFinite) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
    A(0, 1) = NAN;
    EXPECT_THROW(matrix_exponential(A, 1.0), InvalidArgument);
    EXPECT_THROW(matrix_exponential(Eigen::MatrixXd::Zero(2, 2), INFINITY), InvalidArgument);
}

TEST(GaussianDensity, Values) {
    EXPECT_NEAR(gaussian_density(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)), 0.3989422804, 1e-10);
    EXPECT_NEAR(gaussian_density(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Identity(1, 1)), 0.2419707245, 1e-10);
    EXPECT_NEAR(gaussian_density(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)), 0.1591549431, 1e-10);
    EXPECT_THROW(gaussian_density(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
}

TEST(GaussianNoise, MatchesFreeFunction) {
    Eigen::MatrixXd Q(3, 3);
    Q << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
    const GaussianNoise noise(Q);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd w(3);
        for (auto& v : w) v = g(rng);
        const double expect = gaussian_density(w, Q);
        EXPECT_NEAR(noise(std::span<const double>(w.data(), 3)), expect, 1e-14 * expect);
    }
    EXPECT_THROW(GaussianNoise(Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
}

TEST(GaussianNoise, IntegratesToOne) {
    Eigen::MatrixXd Q(2, 2);
    Q << 0.8, 0.25, 0.25, 0.5;
    const GaussianNoise noise(Q);
    const double h = 0.02;
    double s = 0.0;
    for (double x = -8.0; x <= 8.0; x += h)
        for (double y = -8.0; y <= 8.0; y += h) {
            const double w[] = {x, y};
            s += noise(w);
        }
    EXPECT_NEAR(s * h * h, 1.0, 1e-6);
}

TEST(LaplaceNoise, DensityAndCovariance) {
    const LaplaceNoise noise({0.5, 2.0});
    const double w[] = {0.5, -2.0};
    EXPECT_NEAR(noise(w), std::exp(-2.0) / (2 * 0.5 * 2 * 2.0), 1e-16);
    const Eigen::MatrixXd C = noise.covariance();
    EXPECT_NEAR(C(0, 0), 0.5, 1e-16);
    EXPECT_NEAR(C(1, 1), 8.0, 1e-16);
    EXPECT_THROW(LaplaceNoise({0.0}), InvalidArgument);
}

TEST(DiscreteDynamicsModel, Validation) {
    EXPECT_THROW(DiscreteDynamicsModel::gaussian(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)),
                 InvalidArgument);
    EXPECT_THROW(DiscreteDynamicsModel::gaussian(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)),
                 InvalidArgument);
    EXPECT_NO_THROW(DiscreteDynamicsModel::gaussian(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)));
}

TEST(ContinuousDynamicsModel, Validation) {
    Eigen::MatrixXd Q(2, 2);
    Q << 1.0, 0.1, 0.1, 1.0;
    EXPECT_THROW(ContinuousDynamicsModel(Eigen::MatrixXd::Zero(2, 2), Q, 10), InvalidArgument);
    EXPECT_THROW(ContinuousDynamicsModel(Eigen::MatrixXd::Zero(2, 2), -Eigen::MatrixXd::Identity(2, 2), 10),
                 InvalidArgument);
    EXPECT_THROW(ContinuousDynamicsModel(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), 0),
                 InvalidArgument);
    const ContinuousDynamicsModel m(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), 8, 2.0);
    EXPECT_EQ(m.substep_length(), 0.25);
}

}  // namespace
}  // namespace pmp
