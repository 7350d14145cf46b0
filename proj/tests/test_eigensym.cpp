#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "switchcode/eigensym.hpp"
#include "switchcode/rng.hpp"

using namespace switchcode;

namespace {

Matrix random_symmetric(Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i <= j; ++i) {
            const double v = 2.0 * rng.uniform() - 1.0;
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

}  // namespace

TEST_CASE("diagonal matrix eigenpairs are exact") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = 2.0;
    a(1, 1) = -1.0;
    a(2, 2) = 5.0;
    const SymmetricEigen result = eigen_symmetric(a);
    CHECK(result.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(result.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(result.eigenvalues[2] == doctest::Approx(-1.0).epsilon(1e-14));
    // Rows are eigenvectors; diagonal input means signed unit vectors.
    CHECK(std::abs(result.eigenvectors(0, 2)) == doctest::Approx(1.0));
    CHECK(std::abs(result.eigenvectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(result.eigenvectors(2, 1)) == doctest::Approx(1.0));
}

TEST_CASE("asymmetric input is rejected") {
    Matrix a(2, 2);
    a << 1.0, 2.0, 3.0, 4.0;
    CHECK_THROWS_AS(eigen_symmetric(a), std::invalid_argument);
}

TEST_CASE("matches an independent solver on random symmetric matrices") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Index n = 2 + Index(seed % 7);
        const Matrix a = random_symmetric(n, 1000 + seed);
        const SymmetricEigen mine = eigen_symmetric(a);

        Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
        REQUIRE(oracle.info() == Eigen::Success);
        // Oracle sorts ascending; ours descending.
        Vector oracle_vals = oracle.eigenvalues().reverse();
        for (Index i = 0; i < n; ++i) {
            CHECK(mine.eigenvalues[i] ==
                  doctest::Approx(oracle_vals[i]).epsilon(1e-10));
        }
        // Eigenvectors match up to sign.
        for (Index i = 0; i < n; ++i) {
            const Vector v = mine.eigenvectors.row(i).transpose();
            const Vector w = oracle.eigenvectors().col(n - 1 - i);
            const double align = std::abs(v.dot(w));
            CHECK(align == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("reconstruction and orthonormality") {
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
        const Index n = 4;
        const Matrix a = random_symmetric(n, seed);
        const SymmetricEigen r = eigen_symmetric(a);
        const Matrix v = r.eigenvectors;  // rows are eigenvectors
        const Matrix reconstructed =
            v.transpose() * r.eigenvalues.asDiagonal() * v;
        CHECK((reconstructed - a).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((v * v.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <
              1e-11);
    }
}

TEST_CASE("eigenvalues are sorted descending") {
    for (std::uint64_t seed = 80; seed < 90; ++seed) {
        const SymmetricEigen r = eigen_symmetric(random_symmetric(5, seed));
        CHECK(std::is_sorted(r.eigenvalues.data(),
                             r.eigenvalues.data() + r.eigenvalues.size(),
                             std::greater<double>()));
    }
}

TEST_CASE("sign convention: largest-magnitude entry of each eigenvector is positive") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const SymmetricEigen r = eigen_symmetric(random_symmetric(6, seed));
        for (Index i = 0; i < 6; ++i) {
            Index arg = 0;
            double best = 0.0;
            for (Index j = 0; j < 6; ++j) {
                if (std::abs(r.eigenvectors(i, j)) > best) {
                    best = std::abs(r.eigenvectors(i, j));
                    arg = j;
                }
            }
            CHECK(r.eigenvectors(i, arg) > 0.0);
        }
    }
}

TEST_CASE("determinism: same matrix gives bit-identical decomposition") {
    const Matrix a = random_symmetric(5, 77);
    const SymmetricEigen r1 = eigen_symmetric(a);
    const SymmetricEigen r2 = eigen_symmetric(a);
    CHECK((r1.eigenvalues.array() == r2.eigenvalues.array()).all());
    CHECK((r1.eigenvectors.array() == r2.eigenvectors.array()).all());
}
