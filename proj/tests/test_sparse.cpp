#include "kacanov/sparse.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace kacanov;

namespace {

using Dense = std::vector<std::vector<double>>;

// independent oracle: Gaussian elimination with partial pivoting
Vector dense_solve(Dense A, Vector b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
        std::swap(A[k], A[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A[i][k] / A[k][k];
            for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    Vector x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }
    return x;
}

// deterministic diagonally dominant SPD matrix
Dense random_spd(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Dense A(n, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) A[i][j] = A[j][i] = unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
        double offdiag = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) offdiag += std::abs(A[i][j]);
        A[i][i] = offdiag + 1.0;
    }
    return A;
}

SymSparseMatrix to_sparse(const Dense& A) {
    std::vector<SymSparseMatrix::Entry> entries;
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < A.size(); ++j)
            if (A[i][j] != 0.0) entries.push_back({i, j, A[i][j]});
    return SymSparseMatrix(A.size(), std::move(entries));
}

SymSparseMatrix identity(std::size_t n) {
    std::vector<SymSparseMatrix::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
    return SymSparseMatrix(n, std::move(entries));
}

} // namespace

TEST_CASE("matvec basics") {
    const SymSparseMatrix I = identity(4);
    const Vector x{1.0, -2.0, 3.5, 0.25};
    CHECK(I.multiply(x) == x);

    const SymSparseMatrix A(2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}});
    const Vector y = A.multiply({1.0, 1.0});
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 3.0);
    CHECK_THROWS_AS(A.multiply({1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("duplicate coordinate entries are accumulated") {
    const SymSparseMatrix A(2, {{0, 0, 1.0}, {0, 0, 2.5}, {1, 1, 1.0}});
    CHECK(A(0, 0) == 3.5);
    CHECK(A(0, 1) == 0.0);
}

TEST_CASE("matvec matches a dense product on random SPD systems") {
    std::mt19937 rng(99);
    const Dense A = random_spd(10, rng);
    const SymSparseMatrix S = to_sparse(A);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector x(10);
    for (auto& v : x) v = unit(rng);
    const Vector y = S.multiply(x);
    for (std::size_t i = 0; i < 10; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 10; ++j) s += A[i][j] * x[j];
        CHECK(y[i] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("cg on the identity converges in one iteration") {
    const SymSparseMatrix I = identity(5);
    const Vector b{1.0, 2.0, 3.0, 4.0, 5.0};
    const CgResult r = cg_solve(I, b, 1e-12, 10);
    CHECK(r.iterations <= 1);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.x[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("cg with zero right-hand side returns zero in zero iterations") {
    const SymSparseMatrix I = identity(5);
    const CgResult r = cg_solve(I, Vector(5, 0.0), 1e-12, 10);
    CHECK(r.iterations == 0);
    CHECK(r.residual == 0.0);
    for (const double v : r.x) CHECK(v == 0.0);
}

TEST_CASE("cg matches the dense oracle on 5 random SPD systems") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const Dense A = random_spd(10, rng);
        Vector b(10);
        for (auto& v : b) v = unit(rng);
        const Vector x_ref = dense_solve(A, b);
        const CgResult r = cg_solve(to_sparse(A), b, 1e-12, 1000);
        for (std::size_t i = 0; i < 10; ++i)
            CHECK(r.x[i] == doctest::Approx(x_ref[i]).epsilon(1e-10));
        // reported residual honors the contract
        CHECK(r.residual <= 1e-12 * norm2(b));
    }
}

TEST_CASE("preconditioning changes the path but not the solution") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Dense A = random_spd(12, rng);
        // skew the diagonal so Jacobi actually differs from the identity
        for (std::size_t i = 0; i < A.size(); ++i) A[i][i] *= 1.0 + i;
        Vector b(12);
        for (auto& v : b) v = unit(rng);
        const SymSparseMatrix S = to_sparse(A);
        const CgResult plain = cg_solve(S, b, 1e-13, 2000, Preconditioner::none);
        const CgResult jacobi = cg_solve(S, b, 1e-13, 2000, Preconditioner::jacobi);
        for (std::size_t i = 0; i < b.size(); ++i)
            CHECK(plain.x[i] == doctest::Approx(jacobi.x[i]).epsilon(1e-9));
    }
}

TEST_CASE("cg reports non-convergence with iteration count and residual") {
    std::mt19937 rng(55);
    const Dense A = random_spd(10, rng);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector b(10);
    for (auto& v : b) v = unit(rng);
    CHECK_THROWS_AS(cg_solve(to_sparse(A), b, 1e-14, 1), NonConvergence);
    bool threw = false;
    try {
        cg_solve(to_sparse(A), b, 1e-14, 2);
    } catch (const NonConvergence& e) {
        threw = true;
        CHECK(e.iterations == 2);
        CHECK(e.residual > 0.0);
    }
    CHECK(threw);
}

TEST_CASE("cg argument validation") {
    const SymSparseMatrix I = identity(3);
    CHECK_THROWS_AS(cg_solve(I, Vector(2, 1.0), 1e-10, 10), std::invalid_argument);
    CHECK_THROWS_AS(cg_solve(I, Vector(3, 1.0), 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(cg_solve(I, Vector(3, 1.0), 1e-10, 0), std::invalid_argument);
}

TEST_CASE("cg decreases the energy norm of the error monotonically") {
    std::mt19937 rng(61);
    const Dense A = random_spd(14, rng);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector b(14);
    for (auto& v : b) v = unit(rng);
    // phi(x) = x.Ax/2 - b.x differs from the squared A-norm error by a
    // constant, so monotone phi is monotone error
    const auto phi_of = [&](const Vector& x) {
        double quad = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j) quad += x[i] * A[i][j] * x[j];
        return 0.5 * quad - dot(b, x);
    };
    std::vector<double> energies;
    cg_solve(to_sparse(A), b, 1e-13, 1000, Preconditioner::jacobi,
             [&](int, const Vector& x) { energies.push_back(phi_of(x)); });
    REQUIRE(energies.size() >= 3);
    for (std::size_t k = 0; k + 1 < energies.size(); ++k)
        CHECK(energies[k + 1] <= energies[k] + 1e-13 * (1.0 + std::abs(energies[k])));
}

TEST_CASE("cg is deterministic") {
    std::mt19937 rng(123);
    const Dense A = random_spd(10, rng);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector b(10);
    for (auto& v : b) v = unit(rng);
    const SymSparseMatrix S = to_sparse(A);
    const CgResult r1 = cg_solve(S, b, 1e-12, 1000);
    const CgResult r2 = cg_solve(S, b, 1e-12, 1000);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.x == r2.x); // bit-for-bit
}
