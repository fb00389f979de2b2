#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kacanov {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

/// Neumaier-compensated accumulator. Energy evaluations sum many
/// element-local terms; compensation keeps those sums correctly rounded
/// so refinements of exact data reproduce identical energies.
class CompensatedSum {
public:
    void add(double term) {
        const double t = sum_ + term;
        if (std::abs(sum_) >= std::abs(term))
            comp_ += (sum_ - t) + term;
        else
            comp_ += (term - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Symmetric sparse matrix in compressed-row storage. Built from
/// coordinate entries; duplicates are merged in a fixed order so
/// assembled values are reproducible bit for bit.
class SymSparseMatrix {
public:
    struct Entry {
        std::size_t row, col;
        double value;
    };

    SymSparseMatrix(std::size_t n, std::vector<Entry> entries) : n_(n) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Entry& a, const Entry& b) {
                             return a.row != b.row ? a.row < b.row : a.col < b.col;
                         });
        row_ptr_.assign(n_ + 1, 0);
        for (std::size_t k = 0; k < entries.size();) {
            const std::size_t i = entries[k].row;
            const std::size_t j = entries[k].col;
            if (i >= n_ || j >= n_)
                throw std::invalid_argument("SymSparseMatrix: entry index out of range");
            double v = 0.0;
            while (k < entries.size() && entries[k].row == i && entries[k].col == j)
                v += entries[k++].value;
            col_.push_back(j);
            val_.push_back(v);
            ++row_ptr_[i + 1];
        }
        for (std::size_t r = 0; r < n_; ++r) row_ptr_[r + 1] += row_ptr_[r];
    }

    std::size_t size() const { return n_; }

    double operator()(std::size_t i, std::size_t j) const {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (col_[k] == j) return val_[k];
        return 0.0;
    }

    Vector multiply(const Vector& x) const {
        if (x.size() != n_)
            throw std::invalid_argument("matvec: dimension mismatch");
        Vector y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                s += val_[k] * x[col_[k]];
            y[i] = s;
        }
        return y;
    }

    Vector diagonal() const {
        Vector d(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) d[i] = (*this)(i, i);
        return d;
    }

    /// Largest relative asymmetry max |A_ij - A_ji| / scale over stored
    /// entries; assembled operators should report ~1e-16.
    double asymmetry() const {
        double num = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                num = std::max(num, std::abs(val_[k] - (*this)(col_[k], i)));
                scale = std::max(scale, std::abs(val_[k]));
            }
        return scale > 0.0 ? num / scale : 0.0;
    }

private:
    std::size_t n_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_;
    std::vector<double> val_;
};

inline Vector matvec(const SymSparseMatrix& A, const Vector& x) { return A.multiply(x); }

/// Thrown when the conjugate gradient loop exhausts max_iter. Carries the
/// iteration count and the last true residual so callers can report how
/// far off the tolerance the solve ended.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(int iters, double residual)
        : std::runtime_error("cg_solve: no convergence after " + std::to_string(iters) +
                             " iterations, residual " + std::to_string(residual)),
          iterations(iters),
          residual(residual) {}

    int iterations;
    double residual;
};

struct CgResult {
    Vector x;
    int iterations = 0;
    double residual = 0.0; // ||b - A x||_2 at exit
};

enum class Preconditioner { none, jacobi };

using CgObserver = std::function<void(int iteration, const Vector& x)>;

/// Preconditioned conjugate gradient for SPD systems. The loop terminates
/// on the recurrence residual; the result carries an explicitly recomputed
/// ||b - A x||. When the recurrence target is met but the explicit residual
/// stalls above it, the iteration restarts from the explicit residual and
/// accepts once two restarts no longer improve it: at that point the
/// residual has reached the floor set by rounding A x itself.
inline CgResult cg_solve(const SymSparseMatrix& A, const Vector& b, double rel_tol,
                         int max_iter, Preconditioner precond = Preconditioner::jacobi,
                         const CgObserver& on_iterate = {}) {
    if (b.size() != A.size())
        throw std::invalid_argument("cg_solve: dimension mismatch");
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw std::invalid_argument("cg_solve: rel_tol must lie in (0, 1)");
    if (max_iter < 1)
        throw std::invalid_argument("cg_solve: max_iter must be >= 1");

    const std::size_t n = A.size();
    const double bnorm = norm2(b);
    if (bnorm == 0.0) return {Vector(n, 0.0), 0, 0.0};

    Vector inv_diag(n, 1.0);
    if (precond == Preconditioner::jacobi) {
        const Vector d = A.diagonal();
        for (std::size_t i = 0; i < n; ++i) {
            if (!(d[i] > 0.0))
                throw std::invalid_argument("cg_solve: nonpositive diagonal entry");
            inv_diag[i] = 1.0 / d[i];
        }
    }

    const auto explicit_residual = [&](const Vector& x) {
        Vector rr = b;
        const Vector Ax = A.multiply(x);
        for (std::size_t i = 0; i < n; ++i) rr[i] -= Ax[i];
        return rr;
    };

    const double target = rel_tol * bnorm;
    Vector x(n, 0.0);
    Vector r = b;
    Vector z(n), p;
    double last_explicit = -1.0;
    int iter = 0;

    while (iter < max_iter) {
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = dot(r, z);
        bool recurrence_met = false;
        while (iter < max_iter) {
            ++iter;
            const Vector Ap = A.multiply(p);
            const double pAp = dot(p, Ap);
            if (!(pAp > 0.0))
                throw std::invalid_argument("cg_solve: matrix is not positive definite");
            const double alpha = rz / pAp;
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
            if (on_iterate) on_iterate(iter, x);
            if (norm2(r) <= target) {
                recurrence_met = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
            rz = rz_new;
        }
        if (!recurrence_met) break;

        Vector rr = explicit_residual(x);
        const double true_res = norm2(rr);
        if (true_res <= target) return {std::move(x), iter, true_res};
        if (last_explicit >= 0.0 && true_res >= 0.5 * last_explicit)
            return {std::move(x), iter, true_res}; // rounding floor of A x reached
        last_explicit = true_res;
        r = std::move(rr); // restart from the explicit residual
    }

    const Vector rr = explicit_residual(x);
    throw NonConvergence(iter, norm2(rr));
}

} // namespace kacanov
