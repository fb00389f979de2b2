#pragma once

#include "kacanov/orlicz.hpp"
#include "kacanov/sparse.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace kacanov {

/// 1D radial grid on the unit disk: 0 = r_0 < r_1 < ... < r_m = 1.
/// The outer node carries the Dirichlet condition; r = 0 needs none
/// because the radial measure makes the form regular there.
struct RadialMesh {
    std::vector<double> radii;

    explicit RadialMesh(std::vector<double> r) : radii(std::move(r)) {
        if (radii.size() < 2 || radii.front() != 0.0 || radii.back() != 1.0)
            throw std::invalid_argument("RadialMesh: need radii 0 = r_0 < ... < r_m = 1");
        for (std::size_t i = 0; i + 1 < radii.size(); ++i)
            if (!(radii[i] < radii[i + 1]))
                throw std::invalid_argument("RadialMesh: radii must be strictly increasing");
    }

    static RadialMesh uniform(std::size_t intervals) {
        if (intervals < 1) throw std::invalid_argument("RadialMesh::uniform: need >= 1 interval");
        std::vector<double> r(intervals + 1);
        for (std::size_t i = 0; i <= intervals; ++i)
            r[i] = static_cast<double>(i) / static_cast<double>(intervals);
        r.back() = 1.0;
        return RadialMesh(std::move(r));
    }

    std::size_t node_count() const { return radii.size(); }
    std::size_t interval_count() const { return radii.size() - 1; }
};

using RadialField = Vector; // one coefficient per radius node, zero at r = 1

/// Scalar state of the peak iteration v_n = alpha_n (1 - r).
struct PeakState {
    double alpha = 0.0;
    int n = 0;
};

/// One step of the scalar peak recursion alpha <- truncate(alpha)^{2-p}.
/// Valid for any p > 1; for p >= 3 and eps_plus = 1/eps_minus it produces
/// the period-2 orbit instead of converging.
inline PeakState peak_step(const PeakState& state, const RelaxInterval& eps, const Exponent& p) {
    return {std::pow(truncate(state.alpha, eps), 2.0 - p.value()), state.n + 1};
}

/// Weighted radial stiffness 2 pi int w^{p-2} v' xi' r dr with one weight
/// per interval, integrated exactly; Dirichlet row/column at r = 1
/// eliminated symmetrically with unit diagonal.
inline SymSparseMatrix radial_assemble(const RadialMesh& mesh, const Vector& interval_weights,
                                       const Exponent& p) {
    if (interval_weights.size() != mesh.interval_count())
        throw std::invalid_argument("radial_assemble: one weight per interval required");
    const std::size_t n = mesh.node_count();
    const std::size_t last = n - 1;
    std::vector<SymSparseMatrix::Entry> entries;
    entries.reserve(4 * mesh.interval_count() + 1);
    for (std::size_t i = 0; i < mesh.interval_count(); ++i) {
        if (!(interval_weights[i] > 0.0))
            throw std::invalid_argument("radial_assemble: weights must be positive");
        const double r0 = mesh.radii[i], r1 = mesh.radii[i + 1];
        const double h = r1 - r0;
        const double k = std::numbers::pi * std::pow(interval_weights[i], p.value() - 2.0) *
                         (r0 + r1) / h;
        const std::size_t a = i, b = i + 1;
        if (a != last && b != last) {
            entries.push_back({a, a, k});
            entries.push_back({a, b, -k});
            entries.push_back({b, a, -k});
            entries.push_back({b, b, k});
        } else if (a != last) {
            entries.push_back({a, a, k});
        }
    }
    entries.push_back({last, last, 1.0});
    return SymSparseMatrix(n, std::move(entries));
}

/// Load of the peak problem, <f, xi_i> = -2 pi int xi_i' r dr, integrated
/// exactly per interval; the entry at the Dirichlet node is excluded.
inline Vector radial_peak_load(const RadialMesh& mesh) {
    const std::size_t n = mesh.node_count();
    Vector load(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double r_prev = i == 0 ? 0.0 : mesh.radii[i - 1];
        load[i] = std::numbers::pi * (mesh.radii[i + 1] - r_prev);
    }
    return load;
}

/// Closed-form relaxed energy gap of the peak iterates,
/// (pi / p) (eps_minus^{p (2-p)^n} - 1 - p (eps_minus^{(2-p)^n} - 1)),
/// valid for n >= 1 once the iterate has entered the truncation interval.
inline double peak_energy_gap_exact(int n, const RelaxInterval& eps, const Exponent& p) {
    if (n < 1) throw std::invalid_argument("peak_energy_gap_exact: anchored at n >= 1");
    if (!(eps.eps_minus <= 1.0 && eps.eps_plus >= 1.0))
        throw std::invalid_argument(
            "peak_energy_gap_exact: requires eps_minus <= 1 <= eps_plus");
    const double pp = p.value();
    const double s = std::pow(2.0 - pp, n);
    const double alpha = std::pow(eps.eps_minus, s);
    return std::numbers::pi / pp * (std::pow(alpha, pp) - 1.0 - pp * (alpha - 1.0));
}

/// Relaxed energy of a radial field against the peak load:
/// sum over intervals of 2 pi kappa(|slope|) int r dr - <f, v>.
inline double radial_energy_Jeps(const RadialMesh& mesh, const RadialField& field,
                                 const RelaxInterval& eps, const Exponent& p) {
    if (field.size() != mesh.node_count())
        throw std::invalid_argument("radial_energy_Jeps: one coefficient per node required");
    CompensatedSum e;
    for (std::size_t i = 0; i < mesh.interval_count(); ++i) {
        const double r0 = mesh.radii[i], r1 = mesh.radii[i + 1];
        const double slope = (field[i + 1] - field[i]) / (r1 - r0);
        e.add(2.0 * std::numbers::pi * kappa(std::abs(slope), eps, p) * 0.5 *
              (r1 * r1 - r0 * r0));
    }
    return e.value() - dot(radial_peak_load(mesh), field);
}

/// Unrelaxed energy of a radial field against the peak load.
inline double radial_energy_J(const RadialMesh& mesh, const RadialField& field,
                              const Exponent& p) {
    if (field.size() != mesh.node_count())
        throw std::invalid_argument("radial_energy_J: one coefficient per node required");
    CompensatedSum e;
    for (std::size_t i = 0; i < mesh.interval_count(); ++i) {
        const double r0 = mesh.radii[i], r1 = mesh.radii[i + 1];
        const double slope = (field[i + 1] - field[i]) / (r1 - r0);
        e.add(2.0 * std::numbers::pi * std::pow(std::abs(slope), p.value()) / p.value() * 0.5 *
              (r1 * r1 - r0 * r0));
    }
    return e.value() - dot(radial_peak_load(mesh), field);
}

/// Exact minimizer energy of the peak problem, J(u) = (1/p - 1) pi.
inline double peak_reference_energy(const Exponent& p) {
    return (1.0 / p.value() - 1.0) * std::numbers::pi;
}

} // namespace kacanov
