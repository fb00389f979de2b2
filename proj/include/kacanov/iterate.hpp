#pragma once

#include "kacanov/fem2d.hpp"
#include "kacanov/orlicz.hpp"
#include "kacanov/radial.hpp"
#include "kacanov/sparse.hpp"

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kacanov {

/// Rule producing the relaxation interval for outer step n. Fixed keeps
/// one interval; the algebraic rule widens as [(n+1)^{-alpha}, (n+1)^{beta}],
/// which requires alpha + beta <= 1/(2 - p) for the rate guarantee.
class Schedule {
public:
    enum class Kind { fixed, algebraic };

    static Schedule fixed(const RelaxInterval& eps) {
        Schedule s;
        s.kind_ = Kind::fixed;
        s.eps_ = eps;
        return s;
    }

    static Schedule algebraic(double alpha, double beta, const Exponent& p) {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw std::invalid_argument("Schedule::algebraic: alpha and beta must be positive");
        if (p.value() < 2.0) {
            const double bound = 1.0 / (2.0 - p.value());
            if (alpha + beta > bound * (1.0 + 1e-12))
                throw std::invalid_argument(
                    "Schedule::algebraic: alpha + beta must not exceed 1/(2 - p)");
            if (std::abs(alpha + beta - bound) <= 1e-12 * bound)
                std::cerr << "warning: alpha + beta equals 1/(2 - p), the boundary of the "
                             "admissible range\n";
        }
        Schedule s;
        s.kind_ = Kind::algebraic;
        s.alpha_ = alpha;
        s.beta_ = beta;
        return s;
    }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

private:
    Schedule() = default;
    Kind kind_ = Kind::fixed;
    std::optional<RelaxInterval> eps_;
    double alpha_ = 0.0, beta_ = 0.0;

    friend RelaxInterval schedule_interval(const Schedule&, int);
};

inline RelaxInterval schedule_interval(const Schedule& s, int n) {
    if (n < 0) throw std::invalid_argument("schedule_interval: n must be >= 0");
    if (s.kind_ == Schedule::Kind::fixed) return *s.eps_;
    const double m = static_cast<double>(n + 1);
    return RelaxInterval(std::pow(m, -s.alpha_), std::pow(m, s.beta_));
}

struct StoppingRule {
    int max_iter;
    double min_decrement = 0.0; // fixed schedules stop once a step gains less than this;
                                // 0 disables the decrement stop

    StoppingRule(int iters, double decr = 0.0) : max_iter(iters), min_decrement(decr) {
        if (max_iter < 1) throw std::invalid_argument("StoppingRule: max_iter must be >= 1");
        if (!(min_decrement >= 0.0))
            throw std::invalid_argument("StoppingRule: min_decrement must be >= 0");
    }
};

/// What a discretization must provide to drive the outer iteration: dof
/// count, the weighted linear operator frozen at the current iterate,
/// the load functional, Dirichlet flags, and the two energies.
template <class D>
concept ProblemDiscretization =
    requires(const D d, const Vector& field, const RelaxInterval& eps, const Exponent& p) {
        { d.dof_count() } -> std::convertible_to<std::size_t>;
        { d.assemble(field, eps, p) } -> std::same_as<SymSparseMatrix>;
        { d.load() } -> std::convertible_to<const Vector&>;
        { d.dirichlet_mask() } -> std::convertible_to<const std::vector<bool>&>;
        { d.relaxed_energy(field, eps, p) } -> std::convertible_to<double>;
        { d.energy(field, p) } -> std::convertible_to<double>;
    };

/// P1 triangulation bound to an assembled load.
class MeshDiscretization {
public:
    MeshDiscretization(TriMesh mesh, const LoadSpec& spec)
        : mesh_(std::move(mesh)),
          load_(assemble_load(mesh_, spec)) {}

    std::size_t dof_count() const { return mesh_.vertices.size(); }

    SymSparseMatrix assemble(const Vector& field, const RelaxInterval& eps,
                             const Exponent& p) const {
        return assemble_weighted_stiffness(mesh_, compute_weights(mesh_, field, eps), p);
    }

    const Vector& load() const { return load_; }
    const std::vector<bool>& dirichlet_mask() const { return mesh_.boundary; }

    double relaxed_energy(const Vector& field, const RelaxInterval& eps, const Exponent& p) const {
        return energy_Jeps(mesh_, field, eps, p, load_);
    }

    double energy(const Vector& field, const Exponent& p) const {
        return energy_J(mesh_, field, p, load_);
    }

    const TriMesh& mesh() const { return mesh_; }

private:
    TriMesh mesh_;
    Vector load_;
};

/// Radial discretization of the unit disk with the peak load built in.
class PeakDiscretization {
public:
    explicit PeakDiscretization(RadialMesh mesh)
        : mesh_(std::move(mesh)),
          load_(radial_peak_load(mesh_)),
          mask_(mesh_.node_count(), false) {
        mask_.back() = true;
    }

    std::size_t dof_count() const { return mesh_.node_count(); }

    SymSparseMatrix assemble(const Vector& field, const RelaxInterval& eps,
                             const Exponent& p) const {
        Vector w(mesh_.interval_count());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double slope =
                (field[i + 1] - field[i]) / (mesh_.radii[i + 1] - mesh_.radii[i]);
            w[i] = truncate(std::abs(slope), eps);
        }
        return radial_assemble(mesh_, w, p);
    }

    const Vector& load() const { return load_; }
    const std::vector<bool>& dirichlet_mask() const { return mask_; }

    double relaxed_energy(const Vector& field, const RelaxInterval& eps, const Exponent& p) const {
        return radial_energy_Jeps(mesh_, field, eps, p);
    }

    double energy(const Vector& field, const Exponent& p) const {
        return radial_energy_J(mesh_, field, p);
    }

    const RadialMesh& mesh() const { return mesh_; }

private:
    RadialMesh mesh_;
    Vector load_;
    std::vector<bool> mask_;
};

template <ProblemDiscretization D>
struct Problem {
    D disc;
    Exponent p;
    std::optional<double> reference_energy; // J(u) when known analytically
};

struct TraceRow {
    int n = 0;
    double eps_minus = 0.0, eps_plus = 0.0;
    double J_eps_vn = 0.0; // relaxed energy of the iterate at eps_n
    double J_vn = 0.0;     // unrelaxed energy of the iterate
    double decrement = 0.0; // J_{eps_n}(v_n) - J_{eps_n}(v_{n+1})
    std::optional<double> delta_measured; // decrement / reference gap
    double rho_n = 0.0; // eps_minus^p + eps_plus^{-(q-p)}
    double G_n = 0.0;   // J_eps_vn + K1 rho_n
    std::optional<double> gap_ref; // J_eps_vn - reference energy
    int cg_iters = 0;
    double cg_residual = 0.0;
};

struct IterationTrace {
    std::vector<TraceRow> rows;
    Vector final_field;
    bool aborted = false;
    std::string abort_message;
};

struct RunOptions {
    double K1 = 1.0;
    std::optional<double> q; // defaults to 2p (the polyhedral-domain exponent in d = 2)
    double cg_tol = 1e-10;
    int cg_max_iter = 50000;
    std::function<void(const TraceRow&)> on_row;
    std::function<void(int, const Vector&)> on_iterate; // called with (n+1, v_{n+1})
};

struct StepResult {
    Vector field;
    int cg_iters = 0;
    double cg_residual = 0.0;
};

/// One outer step: freeze the weight at v_n, assemble, solve the linear
/// problem against the load with homogeneous Dirichlet data.
template <ProblemDiscretization D>
StepResult kacanov_step(const Problem<D>& problem, const Vector& v, const RelaxInterval& eps,
                        double cg_tol = 1e-10, int cg_max_iter = 50000) {
    const SymSparseMatrix A = problem.disc.assemble(v, eps, problem.p);
    Vector b = problem.disc.load();
    const std::vector<bool>& mask = problem.disc.dirichlet_mask();
    for (std::size_t i = 0; i < b.size(); ++i)
        if (mask[i]) b[i] = 0.0;
    CgResult r = cg_solve(A, b, cg_tol, cg_max_iter);
    return {std::move(r.x), r.iterations, r.residual};
}

inline double relaxation_rho(const RelaxInterval& eps, const Exponent& p, double q) {
    return std::pow(eps.eps_minus, p.value()) + std::pow(eps.eps_plus, -(q - p.value()));
}

/// G_n = J_{eps_n}(v_n) + K1 (eps_minus^p + eps_plus^{-(q-p)}) for a
/// recorded row; requires q > p.
inline double compute_G(const TraceRow& row, double K1, double q, const Exponent& p) {
    if (!(q > p.value())) throw std::invalid_argument("compute_G: requires q > p");
    if (!(K1 >= 0.0)) throw std::invalid_argument("compute_G: requires K1 >= 0");
    return row.J_eps_vn + K1 * relaxation_rho(RelaxInterval(row.eps_minus, row.eps_plus), p, q);
}

/// Drive the outer iteration from v_0 = 0, recording one complete row per
/// step. A solver failure aborts but keeps the rows produced so far.
template <ProblemDiscretization D>
IterationTrace run(const Problem<D>& problem, const Schedule& schedule, const StoppingRule& stop,
                   const RunOptions& opts = {}) {
    const Exponent& p = problem.p;
    const double q = opts.q.value_or(2.0 * p.value());
    if (!(q > p.value())) throw std::invalid_argument("run: requires q > p");

    IterationTrace trace;
    Vector v(problem.disc.dof_count(), 0.0);
    std::optional<RelaxInterval> prev_eps;

    for (int n = 0; n < stop.max_iter; ++n) {
        const RelaxInterval eps = schedule_interval(schedule, n);
        if (prev_eps && !eps.contains(*prev_eps))
            throw std::logic_error("run: schedule intervals must be nested");
        prev_eps = eps;

        TraceRow row;
        row.n = n;
        row.eps_minus = eps.eps_minus;
        row.eps_plus = eps.eps_plus;
        row.J_eps_vn = problem.disc.relaxed_energy(v, eps, p);
        row.J_vn = problem.disc.energy(v, p);
        row.rho_n = relaxation_rho(eps, p, q);
        row.G_n = row.J_eps_vn + opts.K1 * row.rho_n;
        if (problem.reference_energy)
            row.gap_ref = row.J_eps_vn - *problem.reference_energy;

        StepResult step;
        try {
            step = kacanov_step(problem, v, eps, opts.cg_tol, opts.cg_max_iter);
        } catch (const NonConvergence& e) {
            trace.aborted = true;
            trace.abort_message = e.what();
            trace.final_field = std::move(v);
            return trace;
        }
        row.cg_iters = step.cg_iters;
        row.cg_residual = step.cg_residual;
        row.decrement = row.J_eps_vn - problem.disc.relaxed_energy(step.field, eps, p);
        if (row.gap_ref && *row.gap_ref > 0.0) row.delta_measured = row.decrement / *row.gap_ref;

        trace.rows.push_back(row);
        if (opts.on_row) opts.on_row(row);
        v = std::move(step.field);
        if (opts.on_iterate) opts.on_iterate(n + 1, v);

        if (schedule.kind() == Schedule::Kind::fixed && stop.min_decrement > 0.0 &&
            row.decrement < stop.min_decrement)
            break;
    }
    trace.final_field = std::move(v);
    return trace;
}

enum class FitMode { algebraic, exponential };

struct RateFit {
    double slope = 0.0;     // d log(gap) / d log(n), or / d n in exponential mode
    double r_squared = 0.0; // of the linear fit in the chosen coordinates
    std::vector<double> ratios; // gap_{n+1} / gap_n over consecutive usable rows
    std::size_t points_used = 0;
};

/// Least-squares decay fit of a gap sequence. Algebraic mode regresses
/// log(gap) on log(n) (rows with n >= 1), exponential mode on n itself.
/// Needs at least five rows with positive gaps.
inline RateFit fit_gap_sequence(const std::vector<std::pair<int, double>>& gaps, FitMode mode) {
    std::vector<std::pair<int, double>> usable;
    for (const auto& [n, g] : gaps)
        if (g > 0.0 && (mode == FitMode::exponential || n >= 1)) usable.push_back({n, g});
    if (usable.size() < 5)
        throw std::invalid_argument("fit_rate: needs at least 5 rows with positive gaps");

    RateFit fit;
    fit.points_used = usable.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [n, g] : usable) {
        const double x = mode == FitMode::algebraic ? std::log(static_cast<double>(n))
                                                    : static_cast<double>(n);
        const double y = std::log(g);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double m = static_cast<double>(usable.size());
    const double denom = m * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_rate: degenerate abscissa");
    fit.slope = (m * sxy - sx * sy) / denom;
    const double sst = syy - sy * sy / m;
    const double ssr = fit.slope * (sxy - sx * sy / m);
    fit.r_squared = sst > 0.0 ? ssr / sst : 1.0;
    for (std::size_t k = 0; k + 1 < usable.size(); ++k)
        if (usable[k + 1].first == usable[k].first + 1)
            fit.ratios.push_back(usable[k + 1].second / usable[k].second);
    return fit;
}

/// Fit the decay of J_{eps_n}(v_n) - reference over a recorded trace.
inline RateFit fit_rate(const IterationTrace& trace, double reference, FitMode mode) {
    std::vector<std::pair<int, double>> gaps;
    gaps.reserve(trace.rows.size());
    for (const auto& row : trace.rows) gaps.push_back({row.n, row.J_eps_vn - reference});
    return fit_gap_sequence(gaps, mode);
}

struct LemmaScanReport {
    double min_slack = 0.0;
    double gamma_at_min = 0.0;
    long n_at_min = 0;
    long violations = 0;
};

/// Scan of the algebraic difference inequality
/// n^{-gamma} - (n+1)^{-gamma} >= n^{-gamma-1} min(gamma/2, 1 - 2^{-gamma})
/// over a gamma grid and n = 1..n_max; reports the minimum slack.
inline LemmaScanReport check_algebraic_lemma(const std::vector<double>& gammas, long n_max) {
    if (gammas.empty() || n_max < 1)
        throw std::invalid_argument("check_algebraic_lemma: empty grid");
    LemmaScanReport report;
    bool first = true;
    for (const double gamma : gammas) {
        if (!(gamma > 0.0))
            throw std::invalid_argument("check_algebraic_lemma: gamma must be positive");
        const double c = std::min(gamma / 2.0, 1.0 - std::pow(2.0, -gamma));
        for (long n = 1; n <= n_max; ++n) {
            const double nd = static_cast<double>(n);
            const double lhs = std::pow(nd, -gamma) - std::pow(nd + 1.0, -gamma);
            const double slack = lhs - std::pow(nd, -gamma - 1.0) * c;
            if (slack < 0.0) ++report.violations;
            if (first || slack < report.min_slack) {
                report.min_slack = slack;
                report.gamma_at_min = gamma;
                report.n_at_min = n;
                first = false;
            }
        }
    }
    return report;
}

} // namespace kacanov
