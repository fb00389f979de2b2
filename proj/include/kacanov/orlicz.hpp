#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kacanov {

/// Growth exponent p of the nonlinear problem. The checked constructor
/// enforces p in (1, 2]; `unchecked` admits any p > 1 so that the
/// non-convergent regime p > 2 can still be driven for demonstration.
class Exponent {
public:
    explicit Exponent(double p) : p_(p) {
        if (!(p > 1.0 && p <= 2.0))
            throw std::invalid_argument("Exponent: p must satisfy 1 < p <= 2, got " +
                                        std::to_string(p));
    }

    static Exponent unchecked(double p) {
        if (!(p > 1.0))
            throw std::invalid_argument("Exponent::unchecked: p must satisfy p > 1");
        return Exponent(p, unchecked_tag{});
    }

    double value() const { return p_; }

private:
    struct unchecked_tag {};
    Exponent(double p, unchecked_tag) : p_(p) {}
    double p_;
};

/// Truncation interval [eps_minus, eps_plus] for the linearization weight.
struct RelaxInterval {
    double eps_minus;
    double eps_plus;

    RelaxInterval(double lo, double hi) : eps_minus(lo), eps_plus(hi) {
        if (!(lo > 0.0) || !(hi >= lo))
            throw std::invalid_argument("RelaxInterval: requires 0 < eps_minus <= eps_plus");
    }

    /// True iff this interval contains `other`, i.e. widening never shrinks.
    bool contains(const RelaxInterval& other) const {
        return eps_minus <= other.eps_minus && eps_plus >= other.eps_plus;
    }
};

namespace detail {
inline void require_nonnegative(double t, const char* who) {
    if (!(t >= 0.0))
        throw std::domain_error(std::string(who) + ": argument must be >= 0");
}
} // namespace detail

/// Closest-point projection of a >= 0 onto [eps_minus, eps_plus].
inline double truncate(double a, const RelaxInterval& eps) {
    detail::require_nonnegative(a, "truncate");
    return std::max(eps.eps_minus, std::min(a, eps.eps_plus));
}

/// Relaxed energy integrand: quadratic below eps_minus and above eps_plus,
/// t^p/p in between. C^1 across the breakpoints; the power-law branch is
/// used at t == eps_minus and t == eps_plus so breakpoint values are
/// bit-reproducible.
inline double kappa(double t, const RelaxInterval& eps, const Exponent& p) {
    detail::require_nonnegative(t, "kappa");
    const double pp = p.value();
    if (t < eps.eps_minus) {
        const double e = eps.eps_minus;
        return 0.5 * std::pow(e, pp - 2.0) * t * t + (1.0 / pp - 0.5) * std::pow(e, pp);
    }
    if (t > eps.eps_plus) {
        const double e = eps.eps_plus;
        return 0.5 * std::pow(e, pp - 2.0) * t * t + (1.0 / pp - 0.5) * std::pow(e, pp);
    }
    return std::pow(t, pp) / pp;
}

/// N-function companion of kappa: phi(t) = kappa(t) - kappa(0), evaluated
/// branch-wise so small arguments do not cancel against kappa(0).
inline double phi(double t, const RelaxInterval& eps, const Exponent& p) {
    detail::require_nonnegative(t, "phi");
    const double pp = p.value();
    const double kappa0 = (1.0 / pp - 0.5) * std::pow(eps.eps_minus, pp);
    if (t < eps.eps_minus)
        return 0.5 * std::pow(eps.eps_minus, pp - 2.0) * t * t;
    if (t > eps.eps_plus) {
        const double e = eps.eps_plus;
        return 0.5 * std::pow(e, pp - 2.0) * t * t + (1.0 / pp - 0.5) * std::pow(e, pp) - kappa0;
    }
    return std::pow(t, pp) / pp - kappa0;
}

/// phi'(t) = truncate(t)^{p-2} * t.
inline double phi_prime(double t, const RelaxInterval& eps, const Exponent& p) {
    detail::require_nonnegative(t, "phi_prime");
    return std::pow(truncate(t, eps), p.value() - 2.0) * t;
}

using Vec2 = std::array<double, 2>;

inline double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }
inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Relaxed flux map A_eps(P) = truncate(|P|)^{p-2} P, with A_eps(0) = 0.
inline Vec2 flux_A(const Vec2& P, const RelaxInterval& eps, const Exponent& p) {
    const double s = norm(P);
    if (s == 0.0) return {0.0, 0.0};
    const double w = std::pow(truncate(s, eps), p.value() - 2.0);
    return {w * P[0], w * P[1]};
}

/// Companion map V_eps(P) = truncate(|P|)^{(p-2)/2} P, with V_eps(0) = 0.
/// The difference quadratic forms of flux_A and flux_V are mutually
/// equivalent with constants independent of eps.
inline Vec2 flux_V(const Vec2& P, const RelaxInterval& eps, const Exponent& p) {
    const double s = norm(P);
    if (s == 0.0) return {0.0, 0.0};
    const double w = std::sqrt(std::pow(truncate(s, eps), p.value() - 2.0));
    return {w * P[0], w * P[1]};
}

} // namespace kacanov
