#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include <quadmath.h>

#include "spade/common.hpp"

namespace spade {

struct OpticsParams {
    double kappa = 1.0;  // transmissivity of the imaging system, (0, 1]
    double omega = 1.0;  // PSF width, length units
};

inline void validate(const OpticsParams& p) {
    detail::require_param(p.kappa > 0.0 && p.kappa <= 1.0, "optics.kappa: must be in (0, 1]");
    detail::require_param(p.omega > 0.0, "optics.omega: must be positive");
}

// Truncated Hermite-Gauss measurement basis, indices 0..cutoff.
struct ModeBasis {
    int cutoff = 16;
    double tail_tol = 1e-12;  // neglected mode mass sum_{m>cutoff} G_m^2
};

// Trapezoid rule settings for the overlap-integral oracle. The range is in
// units of omega; integrands decay below 1e-12 well before 6 omega.
struct Quadrature {
    double half_width = 8.0;
    int points = 512;
};

inline void validate(const Quadrature& q) {
    detail::require_param(q.half_width >= 6.0, "quadrature.half_width: must be >= 6");
    detail::require_param(q.points >= 64, "quadrature.points: must be >= 64");
}

namespace detail {

inline double r_exp(double x) { return std::exp(x); }
inline double r_sqrt(double x) { return std::sqrt(x); }
inline __float128 r_exp(__float128 x) { return expq(x); }
inline __float128 r_sqrt(__float128 x) { return sqrtq(x); }

template <typename Real>
Real r_pi() {
    if constexpr (sizeof(Real) == sizeof(__float128)) {
        return acosq(__float128(-1.0));
    } else {
        return Real(kPi);
    }
}

// Orthonormal Hermite function phi_m(t) = H_m(t) e^{-t^2/2} / sqrt(2^m m! sqrt(pi)).
// The normalized three-term recurrence keeps intermediates bounded for large m.
template <typename Real>
Real hermite_phi(int m, Real t) {
    const Real phi0 = r_exp(-t * t / Real(2)) / r_sqrt(r_sqrt(r_pi<Real>()));
    if (m == 0) return phi0;
    Real prev = phi0;
    Real cur = r_sqrt(Real(2)) * t * phi0;
    for (int k = 1; k < m; ++k) {
        const Real next = r_sqrt(Real(2) / Real(k + 1)) * t * cur -
                          r_sqrt(Real(k) / Real(k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace detail

// Gaussian point-spread amplitude sqrt(2/(pi w^2)) exp(-(x^2+y^2)/w^2),
// normalized so the squared modulus integrates to 1.
inline double psf(double x, double y, double omega) {
    detail::require_param(omega > 0.0, "psf: omega must be positive");
    const double w2 = omega * omega;
    return std::sqrt(2.0 / (kPi * w2)) * std::exp(-(x * x + y * y) / w2);
}

// Hermite-Gauss measurement mode h_m(x,y) = H_m(sqrt(2) x / w) psf(x,y) / sqrt(2^m m!).
// Orthonormal; h_0 coincides with the PSF.
inline double hg_mode(int m, double x, double y, double omega) {
    detail::require_param(m >= 0, "hg_mode: m must be nonnegative");
    detail::require_param(omega > 0.0, "hg_mode: omega must be positive");
    const double w2 = omega * omega;
    const double fx = std::sqrt(std::sqrt(2.0 / w2)) *
                      detail::hermite_phi(m, std::sqrt(2.0) * x / omega);
    const double u1y = std::sqrt(std::sqrt(2.0 / (kPi * w2))) * std::exp(-y * y / w2);
    return fx * u1y;
}

// G_m(gamma) = gamma^m e^{-gamma^2/2} / sqrt(m!). G_m^2 is the Poisson(gamma^2)
// mass function. Above m = 30 the factorial moves to log space.
inline double g_coeff(int m, double gamma) {
    detail::require_param(m >= 0, "g_coeff: m must be nonnegative");
    detail::require_param(gamma >= 0.0, "g_coeff: gamma must be nonnegative");
    if (gamma == 0.0) return m == 0 ? 1.0 : 0.0;
    if (m > 30) {
        return std::exp(m * std::log(gamma) - 0.5 * gamma * gamma -
                        0.5 * std::lgamma(m + 1.0));
    }
    double power = 1.0;
    double factorial = 1.0;
    for (int k = 1; k <= m; ++k) {
        power *= gamma;
        factorial *= k;
    }
    return power * std::exp(-0.5 * gamma * gamma) / std::sqrt(factorial);
}

// dG_m/dgamma = (m gamma^{m-1} - gamma^{m+1}) e^{-gamma^2/2} / sqrt(m!).
// The polynomial form needs no division, so gamma = 0 is exact: 1 for m = 1,
// 0 otherwise.
inline double g_coeff_deriv(int m, double gamma) {
    detail::require_param(m >= 0, "g_coeff_deriv: m must be nonnegative");
    detail::require_param(gamma >= 0.0, "g_coeff_deriv: gamma must be nonnegative");
    if (gamma == 0.0) return m == 1 ? 1.0 : 0.0;
    if (m == 0) return -gamma * std::exp(-0.5 * gamma * gamma);
    if (m > 30) return g_coeff(m, gamma) * (m / gamma - gamma);
    double power = 1.0;  // gamma^{m-1}
    double factorial = 1.0;
    for (int k = 1; k < m; ++k) power *= gamma;
    for (int k = 1; k <= m; ++k) factorial *= k;
    return (m * power - power * gamma * gamma) * std::exp(-0.5 * gamma * gamma) /
           std::sqrt(factorial);
}

// Image overlap of the two displaced PSFs: exp(-d^2 / (2 w^2)).
inline double overlap_p(double d, double omega) {
    detail::require_param(d >= 0.0, "overlap_p: d must be nonnegative");
    detail::require_param(omega > 0.0, "overlap_p: omega must be positive");
    return std::exp(-d * d / (2.0 * omega * omega));
}

// Smallest M with sum_{m>M} G_m^2(gamma) < tail_tol, i.e. a Poisson(gamma^2)
// tail cutoff. The running remainder is tracked in long double; once the
// tolerance drops below what that remainder can resolve (~1e-17), a geometric
// bound on the tail takes over, which can overshoot the minimal M by at most
// one index.
inline int poisson_tail_cutoff(double gamma, double tail_tol) {
    detail::require_param(gamma >= 0.0, "poisson_tail_cutoff: gamma must be nonnegative");
    detail::require_param(tail_tol > 0.0 && tail_tol < 1.0,
                          "poisson_tail_cutoff: tail_tol must be in (0, 1)");
    const long double lambda = static_cast<long double>(gamma) * gamma;
    if (lambda == 0.0L) return 0;
    const long double tol = tail_tol;
    const bool exact_remainder = tail_tol >= 1e-15;
    long double mass = expl(-lambda);
    long double remaining = 1.0L - mass;
    int m = 0;
    for (;;) {
        bool done;
        if (exact_remainder) {
            done = remaining < tol;
        } else {
            const long double next = mass * lambda / (m + 1);
            const long double q = lambda / (m + 2);
            done = q < 1.0L && next / (1.0L - q) < tol;
        }
        if (done) return m;
        ++m;
        mass *= lambda / m;
        remaining -= mass;
        if (m > 1000000) throw std::runtime_error("poisson_tail_cutoff: tail did not close");
    }
}

// Basis cutoff used throughout: the Poisson tail bound with a floor of 16 so
// covariance matrices stay non-trivial even at tiny separations.
inline int choose_cutoff(double gamma, double tail_tol) {
    constexpr int kMinCutoff = 16;
    const int tail = poisson_tail_cutoff(gamma, tail_tol);
    return tail > kMinCutoff ? tail : kMinCutoff;
}

inline ModeBasis make_mode_basis(double gamma, double tail_tol = 1e-12) {
    return ModeBasis{choose_cutoff(gamma, tail_tol), tail_tol};
}

// Detected-mode amplitude for the entangled source pair:
// sqrt(kappa) [(-1)^m cosh r - e^{i theta} sinh r] G_m(d / 2 w).
inline std::complex<double> a_coeff(int m, double d, const OpticsParams& optics,
                                    double r, double theta) {
    validate(optics);
    detail::require_param(m >= 0, "a_coeff: m must be nonnegative");
    detail::require_param(d >= 0.0, "a_coeff: d must be nonnegative");
    const double g = g_coeff(m, d / (2.0 * optics.omega));
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const std::complex<double> phase(std::cos(theta), std::sin(theta));
    return std::sqrt(optics.kappa) * (sign * std::cosh(r) - phase * std::sinh(r)) * g;
}

namespace detail {

// 1D overlap integral of the m-th HG mode profile with a PSF profile shifted
// by `shift`, trapezoid rule on [-L, L]. The integrand is entire times a
// Gaussian, so the trapezoid error decays spectrally with the node count; the
// binary128 accumulation is what lets a ~1e-14 integral emerge from an O(1)
// integrand without being drowned by rounding.
inline __float128 hg_psf_overlap_1d(int m, __float128 shift, __float128 omega,
                                    double half_width, int points) {
    const __float128 pi_q = r_pi<__float128>();
    // f_m(x) u1(x - s) = C phi_m(sqrt(2) x / w) exp(-(x-s)^2 / w^2),
    // C = sqrt(2) / (pi^{1/4} w)
    const __float128 c = sqrtq(__float128(2)) / (sqrtq(sqrtq(pi_q)) * omega);
    const __float128 length = __float128(half_width) * omega;
    const __float128 step = 2 * length / points;
    const __float128 sqrt2 = sqrtq(__float128(2));
    __float128 sum = 0;
    for (int i = 0; i <= points; ++i) {
        const __float128 x = -length + step * i;
        const __float128 dx = x - shift;
        const __float128 value =
            hermite_phi(m, sqrt2 * x / omega) * expq(-dx * dx / (omega * omega));
        sum += (i == 0 || i == points) ? value / 2 : value;
    }
    return c * step * sum;
}

// 1D norm integral of the PSF profile (evaluates to 1; kept numeric so the
// oracle stays a pure quadrature of the defining integral).
inline __float128 psf_profile_norm_1d(__float128 omega, double half_width, int points) {
    const __float128 pi_q = r_pi<__float128>();
    const __float128 c = sqrtq(__float128(2) / (pi_q * omega * omega));
    const __float128 length = __float128(half_width) * omega;
    const __float128 step = 2 * length / points;
    __float128 sum = 0;
    for (int i = 0; i <= points; ++i) {
        const __float128 y = -length + step * i;
        const __float128 value = expq(-2 * y * y / (omega * omega));
        sum += (i == 0 || i == points) ? value / 2 : value;
    }
    return c * step * sum;
}

}  // namespace detail

// Quadrature route to a_coeff: integrates the mode against the two displaced
// PSF images directly. The pair straddles the origin along x (the cosh image
// at -d/2, the sinh image at +d/2, which reproduces the closed form's
// (-1)^m parity); the y factor splits off as a PSF norm integral. Results at
// the requested resolution and at double resolution must agree to 1e-10.
inline std::complex<double> a_coeff_numeric(int m, double d, const OpticsParams& optics,
                                            double r, double theta,
                                            const Quadrature& quad = Quadrature{}) {
    validate(optics);
    validate(quad);
    detail::require_param(m >= 0, "a_coeff_numeric: m must be nonnegative");
    detail::require_param(d >= 0.0, "a_coeff_numeric: d must be nonnegative");

    const __float128 omega_q = optics.omega;
    const __float128 half_d = __float128(d) / 2;
    const auto evaluate = [&](int points) {
        const __float128 ix_cosh =
            detail::hg_psf_overlap_1d(m, -half_d, omega_q, quad.half_width, points);
        const __float128 ix_sinh =
            detail::hg_psf_overlap_1d(m, half_d, omega_q, quad.half_width, points);
        const __float128 iy = detail::psf_profile_norm_1d(omega_q, quad.half_width, points);
        const __float128 scale = sqrtq(__float128(optics.kappa)) * iy;
        const __float128 re =
            scale * (ix_cosh * coshq(r) - ix_sinh * cosq(theta) * sinhq(r));
        const __float128 im = scale * (-ix_sinh * sinq(theta) * sinhq(r));
        return std::complex<double>(static_cast<double>(re), static_cast<double>(im));
    };

    const std::complex<double> coarse = evaluate(quad.points);
    const std::complex<double> fine = evaluate(2 * quad.points);
    if (std::abs(fine - coarse) > 1e-10) {
        throw std::runtime_error("a_coeff_numeric: quadrature refinement did not converge");
    }
    return fine;
}

}  // namespace spade
