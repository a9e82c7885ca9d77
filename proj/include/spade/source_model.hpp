#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "spade/common.hpp"

namespace spade {

inline double canonical_phase(double theta) {
    double t = std::fmod(theta, 2.0 * kPi);
    if (t < 0.0) t += 2.0 * kPi;
    return t;
}

// OPA-generated entangled source pair: the incident field (mean photon number
// n_s, second-order coherence g2) is two-mode squeezed with parameter r, and
// one output mode picks up a relative phase theta.
struct SourceParams {
    double n_s = 0.0;
    double g2 = 1.0;
    double r = 0.0;
    double theta = 0.0;  // stored canonically in [0, 2 pi)

    SourceParams() = default;
    SourceParams(double n_s_, double g2_, double r_, double theta_)
        : n_s(n_s_), g2(g2_), r(r_), theta(canonical_phase(theta_)) {}
};

struct CoherencyMatrix {
    double n1 = 0.0;  // mean photons in source mode 1
    double n2 = 0.0;  // mean photons in source mode 2
    std::complex<double> c;  // cross coherence <s1^dag s2>
};

// Second moment <s0^2> of the incident field. Only n_s and g2 are pinned by
// the detection model; this moment is free and feeds nothing downstream of
// the coherency matrix. No universal bound on |<s0^2>| is enforced.
struct IncidentMoment {
    std::complex<double> s0_squared;
};

inline IncidentMoment coherent_moment(double n_s) { return {std::complex<double>(n_s, 0.0)}; }
inline IncidentMoment thermal_moment() { return {std::complex<double>(0.0, 0.0)}; }

// Interference parameter cos(theta) sinh(2r): the cross term between the two
// images in the detected counts.
inline double eta(double r, double theta) {
    detail::require_param(r >= 0.0, "eta: r must be nonnegative");
    return std::cos(theta) * std::sinh(2.0 * r);
}

// Bogoliubov transformation acting on (s0, v0^dag):
// diag(1, e^{i theta}) . [[cosh r, -sinh r], [-sinh r, cosh r]].
inline std::array<std::array<std::complex<double>, 2>, 2> mode_transform(double r,
                                                                         double theta) {
    detail::require_param(r >= 0.0, "mode_transform: r must be nonnegative");
    const double ch = std::cosh(r);
    const double sh = std::sinh(r);
    const std::complex<double> phase(std::cos(theta), std::sin(theta));
    return {{{std::complex<double>(ch, 0.0), std::complex<double>(-sh, 0.0)},
             {-phase * sh, phase * ch}}};
}

// Strict mode additionally enforces the incident-field physicality bound
// g2 >= 1 - 1/n_s and positivity of the count variance for the worst-case
// detected total n_s e^{2r} (kappa = 1, any separation or phase).
inline void validate(const SourceParams& p, bool strict = false) {
    detail::require_param(p.n_s >= 0.0, "source.n_s: must be nonnegative");
    detail::require_param(p.r >= 0.0, "source.r: must be nonnegative");
    detail::require_param(p.theta >= 0.0 && p.theta < 2.0 * kPi,
                          "source.theta: must lie in [0, 2 pi); use canonical_phase");
    if (strict && p.n_s > 0.0) {
        detail::require_param(p.g2 >= 1.0 - 1.0 / p.n_s,
                              "source.g2: below the physical bound 1 - 1/n_s");
        const double worst_total = p.n_s * std::exp(2.0 * p.r);
        detail::require_param(1.0 + (p.g2 - 1.0) * worst_total > 0.0,
                              "source.g2: count variance not positive for this n_s and r");
    }
}

// First-order coherency matrix of the source modes. The cross term follows
// from the mode transform directly: c = -(1/2) e^{-i theta} sinh(2r) <s0^dag 2>,
// i.e. the conjugate of the stored incident moment.
inline CoherencyMatrix coherency(const SourceParams& params, const IncidentMoment& moment) {
    validate(params);
    const double ch2 = std::cosh(params.r) * std::cosh(params.r);
    const double sh2 = std::sinh(params.r) * std::sinh(params.r);
    CoherencyMatrix out;
    out.n1 = params.n_s * ch2 + sh2;
    out.n2 = params.n_s * sh2 + sh2;
    const std::complex<double> phase(std::cos(params.theta), -std::sin(params.theta));
    out.c = -0.5 * phase * std::sinh(2.0 * params.r) * std::conj(moment.s0_squared);
    return out;
}

}  // namespace spade
