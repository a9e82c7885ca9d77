#pragma once

#include <cmath>
#include <stdexcept>

#include "spade/common.hpp"
#include "spade/detection.hpp"
#include "spade/optics.hpp"
#include "spade/source_model.hpp"

namespace spade {

// Moment-method sensitivities at one parameter point. The dimensional forms
// carry 1/length^2; the normalized forms strip omega^2 and the source
// brightness: r_rim = w^2 N_D re_rim / (n_s kappa), r_tpd = w^2 re_tpd / (n_s kappa).
struct SensitivityReport {
    double re_rim = 0.0;    // relative-intensity (mode distribution) sensitivity
    double re_tpd = 0.0;    // total-photon-detection sensitivity
    double re_total = 0.0;  // N_D re_rim + re_tpd
    double r_rim = 0.0;
    double r_tpd = 0.0;
    double r_total = 0.0;   // r_rim + r_tpd
    double var_d = 0.0;     // 1 / (tau re_total)
};

namespace detail {

struct PointGeometry {
    double gamma;   // d / 2w
    double p;       // image overlap exp(-2 gamma^2)
    double cosh2r;
    double cross;   // eta = cos(theta) sinh(2r)
    double s;       // cosh(2r) - p eta; detected brightness factor
};

inline PointGeometry point_geometry(const SourceParams& source, const OpticsParams& optics,
                                    double d) {
    PointGeometry g;
    g.gamma = d / (2.0 * optics.omega);
    g.p = overlap_p(d, optics.omega);
    g.cosh2r = std::cosh(2.0 * source.r);
    g.cross = eta(source.r, source.theta);
    g.s = g.cosh2r - g.p * g.cross;
    return g;
}

// Normalized RIM sensitivity; independent of n_s, kappa and g2.
inline double rim_normalized(const PointGeometry& g) {
    return g.cosh2r + g.p * g.cross -
           4.0 * g.gamma * g.gamma * g.p * g.cross * g.cosh2r / g.s;
}

// Normalized TPD sensitivity; throws if the count variance is nonpositive.
inline double tpd_normalized(const PointGeometry& g, double ns_kappa, double g2) {
    const double bracket = 1.0 + ns_kappa * (g2 - 1.0) * g.s;
    require_domain(bracket > 0.0,
                   "tpd: count variance nonpositive (1 + n_s kappa (g2 - 1) S <= 0)");
    const double pe = g.p * g.cross;
    return 4.0 * g.gamma * g.gamma * pe * pe / (g.s * bracket);
}

}  // namespace detail

// RIM sensitivity as the explicit mode sum of N_D^{-1}-normalized count
// fractions times squared log-derivatives. Serves as the independent route
// checking the closed form. Each term is assembled as
//   w_m (2m/gamma - 2 gamma - 4 gamma eta p / S)^2 / (4 w^2)
// which stays finite where the raw 1/fraction blows up. Defined for d > 0;
// the d = 0 value is the closed form's limit.
inline double rim_numeric(const SourceParams& source, const OpticsParams& optics, double d,
                          const ModeBasis& basis) {
    validate(source);
    validate(optics);
    detail::require_param(d > 0.0, "rim_numeric: defined for d > 0");
    const auto g = detail::point_geometry(source, optics, d);
    const double b = -2.0 * g.gamma - 4.0 * g.gamma * g.cross * g.p / g.s;
    const double scale = 1.0 / (4.0 * optics.omega * optics.omega);
    double sum = 0.0;
    double last = 0.0;
    for (int m = 0; m <= basis.cutoff; ++m) {
        const double gm = g_coeff(m, g.gamma);
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        const double weight = (g.cosh2r - sign * g.cross) * gm * gm / g.s;
        const double logderiv = 2.0 * m / g.gamma + b;
        last = weight * logderiv * logderiv * scale;
        sum += last;
    }
    if (!(last <= 1e-14 * sum)) {
        throw std::runtime_error("rim_numeric: basis cutoff too small for convergent sum");
    }
    return sum;
}

// Closed-form RIM sensitivity
//   (kappa n_s / (w^2 N_D)) [cosh 2r + p eta - d^2 p eta cosh 2r / (w^2 S)].
// The brightness prefactor cancels against N_D = n_s kappa S, so the
// implementation never forms the 0/0 at n_s -> 0. Exact at d = 0.
inline double rim_closed_form(const SourceParams& source, const OpticsParams& optics,
                              double d) {
    validate(source);
    validate(optics);
    detail::require_param(d >= 0.0, "rim_closed_form: d must be nonnegative");
    const auto g = detail::point_geometry(source, optics, d);
    return detail::rim_normalized(g) / (optics.omega * optics.omega * g.s);
}

// TPD sensitivity (dN_D/dd)^2 / variance(N_D):
//   n_s kappa eta^2 d^2 p^2 / (w^4 S [1 + n_s kappa (g2 - 1) S]).
inline double tpd(const SourceParams& source, const OpticsParams& optics, double d) {
    validate(source);
    validate(optics);
    detail::require_param(d >= 0.0, "tpd: d must be nonnegative");
    const auto g = detail::point_geometry(source, optics, d);
    const double ns_kappa = source.n_s * optics.kappa;
    return ns_kappa * detail::tpd_normalized(g, ns_kappa, source.g2) /
           (optics.omega * optics.omega);
}

// Full report: dimensional and normalized sensitivities plus the predicted
// estimation variance 1/(tau (N_D re_rim + re_tpd)) for tau shots.
inline SensitivityReport compute_sensitivity(const SourceParams& source,
                                             const OpticsParams& optics, double d,
                                             double tau) {
    validate(source);
    validate(optics);
    detail::require_param(source.n_s > 0.0, "compute_sensitivity: n_s must be positive");
    detail::require_param(d >= 0.0, "compute_sensitivity: d must be nonnegative");
    detail::require_param(tau > 0.0, "compute_sensitivity: tau must be positive");
    const auto g = detail::point_geometry(source, optics, d);
    const double ns_kappa = source.n_s * optics.kappa;
    const double w2 = optics.omega * optics.omega;

    SensitivityReport out;
    out.r_rim = detail::rim_normalized(g);
    out.r_tpd = detail::tpd_normalized(g, ns_kappa, source.g2);
    out.r_total = out.r_rim + out.r_tpd;
    out.re_rim = out.r_rim / (w2 * g.s);
    out.re_tpd = ns_kappa * out.r_tpd / w2;
    out.re_total = ns_kappa * g.s * out.re_rim + out.re_tpd;
    out.var_d = 1.0 / (tau * out.re_total);
    return out;
}

// Small-separation reference scales for the normalized total sensitivity.
enum class BaselineKind { incoherent, mutually_coherent, entangled };

// d -> 0 normalized sensitivity of the reference source models: 1 for
// incoherent pairs, 1 - 2 sqrt(T(1-T)) for mutually coherent pairs from a
// beam splitter of transmissivity T (vanishes at T = 1/2), e^{2r} for the
// entangled pair at theta = 0.
inline double baseline(BaselineKind kind, double arg = 0.0) {
    switch (kind) {
        case BaselineKind::incoherent:
            return 1.0;
        case BaselineKind::mutually_coherent:
            detail::require_param(arg >= 0.0 && arg <= 1.0,
                                  "baseline: transmissivity must be in [0, 1]");
            return 1.0 - 2.0 * std::sqrt(arg * (1.0 - arg));
        case BaselineKind::entangled:
            detail::require_param(arg >= 0.0, "baseline: r must be nonnegative");
            return std::exp(2.0 * arg);
    }
    throw std::invalid_argument("baseline: unknown kind");
}

// d -> 0 limit of the normalized total sensitivity for the symmetric source
// pair: cosh 2r + sinh 2r = e^{2r}. Only the theta = 0 case has this simple
// limit; elsewhere evaluate the closed form at small d.
inline double asymptote_d0(const SourceParams& source) {
    validate(source);
    detail::require_param(source.theta == 0.0,
                          "asymptote_d0: closed-form limit only for theta = 0");
    return std::exp(2.0 * source.r);
}

}  // namespace spade
