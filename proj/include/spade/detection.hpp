#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "spade/common.hpp"
#include "spade/matrix.hpp"
#include "spade/optics.hpp"
#include "spade/source_model.hpp"

namespace spade {

// Modes with means at or below this carry no usable weight; they are excluded
// from covariance matrices, whose closed-form inverse needs 1/N_m.
inline constexpr double kModeWeightFloor = 1e-15;

// Mean photon number per shot in HG mode m:
// N_m = n_s kappa [cosh 2r - (-1)^m eta] G_m^2(d / 2 w), m = 0..cutoff.
inline std::vector<double> mode_counts(const SourceParams& source, const OpticsParams& optics,
                                       double d, const ModeBasis& basis) {
    validate(source);
    validate(optics);
    detail::require_param(d >= 0.0, "mode_counts: d must be nonnegative");
    detail::require_param(basis.cutoff >= 0, "mode_counts: basis cutoff must be nonnegative");
    const double gamma = d / (2.0 * optics.omega);
    const double cosh2r = std::cosh(2.0 * source.r);
    const double cross = eta(source.r, source.theta);
    const double scale = source.n_s * optics.kappa;
    std::vector<double> counts(static_cast<std::size_t>(basis.cutoff) + 1);
    for (int m = 0; m <= basis.cutoff; ++m) {
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        const double g = g_coeff(m, gamma);
        counts[static_cast<std::size_t>(m)] = scale * (cosh2r - sign * cross) * g * g;
    }
    return counts;
}

// Total detected photons per shot over the full (untruncated) basis:
// N_D = n_s kappa (cosh 2r - p eta), with p the image overlap. Equals the
// mode sum in the tail_tol -> 0 limit.
inline double total_count(const SourceParams& source, const OpticsParams& optics, double d) {
    validate(source);
    validate(optics);
    detail::require_param(d >= 0.0, "total_count: d must be nonnegative");
    const double p = overlap_p(d, optics.omega);
    return source.n_s * optics.kappa *
           (std::cosh(2.0 * source.r) - p * eta(source.r, source.theta));
}

// Count covariance: diag(N_m) + (g2 - 1) N N^T.
inline Matrix count_covariance(const std::vector<double>& means, double g2) {
    const double total = std::accumulate(means.begin(), means.end(), 0.0);
    detail::require_domain(1.0 + (g2 - 1.0) * total > 0.0,
                           "count_covariance: 1 + (g2 - 1) N_D must be positive");
    const std::size_t n = means.size();
    Matrix cov(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cov(i, j) = (g2 - 1.0) * means[i] * means[j];
        }
        cov(i, i) += means[i];
    }
    return cov;
}

// Closed-form inverse (rank-one downdate of the diagonal):
// (Lambda^{-1})_mn = delta_mn / N_m - (g2 - 1) / (1 + (g2 - 1) N_D).
// All supplied means must be strictly positive; filter zero-weight modes first.
inline Matrix inv_covariance(const std::vector<double>& means, double g2) {
    double total = 0.0;
    for (double m : means) {
        detail::require_domain(m > 0.0, "inv_covariance: means must be positive");
        total += m;
    }
    detail::require_domain(1.0 + (g2 - 1.0) * total > 0.0,
                           "inv_covariance: 1 + (g2 - 1) N_D must be positive");
    const double shift = (g2 - 1.0) / (1.0 + (g2 - 1.0) * total);
    const std::size_t n = means.size();
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) inv(i, j) = -shift;
        inv(i, i) += 1.0 / means[i];
    }
    return inv;
}

// Variance of the total detected count: N_D [1 + (g2 - 1) N_D].
inline double total_variance(double n_d, double g2) {
    detail::require_param(n_d >= 0.0, "total_variance: n_d must be nonnegative");
    const double variance = n_d * (1.0 + (g2 - 1.0) * n_d);
    detail::require_domain(n_d == 0.0 || variance > 0.0,
                           "total_variance: nonpositive variance (g2 too small for this N_D)");
    return variance;
}

// Per-shot count statistics at one parameter point: means over the truncated
// basis, the populated-mode covariance, and the total-count variance.
struct CountModel {
    std::vector<double> means;      // N_m, m = 0..cutoff
    double total = 0.0;             // sum of means
    double g2 = 1.0;
    std::vector<int> populated;     // indices with N_m above the weight floor
    Matrix covariance;              // over populated modes only
    double total_variance = 0.0;
};

inline CountModel make_count_model(const SourceParams& source, const OpticsParams& optics,
                                   double d, const ModeBasis& basis) {
    CountModel model;
    model.means = mode_counts(source, optics, d, basis);
    model.total = std::accumulate(model.means.begin(), model.means.end(), 0.0);
    model.g2 = source.g2;
    for (std::size_t m = 0; m < model.means.size(); ++m) {
        if (model.means[m] > kModeWeightFloor) model.populated.push_back(static_cast<int>(m));
    }
    std::vector<double> active;
    active.reserve(model.populated.size());
    for (int idx : model.populated) active.push_back(model.means[static_cast<std::size_t>(idx)]);
    model.covariance = count_covariance(active, source.g2);
    model.total_variance = total_variance(model.total, source.g2);
    return model;
}

}  // namespace spade
