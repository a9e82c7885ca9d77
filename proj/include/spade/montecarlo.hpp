#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spade/common.hpp"
#include "spade/detection.hpp"
#include "spade/parallel.hpp"
#include "spade/sensitivity.hpp"

namespace spade {

// How sample-mean vectors are drawn. The model pins only first and second
// moments, so the default draws the sample mean straight from its CLT
// Gaussian; the per-shot Poisson sampler is a physical cross-check valid
// only for g2 = 1, where modes are independent Poissonian.
enum class SamplerMode { gaussian_clt, poisson_independent };

struct SamplerSpec {
    SamplerMode mode = SamplerMode::gaussian_clt;
    std::string notes;
};

struct EstimationRun {
    double d_true = 0.0;
    std::uint64_t tau = 0;       // shots per sample mean
    int trials = 0;              // independent sample means
    std::uint64_t seed = 0;
    std::vector<double> estimates;
    double empirical_var = 0.0;
    double predicted_var = 0.0;  // 1 / (tau re_total)
    double ratio = 0.0;          // empirical / predicted
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Per-trial engine derived from (seed, index) by a counter scheme: trial
// streams never depend on execution order or thread count.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(detail::mix64(seed, index));
}

// One sample-mean vector over the truncated basis. Gaussian mode factors the
// diagonal-plus-rank-one covariance as D^{1/2}(I + alpha u u^T) with
// u = D^{-1/2} N, so a draw costs one extra inner product over the populated
// modes. Weak modes below the weight floor stay at their means. Sample means
// may come out slightly negative; downstream estimators consume them as-is.
inline std::vector<double> sample_mean(const CountModel& model, std::uint64_t tau,
                                       std::mt19937_64& rng,
                                       SamplerMode mode = SamplerMode::gaussian_clt) {
    detail::require_param(tau >= 1, "sample_mean: tau must be >= 1");
    std::vector<double> nbar = model.means;
    if (mode == SamplerMode::poisson_independent) {
        detail::require_param(model.g2 == 1.0,
                              "sample_mean: poisson_independent requires g2 = 1");
        for (std::size_t m = 0; m < nbar.size(); ++m) {
            const double shots_mean = static_cast<double>(tau) * model.means[m];
            if (shots_mean == 0.0) {
                nbar[m] = 0.0;
                continue;
            }
            std::poisson_distribution<long long> dist(shots_mean);
            nbar[m] = static_cast<double>(dist(rng)) / static_cast<double>(tau);
        }
        return nbar;
    }

    const std::size_t k = model.populated.size();
    double active_total = 0.0;
    for (int idx : model.populated) active_total += model.means[static_cast<std::size_t>(idx)];
    const double c = model.g2 - 1.0;
    const double pd = 1.0 + c * active_total;
    detail::require_domain(pd > 0.0, "sample_mean: covariance not positive definite");
    const double alpha = active_total > 0.0 ? (std::sqrt(pd) - 1.0) / active_total : 0.0;

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(k);
    double dot = 0.0;  // u . z with u_i = sqrt(N_i)
    std::vector<double> root(k);
    for (std::size_t i = 0; i < k; ++i) {
        z[i] = normal(rng);
        root[i] = std::sqrt(model.means[static_cast<std::size_t>(model.populated[i])]);
        dot += root[i] * z[i];
    }
    const double inv_sqrt_tau = 1.0 / std::sqrt(static_cast<double>(tau));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t m = static_cast<std::size_t>(model.populated[i]);
        nbar[m] = model.means[m] + inv_sqrt_tau * (root[i] * z[i] + alpha * model.means[m] * dot);
    }
    return nbar;
}

// One-step moment estimator linearized at d0. Precomputes the populated-mode
// weights F^{-1} Lambda^{-1} dN/dd so a trial costs one inner product.
struct MomentEstimator {
    double d0 = 0.0;
    std::vector<int> modes;      // populated indices
    std::vector<double> mean0;   // N(d0) on populated modes
    std::vector<double> weight;  // F^{-1} (Lambda^{-1} dN)_m
    double fisher = 0.0;         // dN^T Lambda^{-1} dN; equals re_total
};

inline MomentEstimator make_moment_estimator(const SourceParams& source,
                                             const OpticsParams& optics,
                                             const ModeBasis& basis, double d0) {
    validate(source);
    validate(optics);
    detail::require_param(d0 >= 0.0, "make_moment_estimator: d0 must be nonnegative");
    const CountModel model = make_count_model(source, optics, d0, basis);

    MomentEstimator est;
    est.d0 = d0;
    est.modes = model.populated;
    const double gamma = d0 / (2.0 * optics.omega);
    const double cosh2r = std::cosh(2.0 * source.r);
    const double cross = eta(source.r, source.theta);
    const double scale = source.n_s * optics.kappa;

    std::vector<double> grad;  // dN_m/dd = n_s kappa B_m G_m G_m' / w
    double active_total = 0.0;
    for (int m : est.modes) {
        const std::size_t mi = static_cast<std::size_t>(m);
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        const double bm = cosh2r - sign * cross;
        est.mean0.push_back(model.means[mi]);
        grad.push_back(scale * bm * g_coeff(m, gamma) * g_coeff_deriv(m, gamma) /
                       optics.omega);
        active_total += model.means[mi];
    }

    const double c = source.g2 - 1.0;
    const double pd = 1.0 + c * active_total;
    detail::require_domain(pd > 0.0, "make_moment_estimator: covariance not positive definite");
    const double shift = c / pd;

    double grad_sum = 0.0;
    double fisher_diag = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad_sum += grad[i];
        fisher_diag += grad[i] * grad[i] / est.mean0[i];
    }
    est.fisher = fisher_diag - shift * grad_sum * grad_sum;
    detail::require_domain(std::isfinite(est.fisher) && est.fisher > 0.0,
                           "make_moment_estimator: degenerate estimator (zero sensitivity)");
    for (std::size_t i = 0; i < grad.size(); ++i) {
        est.weight.push_back((grad[i] / est.mean0[i] - shift * grad_sum) / est.fisher);
    }
    return est;
}

inline double apply_estimator(const MomentEstimator& est, const std::vector<double>& nbar) {
    detail::require_param(nbar.size() > static_cast<std::size_t>(est.modes.empty() ? 0 : est.modes.back()),
                          "apply_estimator: sample-mean vector too short");
    double shift = 0.0;
    for (std::size_t i = 0; i < est.modes.size(); ++i) {
        shift += est.weight[i] * (nbar[static_cast<std::size_t>(est.modes[i])] - est.mean0[i]);
    }
    return est.d0 + shift;
}

// Locally unbiased one-step estimate of the separation from a sample-mean
// vector, with all model quantities evaluated at the reference d0.
inline double local_estimate(const std::vector<double>& nbar, double d0,
                             const SourceParams& source, const OpticsParams& optics,
                             const ModeBasis& basis) {
    return apply_estimator(make_moment_estimator(source, optics, basis, d0), nbar);
}

// Optional robustness pass: bisects the projected moment equation
// q^T (nbar - N(d)) = 0 on [0, d0 + 4 w], keeping the d0 weights fixed.
// Falls back to the one-step estimate when the bracket has no sign change.
inline double refine_moment_root(const MomentEstimator& est, const std::vector<double>& nbar,
                                 const SourceParams& source, const OpticsParams& optics,
                                 const ModeBasis& basis) {
    const auto projected = [&](double d) {
        const std::vector<double> counts = mode_counts(source, optics, d, basis);
        double value = 0.0;
        for (std::size_t i = 0; i < est.modes.size(); ++i) {
            value += est.weight[i] *
                     (nbar[static_cast<std::size_t>(est.modes[i])] -
                      counts[static_cast<std::size_t>(est.modes[i])]);
        }
        return value;
    };
    double lo = 0.0;
    double hi = est.d0 + 4.0 * optics.omega;
    double flo = projected(lo);
    double fhi = projected(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) return apply_estimator(est, nbar);
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * (1.0 + est.d0); ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = projected(mid);
        if (fmid == 0.0) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Batch of independent trials: sample means drawn at d_true, one-step
// estimates at d0 = d_true, empirical variance against the predicted
// 1/(tau re_total). Deterministic given the seed, whatever the schedule.
inline EstimationRun run_trials(const SourceParams& source, const OpticsParams& optics,
                                const ModeBasis& basis, double d_true, std::uint64_t tau,
                                int trials, std::uint64_t seed,
                                const SamplerSpec& sampler = SamplerSpec{}) {
    detail::require_param(trials >= 2, "run_trials: trials must be >= 2");
    detail::require_param(tau >= 1, "run_trials: tau must be >= 1");
    const CountModel model = make_count_model(source, optics, d_true, basis);
    const MomentEstimator est = make_moment_estimator(source, optics, basis, d_true);
    const SensitivityReport report =
        compute_sensitivity(source, optics, d_true, static_cast<double>(tau));

    EstimationRun run;
    run.d_true = d_true;
    run.tau = tau;
    run.trials = trials;
    run.seed = seed;
    run.estimates.resize(static_cast<std::size_t>(trials));
    run.predicted_var = report.var_d;

    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t i) {
        std::mt19937_64 rng = substream(seed, i);
        const std::vector<double> nbar = sample_mean(model, tau, rng, sampler.mode);
        run.estimates[i] = apply_estimator(est, nbar);
    });

    double mean = 0.0;
    for (double x : run.estimates) mean += x;
    mean /= trials;
    double ss = 0.0;
    for (double x : run.estimates) ss += (x - mean) * (x - mean);
    run.empirical_var = ss / (trials - 1);
    run.ratio = run.empirical_var / run.predicted_var;
    return run;
}

}  // namespace spade
