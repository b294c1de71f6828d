#pragma once

// Analytic one-dimensional Gaussian laboratory: exact machinery showing that
// summed diffused scores are biased relative to the score of the diffused
// product, plus a Monte-Carlo quantification of that bias through the DDPM
// sampler.
//
// Continuous-time diffusion enters through the single survival factor
// alpha = exp(-int beta(s) ds); the discrete schedule maps in via alpha_bar.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avid/core.hpp"
#include "avid/sampler.hpp"
#include "avid/schedule.hpp"

namespace avid::gauss {

struct Gauss1D {
    double mu = 0.0;
    double var = 1.0;
};

inline void check(const Gauss1D& g) {
    require(g.var > 0.0, "Gauss1D: variance must be strictly positive");
}

// Normalized product of two Gaussians: precisions add, means precision-weight.
inline Gauss1D poe_gauss(const Gauss1D& g1, const Gauss1D& g2) {
    check(g1);
    check(g2);
    double prec = 1.0 / g1.var + 1.0 / g2.var;
    double var = 1.0 / prec;
    double mu = var * (g1.mu / g1.var + g2.mu / g2.var);
    return {mu, var};
}

// Marginal after diffusing to survival factor alpha: N(sqrt(a) mu, a var + 1 - a).
inline Gauss1D diffused_gauss(const Gauss1D& g, double alpha) {
    check(g);
    require(alpha >= 0.0 && alpha <= 1.0, "diffused_gauss: alpha must lie in [0, 1]");
    return {std::sqrt(alpha) * g.mu, alpha * g.var + 1.0 - alpha};
}

inline double score_gauss(const Gauss1D& g, double x) {
    check(g);
    return -(x - g.mu) / g.var;
}

// | score(diffuse(poe)) - score(diffuse(g1)) - score(diffuse(g2)) | at x.
inline double composed_score_bias(const Gauss1D& g1, const Gauss1D& g2, double alpha, double x) {
    double s_true = score_gauss(diffused_gauss(poe_gauss(g1, g2), alpha), x);
    double s_sum = score_gauss(diffused_gauss(g1, alpha), x) +
                   score_gauss(diffused_gauss(g2, alpha), x);
    return std::abs(s_true - s_sum);
}

struct MomentReport {
    double sample_mean = 0.0;
    double sample_var = 0.0;
    double target_mean = 0.0;
    double target_var = 0.0;
    double se_mean = 0.0;  // standard error of the sample mean
    double se_var = 0.0;   // standard error of the sample variance (normal approx)
    int n = 0;

    double mean_sigmas() const { return std::abs(sample_mean - target_mean) / se_mean; }
    double var_sigmas() const { return std::abs(sample_var - target_var) / se_var; }
};

namespace detail {

// Runs the DDPM sampler over n independent chains at once (one element per
// chain) with an analytic epsilon derived from the supplied score rule.
template <class ScoreFn>
MomentReport run_scored_sampler(ScoreFn score_at, const Gauss1D& target,
                                const NoiseSchedule& sched, int n, uint64_t seed) {
    require(n >= 1000, "scored sampler: need n >= 1000 draws");
    FunctionDenoiser den(
        [&](const VideoTensor& x, int i, const ConditioningBundle&) {
            double abar = sched.abar(i);
            double re = std::sqrt(1.0 - abar);
            ModelOutput out;
            out.prediction = x;
            for (auto& xv : out.prediction.v) {
                xv = static_cast<float>(-re * score_at(abar, static_cast<double>(xv)));
            }
            return out;
        },
        Parameterization::epsilon);

    SamplerConfig cfg;
    cfg.method = SampleMethod::ddpm;
    cfg.seed = seed;
    cfg.first_frame_clamp = false;

    ConditioningBundle cond;
    cond.first_frame = VideoTensor(1, n, 1, 1);
    SampleResult res = sample(den, sched, cfg, cond, 1);

    double sum = 0.0, sum2 = 0.0;
    for (float xv : res.video.v) {
        sum += xv;
        sum2 += static_cast<double>(xv) * xv;
    }
    MomentReport rep;
    rep.n = n;
    rep.sample_mean = sum / n;
    rep.sample_var = sum2 / n - rep.sample_mean * rep.sample_mean;
    rep.target_mean = target.mu;
    rep.target_var = target.var;
    rep.se_mean = std::sqrt(target.var / n);
    rep.se_var = target.var * std::sqrt(2.0 / n);
    return rep;
}

}  // namespace detail

// DDPM sampling with per-step summed scores of the two diffused marginals,
// reported against the true product-of-experts moments.
inline MomentReport sample_summed_scores(const Gauss1D& g1, const Gauss1D& g2,
                                         const NoiseSchedule& sched, int n, uint64_t seed) {
    check(g1);
    check(g2);
    Gauss1D target = poe_gauss(g1, g2);
    return detail::run_scored_sampler(
        [&](double abar, double x) {
            return score_gauss(diffused_gauss(g1, abar), x) +
                   score_gauss(diffused_gauss(g2, abar), x);
        },
        target, sched, n, seed);
}

// Same sampler driven by the exact score of the diffused product; the
// unbiased reference the summed-score run is compared against.
inline MomentReport sample_exact_poe_score(const Gauss1D& g1, const Gauss1D& g2,
                                           const NoiseSchedule& sched, int n, uint64_t seed) {
    check(g1);
    check(g2);
    Gauss1D target = poe_gauss(g1, g2);
    return detail::run_scored_sampler(
        [&](double abar, double x) { return score_gauss(diffused_gauss(target, abar), x); },
        target, sched, n, seed);
}

struct BiasGridRow {
    double alpha = 0.0;
    double x = 0.0;
    double bias = 0.0;
};

inline std::vector<BiasGridRow> bias_grid(const Gauss1D& g1, const Gauss1D& g2,
                                          const std::vector<double>& alphas,
                                          const std::vector<double>& xs) {
    std::vector<BiasGridRow> rows;
    rows.reserve(alphas.size() * xs.size());
    for (double a : alphas) {
        for (double x : xs) {
            rows.push_back({a, x, composed_score_bias(g1, g2, a, x)});
        }
    }
    return rows;
}

struct BiasReport {
    std::vector<BiasGridRow> grid;
    MomentReport summed;
    MomentReport exact;
};

inline BiasReport bias_report(const Gauss1D& g1, const Gauss1D& g2, const NoiseSchedule& sched,
                              int n, uint64_t seed) {
    BiasReport rep;
    std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> xs;
    for (int k = -2; k <= 2; ++k) xs.push_back(static_cast<double>(k));
    rep.grid = bias_grid(g1, g2, alphas, xs);
    rep.summed = sample_summed_scores(g1, g2, sched, n, seed);
    rep.exact = sample_exact_poe_score(g1, g2, sched, n, seed);
    return rep;
}

}  // namespace avid::gauss
