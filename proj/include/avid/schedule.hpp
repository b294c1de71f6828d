#pragma once

// Noise schedules, the forward diffusion reparameterization, prediction-target
// conversions, and the denoising loss.
//
// Conventions: diffusion step indices are zero-based everywhere in this
// codebase. A textbook index i in {1..N} corresponds to index i-1 here, so
// alpha_bar[i] is the cumulative product over steps 0..i inclusive.

#include <cmath>
#include <string>
#include <vector>

#include "avid/core.hpp"

namespace avid {

enum class ScheduleKind { linear, sigmoid };

inline const char* to_string(ScheduleKind k) {
    return k == ScheduleKind::linear ? "linear" : "sigmoid";
}

inline ScheduleKind schedule_kind_from(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "sigmoid") return ScheduleKind::sigmoid;
    fail("unknown schedule kind '" + s + "' (expected linear|sigmoid)");
}

enum class Parameterization { epsilon, x0, v };

inline const char* to_string(Parameterization p) {
    switch (p) {
        case Parameterization::epsilon: return "epsilon";
        case Parameterization::x0: return "x0";
        default: return "v";
    }
}

inline Parameterization parameterization_from(const std::string& s) {
    if (s == "epsilon" || s == "eps") return Parameterization::epsilon;
    if (s == "x0") return Parameterization::x0;
    if (s == "v") return Parameterization::v;
    fail("unknown parameterization '" + s + "' (expected epsilon|x0|v)");
}

struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::linear;
    int steps = 0;
    std::vector<double> beta;       // per-step noise scales beta_i
    std::vector<double> alpha_bar;  // cumulative products of (1 - beta_j)

    double abar(int i) const { return alpha_bar[static_cast<size_t>(i)]; }

    // x_N is near-isotropic only when the terminal cumulative product is
    // small; paper-scale configs satisfy this, toy ones need not.
    bool terminal_noise_ok() const { return !alpha_bar.empty() && alpha_bar.back() < 0.01; }

    void check_step(int i) const {
        require(i >= 0 && i < steps, "diffusion step index " + std::to_string(i) +
                                         " out of range [0, " + std::to_string(steps) + ")");
    }
};

inline double default_beta_min(ScheduleKind) { return 1e-4; }
inline double default_beta_max(ScheduleKind kind) {
    // Chosen so the paper-scale step counts (linear N=1000, sigmoid N=200)
    // land below the 0.01 terminal alpha_bar threshold.
    return kind == ScheduleKind::linear ? 0.02 : 0.05;
}

inline NoiseSchedule build_schedule(ScheduleKind kind, int n, double beta_min, double beta_max) {
    require(n >= 2, "schedule needs N >= 2 steps, got " + std::to_string(n));
    require(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0,
            "schedule bounds must satisfy 0 < beta_min < beta_max < 1, got [" +
                std::to_string(beta_min) + ", " + std::to_string(beta_max) + "]");

    NoiseSchedule s;
    s.kind = kind;
    s.steps = n;
    s.beta.resize(n);
    s.alpha_bar.resize(n);

    for (int i = 0; i < n; ++i) {
        double u = static_cast<double>(i) / (n - 1);
        double b;
        if (kind == ScheduleKind::linear) {
            b = beta_min + (beta_max - beta_min) * u;
        } else {
            // Logistic curve evaluated on [-6, 6], affinely rescaled so the
            // endpoints hit [beta_min, beta_max] exactly.
            double lo = 1.0 / (1.0 + std::exp(6.0));
            double hi = 1.0 / (1.0 + std::exp(-6.0));
            double sig = 1.0 / (1.0 + std::exp(-(-6.0 + 12.0 * u)));
            b = beta_min + (beta_max - beta_min) * (sig - lo) / (hi - lo);
        }
        s.beta[i] = b;
        s.alpha_bar[i] = (i == 0 ? 1.0 : s.alpha_bar[i - 1]) * (1.0 - b);
    }
    return s;
}

inline NoiseSchedule build_schedule(ScheduleKind kind, int n) {
    return build_schedule(kind, n, default_beta_min(kind), default_beta_max(kind));
}

template <class S>
BasicVideo<S> forward_diffuse(const BasicVideo<S>& x0, int i, const BasicVideo<S>& eps,
                              const NoiseSchedule& s) {
    require(x0.same_shape(eps), "forward_diffuse: shape mismatch " + x0.shape_str() + " vs " +
                                    eps.shape_str());
    s.check_step(i);
    double a = s.abar(i);
    double ca = std::sqrt(a), ce = std::sqrt(1.0 - a);
    BasicVideo<S> out = x0;
    for (size_t k = 0; k < out.v.size(); ++k) {
        out.v[k] = static_cast<S>(ca * x0.v[k] + ce * eps.v[k]);
    }
    return out;
}

template <class S>
BasicVideo<S> score_from_eps(const BasicVideo<S>& eps_pred, int i, const NoiseSchedule& s) {
    s.check_step(i);
    double a = s.abar(i);
    require(a < 1.0, "score_from_eps: alpha_bar = 1 at step " + std::to_string(i));
    double inv = -1.0 / std::sqrt(1.0 - a);
    BasicVideo<S> out = eps_pred;
    for (auto& x : out.v) {
        x = static_cast<S>(inv * x);
    }
    return out;
}

// Conversions between the three prediction targets at fixed (x_i, i).
//   x_i = sqrt(abar) x0 + sqrt(1-abar) eps
//   v   = sqrt(abar) eps - sqrt(1-abar) x0
template <class S>
BasicVideo<S> convert_prediction(const BasicVideo<S>& pred, Parameterization from,
                                 Parameterization to, const BasicVideo<S>& x_i, int i,
                                 const NoiseSchedule& s) {
    if (from == to) {
        return pred;
    }
    require(pred.same_shape(x_i), "convert_prediction: shape mismatch " + pred.shape_str() +
                                      " vs x_i " + x_i.shape_str());
    s.check_step(i);
    double a = s.abar(i);
    double ra = std::sqrt(a), re = std::sqrt(1.0 - a);

    auto need = [&](bool ok, const char* what) {
        require(ok, std::string("convert_prediction: degenerate alpha_bar for ") + what +
                        " at step " + std::to_string(i));
    };

    BasicVideo<S> out = pred;
    using P = Parameterization;
    if (from == P::epsilon && to == P::x0) {
        need(a > 0.0, "epsilon->x0");
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = static_cast<S>((x_i.v[k] - re * pred.v[k]) / ra);
    } else if (from == P::x0 && to == P::epsilon) {
        need(a < 1.0, "x0->epsilon");
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = static_cast<S>((x_i.v[k] - ra * pred.v[k]) / re);
    } else if (from == P::epsilon && to == P::v) {
        need(a > 0.0, "epsilon->v");
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = static_cast<S>((pred.v[k] - re * x_i.v[k]) / ra);
    } else if (from == P::v && to == P::epsilon) {
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = static_cast<S>(ra * pred.v[k] + re * x_i.v[k]);
    } else if (from == P::v && to == P::x0) {
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = static_cast<S>(ra * x_i.v[k] - re * pred.v[k]);
    } else {  // x0 -> v
        need(a < 1.0, "x0->v");
        for (size_t k = 0; k < out.v.size(); ++k)
            out.v[k] = static_cast<S>((ra * x_i.v[k] - pred.v[k]) / re);
    }
    return out;
}

template <class S>
double denoising_loss(const BasicVideo<S>& pred, const BasicVideo<S>& truth) {
    require(pred.same_shape(truth), "denoising_loss: shape mismatch " + pred.shape_str() +
                                        " vs " + truth.shape_str());
    double acc = 0.0;
    for (size_t k = 0; k < pred.v.size(); ++k) {
        double d = static_cast<double>(pred.v[k]) - static_cast<double>(truth.v[k]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred.v.size());
}

}  // namespace avid
