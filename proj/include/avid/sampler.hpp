#pragma once

// Reverse-process generation: DDPM ancestral sampling and DDIM over an
// abstract denoiser so every composition strategy plugs in uniformly.
//
// Noise draws are counter-based, keyed by (seed, step, element offset):
// a draw depends only on its coordinates, so sampling is deterministic
// regardless of evaluation order. The initial x_N uses a reserved stream.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avid/core.hpp"
#include "avid/rng.hpp"
#include "avid/schedule.hpp"

namespace avid {

struct ModelOutput {
    VideoTensor prediction;
    std::optional<VideoTensor> mask;  // T x H x W x 1 in (0,1) when present
};

struct ConditioningBundle {
    VideoTensor first_frame;                       // 1 x H x W x C
    std::optional<std::vector<uint8_t>> actions;   // length T when present
    bool null_actions = false;                     // unconditional branch for CFG
};

class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual ModelOutput denoise(const VideoTensor& x, int i, const ConditioningBundle& cond) = 0;
    virtual Parameterization parameterization() const = 0;
};

// Wraps a plain callable as a Denoiser; handy for oracles and tests.
class FunctionDenoiser : public Denoiser {
public:
    using Fn = std::function<ModelOutput(const VideoTensor&, int, const ConditioningBundle&)>;

    FunctionDenoiser(Fn fn, Parameterization p) : fn_(std::move(fn)), param_(p) {}

    ModelOutput denoise(const VideoTensor& x, int i, const ConditioningBundle& cond) override {
        return fn_(x, i, cond);
    }
    Parameterization parameterization() const override { return param_; }

private:
    Fn fn_;
    Parameterization param_;
};

enum class SampleMethod { ddpm, ddim };

inline const char* to_string(SampleMethod m) { return m == SampleMethod::ddpm ? "ddpm" : "ddim"; }

inline SampleMethod sample_method_from(const std::string& s) {
    if (s == "ddpm") return SampleMethod::ddpm;
    if (s == "ddim") return SampleMethod::ddim;
    fail("unknown sample method '" + s + "' (expected ddpm|ddim)");
}

struct SamplerConfig {
    SampleMethod method = SampleMethod::ddpm;
    int inference_steps = 0;  // 0 means: use schedule length
    double eta = 0.0;
    uint64_t seed = 0;
    bool first_frame_clamp = true;
    bool log_masks = false;
};

// One ancestral update (Eq. 1 form): x_{i-1} = (x_i + beta_i * score)/sqrt(1-beta_i) + sqrt(beta_i) z.
template <class S>
BasicVideo<S> ddpm_step(const BasicVideo<S>& x_i, int i, const BasicVideo<S>& eps_pred,
                        const NoiseSchedule& sched, const BasicVideo<S>& z) {
    sched.check_step(i);
    require(x_i.same_shape(eps_pred) && x_i.same_shape(z),
            "ddpm_step: shape mismatch at step " + std::to_string(i));
    if (i == 0) {
        for (S zz : z.v) {
            require(zz == S(0), "ddpm_step: final step (i=0) must receive z = 0");
        }
    }
    double beta = sched.beta[static_cast<size_t>(i)];
    double abar = sched.abar(i);
    double drift = 1.0 / std::sqrt(1.0 - beta);
    double score_coef = -beta / std::sqrt(1.0 - abar);  // applied to eps_pred directly
    double noise_coef = std::sqrt(beta);

    BasicVideo<S> out = x_i;
    for (size_t k = 0; k < out.v.size(); ++k) {
        double v = drift * (x_i.v[k] + score_coef * eps_pred.v[k]) + noise_coef * z.v[k];
        out.v[k] = static_cast<S>(v);
    }
    return out;
}

// DDIM update towards index i_prev (i_prev = -1 targets the clean sample, alpha_bar = 1):
//   x_prev = sqrt(abar_prev) x0_pred + sqrt(1 - abar_prev - sigma^2) eps_pred + sigma z
//   sigma  = eta sqrt((1-abar_prev)/(1-abar_i)) sqrt(1 - abar_i/abar_prev)
template <class S>
BasicVideo<S> ddim_step(const BasicVideo<S>& x_i, int i, int i_prev, const BasicVideo<S>& eps_pred,
                        const NoiseSchedule& sched, double eta, const BasicVideo<S>& z) {
    sched.check_step(i);
    require(i_prev < i, "ddim_step: i_prev (" + std::to_string(i_prev) +
                            ") must be below i (" + std::to_string(i) + ")");
    require(i_prev >= -1, "ddim_step: i_prev below -1");
    require(eta >= 0.0 && eta <= 1.0, "ddim_step: eta must be in [0, 1]");
    require(x_i.same_shape(eps_pred) && x_i.same_shape(z),
            "ddim_step: shape mismatch at step " + std::to_string(i));

    double abar_i = sched.abar(i);
    double abar_prev = (i_prev < 0) ? 1.0 : sched.abar(i_prev);
    require(abar_i > 0.0, "ddim_step: alpha_bar = 0 at step " + std::to_string(i));

    double sigma = eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar_i)) *
                   std::sqrt(1.0 - abar_i / abar_prev);
    double ra_i = std::sqrt(abar_i);
    double re_i = std::sqrt(1.0 - abar_i);
    double ra_p = std::sqrt(abar_prev);
    double dir = std::sqrt(std::max(0.0, 1.0 - abar_prev - sigma * sigma));

    BasicVideo<S> out = x_i;
    for (size_t k = 0; k < out.v.size(); ++k) {
        double x0p = (x_i.v[k] - re_i * eps_pred.v[k]) / ra_i;
        out.v[k] = static_cast<S>(ra_p * x0p + dir * eps_pred.v[k] + sigma * z.v[k]);
    }
    return out;
}

// Evenly spaced step subset including both endpoints, descending from N-1 to 0.
inline std::vector<int> ddim_timesteps(int n, int inference_steps) {
    require(inference_steps >= 2 && inference_steps <= n,
            "ddim: inference_steps must be in [2, N], got " + std::to_string(inference_steps));
    std::vector<int> out;
    out.reserve(static_cast<size_t>(inference_steps));
    for (int k = inference_steps - 1; k >= 0; --k) {
        int idx = static_cast<int>(std::lround(static_cast<double>(k) * (n - 1) /
                                               (inference_steps - 1)));
        if (out.empty() || out.back() != idx) {
            out.push_back(idx);
        }
    }
    return out;
}

struct SampleResult {
    VideoTensor video;
    std::vector<VideoTensor> masks;  // per denoiser call, when log_masks and mask present
    std::vector<int> step_indices;   // schedule index of each denoiser call
};

namespace detail {
constexpr uint64_t kInitNoiseStream = ~0ull;

inline VideoTensor gaussian_field(const CounterRng& rng, uint64_t stream, int t, int h, int w,
                                  int c) {
    VideoTensor out(t, h, w, c);
    for (size_t k = 0; k < out.v.size(); ++k) {
        out.v[k] = static_cast<float>(rng.normal(stream, k));
    }
    return out;
}
}  // namespace detail

inline SampleResult sample(Denoiser& denoiser, const NoiseSchedule& sched,
                           const SamplerConfig& cfg, const ConditioningBundle& cond, int frames) {
    require(frames >= 1, "sample: need at least one frame");
    require(cond.first_frame.t == 1, "sample: conditioning frame must have t = 1");
    const int h = cond.first_frame.h, w = cond.first_frame.w, c = cond.first_frame.c;
    const int n = sched.steps;
    int inf_steps = cfg.inference_steps > 0 ? cfg.inference_steps : n;
    if (cfg.method == SampleMethod::ddpm) {
        require(inf_steps == n, "sample: ddpm requires inference_steps == N");
    }
    if (cond.actions) {
        require(static_cast<int>(cond.actions->size()) == frames,
                "sample: action sequence length must equal frame count");
    }

    CounterRng rng(cfg.seed);
    VideoTensor x = detail::gaussian_field(rng, detail::kInitNoiseStream, frames, h, w, c);

    std::vector<int> steps;
    if (cfg.method == SampleMethod::ddpm) {
        steps.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) steps[static_cast<size_t>(i)] = n - 1 - i;
    } else {
        steps = ddim_timesteps(n, inf_steps);
    }

    SampleResult res;
    VideoTensor zero_z(frames, h, w, c);
    for (size_t k = 0; k < steps.size(); ++k) {
        int i = steps[k];
        ModelOutput out = denoiser.denoise(x, i, cond);
        require(out.prediction.same_shape(x),
                "sample: denoiser output shape " + out.prediction.shape_str() +
                    " mismatches state " + x.shape_str() + " at step " + std::to_string(i));
        VideoTensor eps =
            convert_prediction(out.prediction, denoiser.parameterization(),
                               Parameterization::epsilon, x, i, sched);
        if (cfg.log_masks && out.mask) {
            res.masks.push_back(*out.mask);
        }
        res.step_indices.push_back(i);

        if (cfg.method == SampleMethod::ddpm) {
            if (i > 0) {
                VideoTensor z = detail::gaussian_field(rng, static_cast<uint64_t>(i), frames, h, w, c);
                x = ddpm_step(x, i, eps, sched, z);
            } else {
                x = ddpm_step(x, i, eps, sched, zero_z);
            }
        } else {
            int i_prev = (k + 1 < steps.size()) ? steps[k + 1] : -1;
            if (cfg.eta > 0.0 && i_prev >= 0) {
                VideoTensor z = detail::gaussian_field(rng, static_cast<uint64_t>(i), frames, h, w, c);
                x = ddim_step(x, i, i_prev, eps, sched, cfg.eta, z);
            } else {
                x = ddim_step(x, i, i_prev, eps, sched, cfg.eta, zero_z);
            }
        }
    }

    if (cfg.first_frame_clamp) {
        for (int hi = 0; hi < h; ++hi)
            for (int wi = 0; wi < w; ++wi)
                for (int ci = 0; ci < c; ++ci)
                    x.at(0, hi, wi, ci) = cond.first_frame.at(0, hi, wi, ci);
    }
    require(x.finite(), "sample: non-finite values in output");
    res.video = std::move(x);
    return res;
}

}  // namespace avid
