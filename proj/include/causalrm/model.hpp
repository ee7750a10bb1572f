#ifndef CAUSALRM_MODEL_HPP
#define CAUSALRM_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "causalrm/datagen.hpp"
#include "causalrm/numkernel.hpp"

namespace causalrm {

constexpr double kLogvarClamp = 10.0;

struct Dims {
    std::size_t embed{64};
    std::size_t d_c{8};
    std::size_t d_nc{16};
};

// Which mechanisms are active. "factorized = false" is the single-latent
// (InfoRM-style) configuration and cannot carry an adversary or a
// reconstruction decoder; normalize() enforces that. identity_encoder is the
// degenerate Standard-RM path: z^c = h, no sampling, reward head only.
struct AblationConfig {
    bool factorized{true};
    bool use_reconstruction{true};
    bool use_adversary{true};
    bool use_kl_c{true};
    bool use_kl_nc{true};
    bool identity_encoder{false};

    void normalize() {
        if (!factorized) {
            use_adversary = false;
            use_reconstruction = false;
            use_kl_nc = false;
        }
        if (identity_encoder) {
            factorized = false;
            use_adversary = false;
            use_reconstruction = false;
            use_kl_c = false;
            use_kl_nc = false;
        }
    }
};

struct GaussianPosterior {
    Vec mu;
    Vec logvar;
};

struct ModelParams {
    Dims dims;
    Matrix W_mu_c, W_lv_c;    // d_c x H
    Matrix W_mu_nc, W_lv_nc;  // d_nc x H
    Matrix W_dec;             // H x (d_c + d_nc)
    Vec b_mu_c, b_lv_c;       // d_c
    Vec b_mu_nc, b_lv_nc;     // d_nc
    Vec w_reward;             // d_c, no bias
    Vec w_adv;                // d_nc, no bias
    Vec b_dec;                // H

    // Fixed traversal order; Adam moments, gradients and checkpoints all
    // rely on it.
    std::vector<ParamRef> refs() {
        return {
            {"W_mu_c", &W_mu_c.data},   {"b_mu_c", &b_mu_c},
            {"W_lv_c", &W_lv_c.data},   {"b_lv_c", &b_lv_c},
            {"W_mu_nc", &W_mu_nc.data}, {"b_mu_nc", &b_mu_nc},
            {"W_lv_nc", &W_lv_nc.data}, {"b_lv_nc", &b_lv_nc},
            {"w_reward", &w_reward},    {"w_adv", &w_adv},
            {"W_dec", &W_dec.data},     {"b_dec", &b_dec},
        };
    }

    std::size_t param_count() const {
        return W_mu_c.data.size() + W_lv_c.data.size() + W_mu_nc.data.size() +
               W_lv_nc.data.size() + W_dec.data.size() + b_mu_c.size() + b_lv_c.size() +
               b_mu_nc.size() + b_lv_nc.size() + w_reward.size() + w_adv.size() + b_dec.size();
    }
};

inline ModelParams zeros_params(const Dims& d) {
    ModelParams p;
    p.dims = d;
    p.W_mu_c = Matrix(d.d_c, d.embed);
    p.W_lv_c = Matrix(d.d_c, d.embed);
    p.W_mu_nc = Matrix(d.d_nc, d.embed);
    p.W_lv_nc = Matrix(d.d_nc, d.embed);
    p.W_dec = Matrix(d.embed, d.d_c + d.d_nc);
    p.b_mu_c.assign(d.d_c, 0.0);
    p.b_lv_c.assign(d.d_c, 0.0);
    p.b_mu_nc.assign(d.d_nc, 0.0);
    p.b_lv_nc.assign(d.d_nc, 0.0);
    p.w_reward.assign(d.d_c, 0.0);
    p.w_adv.assign(d.d_nc, 0.0);
    p.b_dec.assign(d.embed, 0.0);
    return p;
}

// Weights ~ N(0, 1/fan_in), biases zero. The log-variance projections are
// scaled by 0.01 so initial posteriors start near-deterministic around mu,
// and the scalar heads by 0.01 so initial rewards sit near zero (first-batch
// preference loss then lands at ln 2).
inline ModelParams init_params(const Dims& d, Rng& rng) {
    if (d.embed == 0 || d.d_c == 0 || d.d_nc == 0) {
        throw std::invalid_argument("init_params: all dims must be positive");
    }
    ModelParams p = zeros_params(d);
    auto fill = [&rng](Matrix& m, double extra_scale) {
        const double s = extra_scale / std::sqrt(static_cast<double>(m.cols));
        for (double& x : m.data) x = s * rng.gaussian();
    };
    fill(p.W_mu_c, 1.0);
    fill(p.W_lv_c, 0.01);
    fill(p.W_mu_nc, 1.0);
    fill(p.W_lv_nc, 0.01);
    fill(p.W_dec, 1.0);
    const double sr = 0.01 / std::sqrt(static_cast<double>(d.d_c));
    for (double& x : p.w_reward) x = sr * rng.gaussian();
    const double sa = 0.01 / std::sqrt(static_cast<double>(d.d_nc));
    for (double& x : p.w_adv) x = sa * rng.gaussian();
    return p;
}

namespace detail {
inline GaussianPosterior affine_posterior(const Matrix& Wm, const Vec& bm, const Matrix& Wl,
                                          const Vec& bl, const Vec& h, Vec* clamp_mask) {
    GaussianPosterior q;
    q.mu = matvec(Wm, h);
    axpy(q.mu, 1.0, bm);
    q.logvar = matvec(Wl, h);
    axpy(q.logvar, 1.0, bl);
    if (clamp_mask) clamp_mask->assign(q.logvar.size(), 1.0);
    for (std::size_t i = 0; i < q.logvar.size(); ++i) {
        if (q.logvar[i] > kLogvarClamp) {
            q.logvar[i] = kLogvarClamp;
            if (clamp_mask) (*clamp_mask)[i] = 0.0;
        } else if (q.logvar[i] < -kLogvarClamp) {
            q.logvar[i] = -kLogvarClamp;
            if (clamp_mask) (*clamp_mask)[i] = 0.0;
        }
    }
    return q;
}
}  // namespace detail

inline std::pair<GaussianPosterior, GaussianPosterior> encode(const ModelParams& p, const Vec& h) {
    if (h.size() != p.dims.embed) {
        throw std::invalid_argument("encode: embedding length does not match model H");
    }
    return {detail::affine_posterior(p.W_mu_c, p.b_mu_c, p.W_lv_c, p.b_lv_c, h, nullptr),
            detail::affine_posterior(p.W_mu_nc, p.b_mu_nc, p.W_lv_nc, p.b_lv_nc, h, nullptr)};
}

// z = mu + exp(logvar/2) .* eps; eps is returned so the pass can be replayed.
inline std::pair<Vec, Vec> reparameterize(const GaussianPosterior& q, Rng& rng) {
    Vec eps = rng.gaussian_vec(q.mu.size());
    Vec z(q.mu.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = q.mu[i] + std::exp(0.5 * q.logvar[i]) * eps[i];
    }
    return {std::move(z), std::move(eps)};
}

inline double reward(const ModelParams& p, const Vec& z_c) {
    if (z_c.size() != p.w_reward.size()) throw std::invalid_argument("reward: z_c length mismatch");
    return dot(p.w_reward, z_c);
}

inline double adversary(const ModelParams& p, const Vec& z_nc) {
    if (z_nc.size() != p.w_adv.size()) throw std::invalid_argument("adversary: z_nc length mismatch");
    return dot(p.w_adv, z_nc);
}

// Deterministic eval-mode reward: mean latent, no sampling.
inline double reward_eval(const ModelParams& p, const AblationConfig& ab, const Vec& h) {
    if (ab.identity_encoder) {
        if (h.size() != p.w_reward.size()) {
            throw std::invalid_argument("reward_eval: identity encoder requires d_c == H");
        }
        return dot(p.w_reward, h);
    }
    GaussianPosterior qc =
        detail::affine_posterior(p.W_mu_c, p.b_mu_c, p.W_lv_c, p.b_lv_c, h, nullptr);
    return reward(p, qc.mu);
}

inline Vec reconstruct(const ModelParams& p, const Vec& z_c, const Vec& z_nc) {
    if (z_c.size() != p.dims.d_c || z_nc.size() != p.dims.d_nc) {
        throw std::invalid_argument("reconstruct: latent length mismatch");
    }
    Vec z(z_c);
    z.insert(z.end(), z_nc.begin(), z_nc.end());  // causal first
    Vec h_hat = matvec(p.W_dec, z);
    axpy(h_hat, 1.0, p.b_dec);
    return h_hat;
}

// Gradient reversal layer. Forward is the identity; backward scales the
// upstream gradient by -lambda_grl on the encoder side only.
inline double grl_forward(double x) { return x; }
inline double grl_backward(double upstream_grad, double lambda_grl) {
    return -lambda_grl * upstream_grad;
}

enum class ForwardMode { train, eval };

struct SideTrace {
    GaussianPosterior qc, qnc;
    Vec clamp_mask_c, clamp_mask_nc;  // 1 where logvar was not clamped
    Vec eps_c, eps_nc;
    Vec z_c, z_nc;
    Vec h_hat;
    double r{0.0};
    double a{0.0};
};

struct ForwardTrace {
    SideTrace winner, loser;
    ForwardMode mode{ForwardMode::train};
};

namespace detail {
inline SideTrace forward_side(const ModelParams& p, const Vec& h, Rng* rng, ForwardMode mode,
                              const AblationConfig& ab, const Vec* frozen_eps_c,
                              const Vec* frozen_eps_nc) {
    SideTrace t;
    if (ab.identity_encoder) {
        t.z_c = h;
        t.r = reward(p, t.z_c);
        return t;
    }
    t.qc = affine_posterior(p.W_mu_c, p.b_mu_c, p.W_lv_c, p.b_lv_c, h, &t.clamp_mask_c);
    auto sample = [&](const GaussianPosterior& q, const Vec* frozen, Vec& z, Vec& eps) {
        if (mode == ForwardMode::eval) {
            eps.assign(q.mu.size(), 0.0);
            z = q.mu;
        } else if (frozen) {
            eps = *frozen;
            z.resize(q.mu.size());
            for (std::size_t i = 0; i < z.size(); ++i) {
                z[i] = q.mu[i] + std::exp(0.5 * q.logvar[i]) * eps[i];
            }
        } else {
            auto [zz, ee] = reparameterize(q, *rng);
            z = std::move(zz);
            eps = std::move(ee);
        }
    };
    sample(t.qc, frozen_eps_c, t.z_c, t.eps_c);
    t.r = reward(p, t.z_c);
    if (ab.factorized) {
        t.qnc = affine_posterior(p.W_mu_nc, p.b_mu_nc, p.W_lv_nc, p.b_lv_nc, h, &t.clamp_mask_nc);
        sample(t.qnc, frozen_eps_nc, t.z_nc, t.eps_nc);
        if (ab.use_adversary) t.a = adversary(p, t.z_nc);
        if (ab.use_reconstruction) t.h_hat = reconstruct(p, t.z_c, t.z_nc);
    }
    return t;
}
}  // namespace detail

inline ForwardTrace forward_triplet(const ModelParams& p, const PreferenceTriplet& t, Rng& rng,
                                    ForwardMode mode, const AblationConfig& ab) {
    ForwardTrace tr;
    tr.mode = mode;
    tr.winner = detail::forward_side(p, t.winner.h, &rng, mode, ab, nullptr, nullptr);
    tr.loser = detail::forward_side(p, t.loser.h, &rng, mode, ab, nullptr, nullptr);
    return tr;
}

// Replay a training-mode forward pass with the noise realization of a
// previous trace. Required by the finite-difference gradient checker.
inline ForwardTrace replay_triplet(const ModelParams& p, const PreferenceTriplet& t,
                                   const ForwardTrace& prev, const AblationConfig& ab) {
    ForwardTrace tr;
    tr.mode = prev.mode;
    const Vec* wc = prev.winner.eps_c.empty() ? nullptr : &prev.winner.eps_c;
    const Vec* wnc = prev.winner.eps_nc.empty() ? nullptr : &prev.winner.eps_nc;
    const Vec* lc = prev.loser.eps_c.empty() ? nullptr : &prev.loser.eps_c;
    const Vec* lnc = prev.loser.eps_nc.empty() ? nullptr : &prev.loser.eps_nc;
    tr.winner = detail::forward_side(p, t.winner.h, nullptr, prev.mode, ab, wc, wnc);
    tr.loser = detail::forward_side(p, t.loser.h, nullptr, prev.mode, ab, lc, lnc);
    return tr;
}

}  // namespace causalrm

#endif  // CAUSALRM_MODEL_HPP
