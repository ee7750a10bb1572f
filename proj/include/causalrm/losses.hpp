#ifndef CAUSALRM_LOSSES_HPP
#define CAUSALRM_LOSSES_HPP

#include <cmath>
#include <stdexcept>

#include "causalrm/model.hpp"
#include "causalrm/numkernel.hpp"

namespace causalrm {

struct LossWeights {
    double lambda_pred{1.0};
    double lambda_kl_c{0.001};
    double lambda_kl_nc{0.001};
    double lambda_adv{0.05};
    double lambda_rec{0.001};
    double lambda_grl{1.0};
};

struct LossBreakdown {
    double l_pref{0.0};
    double l_kl_c{0.0};
    double l_adv{0.0};
    double l_kl_nc{0.0};
    double l_rec{0.0};
    double total{0.0};
    std::size_t batch{1};
};

inline double softplus(double x) {
    // log(1 + e^x) without overflow
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// -log sigma(r_w - r_l)
inline double bt_loss(double r_w, double r_l) { return softplus(-(r_w - r_l)); }

inline double adv_loss(double a_w, double a_l) { return bt_loss(a_w, a_l); }

// KL(N(mu, diag(exp(logvar))) || N(0, I))
inline double kl_standard_normal(const GaussianPosterior& q) {
    if (q.mu.size() != q.logvar.size()) {
        throw std::invalid_argument("kl_standard_normal: mu/logvar length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < q.mu.size(); ++i) {
        acc += q.mu[i] * q.mu[i] + std::exp(q.logvar[i]) - q.logvar[i] - 1.0;
    }
    return 0.5 * acc;
}

// Squared Euclidean distance, summed over dims.
inline double rec_loss(const Vec& h, const Vec& h_hat) {
    if (h.size() != h_hat.size()) throw std::invalid_argument("rec_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double d = h[i] - h_hat[i];
        acc += d * d;
    }
    return acc;
}

// Per-triplet loss terms. KL terms sum winner and loser sides; the
// reconstruction term averages the two sides. Disabled terms contribute
// exactly zero. The forward scalar carries +lambda_adv * l_adv; the minimax
// sign flip lives in backward() via the GRL.
inline LossBreakdown total_loss(const ForwardTrace& tr, const PreferenceTriplet& t,
                                const LossWeights& w, const AblationConfig& ab) {
    LossBreakdown b;
    b.l_pref = bt_loss(tr.winner.r, tr.loser.r);
    if (ab.use_kl_c && !ab.identity_encoder) {
        b.l_kl_c = kl_standard_normal(tr.winner.qc) + kl_standard_normal(tr.loser.qc);
    }
    if (ab.factorized && ab.use_kl_nc) {
        b.l_kl_nc = kl_standard_normal(tr.winner.qnc) + kl_standard_normal(tr.loser.qnc);
    }
    if (ab.factorized && ab.use_adversary) {
        if (tr.winner.z_nc.empty() || tr.loser.z_nc.empty()) {
            throw std::invalid_argument("total_loss: trace has no adversary outputs for this ablation");
        }
        b.l_adv = adv_loss(tr.winner.a, tr.loser.a);
    }
    if (ab.factorized && ab.use_reconstruction) {
        if (tr.winner.h_hat.empty() || tr.loser.h_hat.empty()) {
            throw std::invalid_argument("total_loss: trace has no reconstruction for this ablation");
        }
        b.l_rec = 0.5 * (rec_loss(t.winner.h, tr.winner.h_hat) + rec_loss(t.loser.h, tr.loser.h_hat));
    }
    b.total = w.lambda_pred * b.l_pref + w.lambda_kl_c * b.l_kl_c + w.lambda_rec * b.l_rec +
              w.lambda_kl_nc * b.l_kl_nc + w.lambda_adv * b.l_adv;
    return b;
}

inline LossBreakdown operator+(const LossBreakdown& x, const LossBreakdown& y) {
    LossBreakdown b;
    b.l_pref = x.l_pref + y.l_pref;
    b.l_kl_c = x.l_kl_c + y.l_kl_c;
    b.l_adv = x.l_adv + y.l_adv;
    b.l_kl_nc = x.l_kl_nc + y.l_kl_nc;
    b.l_rec = x.l_rec + y.l_rec;
    b.total = x.total + y.total;
    b.batch = x.batch + y.batch;
    return b;
}

inline LossBreakdown scale(const LossBreakdown& x, double s) {
    LossBreakdown b = x;
    b.l_pref *= s;
    b.l_kl_c *= s;
    b.l_adv *= s;
    b.l_kl_nc *= s;
    b.l_rec *= s;
    b.total *= s;
    return b;
}

namespace detail {

struct SideGrads {
    Vec g_z_c, g_z_nc;    // accumulated into latents before the KL terms
    Vec g_mu_c, g_lv_c;   // posterior-level gradients
    Vec g_mu_nc, g_lv_nc;
};

// Backprop for one side given upstream scalars. g_r: dL/dr. g_a_enc: dL/da
// as seen by the encoder (already sign-flipped by the GRL); g_a_head: dL/da
// for the adversary head itself (unflipped).
inline void backward_side(const SideTrace& s, const Vec& h, const ModelParams& p,
                          const LossWeights& w, const AblationConfig& ab, double g_r,
                          double g_a_enc, double g_a_head, ModelParams& g, double sc) {
    if (ab.identity_encoder) {
        axpy(g.w_reward, sc * g_r, s.z_c);
        return;
    }
    const std::size_t d_c = p.dims.d_c;
    const std::size_t d_nc = p.dims.d_nc;
    Vec g_z_c(d_c, 0.0);
    Vec g_z_nc(ab.factorized ? d_nc : 0, 0.0);

    // reward head and its latent gradient
    axpy(g.w_reward, sc * g_r, s.z_c);
    axpy(g_z_c, g_r, p.w_reward);

    if (ab.factorized && ab.use_adversary) {
        axpy(g.w_adv, sc * g_a_head, s.z_nc);
        axpy(g_z_nc, g_a_enc, p.w_adv);
    }

    if (ab.factorized && ab.use_reconstruction) {
        // l_rec side contribution is 0.5 * ||h_hat - h||^2, so dL/dh_hat = lambda_rec * (h_hat - h)
        Vec g_hhat(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            g_hhat[i] = w.lambda_rec * (s.h_hat[i] - h[i]);
        }
        Vec z_cat(s.z_c);
        z_cat.insert(z_cat.end(), s.z_nc.begin(), s.z_nc.end());
        add_outer(g.W_dec, g_hhat, z_cat, sc);
        axpy(g.b_dec, sc, g_hhat);
        Vec g_z_cat = matvec_t(p.W_dec, g_hhat);
        for (std::size_t i = 0; i < d_c; ++i) g_z_c[i] += g_z_cat[i];
        for (std::size_t i = 0; i < d_nc; ++i) g_z_nc[i] += g_z_cat[d_c + i];
    }

    // latent -> posterior: z = mu + exp(lv/2) eps
    auto to_posterior = [](const Vec& g_z, const GaussianPosterior& q, const Vec& eps, Vec& g_mu,
                           Vec& g_lv) {
        g_mu = g_z;
        g_lv.assign(g_z.size(), 0.0);
        for (std::size_t i = 0; i < g_z.size(); ++i) {
            g_lv[i] = g_z[i] * 0.5 * std::exp(0.5 * q.logvar[i]) * eps[i];
        }
    };
    Vec g_mu_c, g_lv_c;
    to_posterior(g_z_c, s.qc, s.eps_c, g_mu_c, g_lv_c);
    if (ab.use_kl_c) {
        for (std::size_t i = 0; i < d_c; ++i) {
            g_mu_c[i] += w.lambda_kl_c * s.qc.mu[i];
            g_lv_c[i] += w.lambda_kl_c * 0.5 * (std::exp(s.qc.logvar[i]) - 1.0);
        }
    }
    for (std::size_t i = 0; i < d_c; ++i) g_lv_c[i] *= s.clamp_mask_c[i];
    add_outer(g.W_mu_c, g_mu_c, h, sc);
    axpy(g.b_mu_c, sc, g_mu_c);
    add_outer(g.W_lv_c, g_lv_c, h, sc);
    axpy(g.b_lv_c, sc, g_lv_c);

    if (ab.factorized) {
        Vec g_mu_nc, g_lv_nc;
        to_posterior(g_z_nc, s.qnc, s.eps_nc, g_mu_nc, g_lv_nc);
        if (ab.use_kl_nc) {
            for (std::size_t i = 0; i < d_nc; ++i) {
                g_mu_nc[i] += w.lambda_kl_nc * s.qnc.mu[i];
                g_lv_nc[i] += w.lambda_kl_nc * 0.5 * (std::exp(s.qnc.logvar[i]) - 1.0);
            }
        }
        for (std::size_t i = 0; i < d_nc; ++i) g_lv_nc[i] *= s.clamp_mask_nc[i];
        add_outer(g.W_mu_nc, g_mu_nc, h, sc);
        axpy(g.b_mu_nc, sc, g_mu_nc);
        add_outer(g.W_lv_nc, g_lv_nc, h, sc);
        axpy(g.b_lv_nc, sc, g_lv_nc);
    }
}

}  // namespace detail

// Analytic gradients of the total objective for one triplet, accumulated
// into `g` (scaled by `sc`, typically 1/batch). GRL semantics: the adversary
// head descends on lambda_adv * l_adv while the encoder receives
// -lambda_grl * lambda_adv * dl_adv/d(encoder), realizing the minimax of the
// overall objective in one pass.
inline void backward(const ForwardTrace& tr, const PreferenceTriplet& t, const LossWeights& w,
                     const AblationConfig& ab, const ModelParams& p, ModelParams& g,
                     double sc = 1.0) {
    const double s_pref = sigmoid(tr.winner.r - tr.loser.r);
    const double g_r_w = w.lambda_pred * (s_pref - 1.0);
    const double g_r_l = w.lambda_pred * (1.0 - s_pref);

    double g_a_w_head = 0.0, g_a_l_head = 0.0, g_a_w_enc = 0.0, g_a_l_enc = 0.0;
    if (ab.factorized && ab.use_adversary) {
        const double s_adv = sigmoid(tr.winner.a - tr.loser.a);
        g_a_w_head = w.lambda_adv * (s_adv - 1.0);
        g_a_l_head = w.lambda_adv * (1.0 - s_adv);
        g_a_w_enc = grl_backward(g_a_w_head, w.lambda_grl);
        g_a_l_enc = grl_backward(g_a_l_head, w.lambda_grl);
    }
    detail::backward_side(tr.winner, t.winner.h, p, w, ab, g_r_w, g_a_w_enc, g_a_w_head, g, sc);
    detail::backward_side(tr.loser, t.loser.h, p, w, ab, g_r_l, g_a_l_enc, g_a_l_head, g, sc);
}

}  // namespace causalrm

#endif  // CAUSALRM_LOSSES_HPP
