#ifndef CAUSALRM_TRAINING_HPP
#define CAUSALRM_TRAINING_HPP

#include <algorithm>
#include <chrono>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalrm/losses.hpp"
#include "causalrm/model.hpp"
#include "causalrm/numkernel.hpp"

namespace causalrm {

struct TrainConfig {
    std::size_t epochs{30};
    std::size_t batch_size{64};
    double lr{1e-3};
    LossWeights weights;
    AblationConfig ablation;
    Dims dims;
    std::uint64_t seed{1};
    std::size_t checkpoint_interval{0};  // 0 = final only
    std::size_t log_interval{10};
    double grad_clip{10.0};  // <= 0 disables
};

struct TrainLogRow {
    std::size_t step{0};
    LossBreakdown loss;
    double train_acc{0.0};  // running over the current epoch
    double adv_acc{0.0};
    double ms{0.0};
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRow> log;
};

// Named training variants: the Standard-RM baseline plus the full model and
// its six ablations.
inline std::vector<std::string> ablation_variant_names() {
    return {"full",     "wo_factorization", "wo_reconstruction", "wo_grl",
            "wo_kl_c",  "wo_kl_nc",         "wo_kl_both"};
}

inline void apply_variant(const std::string& name, AblationConfig& ab, LossWeights& w,
                          Dims& dims) {
    ab = AblationConfig{};
    if (name == "full") {
        // all mechanisms on
    } else if (name == "standard") {
        ab.identity_encoder = true;
        dims.d_c = dims.embed;
    } else if (name == "wo_factorization") {
        ab.factorized = false;
    } else if (name == "wo_reconstruction") {
        ab.use_reconstruction = false;
        w.lambda_rec = 0.0;
    } else if (name == "wo_grl") {
        ab.use_adversary = false;
        w.lambda_adv = 0.0;
    } else if (name == "wo_kl_c") {
        ab.use_kl_c = false;
        w.lambda_kl_c = 0.0;
    } else if (name == "wo_kl_nc") {
        ab.use_kl_nc = false;
        w.lambda_kl_nc = 0.0;
    } else if (name == "wo_kl_both") {
        ab.use_kl_c = false;
        ab.use_kl_nc = false;
        w.lambda_kl_c = 0.0;
        w.lambda_kl_nc = 0.0;
    } else {
        std::ostringstream os;
        os << "unknown variant '" << name << "'; valid names: standard";
        for (const auto& v : ablation_variant_names()) os << ", " << v;
        throw std::invalid_argument(os.str());
    }
    ab.normalize();
}

// Algorithm: shuffle per epoch, forward each triplet in train mode, sum the
// loss terms, accumulate analytic gradients with the GRL sign flip, then one
// joint Adam step over all parameter groups.
inline TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                         const std::function<void(std::size_t, const ModelParams&)>& on_checkpoint = {}) {
    if (ds.triplets.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");
    if (cfg.lr < 0.0) throw std::invalid_argument("train: learning rate must be >= 0");
    if (ds.embed_dim != cfg.dims.embed) {
        throw std::invalid_argument("train: dataset embed_dim " + std::to_string(ds.embed_dim) +
                                    " does not match model H " + std::to_string(cfg.dims.embed));
    }
    AblationConfig ab = cfg.ablation;
    ab.normalize();

    Rng rng = Rng(cfg.seed).fork(0x7124);
    TrainResult res;
    res.params = init_params(cfg.dims, rng);
    AdamState adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    adam.init(res.params.refs());
    ModelParams grads = zeros_params(cfg.dims);

    std::vector<std::size_t> order(ds.triplets.size());
    std::iota(order.begin(), order.end(), 0);

    std::size_t step = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the seeded stream
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        double correct = 0.0, adv_correct = 0.0, seen = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const double inv_b = 1.0 / static_cast<double>(end - start);
            for (auto& r : grads.refs()) std::fill(r.data->begin(), r.data->end(), 0.0);
            LossBreakdown batch_loss;
            batch_loss.batch = 0;
            for (std::size_t k = start; k < end; ++k) {
                const PreferenceTriplet& t = ds.triplets[order[k]];
                ForwardTrace tr = forward_triplet(res.params, t, rng, ForwardMode::train, ab);
                LossBreakdown b = total_loss(tr, t, cfg.weights, ab);
                b.batch = 1;
                batch_loss = batch_loss + b;
                backward(tr, t, cfg.weights, ab, res.params, grads, inv_b);
                correct += tr.winner.r > tr.loser.r ? 1.0 : (tr.winner.r == tr.loser.r ? 0.5 : 0.0);
                if (ab.use_adversary) {
                    adv_correct +=
                        tr.winner.a > tr.loser.a ? 1.0 : (tr.winner.a == tr.loser.a ? 0.5 : 0.0);
                }
                seen += 1.0;
            }
            const std::size_t bsz = batch_loss.batch;
            batch_loss = scale(batch_loss, inv_b);
            batch_loss.batch = bsz;
            if (!std::isfinite(batch_loss.total)) {
                std::ostringstream os;
                os << "train: non-finite loss at step " << step << " (pref=" << batch_loss.l_pref
                   << " kl_c=" << batch_loss.l_kl_c << " adv=" << batch_loss.l_adv
                   << " kl_nc=" << batch_loss.l_kl_nc << " rec=" << batch_loss.l_rec << ")";
                throw std::runtime_error(os.str());
            }
            if (cfg.grad_clip > 0.0) {
                const double norm = global_norm(grads.refs());
                if (norm > cfg.grad_clip) scale_all(grads.refs(), cfg.grad_clip / norm);
            }
            adam.update(res.params.refs(), grads.refs());
            ++step;
            if (cfg.log_interval > 0 && (step % cfg.log_interval == 0 || step == 1)) {
                TrainLogRow row;
                row.step = step;
                row.loss = batch_loss;
                row.train_acc = correct / seen;
                row.adv_acc = ab.use_adversary ? adv_correct / seen : 0.5;
                row.ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
                res.log.push_back(row);
            }
            if (on_checkpoint && cfg.checkpoint_interval > 0 &&
                step % cfg.checkpoint_interval == 0) {
                on_checkpoint(step, res.params);
            }
        }
    }
    if (on_checkpoint) on_checkpoint(step, res.params);
    return res;
}

enum class Channel { causal, noncausal };

struct ProbeConfig {
    std::size_t steps{200};
    double lr{1e-2};
    double train_frac{0.8};
    std::uint64_t seed{0};
};

struct ProbeResult {
    Vec head;
    double heldout_accuracy{0.5};
};

// Fresh no-bias linear head trained with the pairwise loss on the frozen
// channel's mean latent. Measures how much preference signal the channel
// carries; 0.5 means none.
inline ProbeResult train_probe(const Dataset& ds, const ModelParams& frozen,
                               const AblationConfig& ab, Channel channel,
                               const ProbeConfig& cfg = {}) {
    if (ds.triplets.empty()) throw std::invalid_argument("train_probe: empty dataset");
    if (channel == Channel::noncausal && !ab.factorized) {
        throw std::invalid_argument("train_probe: non-causal channel requires a factorized model");
    }
    auto features = [&](const Vec& h) -> Vec {
        if (ab.identity_encoder) return h;
        auto [qc, qnc] = encode(frozen, h);
        return channel == Channel::causal ? qc.mu : qnc.mu;
    };
    std::vector<std::pair<Vec, Vec>> feats;  // (winner, loser) mean latents
    feats.reserve(ds.triplets.size());
    for (const auto& t : ds.triplets) {
        feats.emplace_back(features(t.winner.h), features(t.loser.h));
    }
    const std::size_t dim = feats.front().first.size();

    Rng rng = Rng(cfg.seed).fork(0x9702);
    std::vector<std::size_t> order(feats.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    const std::size_t n_train = static_cast<std::size_t>(
        cfg.train_frac * static_cast<double>(order.size()));

    ProbeResult res;
    res.head.assign(dim, 0.0);
    Vec grad(dim, 0.0);
    AdamState adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    std::vector<ParamRef> pr = {{"probe_head", &res.head}};
    std::vector<ParamRef> gr = {{"probe_head", &grad}};
    adam.init(pr);
    for (std::size_t s = 0; s < cfg.steps; ++s) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double inv = n_train > 0 ? 1.0 / static_cast<double>(n_train) : 0.0;
        for (std::size_t k = 0; k < n_train; ++k) {
            const auto& [fw, fl] = feats[order[k]];
            const double sw = dot(res.head, fw);
            const double sl = dot(res.head, fl);
            const double g = (sigmoid(sw - sl) - 1.0) * inv;
            axpy(grad, g, fw);
            axpy(grad, -g, fl);
        }
        adam.update(pr, gr);
    }
    double correct = 0.0;
    std::size_t n_test = 0;
    for (std::size_t k = n_train; k < order.size(); ++k) {
        const auto& [fw, fl] = feats[order[k]];
        const double sw = dot(res.head, fw);
        const double sl = dot(res.head, fl);
        correct += sw > sl ? 1.0 : (sw == sl ? 0.5 : 0.0);
        ++n_test;
    }
    res.heldout_accuracy = n_test > 0 ? correct / static_cast<double>(n_test) : 0.5;
    return res;
}

}  // namespace causalrm

#endif  // CAUSALRM_TRAINING_HPP
