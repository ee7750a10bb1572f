#ifndef CAUSALRM_EVALUATION_HPP
#define CAUSALRM_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalrm/datagen.hpp"
#include "causalrm/model.hpp"
#include "causalrm/training.hpp"

namespace causalrm {

using RewardFn = std::function<double(const EmbeddingRecord&)>;

inline RewardFn model_reward_fn(const ModelParams& p, const AblationConfig& ab) {
    return [&p, ab](const EmbeddingRecord& r) { return reward_eval(p, ab, r.h); };
}

// Fraction of pairs ranked correctly; exact ties count 0.5 so a constant
// model scores chance.
inline double pairwise_accuracy(const RewardFn& f, const Dataset& ds) {
    if (ds.triplets.empty()) throw std::invalid_argument("pairwise_accuracy: empty dataset");
    double correct = 0.0;
    for (const auto& t : ds.triplets) {
        const double rw = f(t.winner);
        const double rl = f(t.loser);
        correct += rw > rl ? 1.0 : (rw == rl ? 0.5 : 0.0);
    }
    return correct / static_cast<double>(ds.triplets.size());
}

inline double pairwise_accuracy(const ModelParams& p, const AblationConfig& ab, const Dataset& ds) {
    return pairwise_accuracy(model_reward_fn(p, ab), ds);
}

struct LengthSensitivity {
    Vec bucket_means;    // mean min-max-normalized reward per quantile bucket
    Vec bucket_centers;  // mean normalized spurious attribute per bucket
    double sigma_len{0.0};
};

// Winner records, rewards min-max normalized to [0,1], bucketed into
// equal-count quantile bins of the spurious attribute; sigma_len is the
// population standard deviation of the bucket means.
inline LengthSensitivity length_sensitivity(const RewardFn& f, const Dataset& ds,
                                            std::size_t buckets) {
    if (buckets < 2) throw std::invalid_argument("length_sensitivity: need at least 2 buckets");
    const std::size_t n = ds.triplets.size();
    if (n < buckets) {
        throw std::invalid_argument("length_sensitivity: fewer records than buckets");
    }
    Vec rewards(n), attrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        rewards[i] = f(ds.triplets[i].winner);
        attrs[i] = ds.triplets[i].winner.spurious_attr;
    }
    auto minmax_norm = [](Vec v) {
        const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
        const double lo = *lo_it;
        const double range = *hi_it - lo;
        if (range == 0.0) {
            std::fill(v.begin(), v.end(), 0.0);
        } else {
            for (double& x : v) x = (x - lo) / range;
        }
        return v;
    };
    rewards = minmax_norm(std::move(rewards));
    const Vec attrs_norm = minmax_norm(attrs);

    // equal-count bins by quantile of the attribute, ties broken by record order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return attrs[a] < attrs[b]; });
    LengthSensitivity out;
    out.bucket_means.reserve(buckets);
    out.bucket_centers.reserve(buckets);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::size_t count = n / buckets + (b < n % buckets ? 1 : 0);
        double rsum = 0.0, asum = 0.0;
        for (std::size_t k = 0; k < count; ++k, ++pos) {
            rsum += rewards[order[pos]];
            asum += attrs_norm[order[pos]];
        }
        out.bucket_means.push_back(rsum / static_cast<double>(count));
        out.bucket_centers.push_back(asum / static_cast<double>(count));
    }
    double mean = std::accumulate(out.bucket_means.begin(), out.bucket_means.end(), 0.0) /
                  static_cast<double>(buckets);
    double var = 0.0;
    for (double m : out.bucket_means) var += (m - mean) * (m - mean);
    out.sigma_len = std::sqrt(var / static_cast<double>(buckets));
    return out;
}

inline LengthSensitivity length_sensitivity(const ModelParams& p, const AblationConfig& ab,
                                            const Dataset& ds, std::size_t buckets) {
    return length_sensitivity(model_reward_fn(p, ab), ds, buckets);
}

// Held-out accuracy of a fresh linear probe on the frozen non-causal means;
// 0.5 means no reward leakage into the channel.
inline double leakage_probe(const ModelParams& p, const AblationConfig& ab, const Dataset& ds,
                            const ProbeConfig& cfg = {}) {
    if (!ab.factorized) {
        throw std::invalid_argument("leakage_probe: model is not factorized");
    }
    return train_probe(ds, p, ab, Channel::noncausal, cfg).heldout_accuracy;
}

struct EvalReport {
    std::string model_tag;
    std::string split_tag;
    double accuracy{0.0};
    Vec bucket_means;
    Vec bucket_centers;
    double sigma_len{0.0};
    double leakage{0.5};
    bool leakage_valid{false};
    double gold_corr{0.0};
    bool gold_corr_valid{false};
    std::size_t n{0};
};

inline double pearson(const Vec& x, const Vec& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

inline EvalReport evaluate(const ModelParams& p, const AblationConfig& ab, const Dataset& ds,
                           const std::string& model_tag, std::size_t buckets = 10,
                           bool with_probe = true, const ProbeConfig& probe_cfg = {}) {
    EvalReport r;
    r.model_tag = model_tag;
    r.split_tag = to_string(ds.split);
    r.n = ds.triplets.size();
    r.accuracy = pairwise_accuracy(p, ab, ds);
    LengthSensitivity ls = length_sensitivity(p, ab, ds, buckets);
    r.bucket_means = ls.bucket_means;
    r.bucket_centers = ls.bucket_centers;
    r.sigma_len = ls.sigma_len;
    if (with_probe && ab.factorized) {
        r.leakage = leakage_probe(p, ab, ds, probe_cfg);
        r.leakage_valid = true;
    }
    Vec rewards(r.n), gold(r.n);
    for (std::size_t i = 0; i < r.n; ++i) {
        rewards[i] = reward_eval(p, ab, ds.triplets[i].winner.h);
        gold[i] = ds.triplets[i].winner.gold_quality;
    }
    const double c = pearson(rewards, gold);
    r.gold_corr = c;
    r.gold_corr_valid = std::isfinite(c);
    return r;
}

struct GoldDivergencePoint {
    double mean_norm_reward{0.0};
    double mean_gold{0.0};
    double corr{0.0};
    bool corr_valid{false};
};

// Reward-model drift diagnostic across training checkpoints: mean min-max
// normalized predicted reward on winners, mean gold score, and their
// correlation across records.
inline std::vector<GoldDivergencePoint> gold_divergence(
    const std::vector<std::pair<const ModelParams*, AblationConfig>>& checkpoints,
    const Dataset& ds) {
    if (checkpoints.size() < 2) {
        throw std::invalid_argument("gold_divergence: need at least 2 checkpoints");
    }
    std::vector<GoldDivergencePoint> out;
    out.reserve(checkpoints.size());
    for (const auto& [p, ab] : checkpoints) {
        GoldDivergencePoint pt;
        const std::size_t n = ds.triplets.size();
        Vec rewards(n), gold(n);
        for (std::size_t i = 0; i < n; ++i) {
            rewards[i] = reward_eval(*p, ab, ds.triplets[i].winner.h);
            gold[i] = ds.triplets[i].winner.gold_quality;
        }
        const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
        const double range = *hi - *lo;
        Vec norm(n, 0.0);
        if (range > 0.0) {
            for (std::size_t i = 0; i < n; ++i) norm[i] = (rewards[i] - *lo) / range;
        }
        pt.mean_norm_reward =
            std::accumulate(norm.begin(), norm.end(), 0.0) / static_cast<double>(n);
        pt.mean_gold = std::accumulate(gold.begin(), gold.end(), 0.0) / static_cast<double>(n);
        const double c = pearson(rewards, gold);
        pt.corr = c;
        pt.corr_valid = std::isfinite(c);
        out.push_back(pt);
    }
    return out;
}

struct SycophancyRow {
    std::string model;
    double clean_acc{0.0};   // clean-trained model on clean test
    double hacked_acc{0.0};  // hacked-trained model on hacked test
    double delta{0.0};       // hacked_acc - clean_acc
};

struct ExperimentData {
    Dataset train, id_test, ood_test;
};

inline ExperimentData build_experiment_data(const GenConfig& cfg, const GenModel& gm,
                                            std::size_t n_train, std::size_t n_test) {
    ExperimentData d;
    Rng rng = Rng(cfg.seed).fork(0xDA7A);
    d.train = build_split(cfg, gm, n_train, Split::train, SpuriousMode::correlated, rng);
    d.id_test = build_split(cfg, gm, n_test, Split::id_test, SpuriousMode::correlated, rng);
    d.ood_test = build_split(cfg, gm, n_test, Split::ood_test, SpuriousMode::anti_correlated, rng);
    return d;
}

// Per variant: train on clean data, train on prefix-perturbed data
// (p_chosen/p_rejected), evaluate the clean model on the clean ID split and
// the hacked model on the perturbed test split (p_test on both sides).
inline std::vector<SycophancyRow> sycophancy_protocol(const GenConfig& gen_cfg,
                                                      const TrainConfig& base_cfg,
                                                      const std::vector<std::string>& variants,
                                                      std::size_t n_train, std::size_t n_test) {
    const GenModel gm = make_gen_model(gen_cfg);
    ExperimentData data = build_experiment_data(gen_cfg, gm, n_train, n_test);
    Rng prng = Rng(gen_cfg.seed).fork(0x9E4F);
    Dataset hacked_train =
        apply_prefix_perturbation(data.train, gen_cfg, gm, PerturbMode::train, prng);
    Dataset hacked_test =
        apply_prefix_perturbation(data.id_test, gen_cfg, gm, PerturbMode::test, prng);
    hacked_test.split = Split::hacked_test;

    std::vector<SycophancyRow> rows;
    for (const auto& name : variants) {
        TrainConfig cfg = base_cfg;
        apply_variant(name, cfg.ablation, cfg.weights, cfg.dims);
        SycophancyRow row;
        row.model = name;
        TrainResult clean = train(data.train, cfg);
        row.clean_acc = pairwise_accuracy(clean.params, cfg.ablation, data.id_test);
        TrainResult hacked = train(hacked_train, cfg);
        row.hacked_acc = pairwise_accuracy(hacked.params, cfg.ablation, hacked_test);
        row.delta = row.hacked_acc - row.clean_acc;
        rows.push_back(row);
    }
    return rows;
}

struct AblationRow {
    std::string variant;
    EvalReport id;
    EvalReport ood;
    bool failed{false};
    std::string error;
};

// Trains the seven Appendix-style variants on shared data and a shared seed
// and reports ID (train-correlated) and OOD (anti-correlated) metrics.
// Failures are recorded per variant; the sweep continues.
inline std::vector<AblationRow> run_ablations(const GenConfig& gen_cfg, const TrainConfig& base_cfg,
                                              std::size_t n_train, std::size_t n_test,
                                              std::size_t buckets = 10) {
    const GenModel gm = make_gen_model(gen_cfg);
    ExperimentData data = build_experiment_data(gen_cfg, gm, n_train, n_test);
    std::vector<AblationRow> rows;
    for (const auto& name : ablation_variant_names()) {
        AblationRow row;
        row.variant = name;
        try {
            TrainConfig cfg = base_cfg;
            apply_variant(name, cfg.ablation, cfg.weights, cfg.dims);
            TrainResult tr = train(data.train, cfg);
            row.id = evaluate(tr.params, cfg.ablation, data.id_test, name, buckets);
            row.ood = evaluate(tr.params, cfg.ablation, data.ood_test, name, buckets);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace causalrm

#endif  // CAUSALRM_EVALUATION_HPP
