#ifndef CAUSALRM_DATAGEN_HPP
#define CAUSALRM_DATAGEN_HPP

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalrm/numkernel.hpp"

namespace causalrm {

enum class SpuriousMode { correlated, independent, anti_correlated };
enum class Split { train, id_test, ood_test, hacked_test };
enum class MixingMode { linear, tanh_nonlinear };
enum class PerturbMode { train, test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::id_test: return "id_test";
        case Split::ood_test: return "ood_test";
        case Split::hacked_test: return "hacked_test";
    }
    return "?";
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "id_test") return Split::id_test;
    if (s == "ood_test") return Split::ood_test;
    if (s == "hacked_test") return Split::hacked_test;
    throw std::invalid_argument("unknown split tag: " + s);
}

// Configuration of the synthetic embedding generator that stands in for the
// frozen backbone. Hidden latents u_c, u_nc are independent standard
// normals; quality and the length-like spurious attribute are projections of
// disjoint latents, so they are independent at the record level. Any
// correlation between them exists only through pair construction.
struct GenConfig {
    std::size_t embed_dim{64};
    std::size_t k_c{4};
    std::size_t k_nc{4};
    MixingMode mixing{MixingMode::linear};
    double beta{4.0};  // label temperature
    double rho{0.9};
    SpuriousMode shift_mode{SpuriousMode::correlated};
    double p_chosen{0.8};
    double p_rejected{0.2};
    double p_test{0.3};
    double noise_scale{0.1};
    double prefix_magnitude{0.2};  // default 2.0 x noise scale
    std::uint64_t seed{1};

    void validate() const {
        if (k_c + k_nc > embed_dim) {
            throw std::invalid_argument("GenConfig: k_c + k_nc must not exceed embed_dim");
        }
        if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("GenConfig: rho must lie in [0,1]");
        for (double p : {p_chosen, p_rejected, p_test}) {
            if (p < 0.0 || p > 1.0) {
                throw std::invalid_argument("GenConfig: perturbation probabilities must lie in [0,1]");
            }
        }
        if (noise_scale < 0.0) throw std::invalid_argument("GenConfig: noise_scale must be >= 0");
        if (beta <= 0.0) throw std::invalid_argument("GenConfig: beta must be > 0");
    }

    std::string serialize() const {
        std::ostringstream os;
        os << embed_dim << '|' << k_c << '|' << k_nc << '|' << static_cast<int>(mixing) << '|'
           << beta << '|' << rho << '|' << static_cast<int>(shift_mode) << '|' << p_chosen << '|'
           << p_rejected << '|' << p_test << '|' << noise_scale << '|' << prefix_magnitude << '|'
           << seed;
        return os.str();
    }

    // FNV-1a over the serialized config.
    std::string fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : serialize()) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        std::ostringstream os;
        os << std::hex << h;
        return os.str();
    }
};

// Fixed per-config structures: mixing matrix, the unit directions defining
// quality and the spurious attribute, and the sycophancy-prefix direction.
struct GenModel {
    Matrix A;      // H x (k_c + k_nc)
    Vec w_c;       // unit norm, length k_c
    Vec w_nc;      // unit norm, length k_nc
    Vec v_prefix;  // unit norm, length H
};

inline Vec unit_gaussian_dir(Rng& rng, std::size_t n) {
    Vec v = rng.gaussian_vec(n);
    double norm = std::sqrt(dot(v, v));
    if (norm == 0.0) norm = 1.0;
    for (double& x : v) x /= norm;
    return v;
}

inline GenModel make_gen_model(const GenConfig& cfg) {
    cfg.validate();
    Rng rng = Rng(cfg.seed).fork(0xA11CE);
    GenModel m;
    const std::size_t k = cfg.k_c + cfg.k_nc;
    m.A = Matrix(cfg.embed_dim, k);
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& x : m.A.data) x = s * rng.gaussian();
    m.w_c = unit_gaussian_dir(rng, cfg.k_c);
    m.w_nc = unit_gaussian_dir(rng, cfg.k_nc);
    m.v_prefix = unit_gaussian_dir(rng, cfg.embed_dim);
    return m;
}

struct EmbeddingRecord {
    Vec h;
    double gold_quality{0.0};  // s, hidden ground truth
    double spurious_attr{0.0}; // a, the planted length-like scalar
    bool prefix_flag{false};
};

struct PreferenceTriplet {
    EmbeddingRecord winner;
    EmbeddingRecord loser;
    std::uint64_t pair_id{0};
};

struct Dataset {
    std::vector<PreferenceTriplet> triplets;
    std::string fingerprint;
    Split split{Split::train};
    std::size_t embed_dim{0};
    bool perturbed{false};
};

inline EmbeddingRecord generate_record(const GenConfig& cfg, const GenModel& gm, Rng& rng) {
    EmbeddingRecord r;
    Vec u = rng.gaussian_vec(cfg.k_c + cfg.k_nc);
    const Vec u_c(u.begin(), u.begin() + cfg.k_c);
    const Vec u_nc(u.begin() + cfg.k_c, u.end());
    r.gold_quality = dot(gm.w_c, u_c);
    r.spurious_attr = dot(gm.w_nc, u_nc);
    r.h = matvec(gm.A, u);
    if (cfg.mixing == MixingMode::tanh_nonlinear) {
        for (double& x : r.h) x = std::tanh(x);
    }
    if (cfg.noise_scale > 0.0) {
        for (double& x : r.h) x += cfg.noise_scale * rng.gaussian();
    }
    return r;
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Winner drawn from the Bradley-Terry probability on gold quality.
inline PreferenceTriplet make_pair(const GenConfig& cfg, const EmbeddingRecord& r1,
                                   const EmbeddingRecord& r2, Rng& rng, std::uint64_t pair_id = 0) {
    const double p1 = sigmoid(cfg.beta * (r1.gold_quality - r2.gold_quality));
    PreferenceTriplet t;
    t.pair_id = pair_id;
    if (rng.uniform() < p1) {
        t.winner = r1;
        t.loser = r2;
    } else {
        t.winner = r2;
        t.loser = r1;
    }
    return t;
}

// Assemble a split with the stochastic-acceptance rule: a candidate pair is
// accepted with probability rho when the winner carries the larger spurious
// attribute and with probability 1-rho otherwise, so the emitted stream has
// winner-has-larger-a frequency exactly rho (flipped for the anti-correlated
// mode, unconstrained for the independent mode).
inline Dataset build_split(const GenConfig& cfg, const GenModel& gm, std::size_t n, Split split,
                           SpuriousMode mode, Rng& rng) {
    cfg.validate();
    Dataset ds;
    ds.fingerprint = cfg.fingerprint();
    ds.split = split;
    ds.embed_dim = cfg.embed_dim;
    ds.triplets.reserve(n);
    std::uint64_t pair_id = 0;
    while (ds.triplets.size() < n) {
        EmbeddingRecord r1 = generate_record(cfg, gm, rng);
        EmbeddingRecord r2 = generate_record(cfg, gm, rng);
        PreferenceTriplet t = make_pair(cfg, r1, r2, rng, pair_id);
        double accept_p = 1.0;
        if (mode == SpuriousMode::correlated) {
            accept_p = (t.winner.spurious_attr > t.loser.spurious_attr) ? cfg.rho : 1.0 - cfg.rho;
        } else if (mode == SpuriousMode::anti_correlated) {
            accept_p = (t.winner.spurious_attr < t.loser.spurious_attr) ? cfg.rho : 1.0 - cfg.rho;
        }
        if (rng.uniform() < accept_p) {
            ds.triplets.push_back(std::move(t));
            ++pair_id;
        }
    }
    return ds;
}

// Embedding-space analogue of prepending a fixed sycophancy prefix: add a
// constant direction to h and set the flag. Gold quality and the spurious
// attribute are untouched.
inline Dataset apply_prefix_perturbation(const Dataset& ds, const GenConfig& cfg,
                                         const GenModel& gm, PerturbMode mode, Rng& rng) {
    if (ds.perturbed) {
        throw std::invalid_argument("apply_prefix_perturbation: dataset already perturbed");
    }
    Dataset out = ds;
    out.perturbed = true;
    const double pw = (mode == PerturbMode::train) ? cfg.p_chosen : cfg.p_test;
    const double pl = (mode == PerturbMode::train) ? cfg.p_rejected : cfg.p_test;
    auto maybe_perturb = [&](EmbeddingRecord& r, double p) {
        if (rng.uniform() < p) {
            axpy(r.h, cfg.prefix_magnitude, gm.v_prefix);
            r.prefix_flag = true;
        }
    };
    for (auto& t : out.triplets) {
        maybe_perturb(t.winner, pw);
        maybe_perturb(t.loser, pl);
    }
    return out;
}

}  // namespace causalrm

#endif  // CAUSALRM_DATAGEN_HPP
