// Acceptance gate. Each test checks one numbered criterion and prints a
// single machine-readable verdict line; tolerances are pinned here, not in
// configuration. Criteria 1-4 and 10-11 are property checks; 5-9 are
// directional desk-scale experiments (H=64, d_c=8, d_nc=16, N_train=4000,
// rho=0.9, 30 epochs, seeds {1,2,3}) on the shipped preset.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "causalrm/config.hpp"
#include "causalrm/evaluation.hpp"
#include "causalrm/io.hpp"
#include "test_util.hpp"

using namespace causalrm;
using testutil::FrozenBatch;

namespace {

namespace fs = std::filesystem;

void verdict(int idx, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[CRITERION %02d] %-4s %s -- %s\n", idx, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// standard error of the mean
double sem(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// Shared small-dims gradient fixture (criteria 1-2): H=32, d_c=4, d_nc=8,
// batch 8, parameters jittered off the tiny init so gradients are well
// scaled.
struct GradFixture {
    GenConfig gen;
    GenModel gm;
    ModelParams params;
    std::vector<PreferenceTriplet> batch;
    Rng rng{123};

    GradFixture() {
        gen.embed_dim = 32;
        gen.k_c = 3;
        gen.k_nc = 3;
        gen.seed = 5;
        gm = make_gen_model(gen);
        params = init_params(Dims{32, 4, 8}, rng);
        Rng jitter(77);
        for (auto& r : params.refs()) {
            for (double& x : *r.data) x += 0.05 * jitter.gaussian();
        }
        batch = testutil::random_batch(gen, gm, 8, rng);
    }
};

LossWeights one_term(double LossWeights::* field, double value) {
    LossWeights w;
    w.lambda_pred = 0.0;
    w.lambda_kl_c = 0.0;
    w.lambda_kl_nc = 0.0;
    w.lambda_adv = 0.0;
    w.lambda_rec = 0.0;
    w.*field = value;
    return w;
}

// Desk-scale experiment aggregates, computed once from the shipped preset
// and shared across criteria 5-9 and 11.
struct DeskStats {
    std::vector<double> id, ood, leak, sigma, syc;
};

struct DeskFixture {
    std::map<std::string, DeskStats> stats;
    double first_l_pref{0.0}, first_l_rec{0.0}, final_l_rec{0.0};

    static const DeskFixture& get() {
        static DeskFixture f;
        return f;
    }

    DeskFixture() {
        ExperimentConfig base = desk_preset();
        std::vector<std::string> models = ablation_variant_names();
        models.push_back("standard");
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            GenConfig g = base.gen;
            g.seed = seed;
            GenModel gm = make_gen_model(g);
            ExperimentData data = build_experiment_data(g, gm, base.n_train, base.n_test);
            Rng prng = Rng(g.seed).fork(0x9E4F);
            Dataset hacked_train =
                apply_prefix_perturbation(data.train, g, gm, PerturbMode::train, prng);
            Dataset hacked_test =
                apply_prefix_perturbation(data.id_test, g, gm, PerturbMode::test, prng);
            for (const auto& name : models) {
                TrainConfig cfg = base.train;
                cfg.seed = seed;
                cfg.log_interval = 1;
                apply_variant(name, cfg.ablation, cfg.weights, cfg.dims);
                TrainResult tr = train(data.train, cfg);
                DeskStats& s = stats[name];
                s.id.push_back(pairwise_accuracy(tr.params, cfg.ablation, data.id_test));
                s.ood.push_back(pairwise_accuracy(tr.params, cfg.ablation, data.ood_test));
                s.sigma.push_back(
                    length_sensitivity(tr.params, cfg.ablation, data.id_test, 10).sigma_len);
                if (cfg.ablation.factorized) {
                    s.leak.push_back(leakage_probe(tr.params, cfg.ablation, data.id_test));
                }
                if (name == "standard" || name == "full") {
                    TrainResult trh = train(hacked_train, cfg);
                    const double hacked =
                        pairwise_accuracy(trh.params, cfg.ablation, hacked_test);
                    s.syc.push_back(hacked - s.id.back());
                }
                if (name == "full" && seed == 1) {
                    first_l_pref = tr.log.front().loss.l_pref;
                    first_l_rec = tr.log.front().loss.l_rec;
                    final_l_rec = tr.log.back().loss.l_rec;
                }
            }
        }
    }
};

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("causalrm_acceptance_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string dir() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
}

// Every data row has the header's field count and numeric columns parse
// fully as doubles.
bool csv_conforms(const std::string& path, const std::string& header,
                  const std::vector<std::size_t>& numeric_cols) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line != header) return false;
    const std::size_t n_fields = split_csv(header).size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != n_fields) return false;
        for (std::size_t c : numeric_cols) {
            std::size_t pos = 0;
            try {
                (void)std::stod(fields[c], &pos);
            } catch (...) {
                return false;
            }
            if (pos != fields[c].size()) return false;
        }
    }
    return true;
}

}  // namespace

// 1. Finite-difference gradient correctness, full objective and each term in
// isolation, max relative error <= 1e-4.
TEST(Acceptance, Criterion01GradientCorrectness) {
    const double kTol = 1e-4;
    GradFixture f;
    FrozenBatch fb = FrozenBatch::make(f.params, f.batch, AblationConfig{}, f.rng);

    double worst = 0.0;
    std::string worst_name;
    auto check = [&](const char* label, const LossWeights& w) {
        GradCheckResult r = testutil::check_full_gradient(f.params, fb, w);
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            worst_name = std::string(label) + "/" + r.worst_param;
        }
    };
    check("full", LossWeights{});
    check("pref", one_term(&LossWeights::lambda_pred, 1.0));
    check("kl_c", one_term(&LossWeights::lambda_kl_c, 0.7));
    check("kl_nc", one_term(&LossWeights::lambda_kl_nc, 0.7));
    LossWeights adv = one_term(&LossWeights::lambda_adv, 0.5);
    adv.lambda_grl = 1.3;
    check("adv", adv);
    check("rec", one_term(&LossWeights::lambda_rec, 0.4));

    const bool pass = worst <= kTol;
    verdict(1, "gradient correctness", pass,
            "max rel err " + fmt(worst) + " (" + worst_name + "), tol " + fmt(kTol));
    EXPECT_TRUE(pass);
}

// 2. GRL semantics: identity forward; encoder branch equals -lambda_grl x
// the no-GRL gradient to rel err <= 1e-6; lambda_grl = 0 zeroes the encoder
// branch exactly.
TEST(Acceptance, Criterion02GrlSemantics) {
    const double kTol = 1e-6;
    GradFixture f;
    bool identity_ok = true;
    for (double x : {-3.5, 0.0, 1e-300, 7.25}) {
        identity_ok = identity_ok && grl_forward(x) == x;
    }

    LossWeights iso = one_term(&LossWeights::lambda_adv, 1.0);
    iso.lambda_grl = 0.8;
    FrozenBatch fb = FrozenBatch::make(f.params, f.batch, AblationConfig{}, f.rng);
    ModelParams g_with = fb.analytic_grads(f.params, iso);
    LossWeights no_grl = iso;
    no_grl.lambda_grl = -1.0;  // backward pass-through: the un-reversed field
    ModelParams g_without = fb.analytic_grads(f.params, no_grl);

    // anchor the un-reversed encoder gradient with finite differences
    auto plain_loss = [&]() { return fb.loss(f.params, iso, iso.lambda_adv); };
    auto enc_only = [](std::string_view n) { return n != "w_adv" && n != "w_reward"; };
    GradCheckResult fd =
        finite_diff_check(plain_loss, f.params.refs(), g_without.refs(), 1e-4, enc_only);

    double max_rel = 0.0;
    auto wr = g_with.refs();
    auto wo = g_without.refs();
    for (std::size_t k = 0; k < wr.size(); ++k) {
        if (wr[k].name == "w_adv" || wr[k].name == "w_reward") continue;
        for (std::size_t i = 0; i < wr[k].data->size(); ++i) {
            const double want = -iso.lambda_grl * (*wo[k].data)[i];
            const double got = (*wr[k].data)[i];
            const double denom = std::max({std::fabs(want), std::fabs(got), 1e-12});
            max_rel = std::max(max_rel, std::fabs(got - want) / denom);
        }
    }

    LossWeights zero_grl = iso;
    zero_grl.lambda_grl = 0.0;
    ModelParams g_zero = fb.analytic_grads(f.params, zero_grl);
    bool zero_ok = true;
    for (auto& r : g_zero.refs()) {
        if (r.name == "w_adv") continue;
        for (double x : *r.data) zero_ok = zero_ok && x == 0.0;
    }

    const bool pass = identity_ok && fd.max_rel_err <= 1e-4 && max_rel <= kTol && zero_ok;
    verdict(2, "GRL semantics", pass,
            "forward identity " + std::string(identity_ok ? "exact" : "BROKEN") +
                ", sign-flip rel err " + fmt(max_rel) + " (tol " + fmt(kTol) +
                "), lambda_grl=0 branch " + (zero_ok ? "exactly zero" : "NONZERO"));
    EXPECT_TRUE(pass);
}

// 3. Closed-form KL matches a 1e6-sample Monte-Carlo estimate within 1% on
// 20 random posteriors; analytic anchors hold exactly.
TEST(Acceptance, Criterion03ClosedFormKl) {
    const double kRelTol = 0.01;
    const std::size_t kSamples = 1000000;

    GaussianPosterior std_normal{Vec(3, 0.0), Vec(3, 0.0)};
    const bool anchor0 = kl_standard_normal(std_normal) == 0.0;
    GaussianPosterior unit_mean{Vec{1.0}, Vec{0.0}};
    const bool anchor_half = kl_standard_normal(unit_mean) == 0.5;

    Rng rng(2024);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
        GaussianPosterior q{Vec(d), Vec(d)};
        for (std::size_t i = 0; i < d; ++i) {
            q.mu[i] = 2.0 * (rng.uniform() - 0.5) * 2.0;
            q.logvar[i] = 2.0 * (rng.uniform() - 0.5) * 2.0;
        }
        const double analytic = kl_standard_normal(q);
        // MC estimate of E_q[log q(z) - log p(z)] via the reparameterized
        // sampler; the log-density ratio reduces to a quadratic form.
        double acc = 0.0;
        for (std::size_t s = 0; s < kSamples; ++s) {
            for (std::size_t i = 0; i < d; ++i) {
                const double eps = rng.gaussian();
                const double sd = std::exp(0.5 * q.logvar[i]);
                const double z = q.mu[i] + sd * eps;
                acc += -0.5 * q.logvar[i] - 0.5 * eps * eps + 0.5 * z * z;
            }
        }
        const double mc = acc / static_cast<double>(kSamples);
        worst = std::max(worst, std::fabs(analytic - mc) / std::fabs(analytic));
    }

    const bool pass = anchor0 && anchor_half && worst <= kRelTol;
    verdict(3, "closed-form KL vs Monte Carlo", pass,
            "worst rel dev " + fmt(worst) + " over 20 posteriors (tol " + fmt(kRelTol) +
                "), anchors " + (anchor0 && anchor_half ? "exact" : "BROKEN"));
    EXPECT_TRUE(pass);
}

// 4. Structural invariance: non-causal parameters and null-space directions
// of the causal projections leave reward_eval bit-identical.
TEST(Acceptance, Criterion04StructuralInvariance) {
    Rng rng(99);
    Dims d{32, 4, 8};
    ModelParams p = init_params(d, rng);
    AblationConfig ab;
    Vec h(d.embed);
    for (double& x : h) x = rng.gaussian();
    const double before = reward_eval(p, ab, h);

    // scramble every parameter the reward path must not touch
    ModelParams q = p;
    for (auto& r : q.refs()) {
        const std::string n(r.name);
        if (n == "W_mu_nc" || n == "b_mu_nc" || n == "W_lv_nc" || n == "b_lv_nc" ||
            n == "w_adv" || n == "W_dec" || n == "b_dec" || n == "W_lv_c" || n == "b_lv_c") {
            for (double& x : *r.data) x += rng.gaussian();
        }
    }
    const bool nc_invariant = reward_eval(q, ab, h) == before;

    // a zeroed input column makes the corresponding axis an exact null-space
    // direction of both causal projections
    const std::size_t col = 7;
    ModelParams z = p;
    for (std::size_t i = 0; i < d.d_c; ++i) {
        z.W_mu_c.data[i * d.embed + col] = 0.0;
        z.W_lv_c.data[i * d.embed + col] = 0.0;
    }
    const double base = reward_eval(z, ab, h);
    bool null_invariant = true;
    for (double t : {-5.0, 0.25, 1e6}) {
        Vec h2 = h;
        h2[col] += t;
        null_invariant = null_invariant && reward_eval(z, ab, h2) == base;
    }

    const bool pass = nc_invariant && null_invariant;
    verdict(4, "structural invariance", pass,
            std::string("non-causal params ") + (nc_invariant ? "bit-identical" : "CHANGED") +
                ", null-space direction " + (null_invariant ? "bit-identical" : "CHANGED"));
    EXPECT_TRUE(pass);
}

// 5. Leakage suppression: leak(full) <= leak(wo_grl) - 0.05 and
// leak(full) <= 0.60, 3-seed mean at rho = 0.9.
TEST(Acceptance, Criterion05LeakageSuppression) {
    const double kMargin = 0.05;
    const double kCeiling = 0.60;
    const DeskFixture& f = DeskFixture::get();
    const double full = mean(f.stats.at("full").leak);
    const double wo_grl = mean(f.stats.at("wo_grl").leak);
    const bool pass = full <= wo_grl - kMargin && full <= kCeiling;
    verdict(5, "leakage suppression", pass,
            "leak(full) " + fmt(full) + " vs leak(wo_grl) " + fmt(wo_grl) + "; need <= " +
                fmt(wo_grl - kMargin) + " and <= " + fmt(kCeiling));
    EXPECT_TRUE(pass);
}

// 6. Spurious-shift robustness: OOD acc(full) >= acc(standard) + 0.05 with
// no ID sacrifice beyond 0.02, 3-seed means.
TEST(Acceptance, Criterion06SpuriousShiftRobustness) {
    const double kOodMargin = 0.05;
    const double kIdSlack = 0.02;
    const DeskFixture& f = DeskFixture::get();
    const double full_ood = mean(f.stats.at("full").ood);
    const double std_ood = mean(f.stats.at("standard").ood);
    const double full_id = mean(f.stats.at("full").id);
    const double std_id = mean(f.stats.at("standard").id);
    const bool pass = full_ood >= std_ood + kOodMargin && full_id >= std_id - kIdSlack;
    verdict(6, "spurious-shift robustness", pass,
            "OOD " + fmt(full_ood) + " vs " + fmt(std_ood) + " (need +" + fmt(kOodMargin) +
                "), ID " + fmt(full_id) + " vs " + fmt(std_id) + " (slack " + fmt(kIdSlack) +
                ")");
    EXPECT_TRUE(pass);
}

// 7. Length sensitivity: sigma_len(full) <= 0.5 x sigma_len(standard) on the
// ID split, 10 buckets, 3-seed mean.
TEST(Acceptance, Criterion07LengthSensitivity) {
    const double kRatio = 0.5;
    const DeskFixture& f = DeskFixture::get();
    const double full = mean(f.stats.at("full").sigma);
    const double std_rm = mean(f.stats.at("standard").sigma);
    const bool pass = full <= kRatio * std_rm;
    verdict(7, "length sensitivity", pass,
            "sigma_len(full) " + fmt(full) + " vs standard " + fmt(std_rm) + "; need <= " +
                fmt(kRatio * std_rm));
    EXPECT_TRUE(pass);
}

// 8. Sycophancy protocol: |accuracy delta| under the hacked test for full
// <= 0.5 x that of the standard RM, 3-seed mean deltas.
TEST(Acceptance, Criterion08SycophancyProtocol) {
    const double kRatio = 0.5;
    const DeskFixture& f = DeskFixture::get();
    const double full = std::fabs(mean(f.stats.at("full").syc));
    const double std_rm = std::fabs(mean(f.stats.at("standard").syc));
    const bool pass = full <= kRatio * std_rm;
    verdict(8, "sycophancy protocol", pass,
            "|delta(full)| " + fmt(full) + " vs |delta(standard)| " + fmt(std_rm) +
                "; need <= " + fmt(kRatio * std_rm));
    EXPECT_TRUE(pass);
}

// 9. Ablation ordering: full >= every ablated variant on OOD within one
// standard error of the difference; wo_kl_both is worst or tied-worst.
TEST(Acceptance, Criterion09AblationOrdering) {
    const DeskFixture& f = DeskFixture::get();
    const DeskStats& full = f.stats.at("full");
    const double full_ood = mean(full.ood);

    bool top = true;
    std::string worst_detail;
    double low = 2.0;
    std::string low_name;
    for (const auto& name : ablation_variant_names()) {
        if (name == "full") continue;
        const DeskStats& s = f.stats.at(name);
        const double m = mean(s.ood);
        const double se = std::sqrt(sem(full.ood) * sem(full.ood) + sem(s.ood) * sem(s.ood));
        if (full_ood < m - se) {
            top = false;
            worst_detail = name + " " + fmt(m) + " beats full " + fmt(full_ood) + " by > " +
                           fmt(se) + " SE; ";
        }
        if (m < low) {
            low = m;
            low_name = name;
        }
    }
    const DeskStats& wkb = f.stats.at("wo_kl_both");
    const double wkb_m = mean(wkb.ood);
    const double tie_se =
        std::sqrt(sem(wkb.ood) * sem(wkb.ood) + sem(f.stats.at(low_name).ood) *
                                                    sem(f.stats.at(low_name).ood));
    const bool worst_ok = wkb_m <= low + tie_se;

    const bool pass = top && worst_ok;
    verdict(9, "ablation ordering", pass,
            worst_detail + "full OOD " + fmt(full_ood) + "; wo_kl_both " + fmt(wkb_m) +
                " vs lowest (" + low_name + ") " + fmt(low) + " +/- " + fmt(tie_se));
    EXPECT_TRUE(pass);
}

// 10. Reproducibility and formats: same-seed byte-identical artifacts,
// lossless round trips, CSV reports parse under their declared schemas.
TEST(Acceptance, Criterion10ReproducibilityAndFormats) {
    TempDir td;
    GenConfig g;
    g.seed = 11;
    GenModel gm = make_gen_model(g);
    Rng r1 = Rng(g.seed).fork(0xDA7A);
    Dataset d1 = build_split(g, gm, 200, Split::train, SpuriousMode::correlated, r1);
    Rng r2 = Rng(g.seed).fork(0xDA7A);
    Dataset d2 = build_split(g, gm, 200, Split::train, SpuriousMode::correlated, r2);
    write_dataset(d1, td.file("a.ds"));
    write_dataset(d2, td.file("b.ds"));
    const bool ds_bytes = slurp(td.file("a.ds")) == slurp(td.file("b.ds"));
    Dataset back = read_dataset(td.file("a.ds"));
    write_dataset(back, td.file("c.ds"));
    const bool ds_roundtrip = dataset_equal(d1, back) && slurp(td.file("c.ds")) ==
                                                             slurp(td.file("a.ds"));

    TrainConfig cfg;
    cfg.dims = Dims{g.embed_dim, 8, 16};
    cfg.epochs = 2;
    cfg.seed = 4;
    TrainResult t1 = train(d1, cfg);
    TrainResult t2 = train(d1, cfg);
    Checkpoint c1{cfg.dims, cfg.ablation, cfg.weights, cfg.seed, 0, t1.params};
    Checkpoint c2{cfg.dims, cfg.ablation, cfg.weights, cfg.seed, 0, t2.params};
    save_checkpoint(c1, td.file("a.json"));
    save_checkpoint(c2, td.file("b.json"));
    const bool ck_bytes = slurp(td.file("a.json")) == slurp(td.file("b.json"));
    Checkpoint loaded = load_checkpoint(td.file("a.json"));
    bool ck_roundtrip = true;
    auto ra = t1.params.refs();
    auto rb = loaded.params.refs();
    for (std::size_t k = 0; k < ra.size(); ++k) {
        for (std::size_t i = 0; i < ra[k].data->size(); ++i) {
            ck_roundtrip = ck_roundtrip && (*ra[k].data)[i] == (*rb[k].data)[i];
        }
    }

    // CSV schemas, exercised through the command-line driver end to end
    const std::string cli = CAUSALRM_CLI_PATH;
    const std::string small =
        " --set gen.n_train=200 --set gen.n_test=100 --set train.epochs=2"
        " --set train.log_interval=1";
    auto sh = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >" + td.file("out.txt") + " 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    bool csv_ok = sh("gen-data --out " + td.dir() + small) &&
                  sh("train --data " + td.file("train.ds") + " --variant full --out " +
                     td.dir() + small) &&
                  sh("ablate --out " + td.dir() + small);
    if (csv_ok) {
        csv_ok = csv_conforms(td.file("train_log_full.csv"),
                              "step,l_pref,l_kl_c,l_adv,l_kl_nc,l_rec,total,train_acc,adv_acc,ms",
                              {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}) &&
                 csv_conforms(td.file("ablation_matrix.csv"),
                              "variant,split,accuracy,sigma_len,leakage,gold_corr", {2, 3});
    }

    const bool pass = ds_bytes && ds_roundtrip && ck_bytes && ck_roundtrip && csv_ok;
    verdict(10, "reproducibility & formats", pass,
            std::string("dataset bytes ") + (ds_bytes ? "identical" : "DIFFER") +
                ", round trips " + (ds_roundtrip && ck_roundtrip ? "lossless" : "LOSSY") +
                ", checkpoint bytes " + (ck_bytes ? "identical" : "DIFFER") + ", CSV schemas " +
                (csv_ok ? "conform" : "VIOLATED"));
    EXPECT_TRUE(pass);
}

// 11. Training sanity on the default run: first-step l_pref within
// ln 2 +/- 0.05 and final reconstruction loss <= 0.1 x initial.
TEST(Acceptance, Criterion11TrainingSanity) {
    const double kPrefTol = 0.05;
    const double kRecRatio = 0.1;
    const DeskFixture& f = DeskFixture::get();
    const bool pref_ok = std::fabs(f.first_l_pref - std::log(2.0)) <= kPrefTol;
    const bool rec_ok = f.final_l_rec <= kRecRatio * f.first_l_rec;
    const bool pass = pref_ok && rec_ok;
    verdict(11, "training sanity", pass,
            "first l_pref " + fmt(f.first_l_pref) + " (ln 2 +/- " + fmt(kPrefTol) +
                "), l_rec " + fmt(f.first_l_rec) + " -> " + fmt(f.final_l_rec) + " (need <= " +
                fmt(kRecRatio * f.first_l_rec) + ")");
    EXPECT_TRUE(pass);
}
