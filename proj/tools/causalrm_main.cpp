// Command-line driver for the CausalRM desk-scale pipeline: synthetic data
// generation, training, evaluation, leakage probing, ablation sweeps, and
// report assembly.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "causalrm/config.hpp"
#include "causalrm/evaluation.hpp"
#include "causalrm/io.hpp"
#include "causalrm/losses.hpp"
#include "causalrm/training.hpp"

namespace fs = std::filesystem;
using namespace causalrm;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

fs::path output_root(const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv("CAUSALRM_OUT")) return env;
    return ".";
}

// Manifest: written before work begins, finalized after.
struct Manifest {
    std::string command;
    ConfigMap config;
    std::vector<std::string> inputs, outputs;
    std::uint64_t seed{0};
    std::string started, finished;
    fs::path path;

    void write() const {
        std::ofstream out(path);
        out << "{\n  \"command\": \"" << command << "\",\n";
        out << "  \"tool_version\": \"" << kToolVersion << "\",\n";
        out << "  \"seed\": " << seed << ",\n";
        out << "  \"started\": \"" << started << "\",\n";
        out << "  \"finished\": \"" << finished << "\",\n";
        out << "  \"inputs\": [";
        for (std::size_t i = 0; i < inputs.size(); ++i)
            out << (i ? ", " : "") << '"' << inputs[i] << '"';
        out << "],\n  \"outputs\": [";
        for (std::size_t i = 0; i < outputs.size(); ++i)
            out << (i ? ", " : "") << '"' << outputs[i] << '"';
        out << "],\n  \"config\": {";
        bool first = true;
        for (const auto& [k, v] : config) {
            out << (first ? "" : ",") << "\n    \"" << k << "\": \"" << v << '"';
            first = false;
        }
        out << "\n  }\n}\n";
    }
};

struct CommonFlags {
    std::string config_file;
    std::string preset;
    std::string out_dir;
    std::vector<std::string> overrides;  // key=value
};

ExperimentConfig resolve_config(const CommonFlags& f) {
    ExperimentConfig c = desk_preset();
    if (!f.preset.empty() && f.preset != "desk") {
        throw std::runtime_error("unknown preset '" + f.preset + "' (available: desk)");
    }
    if (!f.config_file.empty()) apply_config(c, parse_config_file(f.config_file));
    ConfigMap over;
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        }
        over[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
    apply_config(c, over);
    c.gen.validate();
    return c;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "flat key=value config file");
    cmd->add_option("--preset", f.preset, "named config preset (desk)");
    cmd->add_option("--out", f.out_dir, "output directory (default: $CAUSALRM_OUT or .)");
    cmd->add_option("--set", f.overrides, "config override key=value (repeatable)");
}

void write_report_csv(const fs::path& path, const std::vector<EvalReport>& reports,
                      std::uint64_t seed) {
    std::ofstream out(path);
    out << "model,split,seed,n,accuracy,sigma_len,leakage,gold_corr\n";
    for (const auto& r : reports) {
        out << r.model_tag << ',' << r.split_tag << ',' << seed << ',' << r.n << ','
            << fmt_double(r.accuracy) << ',' << fmt_double(r.sigma_len) << ','
            << (r.leakage_valid ? fmt_double(r.leakage) : std::string("na")) << ','
            << (r.gold_corr_valid ? fmt_double(r.gold_corr) : std::string("na")) << '\n';
    }
}

void write_length_curve_csv(const fs::path& path, const EvalReport& r) {
    std::ofstream out(path);
    out << "bucket_center,mean_reward\n";
    for (std::size_t i = 0; i < r.bucket_means.size(); ++i) {
        out << fmt_double(r.bucket_centers[i]) << ',' << fmt_double(r.bucket_means[i]) << '\n';
    }
}

int cmd_gen_data(const CommonFlags& f, bool with_hacked) {
    ExperimentConfig c = resolve_config(f);
    const fs::path root = output_root(f.out_dir);
    fs::create_directories(root);
    Manifest man;
    man.command = "gen-data";
    man.config = resolved_config(c);
    man.seed = c.gen.seed;
    man.started = timestamp_now();
    man.path = root / "manifest_gen.json";
    man.write();

    const GenModel gm = make_gen_model(c.gen);
    ExperimentData data = build_experiment_data(c.gen, gm, c.n_train, c.n_test);
    Rng prng = Rng(c.gen.seed).fork(0x9E4F);
    write_dataset(data.train, (root / "train.ds").string());
    write_dataset(data.id_test, (root / "id_test.ds").string());
    write_dataset(data.ood_test, (root / "ood_test.ds").string());
    man.outputs = {"train.ds", "id_test.ds", "ood_test.ds"};
    Dataset hacked_test = apply_prefix_perturbation(data.id_test, c.gen, gm, PerturbMode::test, prng);
    hacked_test.split = Split::hacked_test;
    write_dataset(hacked_test, (root / "hacked_test.ds").string());
    man.outputs.push_back("hacked_test.ds");
    if (with_hacked) {
        Dataset hacked_train =
            apply_prefix_perturbation(data.train, c.gen, gm, PerturbMode::train, prng);
        write_dataset(hacked_train, (root / "hacked_train.ds").string());
        man.outputs.push_back("hacked_train.ds");
    }
    man.finished = timestamp_now();
    man.write();
    std::cout << "wrote " << man.outputs.size() << " dataset files to " << root.string() << "\n";
    return 0;
}

int cmd_train(const CommonFlags& f, const std::string& data_path, const std::string& variant,
              bool grad_check) {
    ExperimentConfig c = resolve_config(f);
    c.variant = variant.empty() ? c.variant : variant;
    const fs::path root = output_root(f.out_dir);
    fs::create_directories(root);
    Dataset ds = read_dataset(data_path);
    if (ds.embed_dim != c.train.dims.embed) {
        throw std::runtime_error("dataset H=" + std::to_string(ds.embed_dim) +
                                 " does not match configured H=" +
                                 std::to_string(c.train.dims.embed));
    }
    apply_variant(c.variant, c.train.ablation, c.train.weights, c.train.dims);

    Manifest man;
    man.command = "train";
    man.config = resolved_config(c);
    man.seed = c.train.seed;
    man.started = timestamp_now();
    man.inputs = {data_path};
    man.path = root / ("manifest_train_" + c.variant + ".json");
    man.write();

    if (grad_check) {
        // Frozen-noise finite-difference check on the first batch, reward/
        // encoder/decoder side (the adversary head is checked against the
        // unreversed objective).
        const std::size_t bsz = std::min<std::size_t>(c.train.batch_size, ds.triplets.size());
        Rng rng = Rng(c.train.seed).fork(0x6C);
        ModelParams params = init_params(c.train.dims, rng);
        AblationConfig ab = c.train.ablation;
        ab.normalize();
        std::vector<ForwardTrace> traces;
        for (std::size_t i = 0; i < bsz; ++i) {
            traces.push_back(forward_triplet(params, ds.triplets[i], rng, ForwardMode::train, ab));
        }
        ModelParams grads = zeros_params(c.train.dims);
        for (std::size_t i = 0; i < bsz; ++i) {
            backward(traces[i], ds.triplets[i], c.train.weights, ab, params, grads, 1.0 / bsz);
        }
        LossWeights w = c.train.weights;
        // The adversarial term enters the encoder-side scalar with weight
        // -lambda_grl*lambda_adv and the head-side scalar with +lambda_adv.
        auto loss_view = [&](double adv_weight) {
            return [&, adv_weight]() {
                double acc = 0.0;
                for (std::size_t i = 0; i < bsz; ++i) {
                    ForwardTrace tr = replay_triplet(params, ds.triplets[i], traces[i], ab);
                    LossBreakdown b = total_loss(tr, ds.triplets[i], w, ab);
                    acc += b.total - w.lambda_adv * b.l_adv + adv_weight * b.l_adv;
                }
                return acc / bsz;
            };
        };
        auto not_adv_head = [](std::string_view n) { return n != "w_adv"; };
        auto only_adv_head = [](std::string_view n) { return n == "w_adv"; };
        GradCheckResult r1 = finite_diff_check(loss_view(-w.lambda_grl * w.lambda_adv),
                                               params.refs(), grads.refs(), 1e-4, not_adv_head);
        GradCheckResult r2 = finite_diff_check(loss_view(w.lambda_adv), params.refs(),
                                               grads.refs(), 1e-4, only_adv_head);
        const double err = std::max(r1.max_rel_err, r2.max_rel_err);
        const std::string worst = r1.max_rel_err >= r2.max_rel_err ? r1.worst_param : r2.worst_param;
        std::cout << "grad-check: max relative error " << err << " (worst: " << worst << ")\n";
    }

    std::vector<std::string> outputs;
    auto on_ckpt = [&](std::size_t step, const ModelParams& p) {
        Checkpoint ck{c.train.dims, c.train.ablation, c.train.weights, c.train.seed, step, p};
        std::ostringstream name;
        name << "ckpt_" << c.variant << "_" << std::setw(6) << std::setfill('0') << step << ".json";
        save_checkpoint(ck, (root / name.str()).string());
        outputs.push_back(name.str());
    };
    TrainResult res = train(ds, c.train, on_ckpt);

    const std::string log_name = "train_log_" + c.variant + ".csv";
    std::ofstream log(root / log_name);
    log << "step,l_pref,l_kl_c,l_adv,l_kl_nc,l_rec,total,train_acc,adv_acc,ms\n";
    for (const auto& row : res.log) {
        log << row.step << ',' << fmt_double(row.loss.l_pref) << ',' << fmt_double(row.loss.l_kl_c)
            << ',' << fmt_double(row.loss.l_adv) << ',' << fmt_double(row.loss.l_kl_nc) << ','
            << fmt_double(row.loss.l_rec) << ',' << fmt_double(row.loss.total) << ','
            << fmt_double(row.train_acc) << ',' << fmt_double(row.adv_acc) << ','
            << fmt_double(row.ms) << '\n';
    }
    outputs.push_back(log_name);
    man.outputs = outputs;
    man.finished = timestamp_now();
    man.write();
    std::cout << "trained variant '" << c.variant << "' (" << res.log.size()
              << " log rows); final checkpoint in " << root.string() << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& ckpt_path, const std::string& data_path,
             std::size_t buckets) {
    const fs::path root = output_root(f.out_dir);
    fs::create_directories(root);
    Checkpoint ck = load_checkpoint(ckpt_path);
    Dataset ds = read_dataset(data_path);
    AblationConfig ab = ck.ablation;
    ab.normalize();
    EvalReport rep = evaluate(ck.params, ab, ds, fs::path(ckpt_path).stem().string(), buckets);
    const std::string tag = rep.model_tag + "_" + rep.split_tag + "_" + std::to_string(ck.seed);
    write_report_csv(root / ("eval_" + tag + ".csv"), {rep}, ck.seed);
    write_length_curve_csv(root / ("length_curve_" + tag + ".csv"), rep);
    std::cout << "model=" << rep.model_tag << " split=" << rep.split_tag
              << " acc=" << rep.accuracy << " sigma_len=" << rep.sigma_len
              << " leakage=" << (rep.leakage_valid ? std::to_string(rep.leakage) : "na") << "\n";
    return 0;
}

int cmd_probe(const CommonFlags& f, const std::string& ckpt_path, const std::string& data_path) {
    const fs::path root = output_root(f.out_dir);
    fs::create_directories(root);
    Checkpoint ck = load_checkpoint(ckpt_path);
    Dataset ds = read_dataset(data_path);
    AblationConfig ab = ck.ablation;
    ab.normalize();
    const double leak = leakage_probe(ck.params, ab, ds);
    std::ofstream out(root / "probe.csv");
    out << "checkpoint,split,leakage\n"
        << fs::path(ckpt_path).stem().string() << ',' << to_string(ds.split) << ','
        << fmt_double(leak) << '\n';
    std::cout << "leakage=" << leak << "\n";
    return 0;
}

int cmd_ablate(const CommonFlags& f) {
    ExperimentConfig c = resolve_config(f);
    const fs::path root = output_root(f.out_dir);
    fs::create_directories(root);
    Manifest man;
    man.command = "ablate";
    man.config = resolved_config(c);
    man.seed = c.train.seed;
    man.started = timestamp_now();
    man.path = root / "manifest_ablate.json";
    man.write();

    auto rows = run_ablations(c.gen, c.train, c.n_train, c.n_test, c.buckets);
    std::ofstream out(root / "ablation_matrix.csv");
    out << "variant,split,accuracy,sigma_len,leakage,gold_corr\n";
    auto emit = [&](const std::string& name, const EvalReport& r) {
        out << name << ',' << r.split_tag << ',' << fmt_double(r.accuracy) << ','
            << fmt_double(r.sigma_len) << ','
            << (r.leakage_valid ? fmt_double(r.leakage) : std::string("na")) << ','
            << (r.gold_corr_valid ? fmt_double(r.gold_corr) : std::string("na")) << '\n';
    };
    for (const auto& row : rows) {
        if (row.failed) {
            std::cerr << "variant " << row.variant << " failed: " << row.error << "\n";
            continue;
        }
        emit(row.variant, row.id);
        emit(row.variant, row.ood);
        std::cout << row.variant << ": id_acc=" << row.id.accuracy
                  << " ood_acc=" << row.ood.accuracy << "\n";
    }
    man.outputs = {"ablation_matrix.csv"};
    man.finished = timestamp_now();
    man.write();
    return 0;
}

int cmd_report(const std::string& dir) {
    const fs::path root = dir;
    std::ostringstream summary;
    summary << "CausalRM desk-scale report\n==========================\n";
    bool any = false;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() != ".csv") continue;
        if (name.rfind("eval_", 0) == 0 || name == "ablation_matrix.csv" || name == "probe.csv" ||
            name == "sycophancy.csv") {
            any = true;
            summary << "\n[" << name << "]\n";
            std::ifstream in(entry.path());
            summary << in.rdbuf();
        }
    }
    if (!any) {
        std::cerr << "no report CSVs found in " << root.string() << "\n";
        return 1;
    }
    std::ofstream out(root / "summary.txt");
    out << summary.str();
    std::cout << summary.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CausalRM: factored causal reward head on a synthetic spurious-correlation benchmark"};
    app.require_subcommand(1);

    CommonFlags gen_f, train_f, eval_f, probe_f, ablate_f;
    bool with_hacked = false;
    auto* gen = app.add_subcommand("gen-data", "generate dataset splits");
    add_common(gen, gen_f);
    gen->add_flag("--hacked", with_hacked, "also write the prefix-perturbed train split");

    std::string train_data, train_variant;
    bool grad_check = false;
    auto* tr = app.add_subcommand("train", "train a reward model variant");
    add_common(tr, train_f);
    tr->add_option("--data", train_data, "training dataset file")->required();
    tr->add_option("--variant", train_variant, "model variant (standard, full, wo_*)");
    tr->add_flag("--grad-check", grad_check, "finite-difference check on the first batch");

    std::string eval_ckpt, eval_data;
    std::size_t eval_buckets = 10;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(ev, eval_f);
    ev->add_option("--checkpoint", eval_ckpt)->required();
    ev->add_option("--data", eval_data)->required();
    ev->add_option("--buckets", eval_buckets);

    std::string probe_ckpt, probe_data;
    auto* pr = app.add_subcommand("probe", "leakage probe on the non-causal channel");
    add_common(pr, probe_f);
    pr->add_option("--checkpoint", probe_ckpt)->required();
    pr->add_option("--data", probe_data)->required();

    auto* ab = app.add_subcommand("ablate", "run the 7-variant ablation matrix");
    add_common(ab, ablate_f);

    std::string report_dir;
    auto* rp = app.add_subcommand("report", "merge report CSVs into a summary");
    rp->add_option("--dir", report_dir, "directory holding report CSVs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(gen_f, with_hacked);
        if (tr->parsed()) return cmd_train(train_f, train_data, train_variant, grad_check);
        if (ev->parsed()) return cmd_eval(eval_f, eval_ckpt, eval_data, eval_buckets);
        if (pr->parsed()) return cmd_probe(probe_f, probe_ckpt, probe_data);
        if (ab->parsed()) return cmd_ablate(ablate_f);
        if (rp->parsed()) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
