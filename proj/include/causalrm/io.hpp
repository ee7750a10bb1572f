#ifndef CAUSALRM_IO_HPP
#define CAUSALRM_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "causalrm/datagen.hpp"
#include "causalrm/losses.hpp"
#include "causalrm/model.hpp"

namespace causalrm {

// Floats are written as decimal with 17 significant digits so every round
// trip reproduces the exact double.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {
inline void append_vec(std::string& out, const Vec& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(v[i]);
    }
    out += ']';
}

inline void append_record(std::string& out, const EmbeddingRecord& r) {
    out += "{\"h\":";
    append_vec(out, r.h);
    out += ",\"s\":";
    out += fmt_double(r.gold_quality);
    out += ",\"a\":";
    out += fmt_double(r.spurious_attr);
    out += ",\"prefix_flag\":";
    out += r.prefix_flag ? "true" : "false";
    out += '}';
}

inline Vec parse_vec(const nlohmann::json& j) {
    Vec v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

inline EmbeddingRecord parse_record(const nlohmann::json& j) {
    EmbeddingRecord r;
    r.h = parse_vec(j.at("h"));
    r.gold_quality = j.at("s").get<double>();
    r.spurious_attr = j.at("a").get<double>();
    r.prefix_flag = j.at("prefix_flag").get<bool>();
    return r;
}
}  // namespace detail

// Line-delimited dataset file: a header object followed by one triplet per
// line.
inline void write_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
    std::string line = "{\"fingerprint\":\"" + ds.fingerprint + "\",\"split\":\"" +
                       to_string(ds.split) + "\",\"embed_dim\":" + std::to_string(ds.embed_dim) +
                       ",\"n\":" + std::to_string(ds.triplets.size()) +
                       ",\"perturbed\":" + (ds.perturbed ? "true" : "false") + "}\n";
    out << line;
    for (const auto& t : ds.triplets) {
        line.clear();
        line += "{\"pair_id\":";
        line += std::to_string(t.pair_id);
        line += ",\"winner\":";
        detail::append_record(line, t.winner);
        line += ",\"loser\":";
        detail::append_record(line, t.loser);
        line += "}\n";
        out << line;
    }
    if (!out) throw std::runtime_error("write_dataset: write failure on " + path);
}

inline Dataset read_dataset(const std::string& path, const std::string& expect_fingerprint = "",
                            std::string* warning = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    Dataset ds;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("read_dataset: " + path + ": line " + std::to_string(lineno) +
                                 ": " + what);
    };
    if (!std::getline(in, line)) {
        lineno = 1;
        fail("missing header");
    }
    ++lineno;
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(line);
        ds.fingerprint = hdr.at("fingerprint").get<std::string>();
        ds.split = split_from_string(hdr.at("split").get<std::string>());
        ds.embed_dim = hdr.at("embed_dim").get<std::size_t>();
        ds.perturbed = hdr.value("perturbed", false);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("bad header: ") + e.what());
    }
    const std::size_t n = hdr.at("n").get<std::size_t>();
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            PreferenceTriplet t;
            t.pair_id = j.at("pair_id").get<std::uint64_t>();
            t.winner = detail::parse_record(j.at("winner"));
            t.loser = detail::parse_record(j.at("loser"));
            if (t.winner.h.size() != ds.embed_dim || t.loser.h.size() != ds.embed_dim) {
                fail("embedding length does not match header embed_dim");
            }
            ds.triplets.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("malformed triplet: ") + e.what());
        }
    }
    if (ds.triplets.size() != n) {
        lineno = n + 1;
        fail("truncated file: header announces " + std::to_string(n) + " triplets, found " +
             std::to_string(ds.triplets.size()));
    }
    if (!expect_fingerprint.empty() && expect_fingerprint != ds.fingerprint && warning) {
        *warning = "fingerprint mismatch: file has " + ds.fingerprint + ", config gives " +
                   expect_fingerprint;
    }
    return ds;
}

inline bool dataset_equal(const Dataset& a, const Dataset& b) {
    if (a.fingerprint != b.fingerprint || a.split != b.split || a.embed_dim != b.embed_dim ||
        a.perturbed != b.perturbed || a.triplets.size() != b.triplets.size()) {
        return false;
    }
    auto rec_eq = [](const EmbeddingRecord& x, const EmbeddingRecord& y) {
        return x.h == y.h && x.gold_quality == y.gold_quality &&
               x.spurious_attr == y.spurious_attr && x.prefix_flag == y.prefix_flag;
    };
    for (std::size_t i = 0; i < a.triplets.size(); ++i) {
        if (a.triplets[i].pair_id != b.triplets[i].pair_id ||
            !rec_eq(a.triplets[i].winner, b.triplets[i].winner) ||
            !rec_eq(a.triplets[i].loser, b.triplets[i].loser)) {
            return false;
        }
    }
    return true;
}

struct Checkpoint {
    Dims dims;
    AblationConfig ablation;
    LossWeights weights;
    std::uint64_t seed{0};
    std::size_t step{0};
    ModelParams params;
};

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    std::string s = "{\n";
    s += "\"embed_dim\":" + std::to_string(c.dims.embed) + ",\n";
    s += "\"d_c\":" + std::to_string(c.dims.d_c) + ",\n";
    s += "\"d_nc\":" + std::to_string(c.dims.d_nc) + ",\n";
    auto b = [](bool v) { return v ? "true" : "false"; };
    s += std::string("\"factorized\":") + b(c.ablation.factorized) + ",\n";
    s += std::string("\"use_reconstruction\":") + b(c.ablation.use_reconstruction) + ",\n";
    s += std::string("\"use_adversary\":") + b(c.ablation.use_adversary) + ",\n";
    s += std::string("\"use_kl_c\":") + b(c.ablation.use_kl_c) + ",\n";
    s += std::string("\"use_kl_nc\":") + b(c.ablation.use_kl_nc) + ",\n";
    s += std::string("\"identity_encoder\":") + b(c.ablation.identity_encoder) + ",\n";
    s += "\"lambda_pred\":" + fmt_double(c.weights.lambda_pred) + ",\n";
    s += "\"lambda_kl_c\":" + fmt_double(c.weights.lambda_kl_c) + ",\n";
    s += "\"lambda_kl_nc\":" + fmt_double(c.weights.lambda_kl_nc) + ",\n";
    s += "\"lambda_adv\":" + fmt_double(c.weights.lambda_adv) + ",\n";
    s += "\"lambda_rec\":" + fmt_double(c.weights.lambda_rec) + ",\n";
    s += "\"lambda_grl\":" + fmt_double(c.weights.lambda_grl) + ",\n";
    s += "\"seed\":" + std::to_string(c.seed) + ",\n";
    s += "\"step\":" + std::to_string(c.step) + ",\n";
    s += "\"params\":{";
    ModelParams& p = const_cast<ModelParams&>(c.params);
    bool first = true;
    for (const auto& r : p.refs()) {
        if (!first) s += ',';
        first = false;
        s += "\n\"" + r.name + "\":";
        detail::append_vec(s, *r.data);
    }
    s += "\n}\n}\n";
    out << s;
    if (!out) throw std::runtime_error("save_checkpoint: write failure on " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_checkpoint: " + path + ": " + e.what());
    }
    Checkpoint c;
    c.dims.embed = j.at("embed_dim").get<std::size_t>();
    c.dims.d_c = j.at("d_c").get<std::size_t>();
    c.dims.d_nc = j.at("d_nc").get<std::size_t>();
    c.ablation.factorized = j.at("factorized").get<bool>();
    c.ablation.use_reconstruction = j.at("use_reconstruction").get<bool>();
    c.ablation.use_adversary = j.at("use_adversary").get<bool>();
    c.ablation.use_kl_c = j.at("use_kl_c").get<bool>();
    c.ablation.use_kl_nc = j.at("use_kl_nc").get<bool>();
    c.ablation.identity_encoder = j.at("identity_encoder").get<bool>();
    c.weights.lambda_pred = j.at("lambda_pred").get<double>();
    c.weights.lambda_kl_c = j.at("lambda_kl_c").get<double>();
    c.weights.lambda_kl_nc = j.at("lambda_kl_nc").get<double>();
    c.weights.lambda_adv = j.at("lambda_adv").get<double>();
    c.weights.lambda_rec = j.at("lambda_rec").get<double>();
    c.weights.lambda_grl = j.at("lambda_grl").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.step = j.at("step").get<std::size_t>();
    c.params = zeros_params(c.dims);
    const auto& jp = j.at("params");
    for (const auto& r : c.params.refs()) {
        const auto& arr = jp.at(r.name);
        if (arr.size() != r.data->size()) {
            throw std::runtime_error("load_checkpoint: " + path + ": parameter " + r.name +
                                     " has length " + std::to_string(arr.size()) + ", expected " +
                                     std::to_string(r.data->size()));
        }
        *r.data = detail::parse_vec(arr);
    }
    return c;
}

}  // namespace causalrm

#endif  // CAUSALRM_IO_HPP
