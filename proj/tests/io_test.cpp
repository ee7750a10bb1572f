// Serialization: bit-exact dataset round trips, planted-fault parse errors,
// checkpoint round trips and shape validation.

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "causalrm/datagen.hpp"
#include "causalrm/io.hpp"

using namespace causalrm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("causalrm_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

Dataset sample_dataset(std::size_t n, std::uint64_t seed) {
    GenConfig c;
    c.embed_dim = 12;
    c.k_c = 3;
    c.k_nc = 3;
    c.seed = seed;
    GenModel gm = make_gen_model(c);
    Rng rng(seed);
    return build_split(c, gm, n, Split::train, SpuriousMode::correlated, rng);
}

}  // namespace

TEST(FmtDoubleTest, RoundTripsAwkwardValues) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e300, 0.0, -0.0, 3.141592653589793}) {
        const std::string s = fmt_double(x);
        EXPECT_EQ(std::stod(s), x) << s;
    }
}

TEST(DatasetIoTest, RoundTripIsBitIdentical) {
    TempDir td;
    Dataset ds = sample_dataset(50, 7);
    write_dataset(ds, td.file("a.ds"));
    Dataset back = read_dataset(td.file("a.ds"));
    EXPECT_TRUE(dataset_equal(ds, back));
}

TEST(DatasetIoTest, EmptyDatasetIsValid) {
    TempDir td;
    Dataset ds;
    ds.fingerprint = "deadbeef";
    ds.split = Split::id_test;
    ds.embed_dim = 12;
    write_dataset(ds, td.file("empty.ds"));
    Dataset back = read_dataset(td.file("empty.ds"));
    EXPECT_TRUE(back.triplets.empty());
    EXPECT_EQ(back.fingerprint, "deadbeef");
    EXPECT_EQ(back.split, Split::id_test);
}

TEST(DatasetIoTest, PerturbedFlagSurvivesRoundTrip) {
    TempDir td;
    GenConfig c;
    c.embed_dim = 12;
    c.k_c = 3;
    c.k_nc = 3;
    GenModel gm = make_gen_model(c);
    Rng rng(9);
    Dataset ds = build_split(c, gm, 20, Split::id_test, SpuriousMode::independent, rng);
    Dataset hacked = apply_prefix_perturbation(ds, c, gm, PerturbMode::test, rng);
    write_dataset(hacked, td.file("h.ds"));
    Dataset back = read_dataset(td.file("h.ds"));
    EXPECT_TRUE(back.perturbed);
    EXPECT_TRUE(dataset_equal(hacked, back));
}

TEST(DatasetIoTest, TruncatedFileNamesBadLine) {
    TempDir td;
    Dataset ds = sample_dataset(10, 11);
    write_dataset(ds, td.file("t.ds"));
    // drop the last two lines
    std::ifstream in(td.file("t.ds"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    std::ofstream out(td.file("t.ds"), std::ios::trunc);
    for (std::size_t i = 0; i + 2 < lines.size(); ++i) out << lines[i] << '\n';
    out.close();
    try {
        read_dataset(td.file("t.ds"));
        FAIL() << "expected truncation error";
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 11"), std::string::npos) << msg;
        EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
    }
}

TEST(DatasetIoTest, MalformedLineNamesLineNumber) {
    TempDir td;
    Dataset ds = sample_dataset(5, 13);
    write_dataset(ds, td.file("m.ds"));
    std::ifstream in(td.file("m.ds"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    lines[3] = "{this is not json";
    std::ofstream out(td.file("m.ds"), std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
    out.close();
    try {
        read_dataset(td.file("m.ds"));
        FAIL() << "expected parse error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}

TEST(DatasetIoTest, MissingFileRejected) {
    EXPECT_THROW(read_dataset("/nonexistent/nowhere.ds"), std::runtime_error);
}

TEST(DatasetIoTest, FingerprintMismatchWarns) {
    TempDir td;
    Dataset ds = sample_dataset(5, 17);
    write_dataset(ds, td.file("f.ds"));
    std::string warning;
    Dataset back = read_dataset(td.file("f.ds"), "0123abcd", &warning);
    EXPECT_FALSE(warning.empty());
    EXPECT_NE(warning.find("mismatch"), std::string::npos);
    warning.clear();
    read_dataset(td.file("f.ds"), ds.fingerprint, &warning);
    EXPECT_TRUE(warning.empty());
}

TEST(CheckpointTest, RoundTripIsBitIdentical) {
    TempDir td;
    Checkpoint c;
    c.dims = Dims{16, 4, 8};
    c.ablation.use_kl_nc = false;
    c.weights.lambda_adv = 0.125;
    c.seed = 42;
    c.step = 310;
    Rng rng(21);
    c.params = init_params(c.dims, rng);
    save_checkpoint(c, td.file("c.json"));
    Checkpoint back = load_checkpoint(td.file("c.json"));
    EXPECT_EQ(back.dims.embed, c.dims.embed);
    EXPECT_EQ(back.dims.d_c, c.dims.d_c);
    EXPECT_EQ(back.dims.d_nc, c.dims.d_nc);
    EXPECT_EQ(back.ablation.use_kl_nc, false);
    EXPECT_EQ(back.weights.lambda_adv, 0.125);
    EXPECT_EQ(back.seed, 42u);
    EXPECT_EQ(back.step, 310u);
    auto ra = c.params.refs(), rb = back.params.refs();
    for (std::size_t k = 0; k < ra.size(); ++k) {
        EXPECT_EQ(*ra[k].data, *rb[k].data) << ra[k].name;
    }
}

TEST(CheckpointTest, ShapeMismatchNamesParameter) {
    TempDir td;
    Checkpoint c;
    c.dims = Dims{8, 2, 4};
    Rng rng(23);
    c.params = init_params(c.dims, rng);
    save_checkpoint(c, td.file("s.json"));
    // corrupt the stored dims so the w_reward array no longer matches
    std::ifstream in(td.file("s.json"));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("\"d_c\":2");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 7, "\"d_c\":3");
    std::ofstream out(td.file("s.json"), std::ios::trunc);
    out << text;
    out.close();
    try {
        load_checkpoint(td.file("s.json"));
        FAIL() << "expected shape error";
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("W_mu_c"), std::string::npos) << msg;
    }
}

TEST(CheckpointTest, GarbageFileRejected) {
    TempDir td;
    std::ofstream out(td.file("g.json"));
    out << "not json at all";
    out.close();
    EXPECT_THROW(load_checkpoint(td.file("g.json")), std::runtime_error);
}
