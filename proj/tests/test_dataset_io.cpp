#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pcd/benchmarks.hpp"
#include "pcd/dataset_io.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pcd_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(DatasetFile, HeaderFields) {
    const auto t = pcd::make_task("zdt1");
    const auto ds = pcd::generate_offline_dataset(t, 10000, 7, pcd::SamplingStrategy::uniform);
    const auto bytes = pcd::encode_dataset(ds);
    ASSERT_GE(bytes.size(), 8u);
    EXPECT_EQ(std::string(bytes.data(), 4), "PCDD");
    pcd::io::Reader r(bytes, "mem");
    const auto back = pcd::decode_dataset(r);
    EXPECT_EQ(back.dim(), 30u);
    EXPECT_EQ(back.n_objectives(), 2u);
    EXPECT_EQ(back.size(), 10000u);
    EXPECT_EQ(back.seed, 7u);
    EXPECT_EQ(back.task_name, "zdt1");
    EXPECT_EQ(back.X, ds.X);
    EXPECT_EQ(back.Y, ds.Y);
    const auto expected = 4 + 4 + 4 + 4 + 4 + 4 + 8 + 8 + 2 * 30 * 8 + 10000 * 32 * 8;
    EXPECT_EQ(bytes.size(), static_cast<std::size_t>(expected));
}

TEST(DatasetFile, ManyObjectiveHeader) {
    const auto ds = pcd::generate_offline_dataset(pcd::make_task("dtlz1", 0, 5), 50, 1, pcd::SamplingStrategy::lhs);
    const fs::path p = temp_path("dtlz1_m5.pcdd");
    pcd::save_dataset(ds, p);
    EXPECT_EQ(pcd::load_dataset(p).n_objectives(), 5u);
}

TEST(DatasetFile, CorruptionDetected) {
    const auto ds = pcd::generate_offline_dataset(pcd::make_task("vlmop2"), 20, 1, pcd::SamplingStrategy::uniform);
    auto bytes = pcd::encode_dataset(ds);

    auto bad = bytes;
    bad[0] = 'X';
    pcd::io::Reader r1(bad, "magic");
    EXPECT_THROW(pcd::decode_dataset(r1), pcd::RuntimeFailure);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    pcd::io::Reader r2(truncated, "trunc");
    EXPECT_THROW(pcd::decode_dataset(r2), pcd::RuntimeFailure);

    auto extra = bytes;
    extra.push_back(0);
    pcd::io::Reader r3(extra, "extra");
    EXPECT_THROW(pcd::decode_dataset(r3), pcd::RuntimeFailure);

    auto version = bytes;
    version[4] = 9;
    pcd::io::Reader r4(version, "version");
    EXPECT_THROW(pcd::decode_dataset(r4), pcd::RuntimeFailure);

    EXPECT_THROW(pcd::load_dataset(temp_path("does_not_exist.pcdd")), pcd::RuntimeFailure);
}

TEST(DatasetCsv, RoundTripIsExact) {
    const auto t = pcd::make_task("zdt3", 6);
    const auto ds = pcd::generate_offline_dataset(t, 64, 3, pcd::SamplingStrategy::uniform);
    const fs::path p = temp_path("zdt3.csv");
    pcd::export_dataset_csv(ds, p);
    const auto back = pcd::import_dataset_csv(p, "zdt3", &t.lower, &t.upper);
    EXPECT_EQ(back.X, ds.X);
    EXPECT_EQ(back.Y, ds.Y);
    EXPECT_EQ(back.lower_bounds, t.lower);
}

TEST(DatasetCsv, BadCellReported) {
    const fs::path p = temp_path("bad.csv");
    std::ofstream(p) << "x0,y0,y1\n0.5,abc,1\n";
    EXPECT_THROW(pcd::import_dataset_csv(p, "t"), pcd::RuntimeFailure);
}
