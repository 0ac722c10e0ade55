#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "noma/errors.hpp"
#include "noma/harness.hpp"

namespace noma {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("noma_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

SerRecord record(DetectorKind d, int users, int user, std::vector<double> tuple, std::uint64_t errors) {
    SerRecord r;
    r.detector = d;
    r.users = users;
    r.frame_length = 500;
    r.user = user;
    r.snr_tuple_db = std::move(tuple);
    r.frames = 7;
    r.symbols = 3500;
    r.errors = errors;
    r.seed = 99;
    return r;
}

using ResultsIo = TempDir;

TEST_F(ResultsIo, EmptyTableWritesHeaderOnly) {
    write_results({}, dir_ / "r.csv");
    EXPECT_EQ(slurp(dir_ / "r.csv"), std::string(kCsvHeader) + "\n");
    EXPECT_TRUE(read_results(dir_ / "r.csv").empty());
}

TEST_F(ResultsIo, RoundTripIsExact) {
    ExperimentConfig c;
    c.users = 2;
    c.frame_length = 40;
    c.snr_grid_db = {{10.1, 7.3}, {13.0 / 3.0, 0.1}, {20.0, 17.0}};
    c.frames_per_point = 5;
    c.min_errors = 0;
    const auto table = run_sweep(c);
    ASSERT_EQ(table.size(), 3u * 2u * 2u);
    write_results(table, dir_ / "r.csv");
    EXPECT_EQ(read_results(dir_ / "r.csv"), table);
    EXPECT_EQ(lines_of(dir_ / "r.csv").size(), 1 + table.size());
}

TEST_F(ResultsIo, RowFormat) {
    write_results({record(DetectorKind::MlCsi, 2, 2, {0.1, -3.0}, 35)}, dir_ / "r.csv");
    const auto l = lines_of(dir_ / "r.csv");
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[0], "detector,K,N,user,snr_user_db,snr_tuple_db,frames,symbols,errors,ser,ci95,seed");
    EXPECT_EQ(l[1].rfind("ml-csi,2,500,2,-3,0.10000000000000001|-3,7,3500,35,0.01,", 0), 0u) << l[1];
    EXPECT_EQ(l[1].substr(l[1].size() - 3), ",99");
}

TEST_F(ResultsIo, ThreePointsGiveThreeKRows) {
    ResultTable t;
    for (int p = 0; p < 3; ++p)
        for (int u = 1; u <= 3; ++u) t.push_back(record(DetectorKind::GmmSic, 3, u, {1.0 * p, 0, -1}, 1));
    write_results(t, dir_ / "r.csv");
    EXPECT_EQ(lines_of(dir_ / "r.csv").size(), 1u + 9u);
}

TEST_F(ResultsIo, ErrorsNameThePath) {
    const fs::path bad = dir_ / "no_such_dir_file";
    fs::create_directories(bad);  // a directory cannot be opened as a file
    try {
        write_results({}, bad);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(bad.string()), std::string::npos);
    }
    {
        std::ofstream(dir_ / "junk.csv") << "not,a,header\n";
    }
    EXPECT_THROW(read_results(dir_ / "junk.csv"), IoError);
    {
        std::ofstream(dir_ / "short.csv") << kCsvHeader << "\nml-csi,1,2\n";
    }
    try {
        read_results(dir_ / "short.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("short.csv:2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(read_results(dir_ / "missing.csv"), IoError);
}

using PlotData = TempDir;

TEST_F(PlotData, SingleRecordOneRow) {
    const auto files = emit_plot_data({record(DetectorKind::GmmSic, 1, 1, {5.0}, 35)}, dir_);
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].filename(), "ser_K1_N500.dat");
    const auto l = lines_of(files[0]);
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[2], "5 0.01");
    EXPECT_TRUE(fs::exists(dir_ / "README.txt"));
    EXPECT_THROW(emit_plot_data({}, dir_), InvalidParameter);
}

TEST_F(PlotData, TwoUserFigureHasFourColumnsAlignedWithCsv) {
    ExperimentConfig c;
    c.users = 2;
    c.frame_length = 500;
    for (double g = 10; g <= 14; g += 2) c.snr_grid_db.push_back({g, g - 3});
    c.frames_per_point = 3;
    c.min_errors = 0;
    const auto table = run_sweep(c);
    const auto files = emit_plot_data(table, dir_);
    ASSERT_EQ(files.size(), 1u);
    const auto l = lines_of(files[0]);
    ASSERT_EQ(l.size(), 2u + 3u);
    EXPECT_EQ(l[1], "# columns: snr_db ser[gmm-sic,user1] ser[gmm-sic,user2] ser[ml-csi,user1] ser[ml-csi,user2]");
    for (std::size_t p = 0; p < 3; ++p) {
        std::istringstream row(l[2 + p]);
        double snr = 0;
        row >> snr;
        EXPECT_EQ(snr, c.snr_grid_db[p][0]);
        for (std::size_t col = 0; col < 4; ++col) {
            double v = -1;
            row >> v;
            EXPECT_EQ(v, table[p * 4 + col].ser());
        }
    }
    EXPECT_NE(slurp(dir_ / "README.txt").find("fig3a"), std::string::npos);
}

TEST(ExperimentConfigText, ParsesEveryKey) {
    const auto c = parse_experiment_config(R"(# two users
K = 2
N = 100
snr_grid_db = 10,7; 12,9 ;14,11
frames_per_point = 50   # trailing comment
min_errors = 20
noise_power = 1
seed = 18446744073709551615
detectors = ml-csi
alignment = strict
em_epsilon = 0.5
em_max_iterations = 30
em_weights_fixed = false
em_covariance_floor = 1e-5
em_likelihood = soft
em_covariance_model = spherical-shared
)");
    EXPECT_EQ(c.users, 2);
    EXPECT_EQ(c.frame_length, 100);
    EXPECT_EQ(c.snr_grid_db, (std::vector<std::vector<double>>{{10, 7}, {12, 9}, {14, 11}}));
    EXPECT_EQ(c.frames_per_point, 50);
    EXPECT_EQ(c.min_errors, 20);
    EXPECT_EQ(c.seed, 18446744073709551615ULL);
    EXPECT_EQ(c.detectors, std::vector<DetectorKind>{DetectorKind::MlCsi});
    EXPECT_EQ(c.alignment, AlignmentMode::Strict);
    EXPECT_EQ(c.em.epsilon, 0.5);
    EXPECT_EQ(c.em.max_iterations, 30);
    EXPECT_FALSE(c.em.weights_fixed);
    EXPECT_EQ(c.em.covariance_floor, 1e-5);
    EXPECT_EQ(c.em.likelihood, gmm::LikelihoodKind::Soft);
    EXPECT_EQ(c.em.covariance_model, gmm::CovarianceModel::SphericalShared);
}

TEST(ExperimentConfigText, SingleUserListAndDefaults) {
    const auto c = parse_experiment_config("K=1\nN=500\nsnr_grid_db=0,5,10\n");
    EXPECT_EQ(c.snr_grid_db, (std::vector<std::vector<double>>{{0}, {5}, {10}}));
    const ExperimentConfig d;
    EXPECT_EQ(c.frames_per_point, d.frames_per_point);
    EXPECT_EQ(c.min_errors, d.min_errors);
    EXPECT_FALSE(c.em.epsilon.has_value());
}

TEST(ExperimentConfigText, FormatRoundTrips) {
    auto c = parse_experiment_config("K=3\nN=50\nsnr_grid_db=1.5,0.25,-3; 4,5,6\nem_epsilon=auto\nseed=77\n");
    const auto again = parse_experiment_config(format_experiment_config(c));
    EXPECT_EQ(format_experiment_config(again), format_experiment_config(c));
    EXPECT_EQ(again.snr_grid_db, c.snr_grid_db);
    EXPECT_EQ(again.seed, 77u);
}

void expect_config_error(std::string_view text, int line, std::string_view fragment) {
    try {
        parse_experiment_config(text);
        ADD_FAILURE() << "no error for: " << text;
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), line) << e.what();
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

TEST(ExperimentConfigText, ErrorsCarryLineNumbers) {
    expect_config_error("N=5\nsnr_grid_db=1\n", 0, "'K'");
    expect_config_error("K=1\nN=5\nsnr_grid_db=1\nbogus=2\n", 4, "unknown key");
    expect_config_error("K=1\nK=2\n", 2, "duplicate");
    expect_config_error("K=1\nN=5\nsnr_grid_db=1\nframes_per_point=abc\n", 4, "frames_per_point");
    expect_config_error("K=2\nN=5\nsnr_grid_db=1,2;3\n", 3, "K = 2");
    expect_config_error("K=1\n\nN\n", 3, "key = value");
    expect_config_error("K=0\nN=5\nsnr_grid_db=1\n", 1, "'K'");
    expect_config_error("K=1\nN=5\nsnr_grid_db=1\nem_likelihood=maybe\n", 4, "em_likelihood");
    expect_config_error("K=1\nN=5\nsnr_grid_db=1\ndetectors=kmeans\n", 4, "kmeans");
    expect_config_error("K=1\nN=5\nsnr_grid_db=\n", 3, "empty");
}

}  // namespace
}  // namespace noma
