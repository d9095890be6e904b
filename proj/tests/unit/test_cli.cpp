#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "frailtyfa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace frailtyfa;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "frailtyfa");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_pipeline(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("frailtyfa_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Synthetic ELSA-like cohort shared by the tests below.
const fs::path& cohort_dir() {
    static const fs::path dir = [] {
        const fs::path d = scratch("cohort");
        const auto r = cli({"synth", "--preset", "elsa58", "--n", "1500", "--seed", "7", "--out-dir", d.string()});
        if (r.code != 0) throw std::runtime_error("synth failed: " + r.err);
        return d;
    }();
    return dir;
}

std::vector<std::string> analysis(const std::string& cmd, const fs::path& out) {
    return {cmd, "--input", (cohort_dir() / "cohort.csv").string(), "--catalog",
            (cohort_dir() / "catalog.json").string(), "--out-dir", out.string(), "--seed", "7"};
}

} // namespace

TEST(Svg, ScreeHasOneMarkerPerEigenvalue) {
    ParallelResult pa;
    pa.observed = Eigen::VectorXd::LinSpaced(58, 8.0, 0.1);
    pa.threshold = Eigen::VectorXd::LinSpaced(58, 1.3, 0.7);
    pa.quantile = 0.95;
    const std::string svg = scree_svg(pa);
    std::size_t markers = 0, pos = 0;
    while ((pos = svg.find("<circle class=\"observed\"", pos)) != std::string::npos) {
        ++markers;
        ++pos;
    }
    EXPECT_EQ(markers, 58u);
    EXPECT_NE(svg.find("class=\"threshold\""), std::string::npos);
    EXPECT_LT(svg.size(), kMaxSvgBytes);
    EXPECT_EQ(svg.find("href"), std::string::npos);
}

TEST(Svg, EmptyFactorSetWritesNothing) {
    const fs::path dir = scratch("svg_empty");
    const fs::path target = dir / "loadings.svg";
    EXPECT_THROW(emit_loadings_svg(target, {}, Eigen::MatrixXd(58, 0)), Error);
    EXPECT_FALSE(fs::exists(target));
    ParallelResult empty;
    EXPECT_THROW(emit_scree_svg(dir / "scree.svg", empty), Error);
    EXPECT_FALSE(fs::exists(dir / "scree.svg"));
}

TEST(Svg, OversizeIsIoError) {
    const fs::path dir = scratch("svg_big");
    EXPECT_THROW(write_svg(dir / "big.svg", std::string(kMaxSvgBytes + 1, ' ')), IoError);
    EXPECT_FALSE(fs::exists(dir / "big.svg"));
}

TEST(Csv, SixSignificantDigits) {
    EXPECT_EQ(detail::fmt6(0.123456789), "0.123457");
    EXPECT_EQ(detail::fmt6(-0.0), "0");
    EXPECT_EQ(detail::fmt6(std::nan("")), "NA");
}

TEST(Cli, MissingCatalogIsUsageError) {
    const auto r = cli({"fi", "--input", (cohort_dir() / "cohort.csv").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("--catalog"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownSubcommandAndBadFlags) {
    EXPECT_EQ(cli({"dance"}).code, 2);
    EXPECT_EQ(cli({}).code, 2);
    auto args = analysis("efa", scratch("bad_flags"));
    args.push_back("--nfactors");
    args.push_back("2");
    args.push_back("--auto-nfactors");
    EXPECT_EQ(cli(args).code, 2);
}

TEST(Cli, ValidationErrorsExitTwo) {
    const fs::path dir = scratch("validation");
    std::ofstream(dir / "bad.csv") << "id,age,sex,a,b\n1,70,3,0,1\n";
    std::ofstream(dir / "cat.json") << R"({"deficits":[{"id":"a"},{"id":"b"}]})";
    const auto r = cli({"fi", "--input", (dir / "bad.csv").string(), "--catalog", (dir / "cat.json").string(),
                        "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("ingest:"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOne) {
    const fs::path dir = scratch("runtime");
    {
        std::ofstream csv(dir / "flat.csv");
        csv << "id,age,sex,a,b\n";
        for (int i = 0; i < 50; ++i) csv << i << ",70," << i % 2 << "," << i % 2 << ",1\n";
    }
    std::ofstream(dir / "cat.json") << R"({"deficits":[{"id":"a"},{"id":"b"}]})";
    const auto r = cli({"corr", "--input", (dir / "flat.csv").string(), "--catalog", (dir / "cat.json").string(),
                        "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("corr:"), std::string::npos);
    EXPECT_NE(r.err.find("'b'"), std::string::npos);
}

TEST(Cli, EfaOnPlantedCohort) {
    const fs::path out = scratch("efa");
    auto args = analysis("efa", out);
    args.push_back("--nfactors");
    args.push_back("4");
    const auto r = cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(out / "loadings.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "id,description,F1,F2,F3,F4");
    const auto fit = nlohmann::json::parse(slurp(out / "efa_fit.json"));
    EXPECT_LE(fit["rmsr"].get<double>(), 0.05);
    EXPECT_TRUE(fit["rmsr_acceptable"].get<bool>());
    for (const char* f : {"efa_unrotated.csv", "phi.csv", "salience.json", "loadings.svg", "run_meta.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, EachSubcommandWritesItsFiles) {
    const std::map<std::string, std::vector<std::string>> expected{
        {"ingest", {"cohort_clean.csv", "exclusions.json"}},
        {"fi", {"fi_scores.csv", "deficit_criteria.csv"}},
        {"corr", {"corr_matrix.csv", "corr_npairs.csv", "factorability.json"}},
        {"pa", {"scree.csv", "scree.svg"}},
        {"scores", {"scores.csv", "score_correlations.csv"}},
        {"regress", {"regression.csv", "model_comparison.json"}},
    };
    for (const auto& [cmd, files] : expected) {
        const fs::path out = scratch("sub_" + cmd);
        auto args = analysis(cmd, out);
        if (cmd != "ingest" && cmd != "fi" && cmd != "corr" && cmd != "pa") {
            args.push_back("--nfactors");
            args.push_back("4");
        }
        const auto r = cli(args);
        ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
        for (const auto& f : files) EXPECT_TRUE(fs::exists(out / f)) << cmd << " " << f;
        EXPECT_TRUE(fs::exists(out / "run_meta.json"));
    }
}

TEST(Cli, ReportIsByteIdenticalAcrossRuns) {
    const fs::path a = scratch("report_a"), b = scratch("report_b");
    auto args_a = analysis("report", a), args_b = analysis("report", b);
    args_a.push_back("--auto-nfactors");
    args_b.push_back("--auto-nfactors");
    ASSERT_EQ(cli(args_a).code, 0);
    ASSERT_EQ(cli(args_b).code, 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        if (name == "run_meta.json") continue; // records out_dir
        EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_EQ(compared, 17u);
    auto meta_a = nlohmann::json::parse(slurp(a / "run_meta.json"));
    auto meta_b = nlohmann::json::parse(slurp(b / "run_meta.json"));
    meta_a["config"].erase("out_dir");
    meta_b["config"].erase("out_dir");
    EXPECT_EQ(meta_a, meta_b);
    EXPECT_EQ(meta_a["seeds"]["seed"], 7);
}

TEST(Cli, ScreeMatchesGoldenFile) {
    const fs::path out = scratch("golden");
    ASSERT_EQ(cli(analysis("pa", out)).code, 0);
    const fs::path golden = fs::path(FRAILTYFA_SOURCE_DIR) / "tests/golden/scree_elsa58_n1500_seed7.svg";
    if (std::getenv("FRAILTYFA_UPDATE_GOLDEN")) fs::copy_file(out / "scree.svg", golden, fs::copy_options::overwrite_existing);
    ASSERT_TRUE(fs::exists(golden)) << "golden file missing; run with FRAILTYFA_UPDATE_GOLDEN=1 once verified";
    EXPECT_EQ(slurp(out / "scree.svg"), slurp(golden));
}

TEST(Cli, BinaryExitCodes) {
    const std::string exe = FRAILTYFA_CLI;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(status(exe + " --help"), 0);
    EXPECT_EQ(status(exe + " fi --input " + (cohort_dir() / "cohort.csv").string()), 2);
    const fs::path out = scratch("binary");
    EXPECT_EQ(status(exe + " fi --input " + (cohort_dir() / "cohort.csv").string() + " --catalog " +
                     (cohort_dir() / "catalog.json").string() + " --out-dir " + out.string()),
              0);
}
