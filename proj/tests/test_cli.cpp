#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = FIA_CLI_PATH;
const fs::path tmp_root = FIA_TEST_TMPDIR;

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = tmp_root / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("") == 2);
    CHECK(run("no-such-subcommand") == 2);
    CHECK(run("equivalence --no-such-flag 3") == 2);
}

TEST_CASE("equivalence subcommand reports and passes") {
    const fs::path dir = fresh_dir("cli_eq");
    CHECK(run("equivalence --n 8 --out " + dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "equivalence.json"));
    CHECK(j["passed"].get<bool>());
    CHECK(j["max_abs_gap"].get<double>() <= 1e-10);
    // CSV header sanity.
    std::istringstream csv(slurp(dir / "equivalence.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "instance,N,D,max_abs_gap");
}

TEST_CASE("gradcheck subcommand meets its tolerance") {
    const fs::path dir = fresh_dir("cli_gc");
    CHECK(run("gradcheck --dims 4 --seeds 2 --out " + dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "gradcheck.json"));
    CHECK(j["max_rel_err"].get<double>() <= 1e-4);
    CHECK(j["passed"].get<bool>());
}

TEST_CASE("flags override config file values") {
    const fs::path dir = fresh_dir("cli_prec");
    const fs::path cfg = dir / "in.cfg";
    {
        std::ofstream out(cfg);
        out << "n=7\nmax-n=4\n";
    }
    CHECK(run("equivalence --config " + cfg.string() + " --n 3 --out " + dir.string()) == 0);
    const std::string echo = slurp(dir / "config_echo.txt");
    CHECK(echo.find("n=3\n") != std::string::npos);      // flag wins
    CHECK(echo.find("max-n=4\n") != std::string::npos);  // file value kept
    const auto j = nlohmann::json::parse(slurp(dir / "equivalence.json"));
    CHECK(j["instances"].get<int>() == 3);
}

TEST_CASE("config echo re-runs reproduce outputs byte for byte") {
    // equivalence: pure numerics.
    {
        const fs::path dir = fresh_dir("cli_det_eq");
        REQUIRE(run("equivalence --n 6 --seed 42 --out " + dir.string()) == 0);
        const std::string json1 = slurp(dir / "equivalence.json");
        const std::string csv1 = slurp(dir / "equivalence.csv");
        const std::string echo1 = slurp(dir / "config_echo.txt");
        REQUIRE(run("equivalence --config " + (dir / "config_echo.txt").string()) == 0);
        CHECK(slurp(dir / "equivalence.json") == json1);
        CHECK(slurp(dir / "equivalence.csv") == csv1);
        CHECK(slurp(dir / "config_echo.txt") == echo1);
    }
    // density-rate: Monte Carlo with substreams.
    {
        const fs::path dir = fresh_dir("cli_det_dr");
        REQUIRE(run("density-rate --n-ladder 100,200,400 --reps 3 --seed 9 --out " +
                    dir.string()) == 0);
        const std::string csv1 = slurp(dir / "density_rate.csv");
        REQUIRE(run("density-rate --config " + (dir / "config_echo.txt").string()) == 0);
        CHECK(slurp(dir / "density_rate.csv") == csv1);
    }
    // train-lm: optimizer loop, checkpoint included.
    {
        const fs::path dir = fresh_dir("cli_det_lm");
        const std::string common =
            "train-lm --layers 1 --d-model 16 --heads 2 --d-ff 32 --context 16 "
            "--steps 6 --batch 2 --eval-interval 0 --eval-windows 4 "
            "--synthetic-bytes 4000 --variant fourier --seed 5 --out ";
        REQUIRE(run(common + dir.string()) == 0);
        const std::string report1 = slurp(dir / "train_report.json");
        const std::string steps1 = slurp(dir / "train_steps.csv");
        const std::string ckpt1 = slurp(dir / "checkpoint.bin");
        REQUIRE(run("train-lm --config " + (dir / "config_echo.txt").string()) == 0);
        CHECK(slurp(dir / "train_report.json") == report1);
        CHECK(slurp(dir / "train_steps.csv") == steps1);
        CHECK(slurp(dir / "checkpoint.bin") == ckpt1);
    }
}

TEST_CASE("config for the wrong subcommand is a usage error") {
    const fs::path dir = fresh_dir("cli_wrongsub");
    REQUIRE(run("equivalence --n 3 --out " + dir.string()) == 0);
    CHECK(run("gradcheck --config " + (dir / "config_echo.txt").string()) == 2);
}

TEST_CASE("unknown config keys are rejected") {
    const fs::path dir = fresh_dir("cli_badkey");
    const fs::path cfg = dir / "bad.cfg";
    {
        std::ofstream out(cfg);
        out << "definitely-not-a-key=1\n";
    }
    CHECK(run("equivalence --config " + cfg.string() + " --out " + dir.string()) == 2);
}

TEST_CASE("regression-rate subcommand produces its table") {
    const fs::path dir = fresh_dir("cli_rr");
    CHECK(run("regression-rate --phi 4 --family laplace --n-ladder 100,200,400 --reps 2 "
              "--out " +
              dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "regression_rate.json"));
    CHECK(j["rows"].size() == 3);
    std::istringstream csv(slurp(dir / "regression_rate.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "N,R,error_mean,error_stderr,slope_so_far");
}

TEST_CASE("output directory falls back to the environment variable") {
    const fs::path dir = fresh_dir("cli_envout");
    const std::string cmd = "FIA_OUTPUT_DIR=" + dir.string() + " " + cli +
                            " equivalence --n 2 >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(dir / "equivalence.json"));
    const std::string echo = slurp(dir / "config_echo.txt");
    CHECK(echo.find("out=" + dir.string()) != std::string::npos);
}

TEST_CASE("head-distance subcommand emits a well-formed report") {
    const fs::path dir = fresh_dir("cli_hd");
    CHECK(run("head-distance --layers 1 --d-model 16 --heads 2 --d-ff 32 --context 16 "
              "--steps 0 --variant fourier --probe-windows 2 --out " +
              dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "head_distance.json"));
    CHECK(j["mean"].get<double>() >= 0.0);
    CHECK(j["layer_mean"].size() == 1);
}

TEST_CASE("ablate-phi records the signed-path probe") {
    const fs::path dir = fresh_dir("cli_ablate");
    CHECK(run("ablate-phi --exponents 1,2 --layers 1 --d-model 16 --heads 2 --d-ff 32 "
              "--context 16 --steps 2 --batch 2 --eval-interval 0 --eval-windows 4 "
              "--synthetic-bytes 4000 --out " +
              dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "ablate_phi.json"));
    REQUIRE(j["cells"].size() == 2);
    CHECK(j["cells"][0]["phi_exponent"].get<int>() == 1);
    CHECK(j["cells"][0]["negative_weight_probe"].get<bool>());
    CHECK_FALSE(j["cells"][1]["negative_weight_probe"].get<bool>());
}
