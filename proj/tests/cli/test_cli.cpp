// Drives the built mlti binary end to end: exit codes, file outputs, parity
// with direct library calls, and byte-level determinism.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "mlti/experiments.hpp"
#include "mlti/io.hpp"
#include "mlti/random.hpp"
#include "mlti/system.hpp"

#ifndef MLTI_BIN_PATH
#error "MLTI_BIN_PATH must point at the mlti binary"
#endif

using namespace mlti;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("mlti-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path out = fs::temp_directory_path() /
                         ("mlti-cli-out-" + std::to_string(::getpid()) + ".txt");
    const std::string cmd =
        std::string(MLTI_BIN_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::remove(out);
    return RunResult{WEXITSTATUS(status), ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Strip timing fields so reruns can be compared byte for byte.
std::string strip_timings(std::string text) {
    static const std::regex wall("\"wall_ms\": [0-9.e+-]+");
    return std::regex_replace(text, wall, "\"wall_ms\": 0");
}

fs::path write_example_system(const fs::path& dir) {
    const MltiSystem s = tucker_to_einstein(experiments::reach_obs_example_tucker());
    return io::save_dense_system(dir, "example71", s);
}

} // namespace

TEST_CASE("bench 7.1 passes and writes the system files") {
    TempDir dir;
    const RunResult r = run("bench --experiment 7.1 --out " + dir.path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
    CHECK(r.output.find("FAIL") == std::string::npos);
    CHECK(fs::exists(dir.path / "example71.json"));
}

TEST_CASE("analyze: verdict parity with the library and exit codes") {
    TempDir dir;
    const fs::path manifest = write_example_system(dir.path);
    const fs::path report = dir.path / "report.json";
    const RunResult r =
        run("analyze " + manifest.string() + " --criteria eigen,hosvd,ttd --methods rank_u,ttd --out " +
            report.string());
    CHECK(r.exit_code == 0);

    const json j = json::parse(slurp(report));
    const MltiSystem s = io::load_system(manifest);
    const StabilityVerdict eig = stability_eigen(s);
    bool saw_eigen = false;
    for (const auto& entry : j.at("stability")) {
        if (entry.at("criterion") == "eigen") {
            saw_eigen = true;
            CHECK(entry.at("verdict").get<std::string>() == to_string(eig.verdict));
            CHECK(entry.at("witness").get<double>() ==
                  doctest::Approx(eig.witness).epsilon(1e-12));
        }
    }
    CHECK(saw_eigen);
    for (const auto& entry : j.at("reachability"))
        CHECK(entry.at("verdict").get<std::string>() == "yes");
    for (const auto& entry : j.at("observability"))
        CHECK(entry.at("verdict").get<std::string>() == "yes");
}

TEST_CASE("analyze --strict exits 2 on a failing property") {
    TempDir dir;
    // Zero input map: not reachable.
    Rng rng(31);
    const Shape state{2, 2};
    MltiSystem s = random_system(state, Shape{1, 1}, Shape{1, 1}, rng);
    s = MltiSystem(s.a, EvenPairedTensor(s.b.pshape()), s.c);
    const fs::path manifest = io::save_dense_system(dir.path, "dead", s);
    const RunResult strict =
        run("analyze " + manifest.string() + " --methods rank_u --strict --out " +
            (dir.path / "r.json").string());
    CHECK(strict.exit_code == 2);
    const RunResult lax = run("analyze " + manifest.string() + " --methods rank_u --out " +
                              (dir.path / "r2.json").string());
    CHECK(lax.exit_code == 0);
}

TEST_CASE("analyze on a missing manifest exits 1") {
    const RunResult r = run("analyze /nonexistent/system.json");
    CHECK(r.exit_code == 1);
}

TEST_CASE("bode") {
    TempDir dir;
    SUBCASE("pure delay has flat unit magnitude") {
        const Shape state{2, 2};
        const MltiSystem s(EvenPairedTensor(PairedShape::square(state)), u_identity(state),
                           u_identity(state));
        const fs::path manifest = io::save_dense_system(dir.path, "delay", s);
        const fs::path csv = dir.path / "bode.csv";
        const RunResult r =
            run("bode " + manifest.string() + " --points 8 --out " + csv.string());
        CHECK(r.exit_code == 0);
        std::istringstream in(slurp(csv));
        std::string line;
        std::getline(in, line);
        CHECK(line == "omega,sigma_max");
        int rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            const double sigma = std::stod(line.substr(line.find(',') + 1));
            CHECK(sigma == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(rows == 8);
    }
    SUBCASE("smoke row count") {
        TempDir d2;
        const fs::path manifest = write_example_system(d2.path);
        const fs::path csv = d2.path / "b.csv";
        const RunResult r = run("bode " + manifest.string() + " --points 4 --out " + csv.string());
        CHECK(r.exit_code == 0);
        std::istringstream in(slurp(csv));
        std::string line;
        int rows = -1; // header
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 4);
    }
    SUBCASE("reduced and full magnitudes diverge by at most the reported error") {
        TempDir d3;
        const fs::path manifest = write_example_system(d3.path);
        const RunResult c = run("compress " + manifest.string() + " --format ttd --out " +
                                d3.path.string());
        REQUIRE(c.exit_code == 0);
        const json rep = json::parse(slurp(d3.path / "example71.ttd.report.json"));
        const double err = rep.at("hinf_relative_error").get<double>();
        CHECK(err <= 1e-10);

        const fs::path full_csv = d3.path / "full.csv";
        const fs::path red_csv = d3.path / "red.csv";
        REQUIRE(run("bode " + manifest.string() + " --points 65 --out " + full_csv.string())
                    .exit_code == 0);
        REQUIRE(run("bode " + (d3.path / "example71.ttd.json").string() + " --points 65 --out " +
                    red_csv.string())
                    .exit_code == 0);
        std::istringstream f(slurp(full_csv)), g(slurp(red_csv));
        std::string lf, lg;
        std::getline(f, lf);
        std::getline(g, lg);
        const double hinf_num = err; // relative; compare pointwise against err * max|Gf|
        double max_gf = 0.0;
        std::vector<std::pair<double, double>> rows;
        while (std::getline(f, lf) && std::getline(g, lg)) {
            const double gf = std::stod(lf.substr(lf.find(',') + 1));
            const double gr = std::stod(lg.substr(lg.find(',') + 1));
            rows.emplace_back(gf, gr);
            max_gf = std::max(max_gf, gf);
        }
        for (const auto& [gf, gr] : rows)
            CHECK(std::abs(gf - gr) <= hinf_num * max_gf + 1e-12);
    }
}

TEST_CASE("compress cpd prints estimated ranks") {
    TempDir dir;
    Rng rng(33);
    const TuckerSystem t = random_tucker_system(Shape{2, 2}, Shape{1, 1}, Shape{1, 1}, rng);
    const fs::path manifest = io::save_dense_system(dir.path, "tuck", tucker_to_einstein(t));
    const RunResult r = run("compress " + manifest.string() + " --format cpd --out " +
                            dir.path.string() + " --seed 7");
    CHECK(r.exit_code == 0);
    const json rep = json::parse(slurp(dir.path / "tuck.cpd.report.json"));
    CHECK(rep.at("kronecker_ranks") == json::array({1, 1, 1}));
    // Stated parameter formula for a Tucker system of these shapes.
    CHECK(rep.at("parameters").at("reduced").get<Index>() == 8 + 4 + 4);
    const auto fact = io::load_factored_system(dir.path / "tuck.cpd.json");
    CHECK(fact.has_value());
}

TEST_CASE("outputs are byte-identical across reruns (timings aside)") {
    TempDir dir;
    const fs::path manifest = write_example_system(dir.path);

    const fs::path csv1 = dir.path / "b1.csv";
    const fs::path csv2 = dir.path / "b2.csv";
    REQUIRE(run("bode " + manifest.string() + " --points 16 --out " + csv1.string()).exit_code ==
            0);
    REQUIRE(run("bode " + manifest.string() + " --points 16 --out " + csv2.string()).exit_code ==
            0);
    CHECK(slurp(csv1) == slurp(csv2));

    const fs::path r1 = dir.path / "r1.json";
    const fs::path r2 = dir.path / "r2.json";
    REQUIRE(run("analyze " + manifest.string() + " --out " + r1.string()).exit_code == 0);
    REQUIRE(run("analyze " + manifest.string() + " --out " + r2.string()).exit_code == 0);
    CHECK(strip_timings(slurp(r1)) == strip_timings(slurp(r2)));
}
