// End-to-end tests that drive the installed CLI binary through std::system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nvmag/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string cli = NVMAG_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nvmag_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& command_line) {
    const int status = std::system(command_line.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json(const std::string& path) { return json::parse(read_text(path)); }

}  // namespace

TEST_CASE("simulate-odmr at zero field puts the minima at D +/- E") {
    TempDir dir;
    write_text(dir.file("config.json"), R"({"simulate": {"field_mt": [0.0, 0.0, 0.0]}})");
    const std::string csv = dir.file("spectrum.csv");
    REQUIRE(run(cli + " simulate-odmr --config " + dir.file("config.json") + " --output " + csv +
                " > /dev/null 2>&1") == 0);

    const auto spectrum = nvmag::read_odmr_csv_file(csv);
    CHECK(spectrum.freqs_mhz.size() == 1701);
    // locate the two local minima of the noiseless curve
    std::vector<double> minima;
    for (std::size_t i = 1; i + 1 < spectrum.pl_norm.size(); ++i)
        if (spectrum.pl_norm[i] < spectrum.pl_norm[i - 1] &&
            spectrum.pl_norm[i] <= spectrum.pl_norm[i + 1])
            minima.push_back(spectrum.freqs_mhz[i]);
    REQUIRE(minima.size() == 2);
    CHECK(minima[0] == doctest::Approx(2867.0).epsilon(1e-3));
    CHECK(minima[1] == doctest::Approx(2873.0).epsilon(1e-3));

    const auto truth = read_json(csv + ".truth.json");
    CHECK(truth["centers_mhz"].size() == 8);
    CHECK(truth["model"]["d_mhz"] == doctest::Approx(2870.0));
}

TEST_CASE("simulate-odmr is byte-identical under a fixed seed") {
    TempDir dir;
    write_text(dir.file("config.json"),
               R"({"simulate": {"field_mt": [1.0, 2.0, 3.0], "counts_per_point": 1e5}})");
    const std::string base = " simulate-odmr --config " + dir.file("config.json") + " --seed 7 ";
    REQUIRE(run(cli + base + "--output " + dir.file("a.csv") + " > /dev/null 2>&1") == 0);
    REQUIRE(run(cli + base + "--output " + dir.file("b.csv") + " > /dev/null 2>&1") == 0);
    REQUIRE(run(cli + " simulate-odmr --config " + dir.file("config.json") + " --seed 8 --output " +
                dir.file("c.csv") + " > /dev/null 2>&1") == 0);
    CHECK(read_text(dir.file("a.csv")) == read_text(dir.file("b.csv")));
    CHECK(read_text(dir.file("a.csv")) != read_text(dir.file("c.csv")));
}

TEST_CASE("pipeline: simulate -> fit-odmr -> reconstruct recovers the field magnitude") {
    TempDir dir;
    write_text(dir.file("config.json"),
               R"({"simulate": {"field_mt": [3.0, 1.0, 0.5], "counts_per_point": 1e7},
                   "fit": {"n_peaks": 8}})");
    const std::string csv = dir.file("spectrum.csv");
    REQUIRE(run(cli + " simulate-odmr --config " + dir.file("config.json") + " --seed 3 --output " +
                csv + " > /dev/null 2>&1") == 0);
    REQUIRE(run(cli + " fit-odmr " + csv + " --config " + dir.file("config.json") + " --output " +
                dir.file("fit.json") + " > /dev/null 2>&1") == 0);

    const auto fit_doc = read_json(dir.file("fit.json"));
    CHECK(fit_doc["schema_version"] == "1.0");
    CHECK(fit_doc["command"] == "fit-odmr");
    REQUIRE(fit_doc["results"]["peaks"].size() == 8);
    CHECK(fit_doc["results"]["fit"]["converged"] == true);

    REQUIRE(run(cli + " reconstruct " + dir.file("fit.json") + " --output " +
                dir.file("recon.json") + " > /dev/null 2>&1") == 0);
    const auto recon = read_json(dir.file("recon.json"));
    const double b_norm = recon["results"]["reconstruction"]["b_norm_mt"].get<double>();
    const double true_norm = std::sqrt(3.0 * 3.0 + 1.0 * 1.0 + 0.5 * 0.5);
    CHECK(b_norm == doctest::Approx(true_norm).epsilon(1e-3));
    CHECK(recon["results"]["projections"].size() == 4);
}

TEST_CASE("fit-decay on a synthetic Hahn record returns t2_us") {
    TempDir dir;
    nvmag::DecayParams p;
    p.amplitude = 0.8;
    p.decay_us = 5.0;
    p.offset = 0.1;
    std::vector<double> t;
    for (int i = 0; i < 200; ++i) t.push_back(0.1 * i);
    const auto record = nvmag::synthesize_decay(nvmag::DecayKind::hahn, p, t, 0);
    nvmag::write_decay_csv_file(dir.file("decay.csv"), record);

    REQUIRE(run(cli + " fit-decay " + dir.file("decay.csv") + " --kind hahn --output " +
                dir.file("fit.json") + " > /dev/null 2>&1") == 0);
    const auto doc = read_json(dir.file("fit.json"));
    CHECK(doc["results"]["kind"] == "hahn");
    CHECK(doc["results"]["fit"]["params"]["t2_us"].get<double>() == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("sensitivity report document carries the reference numbers") {
    TempDir dir;
    write_text(dir.file("config.json"), R"({"sensitivity": {"enhancement": 100.0}})");
    REQUIRE(run(cli + " sensitivity --config " + dir.file("config.json") + " --output " +
                dir.file("report.json") + " > /dev/null 2>&1") == 0);
    const auto doc = read_json(dir.file("report.json"));
    CHECK(doc["results"]["baseline"]["eta_dc_t_per_sqrthz"].get<double>() ==
          doctest::Approx(627e-12).epsilon(0.01));
    CHECK(doc["results"]["enhanced"]["eta_ac_t_per_sqrthz"].get<double>() ==
          doctest::Approx(20e-12).epsilon(0.02));
    CHECK(doc["results"]["improvement_ratio"].get<double>() == doctest::Approx(10.0));
}

TEST_CASE("exit codes: input errors return 1") {
    TempDir dir;
    SUBCASE("non-monotone ODMR CSV") {
        write_text(dir.file("bad.csv"), "freq_mhz,pl_norm\n2870,0.99\n2860,0.98\n");
        CHECK(run(cli + " fit-odmr " + dir.file("bad.csv") + " > /dev/null 2>&1") == 1);
    }
    SUBCASE("empty CSV") {
        write_text(dir.file("empty.csv"), "");
        CHECK(run(cli + " fit-odmr " + dir.file("empty.csv") + " > /dev/null 2>&1") == 1);
    }
    SUBCASE("missing input file") {
        CHECK(run(cli + " fit-odmr " + dir.file("missing.csv") + " > /dev/null 2>&1") == 1);
    }
    SUBCASE("invalid config value") {
        write_text(dir.file("config.json"), R"({"simulate": {"contrast": 2.0}})");
        CHECK(run(cli + " sensitivity --config " + dir.file("config.json") +
                  " > /dev/null 2>&1") == 1);
    }
    SUBCASE("simulate without field or peaks") {
        write_text(dir.file("config.json"), "{}");
        CHECK(run(cli + " simulate-odmr --config " + dir.file("config.json") + " --output " +
                  dir.file("out.csv") + " > /dev/null 2>&1") == 1);
    }
    SUBCASE("unknown decay kind") {
        write_text(dir.file("decay.csv"), "time_us,signal\n0,1\n1,0.5\n2,0.4\n");
        CHECK(run(cli + " fit-decay " + dir.file("decay.csv") +
                  " --kind ramsey > /dev/null 2>&1") == 1);
    }
}

TEST_CASE("exit codes: analysis failures return 2 with a diagnostic document") {
    TempDir dir;
    SUBCASE("featureless spectrum has no peaks") {
        std::ostringstream csv;
        csv << "freq_mhz,pl_norm\n";
        for (int i = 0; i < 200; ++i) csv << 2700.0 + 0.2 * i << ",1.0\n";
        write_text(dir.file("flat.csv"), csv.str());
        CHECK(run(cli + " fit-odmr " + dir.file("flat.csv") + " > /dev/null 2>&1") == 2);
    }
    SUBCASE("unpairable centers") {
        write_text(dir.file("peaks.json"), "[2800.0, 2950.0]");
        CHECK(run(cli + " reconstruct " + dir.file("peaks.json") + " --output " +
                  dir.file("recon.json") + " > /dev/null 2>&1") == 2);
        const auto doc = read_json(dir.file("recon.json"));
        CHECK(doc["warnings"][0] == "pairing failed");
        CHECK(doc["results"].contains("error"));
    }
    SUBCASE("too few projections for a vector solution") {
        write_text(dir.file("peaks.json"), "[2860.0, 2880.0]");
        CHECK(run(cli + " reconstruct " + dir.file("peaks.json") + " > /dev/null 2>&1") == 2);
    }
}
