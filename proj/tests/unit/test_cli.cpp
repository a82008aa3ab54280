#include "bfdr/cli.hpp"

#include "doctest.h"
#include "json.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using bfdr::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "bfdr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("bfdr_cli_" + std::to_string(::getpid()));
    Scratch() { fs::create_directories(dir); }
    ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("grid parsing")
{
    const auto g = bfdr::cli::parse_grid("0.05:0.4:0.05");
    REQUIRE(g.size() == 8);
    CHECK(g.back() == doctest::Approx(0.4));
    CHECK(bfdr::cli::parse_grid("0:1:0.1").size() == 11);
    CHECK(bfdr::cli::parse_grid("0.1,0.3") == std::vector<double>{0.1, 0.3});
    CHECK(bfdr::cli::parse_size_list("16,64") == std::vector<std::size_t>{16, 64});
    CHECK_THROWS(bfdr::cli::parse_grid("1:0:0.1"));
    CHECK_THROWS(bfdr::cli::parse_grid("0:1"));
    CHECK_THROWS(bfdr::cli::parse_size_list("1.5"));
}

TEST_CASE("exit codes")
{
    Scratch s;
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"--version"}).out == std::string(bfdr::cli::kVersion) + "\n");
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"simulate", "bfdr-curve", "--config", "nope"}).code == 2);
    CHECK(invoke({"simulate", "bfdr-curve", "--q-grid", "0.3:0.1:0.1", "--out-dir", s.dir.string()}).code == 2);
    CHECK(invoke({"analyze", "--input", (s.dir / "absent.csv").string(), "--out-dir", s.dir.string()}).code == 1);
    // m = 10 with pi0 = 0.5 leaves 5 non-nulls, not a multiple of 4
    CHECK(invoke({"simulate", "bfdr-curve", "--m", "10", "--pi0", "0.5", "--out-dir", s.dir.string()}).code == 1);
}

TEST_CASE("simulation output is reproducible for a fixed tag")
{
    Scratch s;
    const std::vector<std::string> args{"simulate", "bfdr-curve", "--n", "50", "--q-grid", "0.1,0.2", "--workers",
                                        "3", "--tag", "fixed", "--out-dir"};
    auto first = args;
    first.push_back((s.dir / "a").string());
    auto second = args;
    second.push_back((s.dir / "b").string());
    REQUIRE(invoke(first).code == 0);
    REQUIRE(invoke(second).code == 0);
    const auto a = s.dir / "a" / "bfdr-curve_fixed";
    const auto b = s.dir / "b" / "bfdr-curve_fixed";
    CHECK(slurp(a / "bfdr-curve_fixed.csv") == slurp(b / "bfdr-curve_fixed.csv"));
    CHECK(slurp(a / "bfdr-curve_fixed.json") == slurp(b / "bfdr-curve_fixed.json"));

    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["command"] == "simulate bfdr-curve");
    CHECK(manifest["seed"].get<std::uint64_t>() == 20240601u);
    CHECK(manifest["outputs"].size() == 2);
    for (const auto& name : manifest["outputs"]) CHECK(fs::exists(a / name.get<std::string>()));

    // a second run with the same tag does not overwrite the first
    REQUIRE(invoke(first).code == 0);
    CHECK(fs::exists(s.dir / "a" / "bfdr-curve_fixed-1" / "manifest.json"));

    const auto csv = slurp(a / "bfdr-curve_fixed.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 10);
}

TEST_CASE("analyze and calibrate on a small dataset")
{
    Scratch s;
    const auto input = s.dir / "data.csv";
    std::ofstream(input) << "study,p\na,0.001\nb,0.004\nc,0.01\nd,0.02\ne,0.03\nf,0.3\ng,0.7\nh,0.9\n";
    const auto r = invoke({"analyze", "--input", input.string(), "--id-column", "study", "--family", "both", "--tag",
                           "t", "--format", "csv", "--out-dir", s.dir.string()});
    REQUIRE(r.code == 0);
    const auto dir = s.dir / "analyze_t";
    CHECK(fs::exists(dir / "analyze_t.csv"));
    CHECK(fs::exists(dir / "analyze_t_pi0.csv"));
    const auto disc = slurp(dir / "analyze_t_discoveries.csv");
    CHECK(disc.find(",a,") != std::string::npos);
    CHECK(r.out.find("SL q=0.1: 5 (63%)") != std::string::npos);

    const auto c = invoke({"calibrate", "--pi0", "storey", "--input", input.string(), "--t-grid", "0.01,0.05,0.5",
                           "--tag", "t", "--out-dir", s.dir.string()});
    REQUIRE(c.code == 0);
    CHECK(c.err.find("clipped 1") != std::string::npos);
    CHECK(invoke({"calibrate", "--pi0", "lsl", "--out-dir", s.dir.string()}).code == 1);
}

TEST_CASE("lemmas and asymptotics subcommands run")
{
    Scratch s;
    const auto l = invoke({"simulate", "lemmas", "--n", "2000", "--instances", "200", "--n-exp", "200", "--tag", "t",
                           "--out-dir", s.dir.string()});
    CHECK(l.code == 0);
    CHECK(l.out.find("p_to_one") != std::string::npos);
    const auto a = invoke({"simulate", "asymptotics", "--n", "5", "--m-list", "64,128", "--tag", "t", "--out-dir",
                           s.dir.string()});
    CHECK(a.code == 0);
    CHECK(fs::exists(s.dir / "asymptotics_t" / "asymptotics_t_probe.csv"));
}
