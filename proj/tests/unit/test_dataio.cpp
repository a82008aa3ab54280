#include "bfdr/dataio.hpp"
#include "bfdr/procedures.hpp"
#include "bfdr/simgen.hpp"

#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace bfdr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("bfdr_dataio_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name, std::ios::binary) << text;
        return path / name;
    }
    static inline int counter = 0;
};

DatasetDescriptor desc(const fs::path& path)
{
    DatasetDescriptor d;
    d.path = path;
    return d;
}

}  // namespace

TEST_CASE("loading p-values")
{
    TempDir dir;
    const auto ok = load_pvalues(desc(dir.write("a.csv", "id,p\nx,0.01\ny,0.2\n")));
    CHECK(ok.values == std::vector<double>{0.01, 0.2});

    auto with_ids = desc(dir.write("b.csv", "id,p\n\"study, one\",0.01\ny,0.2\n"));
    with_ids.id_column = "id";
    const auto labelled = load_pvalues(with_ids);
    REQUIRE(labelled.labels);
    CHECK((*labelled.labels)[0] == "study, one");

    try {
        load_pvalues(desc(dir.write("c.csv", "p\n0.1\n0.2\n0.3\n0.4\n1.3\n")));
        FAIL("expected an error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("row 5") != std::string::npos);
    }
    CHECK_THROWS_AS(load_pvalues(desc(dir.path / "missing.csv")), IoError);
    CHECK_THROWS_AS(load_pvalues(desc(dir.write("d.csv", ""))), IoError);
    CHECK_THROWS_AS(load_pvalues(desc(dir.write("e.csv", "p\n"))), IoError);
    CHECK_THROWS_AS(load_pvalues(desc(dir.write("f.csv", "q\n0.1\n"))), IoError);
    CHECK_THROWS_AS(load_pvalues(desc(dir.write("g.csv", "p\nabc\n"))), IoError);
}

TEST_CASE("two-sided input needs an effect direction")
{
    TempDir dir;
    const auto path = dir.write("t.csv", "p,effect\n0.04,1.5\n0.04,-2\n");
    auto d = desc(path);
    d.sidedness = Sidedness::two_sided;
    CHECK_THROWS_AS(load_pvalues(d), IoError);
    d.direction_column = "effect";
    const auto s = load_pvalues(d);
    CHECK(s.values[0] == doctest::Approx(0.02));
    CHECK(s.values[1] == doctest::Approx(0.98));
}

TEST_CASE("selection adjustment")
{
    CHECK(selection_adjust(PValueSample{{0.01, 0.03}}).values == std::vector<double>{0.4});
    CHECK(selection_adjust(PValueSample{{0.024999}}).values[0] == doctest::Approx(0.99996));
    CHECK(selection_adjust(PValueSample{{0.025}}).empty());
    CHECK(selection_adjust(PValueSample{{0.025}}, true).values == std::vector<double>{1.0});
    // idempotent only when nothing survives
    CHECK(selection_adjust(selection_adjust(PValueSample{{0.5}})).empty());
    CHECK(selection_adjust(selection_adjust(PValueSample{{0.01}})).values != selection_adjust(PValueSample{{0.01}}).values);
}

TEST_CASE("rejection percentage")
{
    CHECK(rejection_percentage(99, 261) == 38);
    CHECK(rejection_percentage(0, 10) == 0);
    CHECK(rejection_percentage(1, 2) == 50);
}

TEST_CASE("CSV quoting")
{
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    const auto rows = parse_csv("a,\"b,c\",\"d\"\"e\"\r\n1,2,3\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "b,c");
    CHECK(rows[0][2] == "d\"e");
    CHECK(rows[1][2] == "3");
}

TEST_CASE("number formatting keeps reals distinguishable")
{
    CHECK(format_double(0.15) == "0.15");
    CHECK(format_double(2.0) == "2.0");
    CHECK(format_double(0.0031250001) == "0.003125");
}

TEST_CASE("tables round-trip through CSV and JSON")
{
    SimConfig sim;
    const auto metrics = metrics_to_table(
        run_experiment(sim, default_roster(0.2), 30, ExperimentOptions{2, true}));
    const auto expected = rounded(metrics);
    CHECK(table_from_csv(to_csv(metrics)) == expected);
    CHECK(table_from_json(to_json(metrics)) == expected);

    // interleaved procedure rows keep their order
    std::vector<RejectionSummary> summaries;
    for (double q : {0.1, 0.2}) {
        for (const char* name : {"SL", "LSL"}) {
            RejectionSummary s;
            s.procedure = name;
            s.family = "SL";
            s.q = q;
            s.level = q;
            s.r = 3;
            s.m = 10;
            s.threshold = 0.01;
            s.boundary_label = "a,b";
            summaries.push_back(s);
        }
    }
    const auto rej = rejections_to_table(summaries);
    CHECK(table_from_json(to_json(rej)) == rounded(rej));
    CHECK(table_from_csv(to_csv(rej)) == rounded(rej));

    TempDir dir;
    write_table(rej, TableFormat::json, dir.path / "r.json");
    write_table(rej, TableFormat::csv, dir.path / "r.csv");
    CHECK(read_table(dir.path / "r.json", TableFormat::json) == read_table(dir.path / "r.csv", TableFormat::csv));
}

TEST_CASE("empty roster gives a header-only file")
{
    const auto t = rejections_to_table({});
    CHECK(t.rows.empty());
    const auto csv = to_csv(t);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
    CHECK(table_from_csv(csv) == t);
    CHECK(table_from_json(to_json(t)) == t);
    CHECK(metrics_to_table({}).rows.empty());
}
