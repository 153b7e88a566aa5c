#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>
#include <unistd.h>

#include "commands.hpp"
#include "sputterlab/io/csv.hpp"
#include "sputterlab/io/json_io.hpp"

namespace fs = std::filesystem;
using namespace sputter;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("sputterlab_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write_config(const fs::path& dir, const std::string& body) {
    const fs::path p = dir / "config.json";
    io::write_file(p, body);
    return p.string();
}

}  // namespace

TEST_CASE("cli simulate-grid") {
    TempDir tmp("simgrid");
    const Outcome a = invoke({"simulate-grid", "--out", (tmp.path / "a").string(), "--seed", "5"});
    REQUIRE(a.code == 0);
    const io::CsvTable t = io::parse_csv(io::read_file(tmp.path / "a" / "dataset.csv"));
    CHECK(t.rows.size() == 225);
    std::set<double> powers, pressures;
    for (const auto& r : t.rows) {
        powers.insert(io::parse_number(r[1]));
        pressures.insert(io::parse_number(r[2]));
    }
    std::set<double> axis;
    for (int k = 0; k < 15; ++k) axis.insert(1.0 + 3.0 * k);
    CHECK(powers == axis);
    CHECK(pressures == axis);
    CHECK(fs::exists(tmp.path / "a" / "truth_source0.csv"));
    CHECK(fs::exists(tmp.path / "a" / "dataset.json"));
    const auto manifest = io::read_json(tmp.path / "a" / "run_manifest.json");
    CHECK(manifest.at("seed") == 5);
    CHECK(manifest.at("subcommand") == "simulate-grid");

    REQUIRE(invoke({"simulate-grid", "--out", (tmp.path / "b").string(), "--seed", "5"}).code == 0);
    CHECK(io::read_file(tmp.path / "a" / "dataset.csv") == io::read_file(tmp.path / "b" / "dataset.csv"));
    REQUIRE(invoke({"simulate-grid", "--out", (tmp.path / "c").string(), "--seed", "6"}).code == 0);
    CHECK(io::read_file(tmp.path / "a" / "dataset.csv") != io::read_file(tmp.path / "c" / "dataset.csv"));
}

TEST_CASE("cli configuration errors exit with code 2") {
    TempDir tmp("badcfg");
    const std::string bad = write_config(tmp.path, "{\n  \"schema_version\": 1,\n  \"seed\": ,\n}");
    const Outcome o = invoke({"simulate-grid", "--config", bad, "--out", (tmp.path / "o").string()});
    CHECK(o.code == 2);
    CHECK(o.err.find("3") != std::string::npos);

    const std::string unknown = write_config(tmp.path, R"({"schema_version": 1, "campaign": {"budgt": 3}})");
    const Outcome u = invoke({"train", "--config", unknown, "--out", (tmp.path / "o").string()});
    CHECK(u.code == 2);
    CHECK(u.err.find("campaign.budgt") != std::string::npos);

    CHECK(invoke({"no-such-command"}).code == 2);
    CHECK(invoke({"train", "--config", (tmp.path / "missing.json").string()}).code == 2);
}

TEST_CASE("cli train, replay and flux-fit") {
    TempDir tmp("train");
    const std::string cfg = write_config(tmp.path, R"({"schema_version": 1, "seed": 3,
        "campaign": {"case": 3, "acquisition": "NIPV", "budget": 30, "sensors": [2], "map_restarts": 4}})");
    const Outcome o = invoke({"train", "--config", cfg, "--out", (tmp.path / "live").string()});
    REQUIRE(o.code == 0);
    const io::CsvTable log = io::parse_csv(io::read_file(tmp.path / "live" / "logs" / "source0_s2.csv"));
    CHECK(log.rows.size() == 35);
    for (const auto& r : log.rows) CHECK(io::parse_number(r[2]) >= 4.0);
    CHECK(io::parse_csv(io::read_file(tmp.path / "live" / "rmse" / "source0_s2.csv")).rows.size() == 31);
    CHECK(fs::exists(tmp.path / "live" / "models" / "source0_s2.json"));

    REQUIRE(invoke({"simulate-grid", "--out", (tmp.path / "grid").string()}).code == 0);
    const std::string ds = (tmp.path / "grid" / "dataset.csv").string();
    const Outcome r = invoke({"train", "--config", cfg, "--replay", ds, "--out", (tmp.path / "replay").string()});
    REQUIRE(r.code == 0);
    // every logged reading is a row of the dataset
    const io::CsvTable data = io::parse_csv(io::read_file(ds));
    std::set<std::string> rows;
    for (const auto& d : data.rows) rows.insert(d[1] + "," + d[2] + "," + d[3] + "," + d[4] + "," + d[5]);
    const io::CsvTable rlog = io::parse_csv(io::read_file(tmp.path / "replay" / "logs" / "source0_s2.csv"));
    for (const auto& q : rlog.rows) CHECK(rows.count(q[1] + "," + q[2] + "," + q[3] + "," + q[4] + "," + q[5]) == 1);

    const Outcome f = invoke({"flux-fit", "--replay", ds, "--out", (tmp.path / "flux").string()});
    REQUIRE(f.code == 0);
    const io::CsvTable fits = io::parse_csv(io::read_file(tmp.path / "flux" / "flux_fits.csv"));
    CHECK(fits.rows.size() == 225);
}

TEST_CASE("cli benchmark is deterministic") {
    TempDir tmp("bench");
    const std::string cfg = write_config(tmp.path, R"({"schema_version": 1, "seed": 11,
        "benchmark": {"methods": [{"acquisition": "Random"}, {"acquisition": "NIPV"}], "cases": [3], "repeats": 3,
                      "budget": 8, "map_restarts": 2}})");
    REQUIRE(invoke({"benchmark", "--config", cfg, "--out", (tmp.path / "a").string()}).code == 0);
    REQUIRE(invoke({"benchmark", "--config", cfg, "--out", (tmp.path / "b").string()}).code == 0);
    std::size_t cells = 0;
    for (const auto& e : fs::directory_iterator(tmp.path / "a" / "cells")) {
        ++cells;
        CHECK(io::read_file(e.path()) == io::read_file(tmp.path / "b" / "cells" / e.path().filename()));
    }
    CHECK(cells == 6);
    for (const char* f : {"traces.csv", "aggregate.csv", "summary.csv"}) {
        CHECK(io::read_file(tmp.path / "a" / f) == io::read_file(tmp.path / "b" / f));
    }
    const io::CsvTable traces = io::parse_csv(io::read_file(tmp.path / "a" / "traces.csv"));
    CHECK(traces.rows.size() == 6 * 9);
    for (const auto& r : traces.rows) {
        if (r[traces.column("method")] == "Random") CHECK(io::parse_number(r[traces.column("ef")]) == 1.0);
    }
}

TEST_CASE("cli map and recipes") {
    TempDir tmp("recipes");
    const std::string models = (tmp.path / "train").string();
    const std::string cfg = write_config(tmp.path, R"({"schema_version": 1, "seed": 2,
        "simulator": {"sources": [{"id": 0, "pose_index": 0, "element": "Cu"},
                                  {"id": 1, "pose_index": 3, "element": "Sn", "emission_ng_per_s_per_W": 2500}]},
        "campaign": {"case": 3, "acquisition": "NIPV", "budget": 10, "map_restarts": 2},
        "map": {"models_dir": ")" + models + R"(", "powers_W": [20, 30], "pressure_mTorr": 10, "pitch_mm": 2},
        "recipes": {"models_dir": ")" + models + R"(", "target_source": 0}})");
    REQUIRE(invoke({"train", "--config", cfg, "--out", models}).code == 0);

    const Outcome m = invoke({"map", "--config", cfg, "--out", (tmp.path / "map").string()});
    REQUIRE(m.code == 0);
    const io::CsvTable map = io::parse_csv(io::read_file(tmp.path / "map" / "composition_map.csv"));
    CHECK(map.header[2] == "fraction_Cu");
    CHECK(map.header[3] == "fraction_Sn");
    CHECK(map.rows.size() > 400);

    const Outcome r = invoke({"recipes", "--config", cfg, "--out", (tmp.path / "rec").string()});
    REQUIRE(r.code == 0);
    const io::CsvTable rec = io::parse_csv(io::read_file(tmp.path / "rec" / "recipes.csv"));
    CHECK_FALSE(rec.rows.empty());
    for (const auto& row : rec.rows) {
        CHECK(std::abs(io::parse_number(row[rec.column("center_fraction")]) - 0.66) <= 0.01);
        CHECK(io::parse_number(row[rec.column("time_s")]) <= 900.0);
        CHECK(io::parse_number(row[rec.column("pressure_mTorr")]) >= 4.0);
    }

    const std::string wrong = write_config(tmp.path, R"({"schema_version": 1,
        "recipes": {"models_dir": ")" + (tmp.path / "nowhere").string() + R"("}})");
    CHECK(invoke({"recipes", "--config", wrong, "--out", (tmp.path / "x").string()}).code == 2);
}
