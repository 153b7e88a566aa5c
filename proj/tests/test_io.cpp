#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sputterlab/campaign.hpp"
#include "sputterlab/chamber.hpp"
#include "sputterlab/io/csv.hpp"
#include "sputterlab/io/json_io.hpp"

using namespace sputter;
using namespace sputter::io;

TEST_CASE("number formatting round-trips") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 500; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(i % 20) - 10);
        CHECK(parse_number(format_number(v)) == v);
    }
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(1.5) == "1.5");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()).empty());
    CHECK(std::isnan(parse_number("")));
    CHECK_THROWS(parse_number("1.5x"));
}

TEST_CASE("csv writer and parser") {
    CsvWriter w({"a", "b", "c"});
    w.cell(1).cell(2.25).cell("x y").end_row();
    w.cell(-3).cell(1e-300).cell("plain").end_row();
    const CsvTable t = parse_csv(w.str());
    REQUIRE(t.rows.size() == 2);
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    CHECK(t.rows[0][2] == "x y");
    CsvWriter bad({"a"});
    CHECK_THROWS(bad.cell("x,y"));
    CHECK(parse_number(t.rows[1][1]) == 1e-300);
    CHECK(t.column("c") == 2);
    CHECK_THROWS(t.column("zz"));
    CsvWriter short_row({"a", "b"});
    short_row.cell(1);
    CHECK_THROWS(short_row.end_row());
}

TEST_CASE("dataset and truth files") {
    const SourceModel src = make_source(default_geometry(), 0);
    std::mt19937_64 rng(2);
    const GeneratedGrid g = generate_grid(src, SearchBox{}, NoiseModel{}, rng, 3);
    const std::string text = dataset_csv(g.noisy);
    CHECK(text.rfind("source_id,power_W,pressure_mTorr,rate_s1,rate_s2,rate_s3\n", 0) == 0);
    const Dataset back = parse_dataset_csv(text);
    REQUIRE(back.rows.size() == 225);
    for (std::size_t i = 0; i < 225; ++i) {
        CHECK(back.rows[i].source_id == 3);
        CHECK(back.rows[i].setpoint == g.noisy.rows[i].setpoint);
        CHECK(back.rows[i].reading.rates == g.noisy.rows[i].reading.rates);
    }
    CHECK(dataset_csv(back) == text);
    const GroundTruthGrid t = parse_truth_csv(truth_csv(g.truth));
    CHECK(t.readings.back().rates == g.truth.readings.back().rates);

    CHECK_THROWS(parse_dataset_csv("source_id,power_W\n0,1\n"));
    CHECK_THROWS(parse_dataset_csv("source_id,power_W,pressure_mTorr,rate_s1,rate_s2,rate_s3\n0,1,4,abc,1,1\n"));
}

TEST_CASE("model json round trip") {
    const SourceModel src = make_source(default_geometry(), 0);
    std::vector<ProcessSetpoint> pts;
    std::vector<double> y;
    for (double w : {1.0, 13.0, 25.0, 43.0})
        for (double p : {4.0, 19.0, 43.0}) {
            pts.push_back({w, p});
            y.push_back(true_rate(src, {w, p}, 1));
        }
    CampaignConfig cfg;
    cfg.mc_draws = 8;
    cfg.mc_warmup = 4;
    for (ModelKind kind : {ModelKind::PointEstimate, ModelKind::FullyBayesian}) {
        const GpModel m = train_model(pts, y, SearchBox{}, kind, 17, cfg);
        const json j = parse_json(dump(to_json(m)));
        const GpModel back = model_from_json(j);
        CHECK(back.kind() == kind);
        CHECK(back.size() == m.size());
        CHECK(model_digest(back) == model_digest(m));
        const Eigen::MatrixXd q = to_matrix({{7.0, 7.0}, {31.0, 28.0}});
        const Eigen::VectorXd a = m.predict_mean(q);
        const Eigen::VectorXd b = back.predict_mean(q);
        CHECK(a(0) == b(0));
        CHECK(a(1) == b(1));

        json tampered = j;
        tampered["training"]["y"][0] = 12345.0;
        CHECK_THROWS_AS(model_from_json(tampered), ConfigError);
    }
}

TEST_CASE("config parsing") {
    SUBCASE("defaults") {
        const RunConfig c = config_from_json(parse_json(R"({"schema_version": 1})"));
        CHECK(c.seed == 0);
        CHECK(c.box.grid().size() == 225);
        REQUIRE(c.sources.size() == 1);
        CHECK(c.sources[0].params.element == "Zr");
        CHECK(config_digest(c) == config_digest(default_config()));
    }
    SUBCASE("round trip through json") {
        const RunConfig c = config_from_json(parse_json(R"({
            "schema_version": 1, "seed": 99,
            "simulator": {"sources": [{"id": 0, "pose_index": 0, "element": "Cu"},
                                      {"id": 1, "pose_index": 3, "element": "Sn", "emission_ng_per_s_per_W": 2000}]},
            "campaign": {"acquisition": "BALM", "budget": 12, "sensors": [1, 3]}
        })"));
        CHECK(c.seed == 99);
        CHECK(c.sources[1].params.emission_per_watt == 2000.0);
        CHECK(c.campaign.acquisition == AcquisitionKind::BALM);
        CHECK(c.campaign.sensors == std::vector<std::size_t>{0, 2});
        const RunConfig again = config_from_json(to_json(c));
        CHECK(config_digest(again) == config_digest(c));
    }
    SUBCASE("errors name the field") {
        auto message = [](const std::string& text) {
            try {
                config_from_json(parse_json(text));
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string();
        };
        CHECK(message(R"({})").find("schema_version") != std::string::npos);
        CHECK(message(R"({"schema_version": 2})").find("schema_version") != std::string::npos);
        CHECK(message(R"({"schema_version": 1, "campaign": {"budget": "x"}})").find("campaign.budget") != std::string::npos);
        CHECK(message(R"({"schema_version": 1, "campaign": {"bugdet": 3}})").find("campaign.bugdet") != std::string::npos);
        CHECK(message(R"({"schema_version": 1, "simulator": {"sources": [{"id": 0, "element": "Qq"}]}})")
                  .find("simulator.sources[0].element") != std::string::npos);
        CHECK(message(R"({"schema_version": 1, "campaign": {"acquisition": "UCB"}})").find("campaign.acquisition") !=
              std::string::npos);
    }
    SUBCASE("malformed json reports line and column") {
        try {
            parse_json("{\n  \"seed\": 1,\n  oops\n}");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line == 3);
            CHECK(e.column >= 3);
        }
    }
}
