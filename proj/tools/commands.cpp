#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "sputterlab/benchmark.hpp"
#include "sputterlab/composition.hpp"
#include "sputterlab/errors.hpp"
#include "sputterlab/io/csv.hpp"
#include "sputterlab/io/json_io.hpp"
#include "sputterlab/seeds.hpp"

namespace sputter::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> replay;
    std::optional<int> mc_draws;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

// Collects outputs and writes the run manifest last.
class Run {
public:
    Run(std::string subcommand, const io::RunConfig& config, fs::path out)
        : subcommand_(std::move(subcommand)), config_(config), out_(std::move(out)), started_(utc_now()) {
        fs::create_directories(out_);
    }

    void write(const fs::path& rel, std::string_view content) {
        io::write_file(out_ / rel, content);
        outputs_.push_back(rel.generic_string());
    }
    void write_json(const fs::path& rel, const json& j) { write(rel, io::dump(j)); }
    void failure(const std::string& what) { failures_.push_back(what); }
    json& extra() { return extra_; }
    bool failed() const { return !failures_.empty(); }

    void finish() {
        json m{{"subcommand", subcommand_},
               {"tool_version", kToolVersion},
               {"config_digest", io::config_digest(config_)},
               {"seed", config_.seed},
               {"started_utc", started_},
               {"finished_utc", utc_now()},
               {"outputs", outputs_},
               {"failures", failures_}};
        if (!extra_.is_null()) m["details"] = extra_;
        io::write_file(out_ / "run_manifest.json", io::dump(m));
    }

private:
    std::string subcommand_;
    const io::RunConfig& config_;
    fs::path out_;
    std::string started_;
    std::vector<std::string> outputs_;
    std::vector<std::string> failures_;
    json extra_;
};

io::RunConfig load(const Options& o) {
    io::RunConfig c = o.config.empty() ? io::default_config() : io::load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    c.benchmark.config.seed = c.seed;
    if (o.mc_draws) {
        if (*o.mc_draws < 1) throw ConfigError("--mc-draws must be >= 1");
        c.campaign.mc_draws = *o.mc_draws;
        c.benchmark.config.mc_draws = *o.mc_draws;
    }
    if (o.replay) c.campaign.replay = *o.replay;
    return c;
}

std::string channel_name(int source_id, std::size_t sensor) {
    return "source" + std::to_string(source_id) + "_s" + std::to_string(sensor + 1);
}

std::vector<int> all_source_ids(const io::RunConfig& c) {
    std::vector<int> ids;
    for (const auto& s : c.sources) ids.push_back(s.id);
    return ids;
}

GroundTruthGrid grid_of(const Dataset& d, int source_id) {
    GroundTruthGrid g;
    for (const auto& r : d.rows)
        if (r.source_id == source_id) {
            g.points.push_back(r.setpoint);
            g.readings.push_back(r.reading);
        }
    return g;
}

int cmd_simulate_grid(const Options& o, std::ostream& out) {
    const io::RunConfig c = load(o);
    Run run("simulate-grid", c, o.out);
    Dataset all;
    for (const auto& s : c.sources) {
        std::mt19937_64 rng(derive_seed(c.seed, {static_cast<std::uint64_t>(s.id)}));
        const GeneratedGrid g = generate_grid(c.simulator(s.id), c.box, c.noise, rng, s.id);
        all.rows.insert(all.rows.end(), g.noisy.rows.begin(), g.noisy.rows.end());
        run.write("truth_source" + std::to_string(s.id) + ".csv", io::truth_csv(g.truth));
    }
    run.write("dataset.csv", io::dataset_csv(all));
    json sidecar = io::dataset_sidecar(c, all.rows.size(), c.sources.front().id);
    sidecar.erase("source");
    sidecar["sources"] = io::to_json(c).at("simulator").at("sources");
    run.write_json("dataset.json", sidecar);
    run.finish();
    out << "wrote " << all.rows.size() << " rows (seed " << c.seed << ") to " << (fs::path(o.out) / "dataset.csv").string()
        << "\n";
    return 0;
}

std::string query_log_csv(const CampaignResult& r) {
    io::CsvWriter w({"index", "power_W", "pressure_mTorr", "rate_s1", "rate_s2", "rate_s3", "score", "initial"});
    for (std::size_t i = 0; i < r.log.size(); ++i) {
        const auto& q = r.log[i];
        w.cell(i).cell(q.setpoint.power_w).cell(q.setpoint.pressure_mtorr);
        for (std::size_t k = 0; k < 3; ++k) w.cell(q.reading[k]);
        w.cell(q.score).cell(q.initial ? 1 : 0);
        w.end_row();
    }
    return w.str();
}

std::string rmse_csv(const CampaignResult& r) {
    io::CsvWriter w({"iteration", "rmse"});
    for (std::size_t j = 0; j < r.rmse.size(); ++j) {
        w.cell(j).cell(r.rmse[j]);
        w.end_row();
    }
    return w.str();
}

int cmd_train(const Options& o, std::ostream& out) {
    const io::RunConfig c = load(o);
    Run run("train", c, o.out);
    std::optional<Dataset> replay;
    if (c.campaign.replay) {
        try {
            replay = io::read_dataset(*c.campaign.replay);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("replay dataset: ") + e.what());
        }
    }
    const std::vector<int> ids = c.campaign.sources.empty() ? all_source_ids(c) : c.campaign.sources;
    json channels = json::array();
    for (int id : ids) {
        const SourceModel sim = c.simulator(id);
        GroundTruthGrid truth;
        if (replay) {
            truth = grid_of(*replay, id);
            if (truth.size() == 0) throw ConfigError("replay dataset has no rows for source " + std::to_string(id));
        } else {
            for (const auto& p : c.box.grid()) {
                truth.points.push_back(p);
                truth.readings.push_back(true_readings(sim, p));
            }
        }
        for (std::size_t sensor : c.campaign.sensors) {
            CampaignConfig cc;
            cc.init_case = c.campaign.init_case;
            cc.acquisition = c.campaign.acquisition;
            cc.model = c.campaign.model.value_or(default_model_for(cc.acquisition));
            cc.init_count = c.campaign.init_count;
            cc.budget = c.campaign.budget;
            cc.seed = derive_seed(c.seed, {static_cast<std::uint64_t>(id), sensor});
            cc.channel = sensor;
            cc.map_restarts = c.campaign.map_restarts;
            cc.mc_warmup = c.campaign.mc_warmup;
            cc.mc_draws = c.campaign.mc_draws;
            std::mt19937_64 live_rng(derive_seed(cc.seed, {30}));
            ExperimentOracle oracle;
            if (replay) {
                oracle = replay_oracle(*replay, id);
            } else {
                oracle = [&](const ProcessSetpoint& p) {
                    return measure({sim}, {p.power_w}, p.pressure_mtorr, c.noise, live_rng);
                };
            }
            const CampaignResult r = run_campaign(oracle, cc, c.box, &truth);
            const std::string name = channel_name(id, sensor);
            run.write("logs/" + name + ".csv", query_log_csv(r));
            run.write("rmse/" + name + ".csv", rmse_csv(r));
            run.write_json("campaigns/" + name + ".json", io::to_json(r));
            if (r.model.size() > 0) run.write_json("models/" + name + ".json", io::to_json(r.model));
            if (r.aborted) run.failure(name + ": " + r.error);
            out << name << ": " << r.log.size() << " queries";
            if (!r.rmse.empty()) out << ", final rmse " << io::format_number(r.rmse.back());
            if (r.aborted) out << ", aborted: " << r.error;
            out << "\n";
            json timing = json::array();
            for (const auto& q : r.log) timing.push_back(q.wall_time_s);
            channels.push_back({{"channel", name}, {"queries", r.log.size()}, {"wall_time_s", timing}});
        }
    }
    run.extra() = {{"channels", channels}};
    run.finish();
    return run.failed() ? 1 : 0;
}

std::string cell_file(const BenchmarkReport& r, const CellResult& cell) {
    return "cells/" + r.config.methods[cell.method].label() + "_case" + std::to_string(static_cast<int>(cell.init_case)) +
           "_rep" + std::to_string(cell.repeat) + ".csv";
}

int cmd_benchmark(const Options& o, std::ostream& out) {
    const io::RunConfig c = load(o);
    Run run("benchmark", c, o.out);
    const BenchmarkReport report = run_benchmark(c.benchmark.config, c.simulator(c.benchmark.source), c.box, c.noise);
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const auto& cell = report.cells[i];
        if (cell.failed) {
            run.failure(cell_file(report, cell) + ": " + cell.error);
            continue;
        }
        run.write(cell_file(report, cell), cell_trace_csv(report, i));
    }
    run.write("traces.csv", traces_csv(report));
    run.write("aggregate.csv", aggregate_csv(report));
    run.write("summary.csv", summary_csv(report));
    run.write_json("report.json", io::to_json(report));
    run.finish();
    out << std::left << std::setw(24) << "method" << std::setw(6) << "case" << std::setw(10) << "median_q"
        << std::setw(14) << "final_rmse" << "ef@10\n";
    for (const auto& s : report.summaries) {
        out << std::setw(24) << report.config.methods[s.method].label() << std::setw(6) << static_cast<int>(s.init_case)
            << std::setw(10) << io::format_number(s.median_queries_to_threshold) << std::setw(14)
            << io::format_number(s.mean_rmse.empty() ? std::nan("") : s.mean_rmse.back())
            << io::format_number(s.ef.size() > 10 ? s.ef[10] : std::nan("")) << "\n";
    }
    if (report.any_failure()) out << "some cells failed; see run_manifest.json\n";
    return report.any_failure() ? 1 : 0;
}

int cmd_flux_fit(const Options& o, std::ostream& out) {
    const io::RunConfig c = load(o);
    const std::optional<std::string> path = o.replay ? o.replay : c.flux_fit.dataset;
    if (!path) throw ConfigError("flux-fit needs a dataset (flux_fit.dataset or --replay)");
    Dataset d;
    try {
        d = io::read_dataset(*path);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
    }
    Run run("flux-fit", c, o.out);
    io::CsvWriter w({"source_id", "power_W", "pressure_mTorr", "a_ng_s", "n", "residual_rms", "at_boundary", "status"});
    std::size_t ok = 0, degenerate = 0;
    for (const auto& row : d.rows) {
        std::size_t pose = static_cast<std::size_t>(row.source_id);
        for (const auto& s : c.sources)
            if (s.id == row.source_id) pose = s.pose_index;
        if (pose >= c.geometry.sources.size()) {
            throw ConfigError("dataset source " + std::to_string(row.source_id) + " has no pose in the geometry");
        }
        w.cell(row.source_id).cell(row.setpoint.power_w).cell(row.setpoint.pressure_mtorr);
        try {
            const auto f = fit_flux(row.reading, c.geometry, pose);
            w.cell(f.fit.a).cell(f.fit.n).cell(f.residual_rms).cell(f.at_boundary ? 1 : 0).cell("ok");
            ++ok;
        } catch (const DegenerateFit&) {
            w.cell(std::nan("")).cell(std::nan("")).cell(std::nan("")).cell(0).cell("degenerate");
            ++degenerate;
        }
        w.end_row();
    }
    run.write("flux_fits.csv", w.str());
    run.finish();
    out << "fitted " << ok << " rows, " << degenerate << " degenerate\n";
    return 0;
}

std::vector<SourceChannelModels> load_models(const io::RunConfig& c, const std::string& dir, const std::vector<int>& ids,
                                             json& provenance) {
    std::vector<SourceChannelModels> models;
    for (int id : ids) {
        const auto& s = c.source(id);
        SourceChannelModels m;
        m.pose_index = s.pose_index;
        m.element = element_props(s.params.element, c.elements);
        for (std::size_t i = 0; i < 3; ++i) {
            const fs::path p = fs::path(dir) / "models" / (channel_name(id, i) + ".json");
            const fs::path alt = fs::path(dir) / (channel_name(id, i) + ".json");
            const fs::path use = fs::exists(p) ? p : alt;
            if (!fs::exists(use)) throw ConfigError("missing model file " + p.string());
            m.sensors[i] = io::model_from_json(io::read_json(use));
            provenance.push_back({{"channel", channel_name(id, i)}, {"digest", io::model_digest(m.sensors[i])}});
        }
        models.push_back(std::move(m));
    }
    return models;
}

std::vector<std::string> element_columns(const std::vector<SourceChannelModels>& models, const std::vector<int>& ids) {
    std::vector<std::string> cols;
    for (std::size_t k = 0; k < models.size(); ++k) {
        std::string name = "fraction_" + models[k].element.symbol;
        for (std::size_t j = 0; j < models.size(); ++j)
            if (j != k && models[j].element.symbol == models[k].element.symbol) {
                name += "_source" + std::to_string(ids[k]);
                break;
            }
        cols.push_back(name);
    }
    return cols;
}

int cmd_map(const Options& o, std::ostream& out) {
    const io::RunConfig c = load(o);
    const std::vector<int> ids = c.map.sources.empty() ? all_source_ids(c) : c.map.sources;
    std::vector<double> powers = c.map.powers_w;
    if (powers.empty()) powers.assign(ids.size(), 0.5 * (c.box.power_w.min + c.box.power_w.max));
    if (powers.size() != ids.size()) throw ConfigError("map.powers_W needs one power per source");
    json provenance = json::array();
    const auto models = load_models(c, c.map.models_dir, ids, provenance);
    const auto readings = predict_sensor_rates(models, powers, c.map.pressure_mtorr);
    std::vector<ActiveSource> active;
    json fits = json::array();
    for (std::size_t k = 0; k < models.size(); ++k) {
        FluxFit fit{0.0, 0.0};
        bool degenerate = false;
        try {
            fit = fit_flux(readings[k], c.geometry, models[k].pose_index).fit;
        } catch (const DegenerateFit&) {
            degenerate = true;
        }
        active.push_back({fit, c.geometry.sources[models[k].pose_index], models[k].element});
        fits.push_back({{"source", ids[k]},
                        {"element", models[k].element.symbol},
                        {"predicted_rates", {readings[k][0], readings[k][1], readings[k][2]}},
                        {"a_ng_s", fit.a},
                        {"n", fit.n},
                        {"degenerate", degenerate}});
    }
    const CompositionMap map = composition_map(active, c.geometry, c.map.pitch_mm);
    std::vector<std::string> header{"x_mm", "y_mm"};
    for (const auto& col : element_columns(models, ids)) header.push_back(col);
    header.push_back("thickness_rate_nm_s");
    header.push_back("defined");
    io::CsvWriter w(header);
    std::size_t defined = 0;
    for (const auto& p : map.points) {
        w.cell(p.x_mm).cell(p.y_mm);
        for (double f : p.fraction) w.cell(p.defined ? f : std::nan(""));
        w.cell(p.thickness_rate).cell(p.defined ? 1 : 0);
        w.end_row();
        defined += p.defined;
    }
    Run run("map", c, o.out);
    run.write("composition_map.csv", w.str());
    run.write_json("composition_map.json", {{"setpoint", {{"sources", ids}, {"powers_W", powers}, {"pressure_mTorr", c.map.pressure_mtorr}}},
                                            {"pitch_mm", c.map.pitch_mm},
                                            {"substrate_radius_mm", c.geometry.substrate.radius_mm},
                                            {"points", map.points.size()},
                                            {"defined_points", defined},
                                            {"flux_fits", fits},
                                            {"models", provenance}});
    run.finish();
    out << "map: " << map.points.size() << " points, " << defined << " with defined composition\n";
    return 0;
}

int cmd_recipes(const Options& o, std::ostream& out) {
    const io::RunConfig c = load(o);
    const auto& rc = c.recipes;
    const std::vector<int> ids = rc.sources.empty() ? all_source_ids(c) : rc.sources;
    json provenance = json::array();
    const auto models = load_models(c, rc.models_dir, ids, provenance);
    RecipeQuery q;
    q.target_fraction = rc.target_fraction;
    q.tolerance = rc.tolerance;
    q.thickness_nm = rc.thickness_nm;
    q.max_time_s = rc.max_time_s;
    q.target_source = 0;
    if (rc.target_source >= 0) {
        auto it = std::find(ids.begin(), ids.end(), rc.target_source);
        if (it == ids.end()) throw ConfigError("recipes.target_source is not among recipes.sources");
        q.target_source = static_cast<std::size_t>(it - ids.begin());
    }
    q.powers = rc.powers_w.empty() ? std::vector<AxisRange>(ids.size(), c.box.power_w) : rc.powers_w;
    if (rc.pressure_mtorr) {
        q.pressure = *rc.pressure_mtorr;
    } else {
        // the box pressure axis, starting at the first value above the floor
        q.pressure = c.box.pressure_mtorr;
        for (double p : c.box.pressure_mtorr.values())
            if (p >= c.box.pressure_floor_mtorr) {
                q.pressure.min = p;
                break;
            }
    }
    const RecipeSearch res = find_recipes(models, q, c.geometry);
    std::vector<std::string> header;
    for (int id : ids) header.push_back("power_W_source" + std::to_string(id));
    for (const char* h : {"pressure_mTorr", "center_fraction", "thickness_rate_nm_s", "time_s"}) header.push_back(h);
    auto table = [&](const std::vector<Recipe>& rs) {
        io::CsvWriter w(header);
        for (const auto& r : rs) {
            for (double p : r.powers_w) w.cell(p);
            w.cell(r.pressure_mtorr).cell(r.center_fraction).cell(r.thickness_rate).cell(r.time_s);
            w.end_row();
        }
        return w.str();
    };
    Run run("recipes", c, o.out);
    run.write("recipes.csv", table(res.recipes));
    run.write("nearest_misses.csv", table(res.nearest_misses));
    run.write_json("recipes.json", {{"grid_size", res.grid_size},
                                    {"degenerate", res.degenerate},
                                    {"accepted", res.recipes.size()},
                                    {"target_source", ids[q.target_source]},
                                    {"target_fraction", q.target_fraction},
                                    {"tolerance", q.tolerance},
                                    {"thickness_nm", q.thickness_nm},
                                    {"max_time_s", q.max_time_s},
                                    {"models", provenance}});
    run.finish();
    out << "recipes: " << res.recipes.size() << " of " << res.grid_size << " grid recipes accepted (" << res.degenerate
        << " degenerate)\n";
    if (res.recipes.empty() && !res.nearest_misses.empty()) {
        const auto& m = res.nearest_misses.front();
        out << "nearest miss: fraction " << io::format_number(m.center_fraction) << ", time "
            << io::format_number(m.time_s) << " s\n";
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Active-learning and flux-model toolkit for a simulated sputter chamber", "sputterlab"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    std::string replay;
    int mc_draws = 0;
    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const Options&, std::ostream&);
    };
    const Sub subs[] = {
        {"simulate-grid", "Generate the full-factorial grid dataset from the simulator", cmd_simulate_grid},
        {"train", "Run one active-learning campaign per (source, sensor) channel", cmd_train},
        {"benchmark", "Compare acquisition functions over cases and repeats", cmd_benchmark},
        {"flux-fit", "Fit (a, n) to every row of a dataset", cmd_flux_fit},
        {"map", "Composition and thickness-rate map for one setpoint", cmd_map},
        {"recipes", "Search co-sputtering recipes for a target composition", cmd_recipes},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> commands;
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", o.config, "JSON configuration file");
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--replay", replay, "Dataset CSV answering queries offline");
        sub->add_option("--mc-draws", mc_draws, "Hyperparameter draws for fully Bayesian models");
        commands.emplace_back(sub, &s);
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    for (auto& [sub, s] : commands) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) o.seed = seed;
        if (sub->count("--replay")) o.replay = replay;
        if (sub->count("--mc-draws")) o.mc_draws = mc_draws;
        try {
            return s->fn(o, out);
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 2;
}

}  // namespace sputter::cli
