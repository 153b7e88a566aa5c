#include "sputterlab/io/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sputterlab/errors.hpp"
#include "sputterlab/io/csv.hpp"
#include "sputterlab/io/digest.hpp"

namespace sputter::io {

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line/column
        std::size_t line = 1, column = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::ostringstream msg;
        msg << origin << ":" << line << ":" << column << ": malformed JSON: " << e.what();
        throw ParseError(msg.str(), line, column);
    }
}

json read_json(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return parse_json(text, path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    throw ConfigError("config field '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) field_error(path.empty() ? "<root>" : path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) field_error(join(path, it.key()), "unknown field");
}

double num(const json& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number()) field_error(join(path, key), "expected a number");
    return v.get<double>();
}

long long integer(const json& j, const std::string& path, const char* key, long long def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) field_error(join(path, key), "expected an integer");
    return v.get<long long>();
}

std::string str(const json& j, const std::string& path, const char* key, const std::string& def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_string()) field_error(join(path, key), "expected a string");
    return v.get<std::string>();
}

template <typename F>
auto wrap(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError&) {
        throw;
    } catch (const ConfigError& e) {
        const std::string w = e.what();
        if (w.rfind("config field", 0) == 0) throw;
        field_error(path, w);
    } catch (const std::invalid_argument& e) {
        field_error(path, e.what());
    }
}

json range_json(const AxisRange& r) { return {{"min", r.min}, {"max", r.max}, {"step", r.step}}; }

AxisRange range_from(const json& j, const std::string& path, const AxisRange& def) {
    check_keys(j, path, {"min", "max", "step"});
    AxisRange r{num(j, path, "min", def.min), num(j, path, "max", def.max), num(j, path, "step", def.step)};
    if (!(r.step > 0.0) || !(r.max >= r.min)) field_error(path, "needs step > 0 and max >= min");
    return r;
}

std::vector<int> int_list(const json& j, const std::string& path) {
    if (!j.is_array()) field_error(path, "expected an array of integers");
    std::vector<int> out;
    for (const auto& v : j) {
        if (!v.is_number_integer()) field_error(path, "expected an array of integers");
        out.push_back(v.get<int>());
    }
    return out;
}

std::vector<double> num_list(const json& j, const std::string& path) {
    if (!j.is_array()) field_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) field_error(path, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Eigen::VectorXd vec_from(const json& j, const std::string& path) {
    const auto v = num_list(j, path);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j, const std::string& field) {
    const auto v = num_list(j, field);
    if (v.size() != 3) field_error(field, "expected three numbers");
    return {v[0], v[1], v[2]};
}

json to_json(const ChamberGeometry& g) {
    json sources = json::array(), sensors = json::array();
    for (const auto& s : g.sources) sources.push_back({{"position_mm", to_json(s.position_mm)}, {"axis", to_json(s.axis)}});
    for (const auto& s : g.qcm_sensors) sensors.push_back({{"position_mm", to_json(s.position_mm)}, {"normal", to_json(s.normal)}});
    return {{"sources", sources},
            {"qcm_sensors", sensors},
            {"substrate",
             {{"center_mm", to_json(g.substrate.center_mm)},
              {"normal", to_json(g.substrate.normal)},
              {"radius_mm", g.substrate.radius_mm}}},
            {"target_substrate_distance_mm", g.target_substrate_distance_mm}};
}

namespace {

ChamberGeometry geometry_at(const json& j, const std::string& path) {
    if (j.contains("default_layout")) {
        check_keys(j, path, {"default_layout"});
        const std::string p = join(path, "default_layout");
        const json& d = j.at("default_layout");
        check_keys(d, p,
                   {"source_count", "ring_radius_mm", "target_substrate_distance_mm", "sensor_radius_mm",
                    "sensor_standoff_mm", "substrate_radius_mm"});
        DefaultLayout l;
        l.source_count = static_cast<int>(integer(d, p, "source_count", l.source_count));
        l.ring_radius_mm = num(d, p, "ring_radius_mm", l.ring_radius_mm);
        l.target_substrate_distance_mm = num(d, p, "target_substrate_distance_mm", l.target_substrate_distance_mm);
        l.sensor_radius_mm = num(d, p, "sensor_radius_mm", l.sensor_radius_mm);
        l.sensor_standoff_mm = num(d, p, "sensor_standoff_mm", l.sensor_standoff_mm);
        l.substrate_radius_mm = num(d, p, "substrate_radius_mm", l.substrate_radius_mm);
        return wrap(p, [&] { return default_geometry(l); });
    }
    check_keys(j, path, {"sources", "qcm_sensors", "substrate", "target_substrate_distance_mm"});
    ChamberGeometry g;
    const std::string ps = join(path, "sources");
    if (!j.contains("sources") || !j.at("sources").is_array()) field_error(ps, "expected an array");
    for (std::size_t i = 0; i < j.at("sources").size(); ++i) {
        const std::string p = ps + "[" + std::to_string(i) + "]";
        const json& s = j.at("sources")[i];
        check_keys(s, p, {"position_mm", "axis"});
        if (!s.contains("position_mm") || !s.contains("axis")) field_error(p, "needs position_mm and axis");
        g.sources.push_back({vec3_from_json(s.at("position_mm"), join(p, "position_mm")),
                             vec3_from_json(s.at("axis"), join(p, "axis"))});
    }
    const std::string pq = join(path, "qcm_sensors");
    if (!j.contains("qcm_sensors") || !j.at("qcm_sensors").is_array() || j.at("qcm_sensors").size() != 3) {
        field_error(pq, "expected an array of three sensors");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string p = pq + "[" + std::to_string(i) + "]";
        const json& s = j.at("qcm_sensors")[i];
        check_keys(s, p, {"position_mm", "normal"});
        if (!s.contains("position_mm")) field_error(p, "needs position_mm");
        g.qcm_sensors[i].position_mm = vec3_from_json(s.at("position_mm"), join(p, "position_mm"));
        if (s.contains("normal")) g.qcm_sensors[i].normal = vec3_from_json(s.at("normal"), join(p, "normal"));
    }
    if (j.contains("substrate")) {
        const std::string p = join(path, "substrate");
        const json& s = j.at("substrate");
        check_keys(s, p, {"center_mm", "normal", "radius_mm"});
        if (s.contains("center_mm")) g.substrate.center_mm = vec3_from_json(s.at("center_mm"), join(p, "center_mm"));
        if (s.contains("normal")) g.substrate.normal = vec3_from_json(s.at("normal"), join(p, "normal"));
        g.substrate.radius_mm = num(s, p, "radius_mm", g.substrate.radius_mm);
    }
    g.target_substrate_distance_mm = num(j, path, "target_substrate_distance_mm", g.target_substrate_distance_mm);
    wrap(path, [&] {
        g.validate();
        return 0;
    });
    return g;
}

}  // namespace

ChamberGeometry geometry_from_json(const json& j) { return geometry_at(j, "geometry"); }

json to_json(const GpHyperparams& hp) {
    return {{"lengthscales", vec_json(hp.lengthscales)},
            {"signal_variance", hp.signal_variance},
            {"noise_variance", hp.noise_variance},
            {"constant_mean", hp.constant_mean}};
}

GpHyperparams hyperparams_from_json(const json& j) {
    GpHyperparams hp;
    hp.lengthscales = vec_from(j.at("lengthscales"), "lengthscales");
    hp.signal_variance = j.at("signal_variance").get<double>();
    hp.noise_variance = j.at("noise_variance").get<double>();
    hp.constant_mean = j.at("constant_mean").get<double>();
    hp.validate();
    return hp;
}

std::string model_digest(const GpModel& model) {
    Fnv1a h;
    h.add(to_string(model.kind()));
    const auto& t = model.training();
    const auto& n = t.normalization();
    for (Eigen::Index i = 0; i < t.raw_inputs().size(); ++i) h.add(t.raw_inputs()(i));
    for (Eigen::Index i = 0; i < t.raw_targets().size(); ++i) h.add(t.raw_targets()(i));
    for (Eigen::Index i = 0; i < n.input_lo.size(); ++i) {
        h.add(n.input_lo(i));
        h.add(n.input_hi(i));
    }
    h.add(n.output_mean);
    h.add(n.output_std);
    for (const auto& hp : model.hyperparams()) {
        for (Eigen::Index i = 0; i < hp.lengthscales.size(); ++i) h.add(hp.lengthscales(i));
        h.add(hp.signal_variance);
        h.add(hp.noise_variance);
        h.add(hp.constant_mean);
    }
    return h.hex();
}

json to_json(const GpModel& model) {
    const auto& t = model.training();
    const auto& n = t.normalization();
    json inputs = json::array();
    for (Eigen::Index i = 0; i < t.raw_inputs().rows(); ++i) inputs.push_back(vec_json(t.raw_inputs().row(i).transpose()));
    json hps = json::array();
    for (const auto& hp : model.hyperparams()) hps.push_back(to_json(hp));
    json j{{"schema_version", kSchemaVersion},
           {"kind", to_string(model.kind())},
           {"inputs", {"power_W", "pressure_mTorr"}},
           {"training",
            {{"x", inputs}, {"y", vec_json(t.raw_targets())}}},
           {"normalization",
            {{"input_lo", vec_json(n.input_lo)},
             {"input_hi", vec_json(n.input_hi)},
             {"output_mean", n.output_mean},
             {"output_std", n.output_std},
             {"degenerate_output", n.degenerate_output}}},
           {"hyperparameters", hps},
           {"digest", model_digest(model)}};
    if (model.kind() == ModelKind::FullyBayesian) {
        j["sampler"] = {{"warmup", model.warmup},
                        {"draws", model.size()},
                        {"seed", model.seed},
                        {"acceptance_rate", model.acceptance_rate},
                        {"chain_end", {{"tau", model.chain_end.tau}, {"hyperparameters", to_json(model.chain_end.hp)}}},
                        {"warnings", model.warnings}};
    }
    return j;
}

GpModel model_from_json(const json& j) {
    try {
        const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
        const json& x = j.at("training").at("x");
        Eigen::MatrixXd raw_x(static_cast<Eigen::Index>(x.size()), 2);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto row = vec_from(x[i], "training.x");
            if (row.size() != 2) throw InvalidArgument("training inputs must have two columns");
            raw_x.row(static_cast<Eigen::Index>(i)) = row.transpose();
        }
        const Eigen::VectorXd raw_y = vec_from(j.at("training").at("y"), "training.y");
        const json& nj = j.at("normalization");
        gp::Normalization<double> norm;
        norm.input_lo = vec_from(nj.at("input_lo"), "normalization.input_lo");
        norm.input_hi = vec_from(nj.at("input_hi"), "normalization.input_hi");
        norm.output_mean = nj.at("output_mean").get<double>();
        norm.output_std = nj.at("output_std").get<double>();
        norm.degenerate_output = nj.at("degenerate_output").get<bool>();
        std::vector<GpHyperparams> hps;
        for (const auto& h : j.at("hyperparameters")) hps.push_back(hyperparams_from_json(h));
        GpModel model = GpModel::from_hyperparams(TrainingSet(raw_x, raw_y, norm), kind, hps);
        if (j.contains("sampler")) {
            const json& s = j.at("sampler");
            model.warmup = s.at("warmup").get<int>();
            model.seed = s.at("seed").get<std::uint64_t>();
            model.acceptance_rate = s.at("acceptance_rate").get<double>();
            model.chain_end.tau = s.at("chain_end").at("tau").get<double>();
            model.chain_end.hp = hyperparams_from_json(s.at("chain_end").at("hyperparameters"));
            model.warnings = s.at("warnings").get<std::vector<std::string>>();
        }
        if (j.contains("digest") && j.at("digest").get<std::string>() != model_digest(model)) {
            throw ConfigError("model digest mismatch; the file was edited or truncated");
        }
        return model;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model file: ") + e.what());
    }
}

json to_json(const CampaignConfig& c) {
    json j{{"case", static_cast<int>(c.init_case)},
           {"acquisition", to_string(c.acquisition)},
           {"model", to_string(c.model)},
           {"init_count", c.init_count},
           {"budget", c.budget},
           {"seed", c.seed},
           {"sensor", c.channel + 1},
           {"map_restarts", c.map_restarts}};
    if (c.init_seed) j["init_seed"] = *c.init_seed;
    if (c.model == ModelKind::FullyBayesian) {
        j["mc_warmup"] = c.mc_warmup;
        j["mc_draws"] = c.mc_draws;
    }
    return j;
}

json to_json(const CampaignResult& r, bool include_timing) {
    json log = json::array();
    for (const auto& q : r.log) {
        json e{{"power_W", q.setpoint.power_w},
               {"pressure_mTorr", q.setpoint.pressure_mtorr},
               {"rates", {q.reading[0], q.reading[1], q.reading[2]}},
               {"score", q.score},
               {"initial", q.initial}};
        if (include_timing) e["wall_time_s"] = q.wall_time_s;
        log.push_back(e);
    }
    json j{{"config", to_json(r.config)}, {"log", log}, {"rmse", r.rmse}, {"aborted", r.aborted}};
    if (r.aborted) j["error"] = r.error;
    if (r.model.size() > 0) j["model_digest"] = model_digest(r.model);
    return j;
}

json to_json(const BenchmarkReport& r) {
    json methods = json::array();
    for (const auto& m : r.config.methods)
        methods.push_back({{"label", m.label()}, {"acquisition", to_string(m.acquisition)}, {"model", to_string(m.model)}});
    json cases = json::array();
    for (auto c : r.config.cases) cases.push_back(static_cast<int>(c));
    json cells = json::array();
    for (const auto& c : r.cells) {
        json e{{"method", r.config.methods[c.method].label()},
               {"case", static_cast<int>(c.init_case)},
               {"repeat", c.repeat},
               {"failed", c.failed},
               {"queries_to_threshold", c.queries_to_threshold},
               {"seed", c.campaign.config.seed}};
        if (c.failed) e["error"] = c.error;
        cells.push_back(e);
    }
    json summaries = json::array();
    for (const auto& s : r.summaries) {
        summaries.push_back({{"method", r.config.methods[s.method].label()},
                             {"case", static_cast<int>(s.init_case)},
                             {"completed", s.completed},
                             {"failures", s.failures},
                             {"queries_to_threshold", s.queries_to_threshold},
                             {"median_queries_to_threshold", s.median_queries_to_threshold},
                             {"mean_rmse", s.mean_rmse},
                             {"std_rmse", s.std_rmse},
                             {"ef", s.ef}});
    }
    return {{"schema_version", kSchemaVersion},
            {"seed", r.config.seed},
            {"repeats", r.config.repeats},
            {"budget", r.config.budget},
            {"init_count", r.config.init_count},
            {"sensor", r.config.channel + 1},
            {"oracle", to_string(r.config.oracle)},
            {"truth", to_string(r.config.truth)},
            {"threshold_factor", r.config.threshold_factor},
            {"mc_draws", r.config.mc_draws},
            {"methods", methods},
            {"cases", cases},
            {"cells", cells},
            {"summaries", summaries}};
}

const SimulatorSource& RunConfig::source(int id) const {
    for (const auto& s : sources)
        if (s.id == id) return s;
    throw ConfigError("no simulator source with id " + std::to_string(id));
}

SourceModel RunConfig::simulator(int id) const {
    const auto& s = source(id);
    return make_source(geometry, s.pose_index, s.params);
}

RunConfig default_config() {
    RunConfig c;
    c.sources.push_back({0, 0, SourceParams{}});
    c.benchmark.config.methods = BenchmarkConfig::default_methods();
    return c;
}

namespace {

SimulatorSource source_from(const json& j, const std::string& p) {
    check_keys(j, p,
               {"id", "pose_index", "element", "emission_ng_per_s_per_W", "beta_per_mTorr", "gamma", "p_ext_mTorr",
                "width_mTorr", "p_ext_per_W", "n0", "n_per_mTorr", "n_per_W"});
    SimulatorSource s;
    if (!j.contains("id")) field_error(p, "needs an id");
    s.id = static_cast<int>(integer(j, p, "id", 0));
    s.pose_index = static_cast<std::size_t>(integer(j, p, "pose_index", s.id));
    SourceParams& q = s.params;
    q.element = str(j, p, "element", q.element);
    q.emission_per_watt = num(j, p, "emission_ng_per_s_per_W", q.emission_per_watt);
    q.law.beta_per_mtorr = num(j, p, "beta_per_mTorr", q.law.beta_per_mtorr);
    q.law.gamma = num(j, p, "gamma", q.law.gamma);
    q.law.p_ext_mtorr = num(j, p, "p_ext_mTorr", q.law.p_ext_mtorr);
    q.law.width_mtorr = num(j, p, "width_mTorr", q.law.width_mtorr);
    q.law.p_ext_per_watt = num(j, p, "p_ext_per_W", q.law.p_ext_per_watt);
    q.order.n0 = num(j, p, "n0", q.order.n0);
    q.order.per_mtorr = num(j, p, "n_per_mTorr", q.order.per_mtorr);
    q.order.per_watt = num(j, p, "n_per_W", q.order.per_watt);
    return s;
}

json source_json(const SimulatorSource& s) {
    const SourceParams& q = s.params;
    return {{"id", s.id},
            {"pose_index", s.pose_index},
            {"element", q.element},
            {"emission_ng_per_s_per_W", q.emission_per_watt},
            {"beta_per_mTorr", q.law.beta_per_mtorr},
            {"gamma", q.law.gamma},
            {"p_ext_mTorr", q.law.p_ext_mtorr},
            {"width_mTorr", q.law.width_mtorr},
            {"p_ext_per_W", q.law.p_ext_per_watt},
            {"n0", q.order.n0},
            {"n_per_mTorr", q.order.per_mtorr},
            {"n_per_W", q.order.per_watt}};
}

ModelKind model_at(const json& j, const std::string& path) {
    return wrap(path, [&] { return parse_model_kind(j.get<std::string>()); });
}

}  // namespace

RunConfig config_from_json(const json& j) {
    RunConfig c = default_config();
    check_keys(j, "",
               {"schema_version", "seed", "geometry", "quartz", "search_box", "simulator", "campaign", "benchmark",
                "flux_fit", "map", "recipes", "elements"});
    if (!j.contains("schema_version")) field_error("schema_version", "required");
    c.schema_version = static_cast<int>(integer(j, "", "schema_version", 0));
    if (c.schema_version != kSchemaVersion) {
        field_error("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                          std::to_string(kSchemaVersion) + ")");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) field_error("seed", "expected a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("geometry")) c.geometry = geometry_at(j.at("geometry"), "geometry");
    if (j.contains("quartz")) {
        const json& q = j.at("quartz");
        check_keys(q, "quartz", {"rho_g_cm3", "mu_g_cm_s2", "f0_Hz"});
        c.crystal.rho_g_cm3 = num(q, "quartz", "rho_g_cm3", c.crystal.rho_g_cm3);
        c.crystal.mu_g_cm_s2 = num(q, "quartz", "mu_g_cm_s2", c.crystal.mu_g_cm_s2);
        c.crystal.f0_hz = num(q, "quartz", "f0_Hz", c.crystal.f0_hz);
    }
    if (j.contains("search_box")) {
        const json& b = j.at("search_box");
        check_keys(b, "search_box", {"power_W", "pressure_mTorr", "pressure_floor_mTorr"});
        if (b.contains("power_W")) c.box.power_w = range_from(b.at("power_W"), "search_box.power_W", c.box.power_w);
        if (b.contains("pressure_mTorr")) {
            c.box.pressure_mtorr = range_from(b.at("pressure_mTorr"), "search_box.pressure_mTorr", c.box.pressure_mtorr);
        }
        c.box.pressure_floor_mtorr = num(b, "search_box", "pressure_floor_mTorr", c.box.pressure_floor_mtorr);
        wrap("search_box", [&] {
            c.box.validate();
            return 0;
        });
    }
    if (j.contains("simulator")) {
        const json& s = j.at("simulator");
        check_keys(s, "simulator", {"sources", "noise"});
        if (s.contains("sources")) {
            if (!s.at("sources").is_array() || s.at("sources").empty()) field_error("simulator.sources", "expected a non-empty array");
            c.sources.clear();
            for (std::size_t i = 0; i < s.at("sources").size(); ++i) {
                const std::string p = "simulator.sources[" + std::to_string(i) + "]";
                SimulatorSource src = source_from(s.at("sources")[i], p);
                for (const auto& o : c.sources)
                    if (o.id == src.id) field_error(p + ".id", "duplicate source id");
                c.sources.push_back(src);
            }
        }
        if (s.contains("noise")) {
            const json& n = s.at("noise");
            check_keys(n, "simulator.noise", {"relative", "floor_ng_cm2_s"});
            c.noise.relative = num(n, "simulator.noise", "relative", c.noise.relative);
            c.noise.floor = num(n, "simulator.noise", "floor_ng_cm2_s", c.noise.floor);
            if (c.noise.relative < 0.0 || c.noise.floor < 0.0) field_error("simulator.noise", "levels must be >= 0");
        }
    }
    for (std::size_t i = 0; i < c.sources.size(); ++i) {
        const std::string p = "simulator.sources[" + std::to_string(i) + "]";
        wrap(p, [&] { return c.simulator(c.sources[i].id); });
    }
    if (j.contains("elements")) {
        const json& e = j.at("elements");
        if (!e.is_object()) field_error("elements", "expected an object");
        for (auto it = e.begin(); it != e.end(); ++it) {
            const std::string p = "elements." + it.key();
            check_keys(it.value(), p, {"atomic_mass", "density_g_cm3"});
            ElementProps el{it.key(), num(it.value(), p, "atomic_mass", 0.0), num(it.value(), p, "density_g_cm3", 0.0)};
            wrap(p, [&] {
                el.validate();
                return 0;
            });
            c.elements[it.key()] = el;
        }
    }
    for (std::size_t i = 0; i < c.sources.size(); ++i) {
        wrap("simulator.sources[" + std::to_string(i) + "].element",
             [&] { return element_props(c.sources[i].params.element, c.elements); });
    }
    if (j.contains("campaign")) {
        const json& s = j.at("campaign");
        const std::string p = "campaign";
        check_keys(s, p,
                   {"case", "acquisition", "model", "init_count", "budget", "map_restarts", "mc_warmup", "mc_draws",
                    "sources", "sensors", "replay"});
        auto& k = c.campaign;
        k.init_case = wrap(p + ".case", [&] { return parse_case(static_cast<int>(integer(s, p, "case", 3))); });
        k.acquisition = wrap(p + ".acquisition", [&] { return parse_acquisition(str(s, p, "acquisition", "NIPV")); });
        if (s.contains("model")) k.model = model_at(s.at("model"), p + ".model");
        k.init_count = static_cast<int>(integer(s, p, "init_count", k.init_count));
        k.budget = static_cast<int>(integer(s, p, "budget", k.budget));
        k.map_restarts = static_cast<int>(integer(s, p, "map_restarts", k.map_restarts));
        k.mc_warmup = static_cast<int>(integer(s, p, "mc_warmup", k.mc_warmup));
        k.mc_draws = static_cast<int>(integer(s, p, "mc_draws", k.mc_draws));
        if (s.contains("sources")) k.sources = int_list(s.at("sources"), p + ".sources");
        for (int id : k.sources) wrap(p + ".sources", [&] { return c.source(id); });
        if (s.contains("sensors")) {
            k.sensors.clear();
            for (int v : int_list(s.at("sensors"), p + ".sensors")) {
                if (v < 1 || v > 3) field_error(p + ".sensors", "sensor numbers are 1, 2 or 3");
                k.sensors.push_back(static_cast<std::size_t>(v - 1));
            }
        }
        if (s.contains("replay")) k.replay = str(s, p, "replay", "");
        CampaignConfig probe;
        probe.init_case = k.init_case;
        probe.acquisition = k.acquisition;
        probe.model = k.model.value_or(default_model_for(k.acquisition));
        probe.init_count = k.init_count;
        probe.budget = k.budget;
        probe.map_restarts = k.map_restarts;
        probe.mc_warmup = k.mc_warmup;
        probe.mc_draws = k.mc_draws;
        wrap(p, [&] {
            probe.validate();
            return 0;
        });
    }
    if (j.contains("benchmark")) {
        const json& s = j.at("benchmark");
        const std::string p = "benchmark";
        check_keys(s, p,
                   {"methods", "cases", "repeats", "budget", "init_count", "source", "sensor", "map_restarts",
                    "mc_warmup", "mc_draws", "oracle", "truth", "threshold_factor", "threads"});
        auto& b = c.benchmark.config;
        if (s.contains("methods")) {
            const json& m = s.at("methods");
            if (!m.is_array() || m.empty()) field_error(p + ".methods", "expected a non-empty array");
            b.methods.clear();
            for (std::size_t i = 0; i < m.size(); ++i) {
                const std::string pm = p + ".methods[" + std::to_string(i) + "]";
                BenchmarkMethod bm;
                if (m[i].is_string()) {
                    bm.acquisition = wrap(pm, [&] { return parse_acquisition(m[i].get<std::string>()); });
                    bm.model = default_model_for(bm.acquisition);
                } else {
                    check_keys(m[i], pm, {"acquisition", "model"});
                    bm.acquisition = wrap(pm + ".acquisition", [&] { return parse_acquisition(str(m[i], pm, "acquisition", "")); });
                    bm.model = m[i].contains("model") ? model_at(m[i].at("model"), pm + ".model")
                                                      : default_model_for(bm.acquisition);
                }
                if (bm.acquisition == AcquisitionKind::BALD && bm.model != ModelKind::FullyBayesian) {
                    field_error(pm, "BALD requires the fully_bayesian model kind");
                }
                b.methods.push_back(bm);
            }
        }
        if (s.contains("cases")) {
            b.cases.clear();
            for (int v : int_list(s.at("cases"), p + ".cases")) b.cases.push_back(wrap(p + ".cases", [&] { return parse_case(v); }));
        }
        b.repeats = static_cast<int>(integer(s, p, "repeats", b.repeats));
        b.budget = static_cast<int>(integer(s, p, "budget", b.budget));
        b.init_count = static_cast<int>(integer(s, p, "init_count", b.init_count));
        c.benchmark.source = static_cast<int>(integer(s, p, "source", c.sources.front().id));
        wrap(p + ".source", [&] { return c.source(c.benchmark.source); });
        const long long sensor = integer(s, p, "sensor", 1);
        if (sensor < 1 || sensor > 3) field_error(p + ".sensor", "sensor numbers are 1, 2 or 3");
        b.channel = static_cast<std::size_t>(sensor - 1);
        b.map_restarts = static_cast<int>(integer(s, p, "map_restarts", b.map_restarts));
        b.mc_warmup = static_cast<int>(integer(s, p, "mc_warmup", b.mc_warmup));
        b.mc_draws = static_cast<int>(integer(s, p, "mc_draws", b.mc_draws));
        b.oracle = wrap(p + ".oracle", [&] { return parse_oracle_mode(str(s, p, "oracle", to_string(b.oracle))); });
        b.truth = wrap(p + ".truth", [&] { return parse_truth_mode(str(s, p, "truth", to_string(b.truth))); });
        b.threshold_factor = num(s, p, "threshold_factor", b.threshold_factor);
        b.threads = static_cast<unsigned>(integer(s, p, "threads", b.threads));
        if (b.budget < 0 || b.init_count < 1 || b.mc_draws < 1 || b.mc_warmup < 0) {
            field_error(p, "budget >= 0, init_count >= 1, mc_draws >= 1 and mc_warmup >= 0 required");
        }
        wrap(p, [&] {
            b.validate();
            return 0;
        });
    }
    c.benchmark.config.seed = c.seed;
    if (!j.contains("benchmark")) c.benchmark.source = c.sources.front().id;
    if (j.contains("flux_fit")) {
        const json& s = j.at("flux_fit");
        check_keys(s, "flux_fit", {"dataset"});
        if (s.contains("dataset")) c.flux_fit.dataset = str(s, "flux_fit", "dataset", "");
    }
    if (j.contains("map")) {
        const json& s = j.at("map");
        const std::string p = "map";
        check_keys(s, p, {"models_dir", "sources", "powers_W", "pressure_mTorr", "pitch_mm"});
        c.map.models_dir = str(s, p, "models_dir", c.map.models_dir);
        if (s.contains("sources")) c.map.sources = int_list(s.at("sources"), p + ".sources");
        if (s.contains("powers_W")) c.map.powers_w = num_list(s.at("powers_W"), p + ".powers_W");
        c.map.pressure_mtorr = num(s, p, "pressure_mTorr", c.map.pressure_mtorr);
        c.map.pitch_mm = num(s, p, "pitch_mm", c.map.pitch_mm);
        if (!(c.map.pitch_mm > 0.0)) field_error(p + ".pitch_mm", "must be positive");
        if (!c.map.sources.empty() && c.map.powers_w.size() != c.map.sources.size()) {
            field_error(p + ".powers_W", "one power per listed source required");
        }
        for (int id : c.map.sources) wrap(p + ".sources", [&] { return c.source(id); });
    }
    if (j.contains("recipes")) {
        const json& s = j.at("recipes");
        const std::string p = "recipes";
        check_keys(s, p,
                   {"models_dir", "sources", "target_source", "target_fraction", "tolerance", "thickness_nm",
                    "max_time_s", "powers_W", "pressure_mTorr"});
        auto& r = c.recipes;
        r.models_dir = str(s, p, "models_dir", r.models_dir);
        if (s.contains("sources")) r.sources = int_list(s.at("sources"), p + ".sources");
        r.target_source = static_cast<int>(integer(s, p, "target_source", r.target_source));
        r.target_fraction = num(s, p, "target_fraction", r.target_fraction);
        r.tolerance = num(s, p, "tolerance", r.tolerance);
        r.thickness_nm = num(s, p, "thickness_nm", r.thickness_nm);
        r.max_time_s = num(s, p, "max_time_s", r.max_time_s);
        if (s.contains("powers_W")) {
            const json& pw = s.at("powers_W");
            if (!pw.is_array()) field_error(p + ".powers_W", "expected an array of ranges");
            for (std::size_t i = 0; i < pw.size(); ++i) {
                r.powers_w.push_back(range_from(pw[i], p + ".powers_W[" + std::to_string(i) + "]", c.box.power_w));
            }
        }
        if (s.contains("pressure_mTorr")) r.pressure_mtorr = range_from(s.at("pressure_mTorr"), p + ".pressure_mTorr", c.box.pressure_mtorr);
        if (!(r.tolerance > 0.0)) field_error(p + ".tolerance", "must be positive");
        if (!(r.thickness_nm > 0.0)) field_error(p + ".thickness_nm", "must be positive");
        if (!(r.max_time_s > 0.0)) field_error(p + ".max_time_s", "must be positive");
        if (!(r.target_fraction >= 0.0 && r.target_fraction <= 1.0)) field_error(p + ".target_fraction", "must lie in [0, 1]");
        for (int id : r.sources) wrap(p + ".sources", [&] { return c.source(id); });
        if (!r.powers_w.empty() && !r.sources.empty() && r.powers_w.size() != r.sources.size()) {
            field_error(p + ".powers_W", "one range per listed source required");
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json(path)); }

json to_json(const RunConfig& c) {
    json sources = json::array();
    for (const auto& s : c.sources) sources.push_back(source_json(s));
    json methods = json::array();
    for (const auto& m : c.benchmark.config.methods)
        methods.push_back({{"acquisition", to_string(m.acquisition)}, {"model", to_string(m.model)}});
    json cases = json::array();
    for (auto k : c.benchmark.config.cases) cases.push_back(static_cast<int>(k));
    json sensors = json::array();
    for (auto s : c.campaign.sensors) sensors.push_back(s + 1);
    const auto& k = c.campaign;
    json campaign{{"case", static_cast<int>(k.init_case)},
                  {"acquisition", to_string(k.acquisition)},
                  {"model", to_string(k.model.value_or(default_model_for(k.acquisition)))},
                  {"init_count", k.init_count},
                  {"budget", k.budget},
                  {"map_restarts", k.map_restarts},
                  {"mc_warmup", k.mc_warmup},
                  {"mc_draws", k.mc_draws},
                  {"sources", k.sources},
                  {"sensors", sensors}};
    if (k.replay) campaign["replay"] = *k.replay;
    const auto& b = c.benchmark.config;
    json elements = json::object();
    for (const auto& [sym, e] : c.elements) elements[sym] = {{"atomic_mass", e.atomic_mass}, {"density_g_cm3", e.density}};
    json recipe_powers = json::array();
    for (const auto& r : c.recipes.powers_w) recipe_powers.push_back(range_json(r));
    json recipes{{"models_dir", c.recipes.models_dir},
                 {"sources", c.recipes.sources},
                 {"target_source", c.recipes.target_source},
                 {"target_fraction", c.recipes.target_fraction},
                 {"tolerance", c.recipes.tolerance},
                 {"thickness_nm", c.recipes.thickness_nm},
                 {"max_time_s", c.recipes.max_time_s},
                 {"powers_W", recipe_powers}};
    if (c.recipes.pressure_mtorr) recipes["pressure_mTorr"] = range_json(*c.recipes.pressure_mtorr);
    json flux = json::object();
    if (c.flux_fit.dataset) flux["dataset"] = *c.flux_fit.dataset;
    return {{"schema_version", c.schema_version},
            {"seed", c.seed},
            {"geometry", to_json(c.geometry)},
            {"quartz", {{"rho_g_cm3", c.crystal.rho_g_cm3}, {"mu_g_cm_s2", c.crystal.mu_g_cm_s2}, {"f0_Hz", c.crystal.f0_hz}}},
            {"search_box",
             {{"power_W", range_json(c.box.power_w)},
              {"pressure_mTorr", range_json(c.box.pressure_mtorr)},
              {"pressure_floor_mTorr", c.box.pressure_floor_mtorr}}},
            {"simulator",
             {{"sources", sources}, {"noise", {{"relative", c.noise.relative}, {"floor_ng_cm2_s", c.noise.floor}}}}},
            {"campaign", campaign},
            {"benchmark",
             {{"methods", methods},
              {"cases", cases},
              {"repeats", b.repeats},
              {"budget", b.budget},
              {"init_count", b.init_count},
              {"source", c.benchmark.source},
              {"sensor", b.channel + 1},
              {"map_restarts", b.map_restarts},
              {"mc_warmup", b.mc_warmup},
              {"mc_draws", b.mc_draws},
              {"oracle", to_string(b.oracle)},
              {"truth", to_string(b.truth)},
              {"threshold_factor", b.threshold_factor}}},
            {"flux_fit", flux},
            {"map",
             {{"models_dir", c.map.models_dir},
              {"sources", c.map.sources},
              {"powers_W", c.map.powers_w},
              {"pressure_mTorr", c.map.pressure_mtorr},
              {"pitch_mm", c.map.pitch_mm}}},
            {"recipes", recipes},
            {"elements", elements}};
}

std::string config_digest(const RunConfig& c) {
    Fnv1a h;
    h.add(to_json(c).dump());
    return h.hex();
}

json dataset_sidecar(const RunConfig& c, std::size_t rows, int source_id) {
    const auto& s = c.source(source_id);
    return {{"schema_version", kSchemaVersion},
            {"rows", rows},
            {"columns", {"source_id", "power_W", "pressure_mTorr", "rate_s1", "rate_s2", "rate_s3"}},
            {"units", {{"power", "W"}, {"pressure", "mTorr"}, {"rate", "ng cm^-2 s^-1"}}},
            {"geometry_digest", geometry_digest(c.geometry)},
            {"noise", {{"model", "relative_plus_floor"}, {"relative", c.noise.relative}, {"floor_ng_cm2_s", c.noise.floor}}},
            {"source", source_json(s)},
            {"seed", c.seed}};
}

}  // namespace sputter::io
