#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sputterlab/benchmark.hpp"
#include "sputterlab/campaign.hpp"
#include "sputterlab/chamber.hpp"
#include "sputterlab/composition.hpp"

namespace sputter::io {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

// Malformed JSON text; carries the 1-based line and column of the failure.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : ConfigError(what), line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

json parse_json(const std::string& text, const std::string& origin = "<input>");
json read_json(const std::filesystem::path& path);
// Two-space indented dump with a trailing newline; numbers shortest round-trip.
std::string dump(const json& j);

json to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j, const std::string& field);

json to_json(const ChamberGeometry& g);
ChamberGeometry geometry_from_json(const json& j);

json to_json(const GpHyperparams& hp);
GpHyperparams hyperparams_from_json(const json& j);

// Model files: kind, training data (raw), normalization, hyperparameter draws,
// sampler provenance and a content digest.
json to_json(const GpModel& model);
GpModel model_from_json(const json& j);
std::string model_digest(const GpModel& model);

json to_json(const CampaignConfig& c);
json to_json(const CampaignResult& r, bool include_timing = false);
json to_json(const BenchmarkReport& r);

struct SimulatorSource {
    int id = 0;
    std::size_t pose_index = 0;
    SourceParams params;
};

struct CampaignSection {
    InitCase init_case = InitCase::CornersCenter;
    AcquisitionKind acquisition = AcquisitionKind::NIPV;
    std::optional<ModelKind> model;  // default depends on the acquisition
    int init_count = 5;
    int budget = 30;
    int map_restarts = 8;
    int mc_warmup = 32;
    int mc_draws = 1024;
    std::vector<int> sources;                // simulator source ids; empty = all
    std::vector<std::size_t> sensors{0, 1, 2};
    std::optional<std::string> replay;       // dataset path for offline replay
};

struct BenchmarkSection {
    BenchmarkConfig config;
    int source = 0;  // simulator source id
};

struct FluxFitSection {
    std::optional<std::string> dataset;
};

struct MapSection {
    std::string models_dir = "models";
    std::vector<int> sources;
    std::vector<double> powers_w;
    double pressure_mtorr = 10.0;
    double pitch_mm = 1.0;
};

struct RecipeSection {
    std::string models_dir = "models";
    std::vector<int> sources;
    int target_source = -1;  // source id; -1 = first listed
    double target_fraction = 0.66;
    double tolerance = 0.01;
    double thickness_nm = 150.0;
    double max_time_s = 900.0;
    std::vector<AxisRange> powers_w;  // empty = the search-box power axis for every source
    std::optional<AxisRange> pressure_mtorr;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    ChamberGeometry geometry = default_geometry();
    QuartzCrystal crystal;
    SearchBox box;
    std::vector<SimulatorSource> sources;
    NoiseModel noise;
    CampaignSection campaign;
    BenchmarkSection benchmark;
    FluxFitSection flux_fit;
    MapSection map;
    RecipeSection recipes;
    std::map<std::string, ElementProps> elements;  // overrides of the built-in table

    const SimulatorSource& source(int id) const;
    SourceModel simulator(int id) const;
};

RunConfig default_config();
// Validates field by field; ConfigError messages name the offending field path.
RunConfig config_from_json(const json& j);
RunConfig load_config(const std::filesystem::path& path);
json to_json(const RunConfig& c);
std::string config_digest(const RunConfig& c);

json dataset_sidecar(const RunConfig& c, std::size_t rows, int source_id);

}  // namespace sputter::io
