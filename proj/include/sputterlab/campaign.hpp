#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sputterlab/acquisition.hpp"
#include "sputterlab/dataset.hpp"
#include "sputterlab/search_box.hpp"

namespace sputter {

struct CampaignConfig {
    InitCase init_case = InitCase::CornersCenter;
    AcquisitionKind acquisition = AcquisitionKind::NIPV;
    ModelKind model = ModelKind::PointEstimate;
    int init_count = 5;
    int budget = 50;
    std::uint64_t seed = 0;
    // Seed of the initial design; campaigns sharing it start from the same points.
    std::optional<std::uint64_t> init_seed;
    std::size_t channel = 0;  // sensor whose rate is learned
    int map_restarts = 8;
    int mc_warmup = 32;
    int mc_draws = 1024;
    gp::SaasPrior prior;
    std::size_t nipv_max_samples = 64;

    void validate() const;
};

// Default model kind for an acquisition: entropy-based ones need hyperparameter samples.
ModelKind default_model_for(AcquisitionKind kind);

struct QueryRecord {
    ProcessSetpoint setpoint;
    SensorReading reading;
    double score = 0.0;
    double wall_time_s = 0.0;
    bool initial = false;
};

struct CampaignResult {
    CampaignConfig config;
    std::vector<QueryRecord> log;
    // rmse[j] is the error after j acquisitions beyond the initial design.
    std::vector<double> rmse;
    GpModel model;
    bool aborted = false;
    std::string error;
};

using ExperimentOracle = std::function<SensorReading(const ProcessSetpoint&)>;

// Query a stored dataset; throws ReplayMiss for a setpoint it does not hold.
ExperimentOracle replay_oracle(const Dataset& data, int source_id);

// Trains the surrogate for one channel from raw observations.
GpModel train_model(const std::vector<ProcessSetpoint>& inputs, const std::vector<double>& targets,
                    const SearchBox& box, ModelKind kind, std::uint64_t seed, const CampaignConfig& config,
                    const GpModel* previous = nullptr);

// Init -> fit -> score -> query loop. Oracle failures end the loop early with the
// partial log kept and `aborted` set.
CampaignResult run_campaign(const ExperimentOracle& oracle, const CampaignConfig& config, const SearchBox& box,
                            const GroundTruthGrid* truth = nullptr);

// Root-mean-square difference between truth and model mean over the grid.
double rmse(const GpModel& model, const GroundTruthGrid& truth, std::size_t channel);

// F(j) = baseline(j) / method(j), denominators floored at 1e-12.
std::vector<double> enhancement_factor(const std::vector<double>& baseline, const std::vector<double>& method);

// First j with trace[j] <= factor * trace.back().
int queries_to_threshold(const std::vector<double>& trace, double factor = 1.2);

}  // namespace sputter
