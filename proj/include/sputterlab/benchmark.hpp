#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sputterlab/campaign.hpp"
#include "sputterlab/chamber.hpp"

namespace sputter {

struct BenchmarkMethod {
    AcquisitionKind acquisition = AcquisitionKind::Random;
    ModelKind model = ModelKind::PointEstimate;

    // Acquisition name, suffixed with the model kind when it is not the default one.
    std::string label() const;
};

// Where campaign queries are answered: the stored noisy grid or fresh simulator draws.
enum class OracleMode { Replay, Live };
// What RMSE is measured against: the noisy grid observations or the noise-free rates.
enum class TruthMode { Observed, NoiseFree };

std::string to_string(OracleMode m);
OracleMode parse_oracle_mode(const std::string& s);
std::string to_string(TruthMode m);
TruthMode parse_truth_mode(const std::string& s);

struct BenchmarkConfig {
    std::vector<BenchmarkMethod> methods;
    std::vector<InitCase> cases{InitCase::Full, InitCase::Restricted, InitCase::CornersCenter};
    int repeats = 10;
    int budget = 50;
    int init_count = 5;
    std::uint64_t seed = 0;
    std::size_t channel = 0;
    int map_restarts = 8;
    int mc_warmup = 32;
    int mc_draws = 1024;
    gp::SaasPrior prior;
    OracleMode oracle = OracleMode::Live;  // fresh simulator noise per query
    TruthMode truth = TruthMode::Observed;
    double threshold_factor = 1.2;
    unsigned threads = 0;  // 0 = hardware concurrency

    // Random, NIPV, BALM, BALD with their default model kinds.
    static std::vector<BenchmarkMethod> default_methods();
    void validate() const;
};

struct CellResult {
    std::size_t method = 0;  // index into config.methods
    InitCase init_case = InitCase::Full;
    int repeat = 0;
    CampaignResult campaign;
    int queries_to_threshold = -1;
    bool failed = false;
    std::string error;
};

struct CellSummary {
    std::size_t method = 0;
    InitCase init_case = InitCase::Full;
    int completed = 0;
    int failures = 0;
    std::vector<double> mean_rmse;
    std::vector<double> std_rmse;
    std::vector<double> ef;  // mean Random trace / mean method trace; empty without a Random baseline
    std::vector<int> queries_to_threshold;
    double median_queries_to_threshold = 0.0;
};

struct BenchmarkReport {
    BenchmarkConfig config;
    GeneratedGrid grid;
    std::vector<CellResult> cells;  // method-major, then case, then repeat
    std::vector<CellSummary> summaries;

    const CellSummary* summary(AcquisitionKind acquisition, InitCase c) const;
    bool any_failure() const;
};

// Runs every (method, case, repeat) cell. Cells share the initial design for a
// given (case, repeat) so methods are compared on paired starts.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const SourceModel& simulator, const SearchBox& box,
                              const NoiseModel& noise);

// Long-format traces: method, case, repeat, iteration, rmse, ef.
std::string traces_csv(const BenchmarkReport& report);
std::string cell_trace_csv(const BenchmarkReport& report, std::size_t cell);
// Aggregate per (method, case, iteration): mean and std RMSE and EF.
std::string aggregate_csv(const BenchmarkReport& report);
// Queries-to-threshold statistics per (method, case).
std::string summary_csv(const BenchmarkReport& report);

double median(std::vector<double> v);

}  // namespace sputter
