#include "sputterlab/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <cmath>
#include <thread>

#include "sputterlab/errors.hpp"
#include "sputterlab/io/csv.hpp"
#include "sputterlab/seeds.hpp"

namespace sputter {

std::string BenchmarkMethod::label() const {
    std::string s = to_string(acquisition);
    if (model != default_model_for(acquisition)) s += "+" + to_string(model);
    return s;
}

std::string to_string(OracleMode m) { return m == OracleMode::Replay ? "replay" : "live"; }

OracleMode parse_oracle_mode(const std::string& s) {
    if (s == "replay") return OracleMode::Replay;
    if (s == "live") return OracleMode::Live;
    throw ConfigError("unknown oracle mode '" + s + "' (expected replay | live)");
}

std::string to_string(TruthMode m) { return m == TruthMode::Observed ? "observed" : "noise_free"; }

TruthMode parse_truth_mode(const std::string& s) {
    if (s == "observed") return TruthMode::Observed;
    if (s == "noise_free") return TruthMode::NoiseFree;
    throw ConfigError("unknown truth mode '" + s + "' (expected observed | noise_free)");
}

std::vector<BenchmarkMethod> BenchmarkConfig::default_methods() {
    std::vector<BenchmarkMethod> m;
    for (auto a : {AcquisitionKind::Random, AcquisitionKind::NIPV, AcquisitionKind::BALM, AcquisitionKind::BALD}) {
        m.push_back({a, default_model_for(a)});
    }
    return m;
}

void BenchmarkConfig::validate() const {
    if (methods.empty()) throw ConfigError("benchmark needs at least one method");
    if (cases.empty()) throw ConfigError("benchmark needs at least one case");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (!(threshold_factor >= 1.0)) throw ConfigError("threshold_factor must be >= 1");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (methods[i].label() == methods[j].label()) throw ConfigError("duplicate benchmark method " + methods[i].label());
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const CellSummary* BenchmarkReport::summary(AcquisitionKind acquisition, InitCase c) const {
    for (const auto& s : summaries)
        if (config.methods[s.method].acquisition == acquisition && s.init_case == c) return &s;
    return nullptr;
}

bool BenchmarkReport::any_failure() const {
    return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.failed; });
}

namespace {

GroundTruthGrid observed_grid(const Dataset& data) {
    GroundTruthGrid g;
    for (const auto& r : data.rows) {
        g.points.push_back(r.setpoint);
        g.readings.push_back(r.reading);
    }
    return g;
}

std::uint64_t u64(InitCase c) { return static_cast<std::uint64_t>(c); }

void run_cell(CellResult& cell, const BenchmarkConfig& config, const SourceModel& simulator, const SearchBox& box,
              const NoiseModel& noise, const GeneratedGrid& grid, const GroundTruthGrid& truth) {
    const BenchmarkMethod& method = config.methods[cell.method];
    const auto rep = static_cast<std::uint64_t>(cell.repeat);
    CampaignConfig cc;
    cc.init_case = cell.init_case;
    cc.acquisition = method.acquisition;
    cc.model = method.model;
    cc.init_count = config.init_count;
    cc.budget = config.budget;
    cc.seed = derive_seed(config.seed, {20, static_cast<std::uint64_t>(method.acquisition),
                                        static_cast<std::uint64_t>(method.model), u64(cell.init_case), rep});
    cc.init_seed = derive_seed(config.seed, {10, u64(cell.init_case), rep});
    cc.channel = config.channel;
    cc.map_restarts = config.map_restarts;
    cc.mc_warmup = config.mc_warmup;
    cc.mc_draws = config.mc_draws;
    cc.prior = config.prior;

    ExperimentOracle oracle;
    std::mt19937_64 live_rng(derive_seed(cc.seed, {30}));
    if (config.oracle == OracleMode::Replay) {
        oracle = replay_oracle(grid.noisy, 0);
    } else {
        oracle = [&](const ProcessSetpoint& p) {
            return measure({simulator}, {p.power_w}, p.pressure_mtorr, noise, live_rng);
        };
    }
    try {
        cell.campaign = run_campaign(oracle, cc, box, &truth);
        if (cell.campaign.aborted) {
            cell.failed = true;
            cell.error = cell.campaign.error;
        } else {
            cell.queries_to_threshold = queries_to_threshold(cell.campaign.rmse, config.threshold_factor);
        }
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const SourceModel& simulator, const SearchBox& box,
                              const NoiseModel& noise) {
    config.validate();
    box.validate();
    BenchmarkReport report;
    report.config = config;
    std::mt19937_64 grid_rng(derive_seed(config.seed, {100}));
    report.grid = generate_grid(simulator, box, noise, grid_rng);
    const GroundTruthGrid truth =
        config.truth == TruthMode::Observed ? observed_grid(report.grid.noisy) : report.grid.truth;

    for (std::size_t m = 0; m < config.methods.size(); ++m)
        for (InitCase c : config.cases)
            for (int r = 0; r < config.repeats; ++r) {
                CellResult cell;
                cell.method = m;
                cell.init_case = c;
                cell.repeat = r;
                report.cells.push_back(std::move(cell));
            }

    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(report.cells.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < report.cells.size(); i = next++) {
            run_cell(report.cells[i], config, simulator, box, noise, report.grid, truth);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Random baseline mean trace per case, for the aggregate enhancement factor.
    auto mean_trace = [&](std::size_t m, InitCase c, std::vector<double>* sd, int* completed, int* failures) {
        std::vector<const std::vector<double>*> traces;
        for (const auto& cell : report.cells) {
            if (cell.method != m || cell.init_case != c) continue;
            if (cell.failed) {
                if (failures) ++*failures;
                continue;
            }
            traces.push_back(&cell.campaign.rmse);
        }
        if (completed) *completed = static_cast<int>(traces.size());
        std::vector<double> mean(static_cast<std::size_t>(config.budget) + 1, std::nan(""));
        if (sd) sd->assign(mean.size(), std::nan(""));
        if (traces.empty()) return mean;
        for (std::size_t j = 0; j < mean.size(); ++j) {
            double s = 0.0, s2 = 0.0;
            for (auto* t : traces) s += (*t)[j];
            s /= static_cast<double>(traces.size());
            for (auto* t : traces) s2 += ((*t)[j] - s) * ((*t)[j] - s);
            mean[j] = s;
            if (sd) (*sd)[j] = traces.size() > 1 ? std::sqrt(s2 / static_cast<double>(traces.size() - 1)) : 0.0;
        }
        return mean;
    };
    std::optional<std::size_t> baseline;
    for (std::size_t m = 0; m < config.methods.size(); ++m)
        if (config.methods[m].acquisition == AcquisitionKind::Random) {
            baseline = m;
            break;
        }

    for (std::size_t m = 0; m < config.methods.size(); ++m)
        for (InitCase c : config.cases) {
            CellSummary s;
            s.method = m;
            s.init_case = c;
            s.mean_rmse = mean_trace(m, c, &s.std_rmse, &s.completed, &s.failures);
            if (baseline) s.ef = enhancement_factor(mean_trace(*baseline, c, nullptr, nullptr, nullptr), s.mean_rmse);
            std::vector<double> q;
            for (const auto& cell : report.cells)
                if (cell.method == m && cell.init_case == c && !cell.failed) {
                    s.queries_to_threshold.push_back(cell.queries_to_threshold);
                    q.push_back(cell.queries_to_threshold);
                }
            s.median_queries_to_threshold = median(q);
            report.summaries.push_back(std::move(s));
        }
    return report;
}

namespace {

const CellResult* baseline_cell(const BenchmarkReport& report, const CellResult& cell) {
    for (const auto& b : report.cells)
        if (report.config.methods[b.method].acquisition == AcquisitionKind::Random && b.init_case == cell.init_case &&
            b.repeat == cell.repeat && !b.failed)
            return &b;
    return nullptr;
}

void append_trace(io::CsvWriter& w, const BenchmarkReport& report, const CellResult& cell) {
    const CellResult* base = baseline_cell(report, cell);
    const auto& trace = cell.campaign.rmse;
    for (std::size_t j = 0; j < trace.size(); ++j) {
        double ef = std::nan("");
        if (base && j < base->campaign.rmse.size()) ef = base->campaign.rmse[j] / std::max(trace[j], 1e-12);
        w.cell(report.config.methods[cell.method].label())
            .cell(static_cast<int>(cell.init_case))
            .cell(cell.repeat)
            .cell(j)
            .cell(trace[j])
            .cell(ef);
        w.end_row();
    }
}

const std::vector<std::string> kTraceHeader{"method", "case", "repeat", "iteration", "rmse", "ef"};

}  // namespace

std::string traces_csv(const BenchmarkReport& report) {
    io::CsvWriter w(kTraceHeader);
    for (const auto& cell : report.cells) append_trace(w, report, cell);
    return w.str();
}

std::string cell_trace_csv(const BenchmarkReport& report, std::size_t cell) {
    io::CsvWriter w(kTraceHeader);
    append_trace(w, report, report.cells.at(cell));
    return w.str();
}

std::string aggregate_csv(const BenchmarkReport& report) {
    io::CsvWriter w({"method", "case", "iteration", "mean_rmse", "std_rmse", "ef"});
    for (const auto& s : report.summaries) {
        for (std::size_t j = 0; j < s.mean_rmse.size(); ++j) {
            w.cell(report.config.methods[s.method].label())
                .cell(static_cast<int>(s.init_case))
                .cell(j)
                .cell(s.mean_rmse[j])
                .cell(s.std_rmse[j])
                .cell(s.ef.empty() ? std::nan("") : s.ef[j]);
            w.end_row();
        }
    }
    return w.str();
}

std::string summary_csv(const BenchmarkReport& report) {
    io::CsvWriter w({"method", "case", "completed", "failures", "median_queries_to_threshold",
                     "min_queries_to_threshold", "max_queries_to_threshold", "final_mean_rmse", "ef_at_10"});
    for (const auto& s : report.summaries) {
        const auto& q = s.queries_to_threshold;
        w.cell(report.config.methods[s.method].label())
            .cell(static_cast<int>(s.init_case))
            .cell(s.completed)
            .cell(s.failures)
            .cell(s.median_queries_to_threshold)
            .cell(q.empty() ? std::nan("") : static_cast<double>(*std::min_element(q.begin(), q.end())))
            .cell(q.empty() ? std::nan("") : static_cast<double>(*std::max_element(q.begin(), q.end())))
            .cell(s.mean_rmse.empty() ? std::nan("") : s.mean_rmse.back())
            .cell(s.ef.size() > 10 ? s.ef[10] : std::nan(""));
        w.end_row();
    }
    return w.str();
}

}  // namespace sputter
