#include "sputterlab/campaign.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "sputterlab/errors.hpp"
#include "sputterlab/seeds.hpp"

namespace sputter {

void CampaignConfig::validate() const {
    if (init_count < 1) throw ConfigError("init_count must be >= 1");
    if (budget < 0) throw ConfigError("budget must be >= 0");
    if (channel >= 3) throw ConfigError("sensor channel must be 0, 1 or 2");
    if (acquisition == AcquisitionKind::BALD && model != ModelKind::FullyBayesian) {
        throw ConfigError("BALD requires the fully_bayesian model kind");
    }
    if (model == ModelKind::FullyBayesian) {
        if (init_count < 2) throw ConfigError("fully Bayesian campaigns need init_count >= 2");
        if (mc_draws < 1 || mc_warmup < 0) throw ConfigError("mc_draws must be >= 1 and mc_warmup >= 0");
    }
    if (map_restarts < 1) throw ConfigError("map_restarts must be >= 1");
    if (init_case == InitCase::CornersCenter && init_count != 5) {
        throw ConfigError("case 3 uses exactly 5 initial points");
    }
}

ModelKind default_model_for(AcquisitionKind kind) {
    return kind == AcquisitionKind::BALM || kind == AcquisitionKind::BALD ? ModelKind::FullyBayesian
                                                                          : ModelKind::PointEstimate;
}

ExperimentOracle replay_oracle(const Dataset& data, int source_id) {
    return [&data, source_id](const ProcessSetpoint& p) {
        if (auto r = data.find(source_id, p)) return *r;
        std::ostringstream msg;
        msg << "replay dataset has no row for source " << source_id << " at " << p.power_w << " W, "
            << p.pressure_mtorr << " mTorr";
        throw ReplayMiss(msg.str());
    };
}

GpModel train_model(const std::vector<ProcessSetpoint>& inputs, const std::vector<double>& targets,
                    const SearchBox& box, ModelKind kind, std::uint64_t seed, const CampaignConfig& config,
                    const GpModel* previous) {
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    TrainingSet training(to_matrix(inputs), y, box.lower(), box.upper());
    if (training.size() < 2) {
        return GpModel::point_estimate(std::move(training), gp::prior_median_hyperparams<double>(2));
    }
    if (kind == ModelKind::PointEstimate) {
        gp::FitMapOptions<double> fo;
        fo.restarts = config.map_restarts;
        fo.seed = seed;
        if (previous && previous->size() > 0) fo.warm_starts = {previous->components().front().hyperparams()};
        const auto fit = gp::fit_map(training, fo);
        return GpModel::point_estimate(std::move(training), fit.hp);
    }
    gp::SamplerOptions<double> so;
    so.warmup = config.mc_warmup;
    so.draws = config.mc_draws;
    so.seed = seed;
    so.prior = config.prior;
    if (previous && previous->kind() == ModelKind::FullyBayesian) so.start = previous->chain_end;
    auto samples = gp::sample_hyperposterior(training, so);
    return GpModel::fully_bayesian(std::move(training), std::move(samples));
}

double rmse(const GpModel& model, const GroundTruthGrid& truth, std::size_t channel) {
    if (truth.size() == 0) throw InvalidArgument("rmse needs a non-empty truth grid");
    if (channel >= 3) throw InvalidArgument("sensor channel out of range");
    const Eigen::VectorXd pred = model.predict_mean(to_matrix(truth.points));
    const Eigen::VectorXd diff = truth.channel(channel) - pred;
    return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

std::vector<double> enhancement_factor(const std::vector<double>& baseline, const std::vector<double>& method) {
    if (baseline.size() != method.size()) throw InvalidArgument("enhancement factor needs equal-length traces");
    std::vector<double> f(baseline.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = baseline[j] / std::max(method[j], 1e-12);
    return f;
}

int queries_to_threshold(const std::vector<double>& trace, double factor) {
    if (trace.empty()) throw InvalidArgument("empty RMSE trace");
    const double level = factor * trace.back();
    for (std::size_t j = 0; j < trace.size(); ++j)
        if (trace[j] <= level) return static_cast<int>(j);
    return static_cast<int>(trace.size()) - 1;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

CampaignResult run_campaign(const ExperimentOracle& oracle, const CampaignConfig& config, const SearchBox& box,
                            const GroundTruthGrid* truth) {
    config.validate();
    box.validate();
    CampaignResult result;
    result.config = config;

    CandidateSet candidates(box.grid(config.init_case));
    if (candidates.points.size() < static_cast<std::size_t>(config.init_count + config.budget)) {
        throw ConfigError("init_count + budget exceeds the number of admissible grid points");
    }
    std::optional<GroundTruthGrid> scored;
    if (truth) scored = truth->restricted(box, config.init_case);

    const std::uint64_t init_seed = config.init_seed.value_or(derive_seed(config.seed, {1}));
    std::mt19937_64 init_rng(init_seed);
    std::mt19937_64 acq_rng(derive_seed(config.seed, {2}));

    std::vector<ProcessSetpoint> xs;
    std::vector<double> ys;
    auto observe = [&](const ProcessSetpoint& p, double score, bool initial, Clock::time_point t0) {
        const SensorReading r = oracle(p);
        candidates.mask(p);
        xs.push_back(p);
        ys.push_back(r[config.channel]);
        result.log.push_back({p, r, score, seconds_since(t0), initial});
    };
    auto refit = [&](int iteration) {
        const std::uint64_t s = derive_seed(config.seed, {3, static_cast<std::uint64_t>(iteration)});
        result.model = train_model(xs, ys, box, config.model, s, config, result.model.size() ? &result.model : nullptr);
        if (scored) result.rmse.push_back(rmse(result.model, *scored, config.channel));
    };

    try {
        for (const auto& p : init_points(box, config.init_case, config.init_count, init_rng)) {
            observe(p, 0.0, true, Clock::now());
        }
        refit(0);
        SelectOptions opts;
        opts.quadrature = candidates.points;
        opts.nipv.max_samples = config.nipv_max_samples;
        for (int it = 1; it <= config.budget; ++it) {
            const auto t0 = Clock::now();
            opts.nipv.subsample_seed = derive_seed(config.seed, {4, static_cast<std::uint64_t>(it)});
            const Selection sel = select_next(result.model, candidates, config.acquisition, acq_rng, opts);
            observe(sel.point, sel.score, false, t0);
            refit(it);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        result.aborted = true;
        result.error = e.what();
    }
    return result;
}

}  // namespace sputter
