#include "sputterlab/gp/model.hpp"

namespace sputter {

std::string to_string(ModelKind kind) {
    return kind == ModelKind::PointEstimate ? "point" : "fully_bayesian";
}

ModelKind parse_model_kind(const std::string& s) {
    if (s == "point" || s == "PointEstimate") return ModelKind::PointEstimate;
    if (s == "fully_bayesian" || s == "FullyBayesian") return ModelKind::FullyBayesian;
    throw ConfigError("unknown model kind '" + s + "' (expected point | fully_bayesian)");
}

Eigen::MatrixXd to_matrix(const std::vector<ProcessSetpoint>& points) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        m(i, 0) = points[i].power_w;
        m(i, 1) = points[i].pressure_mtorr;
    }
    return m;
}

Eigen::VectorXd to_vector(const ProcessSetpoint& p) { return Eigen::Vector2d(p.power_w, p.pressure_mtorr); }

MixturePrediction predictive_mixture(const std::vector<GpPosteriorSummary>& per_sample) {
    if (per_sample.empty()) throw InvalidArgument("predictive mixture needs at least one sample");
    MixturePrediction out;
    const double m = static_cast<double>(per_sample.size());
    double second = 0.0;
    for (const auto& s : per_sample) {
        out.mean += s.mean;
        second += s.predictive_variance + s.mean * s.mean;
    }
    out.mean /= m;
    out.variance = std::max(second / m - out.mean * out.mean, 0.0);
    out.per_sample = per_sample;
    return out;
}

GpModel GpModel::point_estimate(TrainingSet training, const GpHyperparams& hp) {
    GpModel model;
    model.components_.emplace_back(training, hp);
    model.training_ = std::move(training);
    model.kind_ = ModelKind::PointEstimate;
    return model;
}

GpModel GpModel::fully_bayesian(TrainingSet training, HyperSampleSet samples) {
    if (samples.samples.empty()) throw InvalidArgument("empty hyperparameter sample set");
    GpModel model;
    model.components_ = std::move(samples.samples);
    model.training_ = std::move(training);
    model.kind_ = ModelKind::FullyBayesian;
    model.warmup = samples.warmup;
    model.seed = samples.seed;
    model.acceptance_rate = samples.acceptance_rate;
    model.chain_end = samples.last;
    model.warnings = std::move(samples.warnings);
    return model;
}

GpModel GpModel::from_hyperparams(TrainingSet training, ModelKind kind, const std::vector<GpHyperparams>& hps) {
    if (hps.empty()) throw InvalidArgument("model needs at least one hyperparameter set");
    GpModel model;
    model.kind_ = kind;
    model.components_.reserve(hps.size());
    for (const auto& hp : hps) {
        // draws that share a kernel differ only in the mean; reuse the factor
        if (!model.components_.empty()) {
            const auto& prev = model.components_.back().hyperparams();
            if (prev.lengthscales == hp.lengthscales && prev.signal_variance == hp.signal_variance &&
                prev.noise_variance == hp.noise_variance) {
                model.components_.push_back(model.components_.back().with_constant_mean(training, hp.constant_mean));
                continue;
            }
        }
        model.components_.emplace_back(training, hp);
    }
    model.training_ = std::move(training);
    return model;
}

std::vector<GpHyperparams> GpModel::hyperparams() const {
    std::vector<GpHyperparams> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.hyperparams());
    return out;
}

MixturePrediction GpModel::predict(const ProcessSetpoint& x) const {
    const auto& norm = training_.normalization();
    const Eigen::VectorXd q = to_vector(x);
    std::vector<GpPosteriorSummary> per;
    per.reserve(components_.size());
    for (const auto& c : components_) per.push_back(gp::summarize(c, norm, q));
    return predictive_mixture(per);
}

ComponentPredictions GpModel::predict_components(const Eigen::MatrixXd& raw_queries, bool with_variance) const {
    const auto& norm = training_.normalization();
    const Eigen::MatrixXd q = norm.normalize_rows(raw_queries);
    const auto m = static_cast<Eigen::Index>(components_.size());
    ComponentPredictions out;
    out.mean.resize(m, q.rows());
    out.noise.resize(m);
    if (with_variance) out.variance.resize(m, q.rows());
    Eigen::VectorXd mean;
    Eigen::VectorXd var;
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& c = components_[j];
        c.predict(q, mean, with_variance ? &var : nullptr);
        out.mean.row(j) = ((mean.array() * norm.output_std) + norm.output_mean).matrix().transpose();
        if (with_variance) out.variance.row(j) = (var * norm.output_std * norm.output_std).transpose();
        out.noise(j) = norm.destandardize_variance(c.hyperparams().noise_variance);
    }
    return out;
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::MatrixXd& raw_queries) const {
    return predict_components(raw_queries, false).mean.colwise().mean().transpose();
}

}  // namespace sputter
