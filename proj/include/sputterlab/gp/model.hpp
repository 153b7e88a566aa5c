#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sputterlab/gp/sampler.hpp"

namespace sputter {

// One point of the single-source input space.
struct ProcessSetpoint {
    double power_w = 0.0;
    double pressure_mtorr = 0.0;

    friend bool operator==(const ProcessSetpoint&, const ProcessSetpoint&) = default;
};

enum class ModelKind { PointEstimate, FullyBayesian };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

using TrainingSet = gp::TrainingSet<double>;
using GpHyperparams = gp::GpHyperparams<double>;
using ConditionedGp = gp::ConditionedGp<double>;
using HyperSampleSet = gp::HyperSampleSet<double>;
using GpPosteriorSummary = gp::GpPosteriorSummary<double>;

Eigen::MatrixXd to_matrix(const std::vector<ProcessSetpoint>& points);
Eigen::VectorXd to_vector(const ProcessSetpoint& p);

// Per-hyperparameter-sample predictions at a batch of queries, in raw output units.
struct ComponentPredictions {
    Eigen::MatrixXd mean;       // samples x queries
    Eigen::MatrixXd variance;   // latent, samples x queries
    Eigen::VectorXd noise;      // observation noise per sample
};

struct MixturePrediction {
    double mean = 0.0;
    double variance = 0.0;  // moment-matched predictive variance over y
    std::vector<GpPosteriorSummary> per_sample;
};

// Mixture moments of the hyperparameter-marginalized predictive:
// mean = avg(mu_j), var = avg(s_j^2 + noise_j + mu_j^2) - mean^2.
MixturePrediction predictive_mixture(const std::vector<GpPosteriorSummary>& per_sample);

// A trained surrogate for one (source, sensor) channel: the training set plus
// one (point estimate) or many (fully Bayesian) conditioned GPs.
class GpModel {
public:
    GpModel() = default;

    static GpModel point_estimate(TrainingSet training, const GpHyperparams& hp);
    static GpModel fully_bayesian(TrainingSet training, HyperSampleSet samples);
    // Rebuild from stored hyperparameters (one entry = point estimate).
    static GpModel from_hyperparams(TrainingSet training, ModelKind kind, const std::vector<GpHyperparams>& hps);

    ModelKind kind() const { return kind_; }
    std::size_t size() const { return components_.size(); }
    const TrainingSet& training() const { return training_; }
    const std::vector<ConditionedGp>& components() const { return components_; }
    std::vector<GpHyperparams> hyperparams() const;

    // Sampler provenance (fully Bayesian only).
    int warmup = 0;
    std::uint64_t seed = 0;
    double acceptance_rate = 0.0;
    gp::SamplerStart<double> chain_end;
    std::vector<std::string> warnings;

    MixturePrediction predict(const ProcessSetpoint& x) const;
    ComponentPredictions predict_components(const Eigen::MatrixXd& raw_queries, bool with_variance = true) const;
    // Mixture mean only; cheaper than predict_components.
    Eigen::VectorXd predict_mean(const Eigen::MatrixXd& raw_queries) const;

private:
    TrainingSet training_;
    std::vector<ConditionedGp> components_;
    ModelKind kind_ = ModelKind::PointEstimate;
};

}  // namespace sputter
