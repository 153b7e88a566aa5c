#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sputterlab/gp/model.hpp"

namespace sputter {

enum class AcquisitionKind { Random, NIPV, BALM, BALD };

std::string to_string(AcquisitionKind kind);
AcquisitionKind parse_acquisition(const std::string& s);

// Finite candidate list; masked entries (already queried) are never selected.
struct CandidateSet {
    std::vector<ProcessSetpoint> points;
    std::vector<bool> masked;

    explicit CandidateSet(std::vector<ProcessSetpoint> pts = {})
        : points(std::move(pts)), masked(points.size(), false) {}

    std::size_t available() const;
    void mask(const ProcessSetpoint& p);
};

struct NipvOptions {
    std::size_t max_samples = 64;   // hyperparameter draws averaged for fully Bayesian models
    std::uint64_t subsample_seed = 0;
};

// Negative mean latent variance over `quadrature` after conditioning on each
// candidate (hyperparameters fixed, y unobserved). Raw output units.
Eigen::VectorXd nipv_scores(const GpModel& model, const std::vector<ProcessSetpoint>& candidates,
                            const std::vector<ProcessSetpoint>& quadrature, const NipvOptions& options = {});
double nipv_score(const GpModel& model, const ProcessSetpoint& candidate,
                  const std::vector<ProcessSetpoint>& quadrature, const NipvOptions& options = {});

// Entropy of the moment-matched hyperparameter-marginal predictive over y.
Eigen::VectorXd balm_scores(const GpModel& model, const std::vector<ProcessSetpoint>& candidates);
double balm_score(const GpModel& model, const ProcessSetpoint& candidate);

// Mixture entropy minus the mean per-sample entropy; zero for a single sample.
Eigen::VectorXd bald_scores(const GpModel& model, const std::vector<ProcessSetpoint>& candidates);
double bald_score(const GpModel& model, const ProcessSetpoint& candidate);

// Entropy of a Gaussian with variance v.
double gaussian_entropy(double variance);

struct Selection {
    std::size_t index = 0;
    ProcessSetpoint point;
    double score = 0.0;
};

struct SelectOptions {
    std::vector<ProcessSetpoint> quadrature;  // NIPV only; empty = all candidates
    NipvOptions nipv;
};

// Argmax of the acquisition over unmasked candidates (ties: lowest index), or a
// uniform draw for Random. Throws ExhaustedCandidates when everything is masked.
Selection select_next(const GpModel& model, const CandidateSet& candidates, AcquisitionKind kind,
                      std::mt19937_64& rng, const SelectOptions& options = {});

}  // namespace sputter
