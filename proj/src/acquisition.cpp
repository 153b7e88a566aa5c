#include "sputterlab/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sputterlab/errors.hpp"

namespace sputter {

std::string to_string(AcquisitionKind kind) {
    switch (kind) {
        case AcquisitionKind::Random: return "Random";
        case AcquisitionKind::NIPV: return "NIPV";
        case AcquisitionKind::BALM: return "BALM";
        case AcquisitionKind::BALD: return "BALD";
    }
    return "?";
}

AcquisitionKind parse_acquisition(const std::string& s) {
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
    if (u == "RANDOM") return AcquisitionKind::Random;
    if (u == "NIPV") return AcquisitionKind::NIPV;
    if (u == "BALM") return AcquisitionKind::BALM;
    if (u == "BALD") return AcquisitionKind::BALD;
    throw ConfigError("unknown acquisition '" + s + "' (expected Random | NIPV | BALM | BALD)");
}

std::size_t CandidateSet::available() const {
    return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), false));
}

void CandidateSet::mask(const ProcessSetpoint& p) {
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i] == p) masked[i] = true;
}

double gaussian_entropy(double variance) {
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

Eigen::VectorXd nipv_scores(const GpModel& model, const std::vector<ProcessSetpoint>& candidates,
                            const std::vector<ProcessSetpoint>& quadrature, const NipvOptions& options) {
    if (quadrature.empty()) throw InvalidArgument("NIPV needs a non-empty quadrature set");
    const auto& norm = model.training().normalization();
    const Eigen::MatrixXd q = norm.normalize_rows(to_matrix(quadrature));
    const Eigen::MatrixXd c = norm.normalize_rows(to_matrix(candidates));

    std::vector<std::size_t> which(model.size());
    std::iota(which.begin(), which.end(), 0);
    if (which.size() > options.max_samples) {
        std::mt19937_64 rng(options.subsample_seed);
        std::shuffle(which.begin(), which.end(), rng);
        which.resize(options.max_samples);
        std::sort(which.begin(), which.end());
    }

    Eigen::VectorXd total = Eigen::VectorXd::Zero(c.rows());
    for (std::size_t j : which) {
        const auto& g = model.components()[j];
        const auto& hp = g.hyperparams();
        const Eigen::MatrixXd vq = g.whitened_cross(q);
        const Eigen::MatrixXd vc = g.whitened_cross(c);
        // posterior covariance between quadrature and candidate points
        const Eigen::MatrixXd cov = gp::cross_covariance(q, c, hp) - vq.transpose() * vc;
        const Eigen::VectorXd var_q = (hp.signal_variance - vq.colwise().squaredNorm().array()).max(0.0);
        const Eigen::VectorXd var_c = (hp.signal_variance - vc.colwise().squaredNorm().array()).max(0.0);
        const double base = var_q.mean();
        for (Eigen::Index k = 0; k < c.rows(); ++k) {
            const double reduction = cov.col(k).squaredNorm() / (var_c(k) + hp.noise_variance) / q.rows();
            total(k) += base - reduction;
        }
    }
    const double scale = norm.output_std * norm.output_std;
    return -total * scale / static_cast<double>(which.size());
}

double nipv_score(const GpModel& model, const ProcessSetpoint& candidate,
                  const std::vector<ProcessSetpoint>& quadrature, const NipvOptions& options) {
    return nipv_scores(model, {candidate}, quadrature, options)(0);
}

namespace {

struct EntropyTerms {
    Eigen::VectorXd mixture;       // entropy of the moment-matched mixture
    Eigen::VectorXd mean_sample;   // average per-sample entropy
};

EntropyTerms entropy_terms(const GpModel& model, const std::vector<ProcessSetpoint>& candidates, bool per_sample) {
    const ComponentPredictions p = model.predict_components(to_matrix(candidates));
    const Eigen::Index m = p.mean.rows();
    const Eigen::MatrixXd pred_var = p.variance.colwise() + p.noise;
    const Eigen::RowVectorXd mu = p.mean.colwise().mean();
    const Eigen::RowVectorXd second = (pred_var.array() + p.mean.array().square()).colwise().sum() / double(m);
    EntropyTerms out;
    out.mixture.resize(p.mean.cols());
    for (Eigen::Index k = 0; k < p.mean.cols(); ++k) {
        out.mixture(k) = gaussian_entropy(std::max(second(k) - mu(k) * mu(k), 0.0));
    }
    if (per_sample) {
        const double log_2pie = std::log(2.0 * std::numbers::pi * std::numbers::e);
        out.mean_sample = (0.5 * (pred_var.array().log() + log_2pie)).colwise().mean().transpose();
    }
    return out;
}

}  // namespace

Eigen::VectorXd balm_scores(const GpModel& model, const std::vector<ProcessSetpoint>& candidates) {
    return entropy_terms(model, candidates, false).mixture;
}

double balm_score(const GpModel& model, const ProcessSetpoint& candidate) {
    return balm_scores(model, {candidate})(0);
}

Eigen::VectorXd bald_scores(const GpModel& model, const std::vector<ProcessSetpoint>& candidates) {
    if (model.size() == 1) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(candidates.size()));
    const EntropyTerms t = entropy_terms(model, candidates, true);
    Eigen::VectorXd s = t.mixture - t.mean_sample;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) < 0.0 && s(k) > -1e-10) s(k) = 0.0;
    return s;
}

double bald_score(const GpModel& model, const ProcessSetpoint& candidate) {
    return bald_scores(model, {candidate})(0);
}

Selection select_next(const GpModel& model, const CandidateSet& candidates, AcquisitionKind kind,
                      std::mt19937_64& rng, const SelectOptions& options) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < candidates.points.size(); ++i)
        if (!candidates.masked[i]) open.push_back(i);
    if (open.empty()) throw ExhaustedCandidates("no unmasked candidates left");

    if (kind == AcquisitionKind::Random) {
        std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
        const std::size_t i = open[pick(rng)];
        return {i, candidates.points[i], 0.0};
    }

    std::vector<ProcessSetpoint> pts;
    pts.reserve(open.size());
    for (std::size_t i : open) pts.push_back(candidates.points[i]);

    Eigen::VectorXd scores;
    switch (kind) {
        case AcquisitionKind::NIPV:
            scores = nipv_scores(model, pts, options.quadrature.empty() ? candidates.points : options.quadrature,
                                 options.nipv);
            break;
        case AcquisitionKind::BALM: scores = balm_scores(model, pts); break;
        case AcquisitionKind::BALD: scores = bald_scores(model, pts); break;
        case AcquisitionKind::Random: break;
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < open.size(); ++k)
        if (scores(k) > scores(best)) best = k;
    return {open[best], candidates.points[open[best]], scores(best)};
}

}  // namespace sputter
