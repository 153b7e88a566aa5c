#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

#include "sputterlab/gp/kernel.hpp"
#include "sputterlab/gp/training_set.hpp"

namespace sputter::gp {

// Extra diagonal tried, in order, when K + noise*I fails to factorize.
inline constexpr std::array<double, 3> kJitterLadder{1e-8, 1e-6, 1e-4};

template <typename Scalar>
struct GpPosteriorSummary {
    Scalar mean = 0;
    Scalar variance = 0;             // latent f
    Scalar predictive_variance = 0;  // f plus observation noise
};

// A GP conditioned on a training set under fixed hyperparameters, with the
// Cholesky factor of (K + noise I) and the weight vector cached. Works in model
// units (normalized inputs, standardized outputs). Copies share the factor.
template <typename Scalar>
class ConditionedGp {
public:
    using Llt = Eigen::LLT<Matrix<Scalar>>;

    ConditionedGp(const TrainingSet<Scalar>& training, GpHyperparams<Scalar> hp)
        : hp_(std::move(hp)), inputs_(std::make_shared<const Matrix<Scalar>>(training.inputs())) {
        hp_.validate();
        if (hp_.dims() != training.dims()) throw InvalidArgument("lengthscale count does not match input dimension");
        factorize(gram_matrix(*inputs_, hp_));
        set_mean(training.targets(), hp_.constant_mean);
    }

    // Same kernel and noise, different constant mean; reuses the factorization.
    ConditionedGp with_constant_mean(const TrainingSet<Scalar>& training, Scalar mean) const {
        ConditionedGp out = *this;
        out.set_mean(training.targets(), mean);
        return out;
    }

    const GpHyperparams<Scalar>& hyperparams() const { return hp_; }
    const Llt& factor() const { return *llt_; }
    const Vector<Scalar>& alpha() const { return alpha_; }
    const Matrix<Scalar>& inputs() const { return *inputs_; }
    Scalar jitter() const { return jitter_; }
    // Noise actually on the diagonal, including any jitter.
    Scalar effective_noise() const { return hp_.noise_variance + jitter_; }

    // Mean and latent variance at the normalized query rows.
    void predict(const Matrix<Scalar>& queries, Vector<Scalar>& mean, Vector<Scalar>* variance) const {
        const Matrix<Scalar> kx = cross_covariance(*inputs_, queries, hp_);
        mean = (kx.transpose() * alpha_).array() + hp_.constant_mean;
        if (variance) {
            const Matrix<Scalar> v = llt_->matrixL().solve(kx);
            *variance = (hp_.signal_variance - v.colwise().squaredNorm().array()).max(Scalar(0)).matrix().transpose();
        }
    }

    // L^{-1} k(X, queries); the columns give posterior covariances via inner products.
    Matrix<Scalar> whitened_cross(const Matrix<Scalar>& queries) const {
        return llt_->matrixL().solve(cross_covariance(*inputs_, queries, hp_));
    }

    Scalar log_marginal_likelihood() const {
        using std::log;
        const Scalar n = Scalar(inputs_->rows());
        Scalar logdet = 0;
        const auto& lm = llt_->matrixLLT();
        for (Eigen::Index i = 0; i < lm.rows(); ++i) logdet += log(lm(i, i));
        return Scalar(-0.5) * residual_.dot(alpha_) - logdet - Scalar(0.5) * n * log(Scalar(2) * std::numbers::pi_v<Scalar>);
    }

private:
    void set_mean(const Vector<Scalar>& targets, Scalar mean) {
        hp_.constant_mean = mean;
        residual_ = targets.array() - mean;
        alpha_ = llt_->solve(residual_);
    }

    void factorize(const Matrix<Scalar>& gram) {
        Matrix<Scalar> a = gram;
        a.diagonal().array() += hp_.noise_variance;
        auto llt = std::make_shared<Llt>(a);
        auto ok = [&llt] { return llt->info() == Eigen::Success && llt->matrixLLT().allFinite(); };
        if (ok()) {
            llt_ = std::move(llt);
            return;
        }
        for (double extra : kJitterLadder) {
            Matrix<Scalar> b = a;
            b.diagonal().array() += Scalar(extra);
            llt->compute(b);
            if (ok()) {
                jitter_ = Scalar(extra);
                llt_ = std::move(llt);
                return;
            }
        }
        std::ostringstream msg;
        msg << "Cholesky of K + noise*I failed after jitter " << kJitterLadder.back() << ": n=" << a.rows()
            << " diag in [" << static_cast<double>(a.diagonal().minCoeff()) << ", "
            << static_cast<double>(a.diagonal().maxCoeff()) << "], noise=" << static_cast<double>(hp_.noise_variance)
            << ", finite=" << a.allFinite();
        throw NumericalError(msg.str());
    }

    GpHyperparams<Scalar> hp_;
    std::shared_ptr<const Matrix<Scalar>> inputs_;
    std::shared_ptr<const Llt> llt_;
    Vector<Scalar> residual_;
    Vector<Scalar> alpha_;
    Scalar jitter_ = 0;
};

// Posterior at a raw query point, reported in raw output units.
template <typename Scalar>
GpPosteriorSummary<Scalar> summarize(const ConditionedGp<Scalar>& gp, const Normalization<Scalar>& norm,
                                     const Vector<Scalar>& raw_query) {
    Matrix<Scalar> q = norm.normalize_input(raw_query).transpose();
    Vector<Scalar> mean;
    Vector<Scalar> var;
    gp.predict(q, mean, &var);
    GpPosteriorSummary<Scalar> out;
    out.mean = norm.destandardize(mean(0));
    out.variance = norm.destandardize_variance(var(0));
    out.predictive_variance = norm.destandardize_variance(var(0) + gp.hyperparams().noise_variance);
    return out;
}

template <typename Scalar>
GpPosteriorSummary<Scalar> posterior(const TrainingSet<Scalar>& training, const GpHyperparams<Scalar>& hp,
                                     const Vector<Scalar>& raw_query) {
    return summarize(ConditionedGp<Scalar>(training, hp), training.normalization(), raw_query);
}

}  // namespace sputter::gp
