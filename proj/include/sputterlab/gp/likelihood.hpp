#pragma once

#include <cmath>

#include "sputterlab/gp/exact.hpp"

namespace sputter::gp {

// Log marginal likelihood and its gradient. Gradient order:
// [log lengthscale_1..D, log signal_variance, log noise_variance, constant_mean].
template <typename Scalar>
struct MllGradient {
    Scalar value = 0;
    Vector<Scalar> gradient;
};

template <typename Scalar>
MllGradient<Scalar> mll_with_gradient(const TrainingSet<Scalar>& training, const GpHyperparams<Scalar>& hp) {
    using std::exp;
    using std::sqrt;
    const ConditionedGp<Scalar> gp(training, hp);
    const Eigen::Index n = training.size();
    const Eigen::Index d = hp.dims();
    const Matrix<Scalar>& x = training.inputs();

    Matrix<Scalar> a_inv = gp.factor().solve(Matrix<Scalar>::Identity(n, n));
    const Vector<Scalar>& alpha = gp.alpha();
    // W = alpha alpha^T - A^{-1}; dL/dtheta = 0.5 tr(W dA/dtheta)
    Matrix<Scalar> w = alpha * alpha.transpose() - a_inv;

    MllGradient<Scalar> out;
    out.value = gp.log_marginal_likelihood();
    out.gradient = Vector<Scalar>::Zero(d + 3);

    const Scalar root5 = sqrt(Scalar(5));
    Scalar grad_signal = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        grad_signal += Scalar(0.5) * w(j, j) * hp.signal_variance;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            Scalar r2 = 0;
            Vector<Scalar> u2(d);
            for (Eigen::Index k = 0; k < d; ++k) {
                const Scalar u = (x(i, k) - x(j, k)) / hp.lengthscales(k);
                u2(k) = u * u;
                r2 += u2(k);
            }
            const Scalar r = sqrt(r2);
            const Scalar e = exp(-root5 * r);
            const Scalar kij = hp.signal_variance * (Scalar(1) + root5 * r + Scalar(5) * r2 / Scalar(3)) * e;
            // dk/dlog(l_k) = s2 * 5/3 (1 + sqrt5 r) e^{-sqrt5 r} u_k^2
            const Scalar common = hp.signal_variance * Scalar(5) / Scalar(3) * (Scalar(1) + root5 * r) * e;
            // off-diagonal pairs appear twice in the trace
            for (Eigen::Index k = 0; k < d; ++k) out.gradient(k) += w(i, j) * common * u2(k);
            grad_signal += w(i, j) * kij;
        }
    }
    out.gradient(d) = grad_signal;
    out.gradient(d + 1) = Scalar(0.5) * w.trace() * hp.noise_variance;
    out.gradient(d + 2) = alpha.sum();
    return out;
}

// Constant mean maximizing the likelihood for the remaining hyperparameters.
template <typename Scalar>
Scalar profiled_constant_mean(const TrainingSet<Scalar>& training, GpHyperparams<Scalar> hp) {
    hp.constant_mean = 0;
    const ConditionedGp<Scalar> gp(training, hp);
    const Vector<Scalar> ones = Vector<Scalar>::Ones(training.size());
    const Vector<Scalar> a_inv_one = gp.factor().solve(ones);
    return a_inv_one.dot(training.targets()) / a_inv_one.sum();
}

}  // namespace sputter::gp
