#pragma once

#include <cmath>

#include <Eigen/Core>

#include "sputterlab/errors.hpp"

namespace sputter::gp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Smallest admissible observation-noise variance (standardized output units).
inline constexpr double kNoiseFloor = 1e-8;

// Hyperparameters of a constant-mean Matern-5/2 ARD Gaussian process. Lengthscales
// act on min-max normalized inputs, variances and mean on standardized outputs.
template <typename Scalar>
struct GpHyperparams {
    Vector<Scalar> lengthscales;
    Scalar noise_variance = Scalar(1e-4);
    Scalar signal_variance = Scalar(1);
    Scalar constant_mean = Scalar(0);

    Eigen::Index dims() const { return lengthscales.size(); }

    void validate() const {
        if (lengthscales.size() == 0 || !(lengthscales.array() > Scalar(0)).all() || !lengthscales.allFinite()) {
            throw InvalidArgument("lengthscales must be positive and finite");
        }
        if (!(noise_variance >= Scalar(kNoiseFloor)) || !std::isfinite(static_cast<double>(noise_variance))) {
            throw InvalidArgument("noise variance below the jitter floor");
        }
        if (!(signal_variance > Scalar(0)) || !std::isfinite(static_cast<double>(signal_variance))) {
            throw InvalidArgument("signal variance must be positive");
        }
        if (!std::isfinite(static_cast<double>(constant_mean))) throw InvalidArgument("constant mean is not finite");
    }

    template <typename Other>
    GpHyperparams<Other> cast() const {
        return {lengthscales.template cast<Other>(), Other(noise_variance), Other(signal_variance),
                Other(constant_mean)};
    }
};

// Matern-5/2 profile as a function of the scaled distance d.
template <typename Scalar>
Scalar matern52_profile(Scalar d) {
    using std::exp;
    using std::sqrt;
    const Scalar s5d = sqrt(Scalar(5)) * d;
    return (Scalar(1) + s5d + Scalar(5) * d * d / Scalar(3)) * exp(-s5d);
}

template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar scaled_distance(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& xp,
                       const GpHyperparams<Scalar>& hp) {
    using std::sqrt;
    Scalar d2 = 0;
    for (Eigen::Index i = 0; i < hp.dims(); ++i) {
        const Scalar u = (x(i) - xp(i)) / hp.lengthscales(i);
        d2 += u * u;
    }
    return sqrt(d2);
}

template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar matern52(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& xp,
                const GpHyperparams<Scalar>& hp) {
    return hp.signal_variance * matern52_profile(scaled_distance(x, xp, hp));
}

// Covariance between the rows of `a` and the rows of `b`.
template <typename Scalar>
Matrix<Scalar> cross_covariance(const Matrix<Scalar>& a, const Matrix<Scalar>& b, const GpHyperparams<Scalar>& hp) {
    Matrix<Scalar> k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            k(i, j) = matern52(a.row(i), b.row(j), hp);
        }
    }
    return k;
}

template <typename Scalar>
Matrix<Scalar> gram_matrix(const Matrix<Scalar>& x, const GpHyperparams<Scalar>& hp) {
    const Eigen::Index n = x.rows();
    Matrix<Scalar> k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = hp.signal_variance;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            k(i, j) = k(j, i) = matern52(x.row(i), x.row(j), hp);
        }
    }
    return k;
}

}  // namespace sputter::gp
