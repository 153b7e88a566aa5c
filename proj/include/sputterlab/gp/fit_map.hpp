#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "sputterlab/gp/likelihood.hpp"

namespace sputter::gp {

// Search box for the marginal-likelihood fit, in natural (not log) units.
struct HyperparamBox {
    double lengthscale_min = 0.05;
    double lengthscale_max = 5.0;
    double signal_min = 0.01;
    double signal_max = 100.0;
    double noise_min = 1e-6;
    double noise_max = 1.0;
};

template <typename Scalar>
struct FitMapOptions {
    int restarts = 8;
    std::uint64_t seed = 0;
    HyperparamBox box;
    int max_iterations = 200;
    // Extra starting points tried in addition to the stratified restarts.
    std::vector<GpHyperparams<Scalar>> warm_starts;
};

template <typename Scalar>
struct MapFit {
    GpHyperparams<Scalar> hp;
    Scalar log_likelihood = -std::numeric_limits<Scalar>::infinity();
    bool fallback = false;  // every restart diverged; hp is the prior median
    int converged_restarts = 0;
};

namespace detail {

template <typename Scalar>
struct LogBox {
    Vector<Scalar> lo;
    Vector<Scalar> hi;

    LogBox(const HyperparamBox& b, Eigen::Index dims) : lo(dims + 2), hi(dims + 2) {
        using std::log;
        for (Eigen::Index k = 0; k < dims; ++k) {
            lo(k) = log(Scalar(b.lengthscale_min));
            hi(k) = log(Scalar(b.lengthscale_max));
        }
        lo(dims) = log(Scalar(b.signal_min));
        hi(dims) = log(Scalar(b.signal_max));
        lo(dims + 1) = log(Scalar(b.noise_min));
        hi(dims + 1) = log(Scalar(b.noise_max));
    }
    Vector<Scalar> project(const Vector<Scalar>& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
};

template <typename Scalar>
GpHyperparams<Scalar> unpack(const Vector<Scalar>& u) {
    using std::exp;
    const Eigen::Index d = u.size() - 2;
    GpHyperparams<Scalar> hp;
    hp.lengthscales = u.head(d).array().exp();
    hp.signal_variance = exp(u(d));
    hp.noise_variance = std::max(exp(u(d + 1)), Scalar(kNoiseFloor));
    return hp;
}

template <typename Scalar>
Vector<Scalar> pack(const GpHyperparams<Scalar>& hp) {
    using std::log;
    const Eigen::Index d = hp.dims();
    Vector<Scalar> u(d + 2);
    u.head(d) = hp.lengthscales.array().log();
    u(d) = log(hp.signal_variance);
    u(d + 1) = log(hp.noise_variance);
    return u;
}

// Profile objective (constant mean in closed form) and its gradient in log space.
template <typename Scalar>
bool evaluate(const TrainingSet<Scalar>& t, const Vector<Scalar>& u, Scalar& value, Vector<Scalar>& grad,
              GpHyperparams<Scalar>* hp_out = nullptr) {
    try {
        GpHyperparams<Scalar> hp = unpack(u);
        hp.constant_mean = profiled_constant_mean(t, hp);
        const MllGradient<Scalar> g = mll_with_gradient(t, hp);
        if (!std::isfinite(static_cast<double>(g.value)) || !g.gradient.allFinite()) return false;
        value = g.value;
        grad = g.gradient.head(u.size());
        if (hp_out) *hp_out = hp;
        return true;
    } catch (const NumericalError&) {
        return false;
    }
}

// Projected BFGS ascent inside the log box.
template <typename Scalar>
bool ascend(const TrainingSet<Scalar>& t, const LogBox<Scalar>& box, Vector<Scalar> u, int max_iterations,
            Vector<Scalar>& u_best, Scalar& f_best) {
    const Eigen::Index m = u.size();
    u = box.project(u);
    Scalar f;
    Vector<Scalar> g;
    if (!evaluate(t, u, f, g)) return false;
    Matrix<Scalar> h = Matrix<Scalar>::Identity(m, m);

    auto free_mask = [&](const Vector<Scalar>& x, const Vector<Scalar>& grad) {
        Vector<Scalar> mask = Vector<Scalar>::Ones(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            if ((x(k) <= box.lo(k) && grad(k) < 0) || (x(k) >= box.hi(k) && grad(k) > 0)) mask(k) = 0;
        }
        return mask;
    };

    for (int it = 0; it < max_iterations; ++it) {
        const Vector<Scalar> mask = free_mask(u, g);
        const Vector<Scalar> pg = g.cwiseProduct(mask);
        if (pg.template lpNorm<Eigen::Infinity>() < Scalar(1e-7)) break;

        Vector<Scalar> dir = (h * pg).cwiseProduct(mask);
        if (dir.dot(pg) <= 0) {
            h.setIdentity();
            dir = pg;
        }
        const Scalar longest = dir.template lpNorm<Eigen::Infinity>();
        if (longest > Scalar(1)) dir /= longest;

        Scalar step = 1;
        Vector<Scalar> u_new;
        Scalar f_new = 0;
        Vector<Scalar> g_new;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            u_new = box.project(u + step * dir);
            if (evaluate(t, u_new, f_new, g_new) && f_new >= f + Scalar(1e-4) * g.dot(u_new - u)) {
                accepted = true;
                break;
            }
            step *= Scalar(0.5);
        }
        if (!accepted) break;

        const Vector<Scalar> s = u_new - u;
        const Vector<Scalar> y = g - g_new;  // gradient of the negated objective
        const Scalar sy = s.dot(y);
        if (sy > Scalar(1e-12)) {
            const Scalar rho = Scalar(1) / sy;
            const Matrix<Scalar> eye = Matrix<Scalar>::Identity(m, m);
            h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const Scalar improvement = f_new - f;
        u = u_new;
        f = f_new;
        g = g_new;
        if (improvement < Scalar(1e-10) * (Scalar(1) + std::abs(f))) break;
    }
    u_best = u;
    f_best = f;
    return true;
}

}  // namespace detail

// Hyperparameters used when no fit can be computed: geometric center of the box.
template <typename Scalar>
GpHyperparams<Scalar> prior_median_hyperparams(Eigen::Index dims, const HyperparamBox& b = {}) {
    using std::sqrt;
    GpHyperparams<Scalar> hp;
    hp.lengthscales = Vector<Scalar>::Constant(dims, Scalar(sqrt(b.lengthscale_min * b.lengthscale_max)));
    hp.signal_variance = Scalar(sqrt(b.signal_min * b.signal_max));
    hp.noise_variance = std::max(Scalar(sqrt(b.noise_min * b.noise_max)), Scalar(kNoiseFloor));
    hp.constant_mean = 0;
    return hp;
}

// Multi-restart maximum of the marginal likelihood. Starting points are a
// Latin-hypercube draw over the log box, so the result is a deterministic
// function of (training, options).
template <typename Scalar>
MapFit<Scalar> fit_map(const TrainingSet<Scalar>& training, const FitMapOptions<Scalar>& options = {}) {
    if (training.size() < 2) throw InvalidArgument("fit_map needs at least two training points");
    const Eigen::Index dims = training.dims();
    const detail::LogBox<Scalar> box(options.box, dims);
    const Eigen::Index m = dims + 2;

    std::vector<Vector<Scalar>> starts;
    for (const auto& hp : options.warm_starts) {
        if (hp.dims() == dims) starts.push_back(detail::pack(hp));
    }
    const int r = std::max(options.restarts, 0);
    if (r > 0) {
        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Vector<Scalar>> lhs(r, Vector<Scalar>(m));
        for (Eigen::Index k = 0; k < m; ++k) {
            std::vector<int> perm(r);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (int i = 0; i < r; ++i) {
                const Scalar frac = (Scalar(perm[i]) + Scalar(unit(rng))) / Scalar(r);
                lhs[i](k) = box.lo(k) + frac * (box.hi(k) - box.lo(k));
            }
        }
        starts.insert(starts.end(), lhs.begin(), lhs.end());
    }

    MapFit<Scalar> best;
    for (const auto& u0 : starts) {
        Vector<Scalar> u;
        Scalar f;
        if (!detail::ascend(training, box, u0, options.max_iterations, u, f)) continue;
        ++best.converged_restarts;
        if (f > best.log_likelihood) {
            best.log_likelihood = f;
            Vector<Scalar> g;
            detail::evaluate(training, u, f, g, &best.hp);
        }
    }
    if (best.converged_restarts == 0) {
        best.hp = prior_median_hyperparams<Scalar>(dims, options.box);
        best.fallback = true;
        try {
            best.hp.constant_mean = profiled_constant_mean(training, best.hp);
            best.log_likelihood = ConditionedGp<Scalar>(training, best.hp).log_marginal_likelihood();
        } catch (const NumericalError&) {
            best.log_likelihood = -std::numeric_limits<Scalar>::infinity();
        }
    }
    return best;
}

}  // namespace sputter::gp
