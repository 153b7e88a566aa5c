#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sputterlab/gp/fit_map.hpp"

namespace sputter::gp {

// Sparse axis-aligned subspace prior over the kernel hyperparameters:
//   rho_i = 1/l_i^2 ~ HalfCauchy(tau),  tau ~ HalfCauchy(alpha),
//   signal variance ~ LogNormal(0, log_signal_sd^2),
//   noise variance ~ LogNormal(0, log_noise_sd^2) or Gamma(noise_shape, noise_rate),
//   constant mean ~ N(0, mean_sd^2).
enum class NoisePrior { LogNormal, Gamma };

struct SaasPrior {
    double alpha = 0.1;
    double log_signal_sd = 10.0;
    NoisePrior noise = NoisePrior::LogNormal;
    double log_noise_sd = 10.0;
    double noise_shape = 0.9;
    double noise_rate = 10.0;
    double mean_sd = 1.0;
};

template <typename Scalar>
struct SamplerStart {
    GpHyperparams<Scalar> hp;
    Scalar tau = 0;  // <= 0: derived from the lengthscales
};

template <typename Scalar>
struct SamplerOptions {
    int warmup = 32;
    int draws = 1024;
    std::uint64_t seed = 0;
    SaasPrior prior;
    double initial_step = 0.5;   // random-walk scale in log space
    double target_acceptance = 0.44;
    std::optional<SamplerStart<Scalar>> start;  // default: MAP estimate
};

// Monte-Carlo draws of the hyperparameter posterior, each with its conditioned GP.
template <typename Scalar>
struct HyperSampleSet {
    std::vector<ConditionedGp<Scalar>> samples;
    int warmup = 0;
    int draws = 0;
    std::uint64_t seed = 0;
    double acceptance_rate = 0;
    SamplerStart<Scalar> last;  // final chain state, for warm-starting the next run
    std::vector<std::string> warnings;
};

namespace detail {

template <typename Scalar>
struct ChainState {
    Scalar log_tau = 0;
    Vector<Scalar> log_rho;
    Scalar log_signal = 0;
    Scalar log_noise = 0;
    Scalar mean = 0;

    GpHyperparams<Scalar> hyperparams() const {
        GpHyperparams<Scalar> hp;
        hp.lengthscales = (Scalar(-0.5) * log_rho.array()).exp();
        hp.signal_variance = std::exp(log_signal);
        hp.noise_variance = std::exp(log_noise);
        hp.constant_mean = mean;
        return hp;
    }
};

// Every hyperparameter finite and strictly positive after exponentiation.
template <typename Scalar>
bool representable(const ChainState<Scalar>& s) {
    const GpHyperparams<Scalar> hp = s.hyperparams();
    auto ok = [](Scalar v) { return std::isfinite(static_cast<double>(v)) && v > Scalar(0); };
    for (Eigen::Index i = 0; i < hp.lengthscales.size(); ++i)
        if (!ok(hp.lengthscales(i)) || !ok(Scalar(1) / hp.lengthscales(i))) return false;
    using std::exp;
    return ok(hp.signal_variance) && ok(hp.noise_variance) && ok(exp(s.log_tau));
}

// Prior log density of the log-space coordinates (Jacobians included), up to a constant.
template <typename Scalar>
Scalar log_prior(const ChainState<Scalar>& s, const SaasPrior& p) {
    using std::exp;
    using std::log;
    const Scalar tau = exp(s.log_tau);
    Scalar lp = -log(Scalar(1) + (tau / p.alpha) * (tau / p.alpha)) + s.log_tau;
    for (Eigen::Index i = 0; i < s.log_rho.size(); ++i) {
        const Scalar q = exp(s.log_rho(i)) / tau;
        lp += -s.log_tau - log(Scalar(1) + q * q) + s.log_rho(i);
    }
    lp += -s.log_signal * s.log_signal / (Scalar(2) * p.log_signal_sd * p.log_signal_sd);
    if (p.noise == NoisePrior::LogNormal) {
        lp += -s.log_noise * s.log_noise / (Scalar(2) * p.log_noise_sd * p.log_noise_sd);
    } else {
        lp += Scalar(p.noise_shape) * s.log_noise - Scalar(p.noise_rate) * exp(s.log_noise);
    }
    lp += -s.mean * s.mean / (Scalar(2) * p.mean_sd * p.mean_sd);
    return lp;
}

}  // namespace detail

// Adaptive Metropolis-within-Gibbs over (log tau, log rho_i, log signal, log noise)
// with an exact Gibbs step for the constant mean. Step sizes adapt during warm-up
// only; every post-warm-up sweep is kept.
template <typename Scalar>
HyperSampleSet<Scalar> sample_hyperposterior(const TrainingSet<Scalar>& training,
                                             const SamplerOptions<Scalar>& options = {}) {
    using std::exp;
    using std::log;
    using std::sqrt;
    if (training.size() < 2) throw InvalidArgument("hyperparameter sampling needs at least two training points");
    if (options.draws < 1 || options.warmup < 0) throw InvalidArgument("draws must be >= 1 and warmup >= 0");
    const Eigen::Index dims = training.dims();

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SamplerStart<Scalar> start;
    if (options.start) {
        start = *options.start;
    } else {
        FitMapOptions<Scalar> fo;
        fo.restarts = 4;
        fo.seed = options.seed;
        start.hp = fit_map(training, fo).hp;
    }
    start.hp.noise_variance = std::max(start.hp.noise_variance, Scalar(kNoiseFloor) * Scalar(10));

    detail::ChainState<Scalar> state;
    state.log_rho = Scalar(-2) * start.hp.lengthscales.array().log();
    state.log_tau = start.tau > 0 ? log(start.tau) : log(state.log_rho.array().exp().mean());
    state.log_signal = log(start.hp.signal_variance);
    state.log_noise = log(start.hp.noise_variance);
    state.mean = start.hp.constant_mean;

    const Scalar log_noise_floor = log(Scalar(kNoiseFloor));
    std::optional<ConditionedGp<Scalar>> current;
    try {
        current.emplace(training, state.hyperparams());
    } catch (const NumericalError&) {
        state.log_rho.setZero();
        state.log_noise = log(Scalar(1e-2));
        current.emplace(training, state.hyperparams());
    }
    Scalar current_ll = current->log_marginal_likelihood();
    Scalar current_lp = detail::log_prior(state, options.prior);

    // coordinates: 0 = log tau, 1..D = log rho, D+1 = log signal, D+2 = log noise
    const Eigen::Index coords = dims + 3;
    std::vector<double> log_step(coords, std::log(options.initial_step));

    auto coord_ref = [dims](detail::ChainState<Scalar>& s, Eigen::Index k) -> Scalar& {
        if (k == 0) return s.log_tau;
        if (k <= dims) return s.log_rho(k - 1);
        if (k == dims + 1) return s.log_signal;
        return s.log_noise;
    };

    const Vector<Scalar> ones = Vector<Scalar>::Ones(training.size());
    const Scalar prior_prec = Scalar(1) / Scalar(options.prior.mean_sd * options.prior.mean_sd);

    HyperSampleSet<Scalar> out;
    out.warmup = options.warmup;
    out.draws = options.draws;
    out.seed = options.seed;
    out.samples.reserve(options.draws);
    long accepted = 0;
    long proposed = 0;

    const int sweeps = options.warmup + options.draws;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        const bool warming = sweep < options.warmup;
        for (Eigen::Index k = 0; k < coords; ++k) {
            detail::ChainState<Scalar> proposal = state;
            coord_ref(proposal, k) += Scalar(std::exp(log_step[k]) * normal(rng));
            bool accept = false;
            std::optional<ConditionedGp<Scalar>> gp;
            Scalar ll = current_ll;
            const Scalar lp = detail::log_prior(proposal, options.prior);
            const bool admissible = !(k == coords - 1 && proposal.log_noise < log_noise_floor) &&
                                    detail::representable(proposal) && std::isfinite(static_cast<double>(lp));
            if (admissible) {
                if (k == 0) {
                    accept = log(unit(rng)) < static_cast<double>(lp - current_lp);
                } else {
                    try {
                        gp.emplace(training, proposal.hyperparams());
                        ll = gp->log_marginal_likelihood();
                        accept = std::isfinite(static_cast<double>(ll)) &&
                                 log(unit(rng)) < static_cast<double>(ll + lp - current_ll - current_lp);
                    } catch (const NumericalError&) {
                        accept = false;
                    }
                }
            }
            if (accept) {
                state = proposal;
                current_lp = lp;
                if (gp) {
                    current = std::move(gp);
                    current_ll = ll;
                }
            }
            if (warming) {
                const double eta = 1.0 / std::sqrt(sweep + 1.0);
                log_step[k] += eta * ((accept ? 1.0 : 0.0) - options.target_acceptance);
            } else {
                ++proposed;
                accepted += accept ? 1 : 0;
            }
        }

        // Gibbs step for the constant mean: Gaussian conditional given the kernel.
        const Vector<Scalar> a_inv_one = current->factor().solve(ones);
        const Scalar precision = prior_prec + a_inv_one.sum();
        const Scalar cond_mean = a_inv_one.dot(training.targets()) / precision;
        state.mean = cond_mean + Scalar(normal(rng)) / sqrt(precision);
        current = current->with_constant_mean(training, state.mean);
        current_ll = current->log_marginal_likelihood();
        current_lp = detail::log_prior(state, options.prior);

        if (!warming) out.samples.push_back(*current);
    }

    out.acceptance_rate = proposed > 0 ? double(accepted) / double(proposed) : 0.0;
    if (out.acceptance_rate < 0.05 || out.acceptance_rate > 0.95) {
        out.warnings.push_back("post-warm-up acceptance rate " + std::to_string(out.acceptance_rate) +
                               " outside [0.05, 0.95]");
    }
    out.last.hp = state.hyperparams();
    out.last.tau = exp(state.log_tau);
    return out;
}

}  // namespace sputter::gp
