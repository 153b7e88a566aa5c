#include <doctest.h>

#include <cmath>
#include <random>

#include "sputterlab/gp/model.hpp"

using namespace sputter;

namespace {

TrainingSet smooth_set(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 0.05);
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x.row(i) << u(rng), u(rng);
        y(i) = std::sin(3.0 * x(i, 0)) + 0.5 * x(i, 1) + z(rng);
    }
    return TrainingSet(x, y, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
}

double mean_variance(const GpModel& m) {
    double s = 0.0;
    int k = 0;
    for (double a = 0.05; a < 1.0; a += 0.1)
        for (double b = 0.05; b < 1.0; b += 0.1, ++k) s += m.predict({a, b}).variance;
    return s / k;
}

}  // namespace

TEST_CASE("sampler with one draw reduces to a single conditioned GP") {
    const TrainingSet t = smooth_set(12, 1);
    gp::SamplerOptions<double> o;
    o.draws = 1;
    o.warmup = 4;
    o.seed = 5;
    auto set = gp::sample_hyperposterior(t, o);
    REQUIRE(set.samples.size() == 1);
    const GpHyperparams hp = set.samples[0].hyperparams();
    const GpModel m = GpModel::fully_bayesian(t, set);
    const auto direct = gp::posterior(t, hp, Eigen::VectorXd(Eigen::Vector2d(0.3, 0.7)));
    const auto mix = m.predict({0.3, 0.7});
    CHECK(mix.mean == doctest::Approx(direct.mean).epsilon(1e-12));
    CHECK(mix.variance == doctest::Approx(direct.predictive_variance).epsilon(1e-10));
}

TEST_CASE("sampler is deterministic under its seed") {
    const TrainingSet t = smooth_set(10, 2);
    gp::SamplerOptions<double> o;
    o.draws = 64;
    o.seed = 17;
    const auto a = gp::sample_hyperposterior(t, o);
    const auto b = gp::sample_hyperposterior(t, o);
    REQUIRE(a.samples.size() == 64);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].hyperparams().lengthscales == b.samples[i].hyperparams().lengthscales);
        CHECK(a.samples[i].hyperparams().constant_mean == b.samples[i].hyperparams().constant_mean);
    }
    o.seed = 18;
    const auto c = gp::sample_hyperposterior(t, o);
    bool differs = false;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        differs = differs || a.samples[i].hyperparams().lengthscales != c.samples[i].hyperparams().lengthscales;
    CHECK(differs);
}

TEST_CASE("sampler draws are valid and shrink with data") {
    gp::SamplerOptions<double> o;
    o.draws = 256;
    o.seed = 3;
    const TrainingSet few = smooth_set(6, 4);
    const TrainingSet many = smooth_set(40, 4);
    const auto a = gp::sample_hyperposterior(few, o);
    const auto b = gp::sample_hyperposterior(many, o);
    for (const auto* set : {&a, &b}) {
        CHECK(set->acceptance_rate > 0.05);
        CHECK(set->acceptance_rate < 0.95);
        CHECK(set->warnings.empty());
        for (const auto& s : set->samples) {
            const auto& hp = s.hyperparams();
            CHECK(hp.lengthscales.minCoeff() > 0.0);
            CHECK(hp.noise_variance >= gp::kNoiseFloor);
            CHECK(std::isfinite(hp.constant_mean));
        }
    }
    // standardized targets: averaged predictive variance must fall as data is added
    CHECK(mean_variance(GpModel::fully_bayesian(many, b)) < mean_variance(GpModel::fully_bayesian(few, a)));
}

TEST_CASE("sampler flags poor acceptance and honours the Gamma noise prior") {
    const TrainingSet t = smooth_set(10, 6);
    gp::SamplerOptions<double> o;
    o.draws = 64;
    o.warmup = 0;
    o.initial_step = 400.0;  // absurd proposals are almost always rejected
    o.seed = 1;
    const auto bad = gp::sample_hyperposterior(t, o);
    CHECK(bad.acceptance_rate < 0.05);
    CHECK_FALSE(bad.warnings.empty());

    gp::SamplerOptions<double> g;
    g.draws = 128;
    g.seed = 2;
    g.prior.noise = gp::NoisePrior::Gamma;
    const auto gs = gp::sample_hyperposterior(t, g);
    CHECK(gs.samples.size() == 128);
    CHECK_THROWS_AS(gp::sample_hyperposterior(TrainingSet(Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Ones(1),
                                                          Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1))),
                    InvalidArgument);
}
