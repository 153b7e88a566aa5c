#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sputterlab/acquisition.hpp"
#include "sputterlab/errors.hpp"

using namespace sputter;

namespace {

GpHyperparams hp_of(double l1, double l2, double sf, double sn, double c = 0.0) {
    GpHyperparams hp;
    hp.lengthscales = Eigen::Vector2d(l1, l2);
    hp.signal_variance = sf;
    hp.noise_variance = sn;
    hp.constant_mean = c;
    return hp;
}

std::vector<ProcessSetpoint> random_points(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(1.0, 43.0);
    std::vector<ProcessSetpoint> p;
    for (int i = 0; i < n; ++i) p.push_back({u(rng), u(rng)});
    return p;
}

TrainingSet training_of(const std::vector<ProcessSetpoint>& pts, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 10.0 + 3.0 * z(rng);
    return TrainingSet(to_matrix(pts), y, Eigen::Vector2d(1, 1), Eigen::Vector2d(43, 43));
}

std::vector<ProcessSetpoint> grid7() {
    std::vector<ProcessSetpoint> g;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) g.push_back({1.0 + 7.0 * i, 1.0 + 7.0 * j});
    return g;
}

GpModel random_mixture(const TrainingSet& t, int m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GpHyperparams> hps;
    for (int j = 0; j < m; ++j) {
        hps.push_back(hp_of(0.1 + u(rng), 0.1 + u(rng), 0.3 + 2.0 * u(rng), 1e-3 + 0.2 * u(rng), u(rng) - 0.5));
    }
    return GpModel::from_hyperparams(t, ModelKind::FullyBayesian, hps);
}

}  // namespace

TEST_CASE("NIPV fantasy update matches a from-scratch refit") {
    std::mt19937_64 rng(42);
    const auto quad = grid7();
    for (int rep = 0; rep < 5; ++rep) {
        const auto train_pts = random_points(8, rng);
        const TrainingSet t = training_of(train_pts, rng);
        const GpHyperparams hp = hp_of(0.3 + 0.1 * rep, 0.5, 1.2, 1e-3);
        const GpModel model = GpModel::point_estimate(t, hp);
        const auto cands = random_points(5, rng);
        const Eigen::VectorXd scores = nipv_scores(model, cands, quad);

        const auto& norm = t.normalization();
        const oracle::Kernel k{{0.3 + 0.1 * rep, 0.5}, 1.2, 1e-3, 0.0};
        const Eigen::MatrixXd qn = norm.normalize_rows(to_matrix(quad));
        const long double before = oracle::integrated_variance(t.inputs(), k, qn);
        for (std::size_t c = 0; c < cands.size(); ++c) {
            Eigen::MatrixXd x(t.size() + 1, 2);
            x.topRows(t.size()) = t.inputs();
            x.row(t.size()) = norm.normalize_input(to_vector(cands[c])).transpose();
            const long double after = oracle::integrated_variance(x, k, qn);
            const double expect = -static_cast<double>(after) * norm.output_std * norm.output_std;
            CHECK(scores(static_cast<Eigen::Index>(c)) == doctest::Approx(expect).epsilon(1e-8));
            CHECK(after <= before + 1e-9);
        }
    }
}

TEST_CASE("NIPV: integrated variance never grows along a selection sequence") {
    std::mt19937_64 rng(3);
    std::vector<ProcessSetpoint> pts = random_points(4, rng);
    const auto quad = grid7();
    const GpHyperparams hp = hp_of(0.4, 0.4, 1.0, 1e-4);
    const oracle::Kernel k{{0.4, 0.4}, 1.0, 1e-4, 0.0};
    gp::Normalization<double> norm;
    norm.input_lo = Eigen::Vector2d(1, 1);
    norm.input_hi = Eigen::Vector2d(43, 43);
    norm.output_std = 2.5;
    const Eigen::MatrixXd qn = norm.normalize_rows(to_matrix(quad));
    CandidateSet cands(quad);
    for (int step = 0; step < 12; ++step) {
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pts.size()), 1.0);
        const TrainingSet t(to_matrix(pts), y, norm);
        const double before = static_cast<double>(oracle::integrated_variance(t.inputs(), k, qn));
        const Selection s = select_next(GpModel::point_estimate(t, hp), cands, AcquisitionKind::NIPV, rng, {quad, {}});
        const double after = -s.score / (norm.output_std * norm.output_std);
        CHECK(after <= before + 1e-9);
        cands.mask(s.point);
        pts.push_back(s.point);
    }
}

TEST_CASE("NIPV is symmetric under a mirrored design") {
    // training points symmetric about power = 22
    const std::vector<ProcessSetpoint> pts{{10, 10}, {34, 10}, {22, 30}, {4, 40}, {40, 40}};
    Eigen::VectorXd y(5);
    y << 1.0, 1.0, 2.0, 0.5, 0.5;
    const TrainingSet t(to_matrix(pts), y, Eigen::Vector2d(1, 1), Eigen::Vector2d(43, 43));
    const GpModel m = GpModel::point_estimate(t, hp_of(0.3, 0.4, 1.0, 1e-3));
    const auto quad = grid7();
    const Eigen::VectorXd s = nipv_scores(m, {{13, 22}, {31, 22}, {7, 1}, {37, 1}}, quad);
    CHECK(s(0) == doctest::Approx(s(1)).epsilon(1e-10));
    CHECK(s(2) == doctest::Approx(s(3)).epsilon(1e-10));
}

TEST_CASE("BALM is the entropy of the moment-matched mixture") {
    std::mt19937_64 rng(8);
    const TrainingSet t = training_of(random_points(9, rng), rng);
    const GpModel m = random_mixture(t, 12, rng);
    for (const auto& p : random_points(20, rng)) {
        const auto mix = m.predict(p);
        CHECK(balm_score(m, p) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e * mix.variance)).epsilon(1e-12));
    }
}

TEST_CASE("BALD properties") {
    std::mt19937_64 rng(21);
    const TrainingSet t = training_of(random_points(10, rng), rng);
    const GpModel m = random_mixture(t, 16, rng);
    const auto cands = random_points(1000, rng);
    const Eigen::VectorXd s = bald_scores(m, cands);
    CHECK(s.minCoeff() >= 0.0);
    // direct two-term recomputation
    for (std::size_t k = 0; k < 50; ++k) {
        const auto mix = m.predict(cands[k]);
        double mean_h = 0.0;
        for (const auto& c : mix.per_sample) mean_h += gaussian_entropy(c.predictive_variance);
        mean_h /= static_cast<double>(mix.per_sample.size());
        CHECK(s(static_cast<Eigen::Index>(k)) == doctest::Approx(gaussian_entropy(mix.variance) - mean_h).epsilon(1e-12));
    }
    const GpModel single = GpModel::point_estimate(t, hp_of(0.4, 0.4, 1.0, 1e-2));
    CHECK(bald_scores(single, cands).isZero(0.0));
    const GpModel repeated = GpModel::from_hyperparams(t, ModelKind::FullyBayesian,
                                                       std::vector<GpHyperparams>(4, hp_of(0.4, 0.4, 1.0, 1e-2)));
    CHECK(bald_scores(repeated, cands).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("select_next") {
    std::mt19937_64 rng(5);
    const TrainingSet t = training_of(random_points(6, rng), rng);
    const GpModel single = GpModel::point_estimate(t, hp_of(0.3, 0.3, 1.0, 1e-3));
    CandidateSet cands(grid7());

    SUBCASE("ties go to the lowest unmasked index") {
        cands.mask(cands.points[0]);
        cands.mask(cands.points[1]);
        const Selection s = select_next(single, cands, AcquisitionKind::BALD, rng);
        CHECK(s.index == 2);
        CHECK(s.score == 0.0);
    }
    SUBCASE("argmax of the score vector") {
        const Eigen::VectorXd b = balm_scores(single, cands.points);
        Eigen::Index best = 0;
        b.maxCoeff(&best);
        const Selection s = select_next(single, cands, AcquisitionKind::BALM, rng);
        CHECK(s.index == static_cast<std::size_t>(best));
        CHECK(s.score == b(best));
    }
    SUBCASE("random draws are seeded and never masked") {
        for (std::size_t i = 0; i < cands.points.size(); i += 2) cands.masked[i] = true;
        std::mt19937_64 a(77), b(77);
        for (int k = 0; k < 30; ++k) {
            const Selection sa = select_next(single, cands, AcquisitionKind::Random, a);
            const Selection sb = select_next(single, cands, AcquisitionKind::Random, b);
            CHECK(sa.index == sb.index);
            CHECK_FALSE(cands.masked[sa.index]);
        }
    }
    SUBCASE("exhausted candidates") {
        for (const auto& p : cands.points) cands.mask(p);
        CHECK(cands.available() == 0);
        CHECK_THROWS_AS(select_next(single, cands, AcquisitionKind::NIPV, rng), ExhaustedCandidates);
    }
    CHECK(parse_acquisition("balm") == AcquisitionKind::BALM);
    CHECK_THROWS_AS(parse_acquisition("ucb"), ConfigError);
}
