#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sputterlab/errors.hpp"
#include "sputterlab/flux.hpp"

using namespace sputter;

namespace {

SensorReading synth(const FluxFit& fit, const ChamberGeometry& g, std::size_t source) {
    SensorReading r;
    for (std::size_t i = 0; i < 3; ++i) {
        r[i] = flux_at(fit, g.sources[source], g.qcm_sensors[i].position_mm, g.qcm_sensors[i].normal);
    }
    return r;
}

double rms(const SensorReading& y, const FluxFit& fit, const ChamberGeometry& g, std::size_t source) {
    const SensorReading m = synth(fit, g, source);
    double ss = 0.0;
    for (std::size_t i = 0; i < 3; ++i) ss += (std::max(y[i], 0.0) - m[i]) * (std::max(y[i], 0.0) - m[i]);
    return std::sqrt(ss / 3.0);
}

}  // namespace

TEST_CASE("flux_at") {
    const SourcePose src;  // origin, +z
    const Vec3 down = -Vec3::UnitZ();

    SUBCASE("axial maximum") {
        for (double n : {0.0, 1.0, 2.5, 7.0}) {
            const double r_cm = 15.5;
            const double expect = 40.0 * (n + 1.0) / (2.0 * std::numbers::pi * r_cm * r_cm);
            CHECK(flux_at({40.0, n}, src, Vec3(0, 0, 155), down) == doctest::Approx(expect).epsilon(1e-14));
        }
    }
    SUBCASE("vanishes at 90 degrees") {
        CHECK(flux_at({40.0, 2.0}, src, Vec3(100, 0, 0), Vec3(-1, 0, 0)) == doctest::Approx(0.0).epsilon(1e-30));
    }
    SUBCASE("regression constant at phi = 45 degrees") {
        // receiving surface tilted to face the source: theta = 0
        const Vec3 p = Vec3(0, 1, 1).normalized() * 155.0;
        const Vec3 facing = -p.normalized();
        CHECK(flux_at({100.0, 2.0}, src, p, facing) == doctest::Approx(0.09936833075456526).epsilon(1e-12));
    }
    SUBCASE("back-facing geometry deposits nothing") {
        CHECK(flux_at({40.0, 2.0}, src, Vec3(0, 0, 155), Vec3::UnitZ()) == 0.0);
        CHECK(flux_at({40.0, 2.0}, src, Vec3(0, 0, -155), Vec3::UnitZ()) == 0.0);
    }
    SUBCASE("monotone in r and phi") {
        double prev = flux_at({10.0, 3.0}, src, Vec3(0, 0, 50), down);
        for (double z = 60; z < 300; z += 10) {
            const double v = flux_at({10.0, 3.0}, src, Vec3(0, 0, z), down);
            CHECK(v < prev);
            prev = v;
        }
        // fixed r, increasing phi; receiver always faces the source
        prev = std::numeric_limits<double>::infinity();
        for (double phi = 0.05; phi < std::numbers::pi / 2; phi += 0.1) {
            const Vec3 p(155 * std::sin(phi), 0, 155 * std::cos(phi));
            const double v = flux_at({10.0, 3.0}, src, p, -p.normalized());
            CHECK(v < prev);
            prev = v;
        }
    }
    CHECK_THROWS_AS(flux_at({-1.0, 2.0}, src, Vec3(0, 0, 1), down), InvalidArgument);
}

TEST_CASE("fit_flux recovers a synthetic plume") {
    const ChamberGeometry g = default_geometry();
    const FluxFitResult r = fit_flux(synth({50.0, 3.0}, g, 0), g, 0);
    CHECK(r.fit.a == doctest::Approx(50.0).epsilon(1e-3));
    CHECK(std::abs(r.fit.n - 3.0) < 1e-2);
    CHECK(r.residual_rms < 1e-9);
    CHECK_FALSE(r.at_boundary);
}

TEST_CASE("fit_flux round trip over the parameter box") {
    const ChamberGeometry g = default_geometry();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ua(1.0, 1000.0);
    std::uniform_real_distribution<double> un(0.0, 8.0);
    for (int k = 0; k < 40; ++k) {
        const FluxFit truth{ua(rng), un(rng)};
        const std::size_t src = k % g.sources.size();
        const FluxFitResult r = fit_flux(synth(truth, g, src), g, src);
        CHECK(std::abs(r.fit.a - truth.a) <= 1e-3 * truth.a);
        CHECK(std::abs(r.fit.n - truth.n) <= 1e-2);
    }
}

TEST_CASE("fit_flux beats a brute-force (a, n) grid") {
    const ChamberGeometry g = default_geometry();
    // noisy readings so the optimum has a nonzero residual
    SensorReading y = synth({300.0, 2.2}, g, 1);
    y[0] *= 1.07;
    y[2] *= 0.9;
    const FluxFitResult r = fit_flux(y, g, 1);
    const double a_max = 2.0 * r.fit.a;
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 200; ++j) {
            const FluxFit f{a_max * i / 199.0, 12.0 * j / 199.0};
            grid_best = std::min(grid_best, rms(y, f, g, 1));
        }
    }
    CHECK(r.residual_rms <= grid_best + 1e-12);
    CHECK(r.residual_rms == doctest::Approx(rms(y, r.fit, g, 1)).epsilon(1e-12));
}

TEST_CASE("fit_flux with sensors symmetric about the source axis") {
    ChamberGeometry g = default_geometry();
    SourcePose centered;
    centered.position_mm = Vec3(0, 0, -155);
    centered.axis = Vec3::UnitZ();
    g.sources = {centered};
    const SensorReading equal{{5.0, 5.0, 5.0}};
    const FluxFitResult r = fit_flux(equal, g, 0);
    CHECK(r.residual_rms < 1e-12);
    // brute-force grid at 1e-3 resolution in n, optimal a in closed form
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= 12000; j += 10) {
        double a = 0.0;
        best = std::min(best, flux_residual(j * 1e-3, equal, g, 0, &a));
    }
    CHECK(r.residual_rms <= best + 1e-12);
}

TEST_CASE("fit_flux error paths") {
    const ChamberGeometry g = default_geometry();
    CHECK_THROWS_AS(fit_flux(SensorReading{{0.0, 0.0, 0.0}}, g, 0), DegenerateFit);
    CHECK_THROWS_AS(fit_flux(SensorReading{{-1.0, -0.5, 0.0}}, g, 0), DegenerateFit);
    CHECK_THROWS_AS(fit_flux(SensorReading{{1.0, 1.0, 1.0}}, g, 17), InvalidArgument);
    // negative readings are clamped, not fitted
    const FluxFitResult r = fit_flux(SensorReading{{2.0, -0.1, -0.1}}, g, 0);
    CHECK(r.fit.a > 0.0);
}
