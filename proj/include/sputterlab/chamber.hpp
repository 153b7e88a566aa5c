#pragma once

#include <random>
#include <string>
#include <vector>

#include "sputterlab/dataset.hpp"
#include "sputterlab/flux.hpp"
#include "sputterlab/gp/model.hpp"
#include "sputterlab/search_box.hpp"

namespace sputter {

// Pressure and ignition behaviour of one source:
// (1 + beta p)^-gamma * 1 / (1 + exp(-(p - p_ext(P)) / width)).
struct RateLaw {
    double beta_per_mtorr = 0.05;
    double gamma = 1.5;
    double p_ext_mtorr = 2.5;
    double width_mtorr = 0.3;
    double p_ext_per_watt = 0.0;  // power-dependent extinction hook, 0 = constant

    double extinction_pressure(double power_w) const { return p_ext_mtorr + p_ext_per_watt * power_w; }
    double ignition(double power_w, double pressure_mtorr) const;
    double pressure_factor(double power_w, double pressure_mtorr) const;
    void validate() const;
};

// alpha * P * (1 + beta p)^-gamma * S(p)
double rate_law(double alpha, double power_w, double pressure_mtorr, const RateLaw& law);

// Cosine order of the plume: n0 + per_mtorr * p + per_watt * P.
struct EmissionOrderProfile {
    double n0 = 1.5;
    double per_mtorr = 0.03;
    double per_watt = 0.0;

    double at(double power_w, double pressure_mtorr) const {
        return n0 + per_mtorr * pressure_mtorr + per_watt * power_w;
    }
};

// One simulated magnetron. Sensor rates come from a single cos^n plume with
// emission a(P, p) = emission_per_watt * P * pressure_factor(P, p), so every
// sensor triple is an exact flux-model evaluation.
struct SourceModel {
    std::string element = "Zr";
    SourcePose pose;
    std::array<SensorPose, 3> sensors;
    double emission_per_watt = 3500.0;  // ng s^-1 W^-1 before pressure losses
    RateLaw law;
    EmissionOrderProfile order;

    FluxFit plume(const ProcessSetpoint& sp) const;
    // Per-sensor rate coefficient alpha_i (ng cm^-2 s^-1 W^-1) at this pressure.
    std::array<double, 3> alpha(const ProcessSetpoint& sp) const;
    void validate() const;
};

struct SourceParams {
    std::string element = "Zr";
    double emission_per_watt = 3500.0;
    RateLaw law;
    EmissionOrderProfile order;
};

SourceModel make_source(const ChamberGeometry& geometry, std::size_t pose_index, const SourceParams& params = {});

double true_rate(const SourceModel& source, const ProcessSetpoint& sp, std::size_t sensor);
SensorReading true_readings(const SourceModel& source, const ProcessSetpoint& sp);

struct NoiseModel {
    double relative = 0.01;
    double floor = 0.5;  // additive, ng cm^-2 s^-1

    bool silent() const { return relative == 0.0 && floor == 0.0; }
};

// Co-sputtered QCM readings: sum over sources (each at its own power, shared
// pressure), then multiplicative and additive Gaussian noise.
SensorReading measure(const std::vector<SourceModel>& sources, const std::vector<double>& powers_w,
                      double pressure_mtorr, const NoiseModel& noise, std::mt19937_64& rng);

struct GeneratedGrid {
    GroundTruthGrid truth;
    Dataset noisy;
};

GeneratedGrid generate_grid(const SourceModel& source, const SearchBox& box, const NoiseModel& noise,
                            std::mt19937_64& rng, int source_id = 0);

}  // namespace sputter
