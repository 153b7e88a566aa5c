#pragma once

#include <array>

#include "sputterlab/geometry.hpp"

namespace sputter {

// Emission of one source at one setpoint under the cos^n plume model.
struct FluxFit {
    double a = 0.0;  // emission rate, ng/s
    double n = 0.0;  // cosine order
};

// Mass deposition rates at the three QCMs, ng cm^-2 s^-1.
struct SensorReading {
    std::array<double, 3> rates{};

    double& operator[](std::size_t i) { return rates[i]; }
    double operator[](std::size_t i) const { return rates[i]; }
};

// Deposition rate per unit emission: (n+1) cos(theta) cos^n(phi) / (2 pi r^2), r in cm.
// Zero for back-facing geometry.
double geometric_factor(double n, const SourcePose& source, const Vec3& point_mm, const Vec3& surface_normal);

double flux_at(const FluxFit& fit, const SourcePose& source, const Vec3& point_mm, const Vec3& surface_normal);

struct FluxFitOptions {
    double n_max = 12.0;
    int coarse_points = 121;
    double n_tolerance = 1e-10;
};

struct FluxFitResult {
    FluxFit fit;
    double residual_rms = 0.0;
    // Optimum sits on the edge of [0, n_max]: no interior n beats the flat end.
    bool at_boundary = false;
};

// RMS residual of the model with cosine order n and its best emission rate.
// `a_out` receives the closed-form optimal a for that n.
double flux_residual(double n, const SensorReading& readings, const ChamberGeometry& geometry,
                     std::size_t source_index, double* a_out = nullptr);

// Least-squares (a, n) for one source from three sensor readings. Readings are
// clamped at zero first. Throws DegenerateFit when no reading is positive.
FluxFitResult fit_flux(const SensorReading& readings, const ChamberGeometry& geometry, std::size_t source_index,
                       const FluxFitOptions& options = {});

}  // namespace sputter
