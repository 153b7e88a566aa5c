#include "sputterlab/flux.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sputterlab/errors.hpp"

namespace sputter {

double geometric_factor(double n, const SourcePose& source, const Vec3& point_mm, const Vec3& surface_normal) {
    const Incidence inc = geometry_angles(source, point_mm, surface_normal);
    const double cos_theta = std::cos(inc.theta);
    const double cos_phi = std::cos(inc.phi);
    if (cos_theta < 0.0 || cos_phi < 0.0) return 0.0;
    const double r_cm = inc.r_mm / 10.0;
    return (n + 1.0) * cos_theta * std::pow(cos_phi, n) / (2.0 * std::numbers::pi * r_cm * r_cm);
}

double flux_at(const FluxFit& fit, const SourcePose& source, const Vec3& point_mm, const Vec3& surface_normal) {
    if (!(fit.a >= 0.0) || !(fit.n >= 0.0)) throw InvalidArgument("flux fit requires a >= 0 and n >= 0");
    return fit.a * geometric_factor(fit.n, source, point_mm, surface_normal);
}

namespace {

std::array<double, 3> clamped(const SensorReading& r) {
    std::array<double, 3> y{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::isfinite(r[i])) throw InvalidArgument("sensor reading is not finite");
        y[i] = std::max(r[i], 0.0);
    }
    return y;
}

double residual_for(double n, const std::array<double, 3>& y, const ChamberGeometry& geometry,
                    std::size_t source_index, double* a_out) {
    const SourcePose& src = geometry.sources.at(source_index);
    std::array<double, 3> g{};
    double gy = 0.0;
    double gg = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& qcm = geometry.qcm_sensors[i];
        g[i] = geometric_factor(n, src, qcm.position_mm, qcm.normal);
        gy += g[i] * y[i];
        gg += g[i] * g[i];
    }
    const double a = gg > 0.0 ? std::max(gy / gg, 0.0) : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double e = y[i] - a * g[i];
        ss += e * e;
    }
    if (a_out) *a_out = a;
    return std::sqrt(ss / 3.0);
}

}  // namespace

double flux_residual(double n, const SensorReading& readings, const ChamberGeometry& geometry,
                     std::size_t source_index, double* a_out) {
    return residual_for(n, clamped(readings), geometry, source_index, a_out);
}

FluxFitResult fit_flux(const SensorReading& readings, const ChamberGeometry& geometry, std::size_t source_index,
                       const FluxFitOptions& options) {
    if (source_index >= geometry.sources.size()) throw InvalidArgument("source index out of range");
    if (options.coarse_points < 3 || !(options.n_max > 0.0)) throw InvalidArgument("bad flux fit options");
    const auto y = clamped(readings);
    if (std::none_of(y.begin(), y.end(), [](double v) { return v > 0.0; })) {
        throw DegenerateFit("all sensor readings are <= 0");
    }

    auto f = [&](double n) { return residual_for(n, y, geometry, source_index, nullptr); };

    const double step = options.n_max / (options.coarse_points - 1);
    int best = 0;
    double best_r = f(0.0);
    for (int k = 1; k < options.coarse_points; ++k) {
        const double r = f(k * step);
        if (r < best_r) {
            best_r = r;
            best = k;
        }
    }

    // Golden-section refinement inside the bracketing coarse cell pair.
    double lo = std::max(0.0, (best - 1) * step);
    double hi = std::min(options.n_max, (best + 1) * step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > options.n_tolerance) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }

    // The coarse optimum may still win when the residual is flat or the optimum
    // is on an endpoint.
    double n_best = best * step;
    const double n_refined = 0.5 * (lo + hi);
    if (f(n_refined) <= best_r) n_best = n_refined;

    FluxFitResult out;
    out.residual_rms = residual_for(n_best, y, geometry, source_index, &out.fit.a);
    out.fit.n = n_best;
    out.at_boundary = n_best <= options.n_tolerance || n_best >= options.n_max - options.n_tolerance;
    return out;
}

}  // namespace sputter
