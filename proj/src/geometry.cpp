#include "sputterlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sputterlab/errors.hpp"
#include "sputterlab/io/digest.hpp"

namespace sputter {

namespace {

constexpr double kUnitTolerance = 1e-9;

void require_unit(const Vec3& v, const std::string& what) {
    if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitTolerance) {
        throw InvalidArgument(what + " must be a unit vector");
    }
}

}  // namespace

void ChamberGeometry::validate() const {
    if (sources.empty()) throw InvalidArgument("geometry has no sources");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        require_unit(sources[i].axis, "source " + std::to_string(i) + " axis");
        if (!sources[i].position_mm.allFinite()) throw InvalidArgument("non-finite source position");
    }
    for (std::size_t i = 0; i < qcm_sensors.size(); ++i) {
        require_unit(qcm_sensors[i].normal, "sensor " + std::to_string(i) + " normal");
        if (!qcm_sensors[i].position_mm.allFinite()) throw InvalidArgument("non-finite sensor position");
    }
    require_unit(substrate.normal, "substrate normal");
    if (!(substrate.radius_mm > 0.0)) throw InvalidArgument("substrate radius must be positive");
    if (!(target_substrate_distance_mm > 0.0)) throw InvalidArgument("target-substrate distance must be positive");
}

ChamberGeometry default_geometry(const DefaultLayout& layout) {
    if (layout.ring_radius_mm >= layout.target_substrate_distance_mm) {
        throw InvalidArgument("ring radius must be smaller than the target-substrate distance");
    }
    ChamberGeometry g;
    g.target_substrate_distance_mm = layout.target_substrate_distance_mm;
    g.substrate.radius_mm = layout.substrate_radius_mm;

    // Sources sit below the substrate (sputter-up) so that their distance to the
    // substrate center equals the target-substrate distance.
    const double depth = std::sqrt(layout.target_substrate_distance_mm * layout.target_substrate_distance_mm -
                                   layout.ring_radius_mm * layout.ring_radius_mm);
    for (int k = 0; k < layout.source_count; ++k) {
        const double psi = 2.0 * std::numbers::pi * k / layout.source_count;
        SourcePose s;
        s.position_mm = Vec3(layout.ring_radius_mm * std::cos(psi), layout.ring_radius_mm * std::sin(psi), -depth);
        s.axis = (g.substrate.center_mm - s.position_mm).normalized();
        g.sources.push_back(s);
    }
    for (int i = 0; i < 3; ++i) {
        const double psi = 2.0 * std::numbers::pi * i / 3.0;
        g.qcm_sensors[i].position_mm = Vec3(layout.sensor_radius_mm * std::cos(psi),
                                            layout.sensor_radius_mm * std::sin(psi), -layout.sensor_standoff_mm);
        g.qcm_sensors[i].normal = -Vec3::UnitZ();
    }
    return g;
}

Incidence geometry_angles(const SourcePose& source, const Vec3& point_mm, const Vec3& surface_normal) {
    const Vec3 d = point_mm - source.position_mm;
    const double r = d.norm();
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw InvalidArgument("evaluation point coincides with the source");
    }
    const Vec3 u = d / r;
    // clamp guards acos against rounding just outside [-1, 1]
    const double cos_phi = std::clamp(source.axis.dot(u), -1.0, 1.0);
    const double cos_theta = std::clamp(surface_normal.dot(-u), -1.0, 1.0);
    return {std::acos(cos_theta), std::acos(cos_phi), r};
}

double sauerbrey_rate(double freq_slope_hz_s, const QuartzCrystal& crystal) {
    if (!std::isfinite(freq_slope_hz_s)) throw InvalidArgument("frequency slope must be finite");
    if (!(crystal.rho_g_cm3 > 0.0 && crystal.mu_g_cm_s2 > 0.0 && crystal.f0_hz > 0.0)) {
        throw InvalidArgument("quartz constants must be positive");
    }
    constexpr double kNanogramPerGram = 1e9;
    const double sensitivity = std::sqrt(crystal.mu_g_cm_s2 * crystal.rho_g_cm3) / (2.0 * crystal.f0_hz * crystal.f0_hz);
    return -sensitivity * freq_slope_hz_s * kNanogramPerGram;
}

std::string geometry_digest(const ChamberGeometry& geometry) {
    Fnv1a h;
    auto add = [&h](const Vec3& v) {
        for (int i = 0; i < 3; ++i) h.add(v[i]);
    };
    for (const auto& s : geometry.sources) {
        add(s.position_mm);
        add(s.axis);
    }
    for (const auto& s : geometry.qcm_sensors) {
        add(s.position_mm);
        add(s.normal);
    }
    add(geometry.substrate.center_mm);
    add(geometry.substrate.normal);
    h.add(geometry.substrate.radius_mm);
    h.add(geometry.target_substrate_distance_mm);
    return h.hex();
}

}  // namespace sputter
