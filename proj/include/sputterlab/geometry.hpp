#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sputter {

using Vec3 = Eigen::Vector3d;

// Stored geometry is in millimetres; flux evaluation converts to cm internally.
struct SourcePose {
    Vec3 position_mm = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();  // unit emission axis
};

struct SensorPose {
    Vec3 position_mm = Vec3::Zero();
    Vec3 normal = -Vec3::UnitZ();  // unit surface normal, facing the sources
};

struct Substrate {
    Vec3 center_mm = Vec3::Zero();
    Vec3 normal = -Vec3::UnitZ();
    double radius_mm = 25.0;
};

struct ChamberGeometry {
    std::vector<SourcePose> sources;
    std::array<SensorPose, 3> qcm_sensors;
    Substrate substrate;
    double target_substrate_distance_mm = 155.0;

    // Throws InvalidArgument when a direction is not unit length, the radius is not
    // positive or there are no sources.
    void validate() const;
};

// Knobs for the default chamber: six sources on a ring aimed at the substrate
// center, three QCMs at 120 degree intervals around the holder.
struct DefaultLayout {
    int source_count = 6;
    double ring_radius_mm = 120.0;
    double target_substrate_distance_mm = 155.0;
    double sensor_radius_mm = 60.0;
    double sensor_standoff_mm = 10.0;  // distance of the QCM faces below the substrate plane
    double substrate_radius_mm = 25.0;
};

ChamberGeometry default_geometry(const DefaultLayout& layout = {});

// Angles and distance of Fig.-2 style source/receiver geometry.
struct Incidence {
    double theta = 0.0;  // between receiving normal and (source - point)
    double phi = 0.0;    // between emission axis and (point - source)
    double r_mm = 0.0;
};

Incidence geometry_angles(const SourcePose& source, const Vec3& point_mm, const Vec3& surface_normal);

// Quartz crystal constants, defaulting to AT-cut quartz at 6 MHz.
struct QuartzCrystal {
    double rho_g_cm3 = 2.648;
    double mu_g_cm_s2 = 2.947e11;
    double f0_hz = 6.0e6;
};

// Mass deposition rate (ng cm^-2 s^-1) from the measured frequency slope (Hz/s),
// the time derivative of the Sauerbrey relation.
double sauerbrey_rate(double freq_slope_hz_s, const QuartzCrystal& crystal = {});

// Stable 64-bit digest of the geometry, used in file provenance.
std::string geometry_digest(const ChamberGeometry& geometry);

}  // namespace sputter
