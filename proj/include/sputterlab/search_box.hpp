#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sputterlab/gp/model.hpp"

namespace sputter {

struct AxisRange {
    double min = 1.0;
    double max = 43.0;
    double step = 3.0;

    // Grid values min, min+step, ... up to max (inclusive within rounding).
    std::vector<double> values() const;
    // Nearest grid value; ties go to the lower value.
    double snap(double v) const;
};

// Initialization/restriction strategy of an active-learning campaign.
//  1: Sobol start over the full box
//  2: Sobol start, pressure restricted to >= floor
//  3: four corners + center of the restricted box
enum class InitCase { Full = 1, Restricted = 2, CornersCenter = 3 };

InitCase parse_case(int c);
bool is_restricted(InitCase c);

struct SearchBox {
    AxisRange power_w{1.0, 43.0, 3.0};
    AxisRange pressure_mtorr{1.0, 43.0, 3.0};
    double pressure_floor_mtorr = 4.0;

    void validate() const;

    Eigen::Vector2d lower() const { return {power_w.min, pressure_mtorr.min}; }
    Eigen::Vector2d upper() const { return {power_w.max, pressure_mtorr.max}; }

    // Full factorial grid, power-major order.
    std::vector<ProcessSetpoint> grid() const;
    // Grid points admissible for the case (pressure >= floor for cases 2 and 3).
    std::vector<ProcessSetpoint> grid(InitCase c) const;
    bool admits(const ProcessSetpoint& p, InitCase c) const;
};

// Initial design for a campaign, snapped to the grid and free of duplicates.
std::vector<ProcessSetpoint> init_points(const SearchBox& box, InitCase c, int count, std::mt19937_64& rng);

}  // namespace sputter
