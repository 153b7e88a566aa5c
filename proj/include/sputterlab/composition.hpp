#pragma once

#include <map>
#include <string>
#include <vector>

#include "sputterlab/flux.hpp"
#include "sputterlab/gp/model.hpp"
#include "sputterlab/search_box.hpp"

namespace sputter {

struct ElementProps {
    std::string symbol;
    double atomic_mass = 0.0;  // g/mol
    double density = 0.0;      // g/cm^3

    void validate() const;
};

// Cu, Sn, Zr, Ba, Ti.
const std::map<std::string, ElementProps>& builtin_elements();
// Built-in entry, or the override when one is given for the symbol.
ElementProps element_props(const std::string& symbol, const std::map<std::string, ElementProps>& overrides = {});

// One active source of a co-sputtered film.
struct ActiveSource {
    FluxFit fit;
    SourcePose pose;
    ElementProps element;
};

struct CompositionPoint {
    double x_mm = 0.0;
    double y_mm = 0.0;
    std::vector<double> molar_rate;  // nmol cm^-2 s^-1, per source
    std::vector<double> fraction;    // atomic fraction per source; meaningless when !defined
    double thickness_rate = 0.0;     // nm/s
    bool defined = false;            // total molar rate > 0
};

struct CompositionMap {
    std::vector<std::string> elements;
    double pitch_mm = 1.0;
    std::vector<CompositionPoint> points;
};

// Composition and thickness rate at one substrate point.
CompositionPoint composition_at(const std::vector<ActiveSource>& sources, const Vec3& point_mm, const Vec3& normal);

// Cartesian grid of the given pitch, clipped to the substrate disk.
CompositionMap composition_map(const std::vector<ActiveSource>& sources, const ChamberGeometry& geometry,
                               double pitch_mm = 1.0);

struct ThicknessLookup {
    double thickness_nm = 0.0;
    bool snapped = false;  // point was off-grid; nearest grid point used
    double grid_x_mm = 0.0;
    double grid_y_mm = 0.0;
};

// Thickness rate x time at (x, y). Off-grid points snap to the nearest grid point,
// or throw InvalidArgument in strict mode.
ThicknessLookup thickness_at(const CompositionMap& map, double x_mm, double y_mm, double time_s, bool strict = false);

// Trained models of the three sensors of one source.
struct SourceChannelModels {
    std::size_t pose_index = 0;
    ElementProps element;
    std::array<GpModel, 3> sensors;
};

// Model means at (power, pressure), clamped at zero; one triple per source.
std::vector<SensorReading> predict_sensor_rates(const std::vector<SourceChannelModels>& models,
                                                const std::vector<double>& powers_w, double pressure_mtorr);

struct RecipeQuery {
    std::size_t target_source = 0;  // fraction of this source's element among all sources
    double target_fraction = 0.66;
    double tolerance = 0.01;
    double thickness_nm = 150.0;
    double max_time_s = 900.0;
    std::vector<AxisRange> powers;  // one per source
    AxisRange pressure{4.0, 43.0, 3.0};

    void validate(std::size_t sources) const;
};

struct Recipe {
    std::vector<double> powers_w;
    double pressure_mtorr = 0.0;
    double center_fraction = 0.0;
    double thickness_rate = 0.0;  // nm/s at the substrate center
    double time_s = 0.0;          // to reach the target thickness
};

struct RecipeSearch {
    std::vector<Recipe> recipes;  // sorted by |fraction - target|, then time
    std::size_t grid_size = 0;
    std::size_t degenerate = 0;  // recipes with a source whose flux fit failed
    std::vector<Recipe> nearest_misses;  // best few rejected recipes, same order
};

RecipeSearch find_recipes(const std::vector<SourceChannelModels>& models, const RecipeQuery& query,
                          const ChamberGeometry& geometry);

// Center composition of one recipe from per-source sensor readings, via flux fits.
CompositionPoint recipe_center(const std::vector<SensorReading>& readings, const std::vector<std::size_t>& pose_indices,
                               const std::vector<ElementProps>& elements, const ChamberGeometry& geometry);

}  // namespace sputter
