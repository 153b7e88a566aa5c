#pragma once

#include <optional>
#include <vector>

#include "sputterlab/flux.hpp"
#include "sputterlab/gp/model.hpp"
#include "sputterlab/search_box.hpp"

namespace sputter {

struct DatasetRow {
    int source_id = 0;
    ProcessSetpoint setpoint;
    SensorReading reading;
};

// Rows of (source, setpoint, three sensor rates); the on-disk dataset format.
struct Dataset {
    std::vector<DatasetRow> rows;

    std::optional<SensorReading> find(int source_id, const ProcessSetpoint& p) const;
};

// Noise-free (or averaged) readings over the full factorial grid of a box, used
// only to score models.
struct GroundTruthGrid {
    std::vector<ProcessSetpoint> points;
    std::vector<SensorReading> readings;

    std::size_t size() const { return points.size(); }
    GroundTruthGrid restricted(const SearchBox& box, InitCase c) const;
    Eigen::VectorXd channel(std::size_t sensor) const;
};

}  // namespace sputter
