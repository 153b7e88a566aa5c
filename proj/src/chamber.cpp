#include "sputterlab/chamber.hpp"

#include <cmath>

#include "sputterlab/errors.hpp"

namespace sputter {

std::optional<SensorReading> Dataset::find(int source_id, const ProcessSetpoint& p) const {
    for (const auto& r : rows)
        if (r.source_id == source_id && r.setpoint == p) return r.reading;
    return std::nullopt;
}

GroundTruthGrid GroundTruthGrid::restricted(const SearchBox& box, InitCase c) const {
    GroundTruthGrid out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (box.admits(points[i], c)) {
            out.points.push_back(points[i]);
            out.readings.push_back(readings[i]);
        }
    }
    return out;
}

Eigen::VectorXd GroundTruthGrid::channel(std::size_t sensor) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(readings.size()));
    for (std::size_t i = 0; i < readings.size(); ++i) v(i) = readings[i][sensor];
    return v;
}

double RateLaw::ignition(double power_w, double pressure_mtorr) const {
    return 1.0 / (1.0 + std::exp(-(pressure_mtorr - extinction_pressure(power_w)) / width_mtorr));
}

double RateLaw::pressure_factor(double power_w, double pressure_mtorr) const {
    return std::pow(1.0 + beta_per_mtorr * pressure_mtorr, -gamma) * ignition(power_w, pressure_mtorr);
}

void RateLaw::validate() const {
    if (!(beta_per_mtorr > 0.0 && gamma > 0.0 && width_mtorr > 0.0 && p_ext_mtorr >= 0.0)) {
        throw ConfigError("rate law needs beta, gamma, width > 0 and p_ext >= 0");
    }
}

double rate_law(double alpha, double power_w, double pressure_mtorr, const RateLaw& law) {
    return alpha * power_w * law.pressure_factor(power_w, pressure_mtorr);
}

FluxFit SourceModel::plume(const ProcessSetpoint& sp) const {
    return {emission_per_watt * sp.power_w * law.pressure_factor(sp.power_w, sp.pressure_mtorr),
            order.at(sp.power_w, sp.pressure_mtorr)};
}

std::array<double, 3> SourceModel::alpha(const ProcessSetpoint& sp) const {
    const double n = order.at(sp.power_w, sp.pressure_mtorr);
    std::array<double, 3> a{};
    for (std::size_t i = 0; i < 3; ++i) {
        a[i] = emission_per_watt * geometric_factor(n, pose, sensors[i].position_mm, sensors[i].normal);
    }
    return a;
}

void SourceModel::validate() const {
    law.validate();
    if (!(emission_per_watt > 0.0)) throw ConfigError("emission per watt must be positive");
    if (!(order.n0 >= 0.0)) throw ConfigError("emission order must be non-negative");
    const std::array<double, 3> a = alpha({1.0, 0.0});
    for (double v : a)
        if (!(v > 0.0)) throw ConfigError("source does not illuminate every QCM (alpha must be > 0)");
}

SourceModel make_source(const ChamberGeometry& geometry, std::size_t pose_index, const SourceParams& params) {
    if (pose_index >= geometry.sources.size()) throw ConfigError("source pose index out of range");
    SourceModel s;
    s.element = params.element;
    s.pose = geometry.sources[pose_index];
    s.sensors = geometry.qcm_sensors;
    s.emission_per_watt = params.emission_per_watt;
    s.law = params.law;
    s.order = params.order;
    s.validate();
    return s;
}

double true_rate(const SourceModel& source, const ProcessSetpoint& sp, std::size_t sensor) {
    if (sensor >= 3) throw InvalidArgument("sensor index out of range");
    if (sp.power_w < 0.0 || sp.pressure_mtorr < 0.0) throw InvalidArgument("power and pressure must be >= 0");
    return rate_law(source.alpha(sp)[sensor], sp.power_w, sp.pressure_mtorr, source.law);
}

SensorReading true_readings(const SourceModel& source, const ProcessSetpoint& sp) {
    SensorReading r;
    for (std::size_t i = 0; i < 3; ++i) r[i] = true_rate(source, sp, i);
    return r;
}

SensorReading measure(const std::vector<SourceModel>& sources, const std::vector<double>& powers_w,
                      double pressure_mtorr, const NoiseModel& noise, std::mt19937_64& rng) {
    if (sources.empty()) throw InvalidArgument("measure needs at least one source");
    if (powers_w.size() != sources.size()) throw InvalidArgument("one power per source required");
    if (noise.relative < 0.0 || noise.floor < 0.0) throw InvalidArgument("noise levels must be >= 0");
    SensorReading total;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        const SensorReading r = true_readings(sources[k], {powers_w[k], pressure_mtorr});
        for (std::size_t i = 0; i < 3; ++i) total[i] += r[i];
    }
    if (noise.silent()) return total;
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        const double mult = z(rng);
        const double add = z(rng);
        total[i] = total[i] * (1.0 + noise.relative * mult) + noise.floor * add;
    }
    return total;
}

GeneratedGrid generate_grid(const SourceModel& source, const SearchBox& box, const NoiseModel& noise,
                            std::mt19937_64& rng, int source_id) {
    box.validate();
    GeneratedGrid out;
    for (const auto& p : box.grid()) {
        out.truth.points.push_back(p);
        out.truth.readings.push_back(true_readings(source, p));
        out.noisy.rows.push_back({source_id, p, measure({source}, {p.power_w}, p.pressure_mtorr, noise, rng)});
    }
    return out;
}

}  // namespace sputter
