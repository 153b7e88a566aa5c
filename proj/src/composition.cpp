#include "sputterlab/composition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "sputterlab/errors.hpp"

namespace sputter {

void ElementProps::validate() const {
    if (symbol.empty()) throw ConfigError("element symbol must not be empty");
    if (!(atomic_mass > 0.0 && density > 0.0)) {
        throw ConfigError("element " + symbol + " needs positive atomic mass and density");
    }
}

const std::map<std::string, ElementProps>& builtin_elements() {
    static const std::map<std::string, ElementProps> table{
        {"Cu", {"Cu", 63.546, 8.96}}, {"Sn", {"Sn", 118.71, 7.287}}, {"Zr", {"Zr", 91.224, 6.52}},
        {"Ba", {"Ba", 137.327, 3.51}}, {"Ti", {"Ti", 47.867, 4.506}},
    };
    return table;
}

ElementProps element_props(const std::string& symbol, const std::map<std::string, ElementProps>& overrides) {
    if (auto it = overrides.find(symbol); it != overrides.end()) {
        it->second.validate();
        return it->second;
    }
    const auto& table = builtin_elements();
    auto it = table.find(symbol);
    if (it == table.end()) throw ConfigError("unknown element '" + symbol + "'; give its properties explicitly");
    return it->second;
}

CompositionPoint composition_at(const std::vector<ActiveSource>& sources, const Vec3& point_mm, const Vec3& normal) {
    CompositionPoint out;
    out.molar_rate.resize(sources.size());
    out.fraction.assign(sources.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        const auto& s = sources[k];
        const double mass = flux_at(s.fit, s.pose, point_mm, normal);  // ng cm^-2 s^-1
        out.molar_rate[k] = mass / s.element.atomic_mass;              // nmol cm^-2 s^-1
        out.thickness_rate += mass / s.element.density * 0.01;         // 1e-9 g/cm^2 / (g/cm^3) = 1e-2 nm
        total += out.molar_rate[k];
    }
    if (total > 0.0) {
        out.defined = true;
        for (std::size_t k = 0; k < sources.size(); ++k) out.fraction[k] = out.molar_rate[k] / total;
    }
    return out;
}

namespace {

// In-plane axes of the substrate; x stays aligned with the chamber x axis.
std::pair<Vec3, Vec3> substrate_axes(const Vec3& normal) {
    const Vec3 n = normal.normalized();
    Vec3 u = Vec3::UnitX() - n * n.x();
    if (u.norm() < 1e-9) u = Vec3::UnitY() - n * n.y();
    u.normalize();
    return {u, u.cross(n)};
}

}  // namespace

CompositionMap composition_map(const std::vector<ActiveSource>& sources, const ChamberGeometry& geometry,
                               double pitch_mm) {
    if (sources.empty()) throw InvalidArgument("composition map needs at least one source");
    if (!(pitch_mm > 0.0)) throw InvalidArgument("pitch must be positive");
    for (const auto& s : sources) s.element.validate();
    const auto& sub = geometry.substrate;
    const auto [u, v] = substrate_axes(sub.normal);
    CompositionMap map;
    map.pitch_mm = pitch_mm;
    for (const auto& s : sources) map.elements.push_back(s.element.symbol);
    const int k_max = static_cast<int>(std::floor(sub.radius_mm / pitch_mm + 1e-9));
    const double r2 = sub.radius_mm * sub.radius_mm * (1.0 + 1e-12);
    for (int j = -k_max; j <= k_max; ++j) {
        for (int i = -k_max; i <= k_max; ++i) {
            const double x = i * pitch_mm, y = j * pitch_mm;
            if (x * x + y * y > r2) continue;
            CompositionPoint p = composition_at(sources, sub.center_mm + x * u + y * v, sub.normal);
            p.x_mm = x;
            p.y_mm = y;
            map.points.push_back(std::move(p));
        }
    }
    return map;
}

ThicknessLookup thickness_at(const CompositionMap& map, double x_mm, double y_mm, double time_s, bool strict) {
    if (map.points.empty()) throw InvalidArgument("empty composition map");
    if (time_s < 0.0) throw InvalidArgument("time must be >= 0");
    const CompositionPoint* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& p : map.points) {
        const double d = std::hypot(p.x_mm - x_mm, p.y_mm - y_mm);
        if (d < best_d) {
            best_d = d;
            best = &p;
        }
    }
    ThicknessLookup out;
    out.snapped = best_d > 1e-9 * map.pitch_mm;
    if (out.snapped && strict) throw InvalidArgument("point is not on the composition map grid");
    out.grid_x_mm = best->x_mm;
    out.grid_y_mm = best->y_mm;
    out.thickness_nm = best->thickness_rate * time_s;
    return out;
}

std::vector<SensorReading> predict_sensor_rates(const std::vector<SourceChannelModels>& models,
                                                const std::vector<double>& powers_w, double pressure_mtorr) {
    if (powers_w.size() != models.size()) throw InvalidArgument("one power per source required");
    std::vector<SensorReading> out(models.size());
    Eigen::MatrixXd q(1, 2);
    for (std::size_t k = 0; k < models.size(); ++k) {
        q << powers_w[k], pressure_mtorr;
        for (std::size_t i = 0; i < 3; ++i) {
            if (models[k].sensors[i].size() == 0) {
                throw ConfigError("no trained model for source " + std::to_string(k) + " sensor " + std::to_string(i + 1));
            }
            out[k][i] = std::max(0.0, models[k].sensors[i].predict_mean(q)(0));
        }
    }
    return out;
}

void RecipeQuery::validate(std::size_t sources) const {
    if (sources == 0) throw ConfigError("recipe search needs at least one source");
    if (target_source >= sources) throw ConfigError("target source out of range");
    if (powers.size() != sources) throw ConfigError("recipe grid needs one power range per source");
    if (!(tolerance > 0.0)) throw ConfigError("fraction tolerance must be positive");
    if (!(thickness_nm > 0.0 && max_time_s > 0.0)) throw ConfigError("thickness and max time must be positive");
    if (!(target_fraction >= 0.0 && target_fraction <= 1.0)) throw ConfigError("target fraction must lie in [0, 1]");
}

CompositionPoint recipe_center(const std::vector<SensorReading>& readings, const std::vector<std::size_t>& pose_indices,
                               const std::vector<ElementProps>& elements, const ChamberGeometry& geometry) {
    if (readings.size() != pose_indices.size() || readings.size() != elements.size()) {
        throw InvalidArgument("one reading, pose and element per source required");
    }
    std::vector<ActiveSource> active;
    for (std::size_t k = 0; k < readings.size(); ++k) {
        const auto fit = fit_flux(readings[k], geometry, pose_indices[k]);
        active.push_back({fit.fit, geometry.sources[pose_indices[k]], elements[k]});
    }
    return composition_at(active, geometry.substrate.center_mm, geometry.substrate.normal);
}

namespace {

bool recipe_less(const Recipe& a, const Recipe& b, double target) {
    const double da = std::abs(a.center_fraction - target), db = std::abs(b.center_fraction - target);
    if (da != db) return da < db;
    if (a.time_s != b.time_s) return a.time_s < b.time_s;
    if (a.pressure_mtorr != b.pressure_mtorr) return a.pressure_mtorr < b.pressure_mtorr;
    return a.powers_w < b.powers_w;
}

// Center contribution of one source at one (power, pressure).
struct CenterTerm {
    double molar = 0.0;
    double thickness_rate = 0.0;
    bool ok = false;
};

}  // namespace

RecipeSearch find_recipes(const std::vector<SourceChannelModels>& models, const RecipeQuery& query,
                          const ChamberGeometry& geometry) {
    query.validate(models.size());
    const std::size_t ns = models.size();
    const std::vector<double> pressures = query.pressure.values();
    std::vector<std::vector<double>> powers(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        powers[k] = query.powers[k].values();
        models[k].element.validate();
        if (models[k].pose_index >= geometry.sources.size()) throw ConfigError("source pose index out of range");
    }

    // Sources act independently, so the per-source center terms are tabulated once.
    std::vector<std::vector<std::vector<CenterTerm>>> terms(ns);  // [source][pressure][power]
    for (std::size_t k = 0; k < ns; ++k) {
        std::vector<ProcessSetpoint> pts;
        for (double p : pressures)
            for (double w : powers[k]) pts.push_back({w, p});
        const Eigen::MatrixXd q = to_matrix(pts);
        std::array<Eigen::VectorXd, 3> mean;
        for (std::size_t i = 0; i < 3; ++i) {
            if (models[k].sensors[i].size() == 0) {
                throw ConfigError("no trained model for source " + std::to_string(k) + " sensor " + std::to_string(i + 1));
            }
            mean[i] = models[k].sensors[i].predict_mean(q);
        }
        terms[k].assign(pressures.size(), std::vector<CenterTerm>(powers[k].size()));
        for (std::size_t pi = 0; pi < pressures.size(); ++pi) {
            for (std::size_t wi = 0; wi < powers[k].size(); ++wi) {
                const auto row = static_cast<Eigen::Index>(pi * powers[k].size() + wi);
                SensorReading r;
                for (std::size_t i = 0; i < 3; ++i) r[i] = std::max(0.0, mean[i](row));
                CenterTerm& t = terms[k][pi][wi];
                try {
                    const auto fit = fit_flux(r, geometry, models[k].pose_index);
                    const auto c = composition_at({{fit.fit, geometry.sources[models[k].pose_index], models[k].element}},
                                                  geometry.substrate.center_mm, geometry.substrate.normal);
                    t.molar = c.molar_rate[0];
                    t.thickness_rate = c.thickness_rate;
                    t.ok = true;
                } catch (const DegenerateFit&) {
                    t.ok = false;
                }
            }
        }
    }

    RecipeSearch out;
    std::vector<Recipe> misses;
    std::vector<std::size_t> idx(ns, 0);
    for (std::size_t pi = 0; pi < pressures.size(); ++pi) {
        std::function<void(std::size_t)> visit = [&](std::size_t k) {
            if (k < ns) {
                for (idx[k] = 0; idx[k] < powers[k].size(); ++idx[k]) visit(k + 1);
                return;
            }
            ++out.grid_size;
            Recipe r;
            r.pressure_mtorr = pressures[pi];
            double total = 0.0;
            bool ok = true;
            for (std::size_t s = 0; s < ns; ++s) {
                const CenterTerm& t = terms[s][pi][idx[s]];
                r.powers_w.push_back(powers[s][idx[s]]);
                ok = ok && t.ok;
                total += t.molar;
                r.thickness_rate += t.thickness_rate;
            }
            if (!ok || !(total > 0.0) || !(r.thickness_rate > 0.0)) {
                ++out.degenerate;
                return;
            }
            r.center_fraction = terms[query.target_source][pi][idx[query.target_source]].molar / total;
            r.time_s = query.thickness_nm / r.thickness_rate;
            const bool hit = std::abs(r.center_fraction - query.target_fraction) <= query.tolerance &&
                             r.time_s <= query.max_time_s;
            (hit ? out.recipes : misses).push_back(std::move(r));
        };
        visit(0);
    }
    auto less = [&](const Recipe& a, const Recipe& b) { return recipe_less(a, b, query.target_fraction); };
    std::sort(out.recipes.begin(), out.recipes.end(), less);
    const std::size_t keep = std::min<std::size_t>(5, misses.size());
    std::partial_sort(misses.begin(), misses.begin() + static_cast<std::ptrdiff_t>(keep), misses.end(), less);
    misses.resize(keep);
    out.nearest_misses = std::move(misses);
    return out;
}

}  // namespace sputter
