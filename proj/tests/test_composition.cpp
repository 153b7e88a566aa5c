#include <doctest.h>

#include <cmath>
#include <random>

#include "sputterlab/campaign.hpp"
#include "sputterlab/chamber.hpp"
#include "sputterlab/composition.hpp"
#include "sputterlab/errors.hpp"

using namespace sputter;

namespace {

SourceChannelModels train_source(const SourceModel& src, std::size_t pose, int stride) {
    const SearchBox box;
    std::vector<ProcessSetpoint> pts;
    for (const auto& p : box.grid(InitCase::CornersCenter)) {
        if (static_cast<int>(std::lround(p.power_w + p.pressure_mtorr)) % stride == 2) pts.push_back(p);
    }
    SourceChannelModels m;
    m.pose_index = pose;
    m.element = element_props(src.element);
    CampaignConfig cfg;
    cfg.map_restarts = 2;
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<double> y;
        for (const auto& p : pts) y.push_back(true_rate(src, p, s));
        m.sensors[s] = train_model(pts, y, box, ModelKind::PointEstimate, 1, cfg);
    }
    return m;
}

}  // namespace

TEST_CASE("element table") {
    CHECK(element_props("Cu").atomic_mass == 63.546);
    CHECK(element_props("Sn").density == 7.287);
    CHECK(element_props("Zr", {{"Zr", {"Zr", 91.0, 6.5}}}).atomic_mass == 91.0);
    CHECK_THROWS_AS(element_props("Xx"), ConfigError);
}

TEST_CASE("composition at a point") {
    const ChamberGeometry g = default_geometry();
    const Vec3 c = g.substrate.center_mm;
    const Vec3 n = g.substrate.normal;
    const ElementProps cu = element_props("Cu");
    const ElementProps sn = element_props("Sn");

    SUBCASE("a single source is pure") {
        const CompositionPoint p = composition_at({{{500.0, 2.0}, g.sources[0], cu}}, Vec3(5, 3, 0), n);
        REQUIRE(p.defined);
        CHECK(p.fraction[0] == 1.0);
        CHECK(p.thickness_rate > 0.0);
    }
    SUBCASE("mirrored identical sources give 0.5 at the center") {
        const CompositionPoint p = composition_at({{{500.0, 2.0}, g.sources[0], cu}, {{500.0, 2.0}, g.sources[3], cu}}, c, n);
        CHECK(p.fraction[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p.fraction[0] + p.fraction[1] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("equal mass flux of Cu and Sn") {
        const CompositionPoint p = composition_at({{{500.0, 2.0}, g.sources[0], cu}, {{500.0, 2.0}, g.sources[3], sn}}, c, n);
        CHECK(p.fraction[0] == doctest::Approx(0.6513365815117197).epsilon(1e-12));
    }
    SUBCASE("additivity and scale equivariance") {
        const std::vector<ActiveSource> both{{{400.0, 1.5}, g.sources[1], cu}, {{700.0, 3.0}, g.sources[4], sn}};
        const Vec3 x(7, -4, 0);
        const CompositionPoint p = composition_at(both, x, n);
        const CompositionPoint a = composition_at({both[0]}, x, n);
        const CompositionPoint b = composition_at({both[1]}, x, n);
        CHECK(p.molar_rate[0] == doctest::Approx(a.molar_rate[0]).epsilon(1e-14));
        CHECK(p.molar_rate[1] == doctest::Approx(b.molar_rate[0]).epsilon(1e-14));
        CHECK(p.thickness_rate == doctest::Approx(a.thickness_rate + b.thickness_rate).epsilon(1e-14));

        std::vector<ActiveSource> scaled = both;
        for (auto& s : scaled) s.fit.a *= 3.0;
        const CompositionPoint q = composition_at(scaled, x, n);
        CHECK(q.fraction[0] == doctest::Approx(p.fraction[0]).epsilon(1e-13));
        CHECK(q.thickness_rate == doctest::Approx(3.0 * p.thickness_rate).epsilon(1e-13));
    }
    SUBCASE("no flux leaves the point undefined") {
        const CompositionPoint p = composition_at({{{0.0, 2.0}, g.sources[0], cu}}, c, n);
        CHECK_FALSE(p.defined);
    }
}

TEST_CASE("composition map and thickness lookup") {
    const ChamberGeometry g = default_geometry();
    const std::vector<ActiveSource> src{{{500.0, 2.0}, g.sources[0], element_props("Cu")},
                                        {{500.0, 2.0}, g.sources[3], element_props("Sn")}};
    const CompositionMap map = composition_map(src, g, 1.0);
    CHECK(map.elements == std::vector<std::string>{"Cu", "Sn"});
    REQUIRE(map.points.size() > 1900);
    for (const auto& p : map.points) {
        CHECK(std::hypot(p.x_mm, p.y_mm) <= g.substrate.radius_mm + 1e-9);
        CHECK(p.fraction[0] + p.fraction[1] == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(composition_map(src, g, 0.0), InvalidArgument);

    CompositionMap flat;
    flat.pitch_mm = 1.0;
    CompositionPoint pt;
    pt.thickness_rate = 0.2;
    pt.defined = true;
    flat.points.push_back(pt);
    CHECK(thickness_at(flat, 0.0, 0.0, 900.0).thickness_nm == doctest::Approx(180.0).epsilon(1e-14));
    const ThicknessLookup snapped = thickness_at(flat, 0.3, -0.2, 900.0);
    CHECK(snapped.snapped);
    CHECK(snapped.thickness_nm == doctest::Approx(180.0));
    CHECK_THROWS_AS(thickness_at(flat, 0.3, -0.2, 900.0, true), InvalidArgument);
}

TEST_CASE("recipe search") {
    const ChamberGeometry g = default_geometry();
    SourceParams cu;
    cu.element = "Cu";
    SourceParams sn;
    sn.element = "Sn";
    sn.emission_per_watt = 2500.0;
    const SourceModel a = make_source(g, 0, cu);
    const SourceModel b = make_source(g, 3, sn);
    const std::vector<SourceChannelModels> models{train_source(a, 0, 6), train_source(b, 3, 6)};

    RecipeQuery q;
    q.powers = {AxisRange{1, 43, 3}, AxisRange{1, 43, 3}};
    q.pressure = AxisRange{4, 43, 3};

    SUBCASE("tolerance 1 accepts every non-degenerate combination") {
        q.tolerance = 1.0;
        q.max_time_s = 1e12;
        const RecipeSearch r = find_recipes(models, q, g);
        CHECK(r.grid_size == 15 * 15 * 14);
        CHECK(r.recipes.size() == r.grid_size - r.degenerate);
        CHECK(r.nearest_misses.empty());
    }
    SUBCASE("hits are within tolerance, sorted, and stable under source permutation") {
        const RecipeSearch r = find_recipes(models, q, g);
        REQUIRE_FALSE(r.recipes.empty());
        for (std::size_t i = 0; i < r.recipes.size(); ++i) {
            const Recipe& x = r.recipes[i];
            CHECK(std::abs(x.center_fraction - 0.66) <= 0.01);
            CHECK(x.time_s <= 900.0);
            CHECK(x.time_s * x.thickness_rate == doctest::Approx(150.0));
            if (i > 0) CHECK(std::abs(r.recipes[i - 1].center_fraction - 0.66) <= std::abs(x.center_fraction - 0.66));
        }
        for (const Recipe& m : r.nearest_misses) {
            CHECK((std::abs(m.center_fraction - 0.66) > 0.01 || m.time_s > 900.0));
        }

        RecipeQuery swapped = q;
        swapped.target_source = 1;
        const RecipeSearch s = find_recipes({models[1], models[0]}, swapped, g);
        REQUIRE(s.recipes.size() == r.recipes.size());
        for (std::size_t i = 0; i < r.recipes.size(); ++i) {
            bool found = false;
            for (const Recipe& y : s.recipes) {
                if (y.pressure_mtorr == r.recipes[i].pressure_mtorr && y.powers_w[0] == r.recipes[i].powers_w[1] &&
                    y.powers_w[1] == r.recipes[i].powers_w[0]) {
                    found = std::abs(y.center_fraction - r.recipes[i].center_fraction) < 1e-12;
                }
            }
            CHECK(found);
        }
    }
    SUBCASE("invalid queries") {
        q.powers.pop_back();
        CHECK_THROWS_AS(find_recipes(models, q, g), ConfigError);
        q.powers.push_back(AxisRange{1, 43, 3});
        q.target_fraction = 1.5;
        CHECK_THROWS_AS(find_recipes(models, q, g), ConfigError);
        q.target_fraction = 0.66;
        std::vector<SourceChannelModels> empty = models;
        empty[1].sensors[2] = GpModel{};
        CHECK_THROWS_AS(find_recipes(empty, q, g), ConfigError);
    }
}
