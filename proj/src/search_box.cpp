#include "sputterlab/search_box.hpp"

#include <algorithm>
#include <cmath>

#include <boost/random/sobol.hpp>

#include "sputterlab/errors.hpp"

namespace sputter {

namespace {
constexpr double kGridSlack = 1e-9;
}

std::vector<double> AxisRange::values() const {
    std::vector<double> v;
    const int n = static_cast<int>(std::floor((max - min) / step + kGridSlack));
    for (int i = 0; i <= n; ++i) v.push_back(min + i * step);
    return v;
}

double AxisRange::snap(double v) const {
    const auto vals = values();
    double best = vals.front();
    for (double g : vals) {
        if (std::abs(g - v) < std::abs(best - v) - kGridSlack) best = g;
    }
    return best;
}

InitCase parse_case(int c) {
    if (c < 1 || c > 3) throw ConfigError("case must be 1, 2 or 3");
    return static_cast<InitCase>(c);
}

bool is_restricted(InitCase c) { return c != InitCase::Full; }

void SearchBox::validate() const {
    for (const AxisRange* r : {&power_w, &pressure_mtorr}) {
        if (!(r->max > r->min) || !(r->step > 0.0)) throw ConfigError("search box axis needs max > min and step > 0");
    }
    if (pressure_floor_mtorr < pressure_mtorr.min || pressure_floor_mtorr > pressure_mtorr.max) {
        throw ConfigError("pressure floor lies outside the pressure range");
    }
}

std::vector<ProcessSetpoint> SearchBox::grid() const {
    std::vector<ProcessSetpoint> out;
    for (double p : power_w.values())
        for (double q : pressure_mtorr.values()) out.push_back({p, q});
    return out;
}

bool SearchBox::admits(const ProcessSetpoint& p, InitCase c) const {
    return !is_restricted(c) || p.pressure_mtorr >= pressure_floor_mtorr - kGridSlack;
}

std::vector<ProcessSetpoint> SearchBox::grid(InitCase c) const {
    std::vector<ProcessSetpoint> out;
    for (const auto& p : grid())
        if (admits(p, c)) out.push_back(p);
    return out;
}

std::vector<ProcessSetpoint> init_points(const SearchBox& box, InitCase c, int count, std::mt19937_64& rng) {
    box.validate();
    if (count < 1) throw ConfigError("init count must be >= 1");
    const auto pressures = box.pressure_mtorr.values();
    // lowest admissible grid pressure
    double p_lo = box.pressure_mtorr.min;
    if (is_restricted(c)) {
        p_lo = *std::find_if(pressures.begin(), pressures.end(),
                             [&](double p) { return p >= box.pressure_floor_mtorr - kGridSlack; });
    }
    const double p_hi = pressures.back();
    const auto powers = box.power_w.values();
    const double w_lo = powers.front();
    const double w_hi = powers.back();

    if (c == InitCase::CornersCenter) {
        if (count != 5) throw ConfigError("case 3 uses exactly 5 initial points (4 corners + center)");
        // center of the box: snapped to the grid
        const double wc = box.power_w.snap(0.5 * (w_lo + w_hi));
        const double pc = box.pressure_mtorr.snap(0.5 * (p_lo + p_hi));
        return {{w_lo, p_lo}, {w_hi, p_lo}, {w_lo, p_hi}, {w_hi, p_hi}, {wc, pc}};
    }

    const auto admissible = box.grid(c);
    if (static_cast<std::size_t>(count) > admissible.size()) throw ConfigError("init count exceeds grid size");

    // Sobol points with a random digital shift, mapped into the (restricted) box.
    boost::random::sobol_engine<std::uint32_t, 32> sobol(2);
    std::uniform_int_distribution<std::uint32_t> bits;
    const std::uint32_t shift[2] = {bits(rng), bits(rng)};
    constexpr double kScale = 4294967296.0;  // 2^32

    std::vector<ProcessSetpoint> out;
    for (int guard = 0; static_cast<int>(out.size()) < count && guard < 1 << 16; ++guard) {
        const double u0 = (sobol() ^ shift[0]) / kScale;
        const double u1 = (sobol() ^ shift[1]) / kScale;
        // grid-cell centered mapping so every grid value is equally likely
        const double wspan = w_hi - w_lo + box.power_w.step;
        const double pspan = p_hi - p_lo + box.pressure_mtorr.step;
        ProcessSetpoint p{box.power_w.snap(w_lo - 0.5 * box.power_w.step + u0 * wspan),
                          box.pressure_mtorr.snap(p_lo - 0.5 * box.pressure_mtorr.step + u1 * pspan)};
        p.pressure_mtorr = std::max(p.pressure_mtorr, p_lo);
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    return out;
}

}  // namespace sputter
