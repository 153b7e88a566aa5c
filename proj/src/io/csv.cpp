#include "sputterlab/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sputterlab/errors.hpp"

namespace sputter::io {

std::string format_number(double v) {
    if (std::isnan(v)) return {};
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (const auto& h : header) cell(h);
    end_row();
}

void CsvWriter::sep() {
    if (in_row_ > 0) out_ += ',';
    ++in_row_;
}

CsvWriter& CsvWriter::cell(double v) {
    sep();
    out_ += format_number(v);
    return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
    sep();
    out_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view v) {
    if (v.find_first_of(",\"\n") != std::string_view::npos) throw InvalidArgument("CSV cells may not contain , \" or newlines");
    sep();
    out_ += v;
    return *this;
}

void CsvWriter::end_row() {
    if (in_row_ != columns_) throw InvalidArgument("CSV row has the wrong number of cells");
    out_ += '\n';
    in_row_ = 0;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw InvalidArgument("missing CSV column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.emplace_back(line.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else {
            if (cells.size() != t.header.size()) {
                throw InvalidArgument("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                      " cells, expected " + std::to_string(t.header.size()));
            }
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.header.empty()) throw InvalidArgument("empty CSV");
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed to write " + path.string());
}

namespace {

const std::vector<std::string> kDatasetHeader{"source_id", "power_W", "pressure_mTorr",
                                              "rate_s1",   "rate_s2", "rate_s3"};

}  // namespace

std::string dataset_csv(const Dataset& data) {
    CsvWriter w(kDatasetHeader);
    for (const auto& r : data.rows) {
        w.cell(r.source_id).cell(r.setpoint.power_w).cell(r.setpoint.pressure_mtorr);
        for (std::size_t i = 0; i < 3; ++i) w.cell(r.reading[i]);
        w.end_row();
    }
    return w.str();
}

Dataset parse_dataset_csv(std::string_view text) {
    const CsvTable t = parse_csv(text);
    if (t.header != kDatasetHeader) throw InvalidArgument("dataset CSV header must be " + [] {
        std::string h;
        for (const auto& c : kDatasetHeader) h += (h.empty() ? "" : ",") + c;
        return h;
    }());
    Dataset d;
    for (const auto& row : t.rows) {
        DatasetRow r;
        r.source_id = static_cast<int>(parse_number(row[0]));
        r.setpoint = {parse_number(row[1]), parse_number(row[2])};
        for (std::size_t i = 0; i < 3; ++i) r.reading[i] = parse_number(row[3 + i]);
        d.rows.push_back(r);
    }
    return d;
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset_csv(read_file(path)); }

std::string truth_csv(const GroundTruthGrid& grid) {
    CsvWriter w({"power_W", "pressure_mTorr", "rate_s1", "rate_s2", "rate_s3"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
        w.cell(grid.points[k].power_w).cell(grid.points[k].pressure_mtorr);
        for (std::size_t i = 0; i < 3; ++i) w.cell(grid.readings[k][i]);
        w.end_row();
    }
    return w.str();
}

GroundTruthGrid parse_truth_csv(std::string_view text) {
    const CsvTable t = parse_csv(text);
    const std::size_t cp = t.column("power_W"), cq = t.column("pressure_mTorr");
    const std::size_t cs[3] = {t.column("rate_s1"), t.column("rate_s2"), t.column("rate_s3")};
    GroundTruthGrid g;
    for (const auto& row : t.rows) {
        g.points.push_back({parse_number(row[cp]), parse_number(row[cq])});
        SensorReading r;
        for (std::size_t i = 0; i < 3; ++i) r[i] = parse_number(row[cs[i]]);
        g.readings.push_back(r);
    }
    return g;
}

}  // namespace sputter::io
