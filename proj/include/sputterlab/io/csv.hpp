#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sputterlab/dataset.hpp"

namespace sputter::io {

// Shortest decimal that parses back to the same double; NaN is written empty.
std::string format_number(double v);
double parse_number(std::string_view s);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::string_view v);
    void end_row();

    const std::string& str() const { return out_; }

private:
    void sep();
    std::size_t columns_;
    std::size_t in_row_ = 0;
    std::string out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;  // throws when absent
};

CsvTable parse_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Dataset files: source_id, power_W, pressure_mTorr, rate_s1, rate_s2, rate_s3.
std::string dataset_csv(const Dataset& data);
Dataset parse_dataset_csv(std::string_view text);
Dataset read_dataset(const std::filesystem::path& path);

std::string truth_csv(const GroundTruthGrid& grid);
GroundTruthGrid parse_truth_csv(std::string_view text);

}  // namespace sputter::io
