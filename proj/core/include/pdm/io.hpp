#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/cmapss.hpp"

namespace pdm::io {

/// Write to "<path>.tmp-<pid>" then rename over `path`, so readers never see
/// a partial file under the final name.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

/// Quote a CSV field when it contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

/// Minimal in-memory RFC-4180 table builder.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& row(std::vector<std::string> fields);
    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;
    void save(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV: header + rows of fields (quoted fields supported).
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
};

CsvData parse_csv(std::string_view text);

/// unit_id,cycle,health (cycle is 1-based).
std::string health_csv(std::span<const cmapss::HealthTrajectory> trajectories);
std::vector<cmapss::HealthTrajectory> parse_health_csv(std::string_view text);

}  // namespace pdm::io
