#include "pdm/io.hpp"

#include <unistd.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "pdm/error.hpp"

namespace pdm::io {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw std::runtime_error("short write to '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return {buf, ptr};
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> fields) {
    if (fields.size() != header_.size()) {
        throw UsageError("CsvTable: row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(header_.size()));
    }
    rows_.push_back(std::move(fields));
    return *this;
}

std::string CsvTable::str() const {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(fields[i]);
        }
        out += "\r\n";
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out;
}

std::size_t CsvData::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError("CSV has no column '" + std::string(name) + "'");
}

CsvData parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                fields.push_back(std::move(field));
                records.push_back(std::move(fields));
            }
            fields.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ParseError("CSV ends inside a quoted field");
    if (any || !field.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
    }
    if (records.empty()) throw ParseError("CSV is empty");
    CsvData data;
    data.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != data.header.size()) {
            throw ParseError("CSV row has " + std::to_string(records[r].size()) + " fields, expected " +
                                 std::to_string(data.header.size()),
                             r + 1);
        }
        data.rows.push_back(std::move(records[r]));
    }
    return data;
}

std::string health_csv(std::span<const cmapss::HealthTrajectory> trajectories) {
    CsvTable table({"unit_id", "cycle", "health"});
    for (const auto& traj : trajectories) {
        for (std::size_t t = 0; t < traj.health.size(); ++t) {
            table.row({std::to_string(traj.unit_id), std::to_string(t + 1), format_double(traj.health[t])});
        }
    }
    return table.str();
}

namespace {

double to_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("non-numeric field '" + s + "'", line);
    return v;
}

}  // namespace

std::vector<cmapss::HealthTrajectory> parse_health_csv(std::string_view text) {
    const auto data = parse_csv(text);
    const auto c_unit = data.column("unit_id");
    const auto c_cycle = data.column("cycle");
    const auto c_health = data.column("health");
    std::map<int, std::vector<std::pair<int, double>>> units;
    std::vector<int> order;
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        const auto& row = data.rows[r];
        const int unit = static_cast<int>(to_double(row[c_unit], r + 2));
        const int cycle = static_cast<int>(to_double(row[c_cycle], r + 2));
        if (!units.contains(unit)) order.push_back(unit);
        units[unit].emplace_back(cycle, to_double(row[c_health], r + 2));
    }
    std::vector<cmapss::HealthTrajectory> out;
    for (int unit : order) {
        auto& points = units[unit];
        std::sort(points.begin(), points.end());
        cmapss::HealthTrajectory traj{unit, {}};
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].first != static_cast<int>(i) + 1) {
                throw ParseError("health CSV: unit " + std::to_string(unit) + " cycles not consecutive from 1");
            }
            traj.health.push_back(points[i].second);
        }
        out.push_back(std::move(traj));
    }
    return out;
}

}  // namespace pdm::io
