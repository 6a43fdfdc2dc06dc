#include "powerfit/csv_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "powerfit/errors.hpp"

namespace powerfit {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (const char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_double(const std::string& cell, std::size_t line_no, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw SchemaViolation("line " + std::to_string(line_no) + ": cannot parse '" + cell +
                              "' as a number for column " + column);
    }
    return value;
}

struct HeaderMap {
    int timestamp = -1;
    int cluster = -1;
    int benchmark = -1;
    int freq_mhz = -1;
    int volt = -1;
    int temp_c = -1;
    int power_w = -1;
    std::map<std::size_t, std::string> pmu;    // cell index -> counter name
    std::map<std::size_t, std::string> state;  // cell index -> state name
};

HeaderMap parse_header(const std::vector<std::string>& cells,
                       std::vector<std::string>& warnings) {
    HeaderMap header;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string name = lowercase(cells[i]);
        const int idx = static_cast<int>(i);
        if (name == "timestamp") {
            header.timestamp = idx;
        } else if (name == "cluster") {
            header.cluster = idx;
        } else if (name == "benchmark") {
            header.benchmark = idx;
        } else if (name == "freq_mhz") {
            header.freq_mhz = idx;
        } else if (name == "volt") {
            header.volt = idx;
        } else if (name == "temp_c") {
            header.temp_c = idx;
        } else if (name == "power_w") {
            header.power_w = idx;
        } else if (name.rfind("pmu_", 0) == 0) {
            header.pmu[i] = name.substr(4);
        } else if (name.rfind("state_", 0) == 0) {
            header.state[i] = name.substr(6);
        } else {
            warnings.push_back("ignoring unknown column '" + cells[i] + "'");
        }
    }
    const auto require = [&](int idx, const char* name) {
        if (idx < 0) throw SchemaViolation(std::string("missing required column ") + name);
    };
    require(header.timestamp, "timestamp");
    require(header.cluster, "cluster");
    require(header.benchmark, "benchmark");
    require(header.freq_mhz, "freq_mhz");
    require(header.volt, "volt");
    require(header.temp_c, "temp_c");
    require(header.power_w, "power_w");
    return header;
}

// Divide each record's counters by its sampling interval, taken from the
// timestamp gaps within the record's (benchmark, frequency) group.
void normalize_counts(std::vector<SampleRecord>& records) {
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        groups[{records[i].benchmark_id, records[i].frequency_mhz}].push_back(i);
    }
    for (const auto& [key, indices] : groups) {
        if (indices.size() < 2) continue;  // no interval information
        for (std::size_t k = 0; k < indices.size(); ++k) {
            // First record reuses the following gap.
            const std::size_t hi = indices[k == 0 ? 1 : k];
            const std::size_t lo = indices[k == 0 ? 0 : k - 1];
            const double dt = records[hi].timestamp - records[lo].timestamp;
            if (dt <= 0.0) continue;
            for (auto& [name, value] : records[indices[k]].pmu) value /= dt;
        }
    }
}

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

CsvReadResult read_trace_csv(std::istream& in, const CsvReadOptions& opts) {
    CsvReadResult result;
    std::string line;
    if (!std::getline(in, line)) throw SchemaViolation("empty trace file");
    const HeaderMap header = parse_header(split_line(line), result.warnings);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_line(line);

        const auto cell = [&](int idx, const char* name) -> const std::string& {
            if (static_cast<std::size_t>(idx) >= cells.size()) {
                throw SchemaViolation("line " + std::to_string(line_no) + ": missing cell for " +
                                      name);
            }
            return cells[static_cast<std::size_t>(idx)];
        };

        SampleRecord rec;
        rec.timestamp = parse_double(cell(header.timestamp, "timestamp"), line_no, "timestamp");
        rec.cluster = cluster_from_string(cell(header.cluster, "cluster"));
        rec.benchmark_id = cell(header.benchmark, "benchmark");
        rec.frequency_mhz = static_cast<int>(
            std::llround(parse_double(cell(header.freq_mhz, "freq_mhz"), line_no, "freq_mhz")));
        rec.voltage = parse_double(cell(header.volt, "volt"), line_no, "volt");
        rec.temperature = parse_double(cell(header.temp_c, "temp_c"), line_no, "temp_c");
        rec.power = parse_double(cell(header.power_w, "power_w"), line_no, "power_w");
        for (const auto& [idx, name] : header.pmu) {
            if (idx >= cells.size()) {
                throw SchemaViolation("line " + std::to_string(line_no) +
                                      ": missing cell for pmu_" + name);
            }
            rec.pmu[name] = parse_double(cells[idx], line_no, "pmu_" + name);
        }
        for (const auto& [idx, name] : header.state) {
            if (idx >= cells.size()) {
                throw SchemaViolation("line " + std::to_string(line_no) +
                                      ": missing cell for state_" + name);
            }
            rec.cpu_state[name] = parse_double(cells[idx], line_no, "state_" + name);
        }
        result.records.push_back(std::move(rec));
    }
    if (result.records.empty()) throw SchemaViolation("trace file has no data rows");
    if (opts.pmu_per_second) normalize_counts(result.records);
    return result;
}

CsvReadResult read_trace_csv_file(const std::string& path, const CsvReadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw SchemaViolation("cannot open trace file '" + path + "'");
    return read_trace_csv(in, opts);
}

void write_trace_csv(std::ostream& out, const ValidatedTrace& trace) {
    std::vector<std::string> pmu_names = available_pmu_columns(trace);
    std::sort(pmu_names.begin(), pmu_names.end());

    std::vector<std::string> state_names;
    if (!trace.records.empty()) {
        for (const auto& [name, value] : trace.records.front().cpu_state) {
            const bool everywhere = std::all_of(
                trace.records.begin(), trace.records.end(),
                [&](const SampleRecord& rec) { return rec.cpu_state.count(name) > 0; });
            if (everywhere) state_names.push_back(name);
        }
        std::sort(state_names.begin(), state_names.end());
    }

    out << "timestamp,cluster,benchmark,freq_mhz,volt,temp_c,power_w";
    for (const auto& name : pmu_names) out << ",pmu_" << name;
    for (const auto& name : state_names) out << ",state_" << name;
    out << "\n";

    for (const auto& rec : trace.records) {
        if (rec.benchmark_id.find_first_of(",\n\r") != std::string::npos) {
            throw SchemaViolation("benchmark id '" + rec.benchmark_id +
                                  "' cannot be written to CSV");
        }
        out << format_double(rec.timestamp) << ',' << to_string(rec.cluster) << ','
            << rec.benchmark_id << ',' << rec.frequency_mhz << ','
            << format_double(rec.voltage) << ',' << format_double(rec.temperature) << ','
            << format_double(rec.power);
        for (const auto& name : pmu_names) out << ',' << format_double(rec.pmu.at(name));
        for (const auto& name : state_names) out << ',' << format_double(rec.cpu_state.at(name));
        out << "\n";
    }
}

void write_trace_csv_file(const std::string& path, const ValidatedTrace& trace) {
    std::ofstream out(path);
    if (!out) throw SchemaViolation("cannot open '" + path + "' for writing");
    write_trace_csv(out, trace);
}

}  // namespace powerfit
