#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "powerfit/trace.hpp"

namespace powerfit {

struct CsvReadOptions {
    // Divide PMU counts by the local sample interval (consecutive timestamps
    // within one benchmark/frequency group).
    bool pmu_per_second = false;
};

struct CsvReadResult {
    std::vector<SampleRecord> records;
    std::vector<std::string> warnings;  // ignored columns etc.
};

/// Trace CSV: header row with timestamp, cluster, benchmark, freq_mhz, volt,
/// temp_c, power_w plus pmu_*/state_* columns. Header names match
/// case-insensitively; unknown columns are ignored with a warning.
CsvReadResult read_trace_csv(std::istream& in, const CsvReadOptions& opts = {});
CsvReadResult read_trace_csv_file(const std::string& path, const CsvReadOptions& opts = {});

/// Writes the same schema back. PMU/state columns are those present in every
/// record, sorted by name; numbers use shortest round-trip formatting.
void write_trace_csv(std::ostream& out, const ValidatedTrace& trace);
void write_trace_csv_file(const std::string& path, const ValidatedTrace& trace);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

}  // namespace powerfit
