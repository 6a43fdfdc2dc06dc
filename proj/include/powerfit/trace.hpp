#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace powerfit {

enum class Cluster { Big, Little };

std::string_view to_string(Cluster cluster);
Cluster cluster_from_string(std::string_view text);  // case-insensitive; throws SchemaViolation

/// One timestamped observation for a single cluster. Power is the regressand,
/// everything else is a candidate regressor.
struct SampleRecord {
    double timestamp = 0.0;  // seconds since trace start, non-negative
    Cluster cluster = Cluster::Big;
    std::string benchmark_id;
    int frequency_mhz = 0;    // DVFS level
    double voltage = 0.0;     // volts
    double temperature = 0.0;  // degrees Celsius
    double power = 0.0;        // watts, must stay positive through validation
    std::map<std::string, double> pmu;        // counter name -> count per sample interval
    std::map<std::string, double> cpu_state;  // state name -> fraction of interval in [0,1]
};

// State fractions may sum slightly above 1 from rounding in the source logs.
inline constexpr double kStateSumTolerance = 1e-6;

/// A cleaned trace: one cluster, records sorted by timestamp, with the set of
/// frequency levels and benchmarks actually present.
struct ValidatedTrace {
    std::vector<SampleRecord> records;
    Cluster cluster = Cluster::Big;
    std::vector<int> frequency_levels;  // sorted, unique
    std::set<std::string> benchmarks;
    std::size_t dropped_count = 0;
    std::vector<std::string> missing_columns;  // canonical columns absent from some record

    std::size_t size() const { return records.size(); }
};

struct BenchmarkAverage {
    std::string benchmark_id;
    int frequency_mhz = 0;
    double mean_power = 0.0;                        // watts
    std::map<std::string, double> mean_regressors;  // column -> arithmetic mean
    std::size_t sample_count = 0;
};

/// Keeps only records satisfying every SampleRecord invariant. Mixed clusters
/// reject the whole input; any other violation drops the single record.
ValidatedTrace validate_trace(const std::vector<SampleRecord>& raw_records);

/// Splits a trace into one single-frequency trace per DVFS level, preserving
/// timestamp order. The partitions cover the input exactly.
std::map<int, ValidatedTrace> partition_by_frequency(const ValidatedTrace& trace);

/// One entry per (benchmark, frequency) pair present in the trace, with means
/// taken over exactly that pair's samples. Output is sorted by benchmark then
/// frequency.
std::vector<BenchmarkAverage> benchmark_averages(const ValidatedTrace& trace);

/// Unified regressor lookup: "voltage", "temperature", PMU counters and CPU
/// states by their plain names. "frequency" resolves in GHz.
std::optional<double> record_column(const SampleRecord& record, std::string_view name);

/// PMU counter names present in every record of the trace.
std::vector<std::string> available_pmu_columns(const ValidatedTrace& trace);

std::vector<std::string> core_pmu_columns();      // cycles, l1d_access, l1i_access, instructions, mem_access
std::vector<std::string> extended_pmu_columns();  // int_instructions, vfp_instructions, l2_access, l2_refill
std::vector<std::string> state_columns();         // user, system, idle, iowait, irq, softirq

}  // namespace powerfit
