#include "powerfit/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "powerfit/errors.hpp"

namespace powerfit {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool record_is_valid(const SampleRecord& rec) {
    if (!std::isfinite(rec.timestamp) || rec.timestamp < 0.0) return false;
    if (rec.frequency_mhz <= 0) return false;
    if (!std::isfinite(rec.voltage) || rec.voltage <= 0.0) return false;
    if (!std::isfinite(rec.temperature)) return false;
    if (!std::isfinite(rec.power) || rec.power <= 0.0) return false;
    for (const auto& [name, count] : rec.pmu) {
        if (!std::isfinite(count) || count < 0.0) return false;
    }
    double state_sum = 0.0;
    for (const auto& [name, fraction] : rec.cpu_state) {
        if (!std::isfinite(fraction) || fraction < 0.0 || fraction > 1.0) return false;
        state_sum += fraction;
    }
    return state_sum <= 1.0 + kStateSumTolerance;
}

}  // namespace

std::string_view to_string(Cluster cluster) {
    return cluster == Cluster::Big ? "big" : "little";
}

Cluster cluster_from_string(std::string_view text) {
    const std::string lower = lowercase(text);
    if (lower == "big") return Cluster::Big;
    if (lower == "little") return Cluster::Little;
    throw SchemaViolation("unknown cluster '" + std::string(text) + "' (expected big or little)");
}

std::vector<std::string> core_pmu_columns() {
    return {"cycles", "l1d_access", "l1i_access", "instructions", "mem_access"};
}

std::vector<std::string> extended_pmu_columns() {
    return {"int_instructions", "vfp_instructions", "l2_access", "l2_refill"};
}

std::vector<std::string> state_columns() {
    return {"user", "system", "idle", "iowait", "irq", "softirq"};
}

ValidatedTrace validate_trace(const std::vector<SampleRecord>& raw_records) {
    if (raw_records.empty()) throw EmptyTrace("no input records");

    const Cluster cluster = raw_records.front().cluster;
    for (const auto& rec : raw_records) {
        if (rec.cluster != cluster) {
            throw MixedClusters("trace mixes big and little records");
        }
    }

    ValidatedTrace trace;
    trace.cluster = cluster;
    for (const auto& rec : raw_records) {
        if (record_is_valid(rec)) {
            trace.records.push_back(rec);
        } else {
            ++trace.dropped_count;
        }
    }
    if (trace.records.empty()) throw EmptyTrace("no record passed validation");

    std::stable_sort(trace.records.begin(), trace.records.end(),
                     [](const SampleRecord& a, const SampleRecord& b) {
                         return a.timestamp < b.timestamp;
                     });

    std::set<int> levels;
    for (const auto& rec : trace.records) {
        levels.insert(rec.frequency_mhz);
        trace.benchmarks.insert(rec.benchmark_id);
    }
    trace.frequency_levels.assign(levels.begin(), levels.end());

    // Canonical columns a family might need but some record lacks. Reported
    // here so training fails later with a clear MissingColumn.
    std::vector<std::string> canonical = core_pmu_columns();
    for (const auto& name : extended_pmu_columns()) canonical.push_back(name);
    for (const auto& name : canonical) {
        const bool everywhere =
            std::all_of(trace.records.begin(), trace.records.end(),
                        [&](const SampleRecord& rec) { return rec.pmu.count(name) > 0; });
        if (!everywhere) trace.missing_columns.push_back(name);
    }
    for (const auto& name : state_columns()) {
        const bool everywhere = std::all_of(
            trace.records.begin(), trace.records.end(),
            [&](const SampleRecord& rec) { return rec.cpu_state.count(name) > 0; });
        if (!everywhere) trace.missing_columns.push_back(name);
    }
    return trace;
}

std::map<int, ValidatedTrace> partition_by_frequency(const ValidatedTrace& trace) {
    std::map<int, ValidatedTrace> partitions;
    for (const int level : trace.frequency_levels) {
        ValidatedTrace part;
        part.cluster = trace.cluster;
        part.frequency_levels = {level};
        part.missing_columns = trace.missing_columns;
        partitions.emplace(level, std::move(part));
    }
    for (const auto& rec : trace.records) {
        ValidatedTrace& part = partitions.at(rec.frequency_mhz);
        part.records.push_back(rec);
        part.benchmarks.insert(rec.benchmark_id);
    }
    return partitions;
}

std::vector<BenchmarkAverage> benchmark_averages(const ValidatedTrace& trace) {
    struct Accumulator {
        double power_sum = 0.0;
        std::map<std::string, double> column_sums;
        std::map<std::string, std::size_t> column_counts;
        std::size_t count = 0;
    };
    std::map<std::pair<std::string, int>, Accumulator> groups;

    for (const auto& rec : trace.records) {
        Accumulator& acc = groups[{rec.benchmark_id, rec.frequency_mhz}];
        acc.power_sum += rec.power;
        ++acc.count;
        const auto add = [&](const std::string& name, double value) {
            acc.column_sums[name] += value;
            acc.column_counts[name] += 1;
        };
        add("voltage", rec.voltage);
        add("temperature", rec.temperature);
        for (const auto& [name, value] : rec.pmu) add(name, value);
        for (const auto& [name, value] : rec.cpu_state) add(name, value);
    }

    std::vector<BenchmarkAverage> averages;
    averages.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        BenchmarkAverage avg;
        avg.benchmark_id = key.first;
        avg.frequency_mhz = key.second;
        avg.sample_count = acc.count;
        avg.mean_power = acc.power_sum / static_cast<double>(acc.count);
        for (const auto& [name, sum] : acc.column_sums) {
            // Only columns present in every sample of the group have a
            // well-defined mean.
            if (acc.column_counts.at(name) == acc.count) {
                avg.mean_regressors[name] = sum / static_cast<double>(acc.count);
            }
        }
        averages.push_back(std::move(avg));
    }
    return averages;
}

std::optional<double> record_column(const SampleRecord& record, std::string_view name) {
    if (name == "voltage") return record.voltage;
    if (name == "temperature") return record.temperature;
    if (name == "frequency") return static_cast<double>(record.frequency_mhz) / 1000.0;
    const std::string key(name);
    if (auto it = record.pmu.find(key); it != record.pmu.end()) return it->second;
    if (auto it = record.cpu_state.find(key); it != record.cpu_state.end()) return it->second;
    return std::nullopt;
}

std::vector<std::string> available_pmu_columns(const ValidatedTrace& trace) {
    std::vector<std::string> names;
    if (trace.records.empty()) return names;
    for (const auto& [name, value] : trace.records.front().pmu) {
        const bool everywhere =
            std::all_of(trace.records.begin(), trace.records.end(),
                        [&](const SampleRecord& rec) { return rec.pmu.count(name) > 0; });
        if (everywhere) names.push_back(name);
    }
    return names;
}

}  // namespace powerfit
