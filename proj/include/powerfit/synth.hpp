#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "powerfit/models.hpp"
#include "powerfit/trace.hpp"

namespace powerfit {

/// Normal distribution truncated at zero.
struct RegressorProfile {
    double mean = 0.0;
    double spread = 0.0;
};

/// Per-benchmark distributions for temperature, PMU counters and CPU states.
struct BenchmarkProfile {
    std::string benchmark_id;
    std::map<std::string, RegressorProfile> regressors;
};

struct FrequencyLevel {
    int freq_mhz = 0;
    double voltage = 0.0;
};

/// Ground truth for the synthetic-trace oracle: every generated power value is
/// the chosen family's equation applied to the drawn regressors plus Gaussian
/// noise, so fitting and evaluation claims are checkable exactly.
struct GroundTruthSpec {
    Cluster cluster = Cluster::Big;
    ModelFamily family = ModelFamily::Physical;
    std::vector<FrequencyLevel> levels;
    std::vector<double> unified_truth;               // one vector for all levels...
    std::map<int, std::vector<double>> level_truth;  // ...or one per level (exactly one set)
    std::vector<BenchmarkProfile> benchmarks;
    double noise_sigma = 0.0;  // watts, additive on power only
    int samples_per_benchmark_per_level = 1;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    ModelFamily family = ModelFamily::Physical;
    std::vector<std::string> coefficient_names;
    std::vector<double> unified;
    std::map<int, std::vector<double>> per_level;
};

struct GeneratedTrace {
    ValidatedTrace trace;  // passes validate_trace with dropped_count == 0
    GroundTruth truth;
};

/// Deterministic for a given spec + seed.
GeneratedTrace generate_trace(const GroundTruthSpec& spec);

struct ClusterPair {
    ValidatedTrace big;
    ValidatedTrace little;
    GroundTruth truth;  // of the big trace
};

/// Big trace from the spec plus a LITTLE twin that reuses the same benchmark
/// schedule with PMU counts scaled by event_scale and power shifted by
/// power_offset_w. little_levels restricts the twin to a subset of the spec's
/// levels (empty keeps all).
ClusterPair make_cluster_pair(const GroundTruthSpec& spec, double event_scale,
                              double power_offset_w,
                              const std::vector<int>& little_levels = {});

}  // namespace powerfit
