#include "powerfit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "powerfit/errors.hpp"

namespace powerfit {

namespace {

// Draws are built from raw engine words so traces are bit-identical across
// compilers for the same seed.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double truncated_normal(const RegressorProfile& profile) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const double value = profile.mean + profile.spread * normal();
            if (value >= 0.0) return value;
        }
        return 0.0;
    }

private:
    std::mt19937_64 engine_;
};

void check_spec(const GroundTruthSpec& spec) {
    if (spec.levels.empty()) throw InvalidSpec("no frequency levels");
    std::set<int> level_set;
    for (const auto& level : spec.levels) {
        if (level.freq_mhz <= 0) throw InvalidSpec("frequency levels must be positive");
        if (!(level.voltage > 0.0) || !std::isfinite(level.voltage)) {
            throw InvalidSpec("level voltages must be positive");
        }
        if (!level_set.insert(level.freq_mhz).second) {
            throw InvalidSpec("duplicate frequency level " + std::to_string(level.freq_mhz));
        }
    }
    if (spec.benchmarks.empty()) throw InvalidSpec("no benchmark profiles");
    std::set<std::string> ids;
    const std::vector<std::string> states = state_columns();
    for (const auto& profile : spec.benchmarks) {
        if (profile.benchmark_id.empty()) throw InvalidSpec("empty benchmark id");
        if (!ids.insert(profile.benchmark_id).second) {
            throw InvalidSpec("duplicate benchmark id " + profile.benchmark_id);
        }
        for (const auto& [name, dist] : profile.regressors) {
            if (name == "voltage" || name == "frequency" || name == "power") {
                throw InvalidSpec("'" + name + "' is level-determined and cannot be profiled");
            }
            if (!std::isfinite(dist.mean) || !std::isfinite(dist.spread) || dist.spread < 0.0) {
                throw InvalidSpec("profile for '" + name + "' needs a finite mean and spread >= 0");
            }
        }
    }
    if (!std::isfinite(spec.noise_sigma) || spec.noise_sigma < 0.0) {
        throw InvalidSpec("noise_sigma must be >= 0");
    }
    if (spec.samples_per_benchmark_per_level < 1) {
        throw InvalidSpec("samples_per_benchmark_per_level must be >= 1");
    }

    const std::size_t width = regressor_spec(spec.family).column_count();
    const bool unified = !spec.unified_truth.empty();
    const bool per_level = !spec.level_truth.empty();
    if (unified == per_level) {
        throw InvalidSpec("exactly one of unified_truth / level_truth must be set");
    }
    if (unified && spec.unified_truth.size() != width) {
        throw InvalidSpec("unified_truth has " + std::to_string(spec.unified_truth.size()) +
                          " coefficients, family needs " + std::to_string(width));
    }
    if (per_level) {
        for (const auto& level : spec.levels) {
            const auto it = spec.level_truth.find(level.freq_mhz);
            if (it == spec.level_truth.end()) {
                throw InvalidSpec("level_truth misses level " + std::to_string(level.freq_mhz));
            }
            if (it->second.size() != width) {
                throw InvalidSpec("level_truth for " + std::to_string(level.freq_mhz) +
                                  " has wrong coefficient count");
            }
        }
    }
}

}  // namespace

GeneratedTrace generate_trace(const GroundTruthSpec& spec) {
    check_spec(spec);

    const RegressorSpec family_spec = regressor_spec(spec.family);
    const std::set<std::string> states(state_columns().begin(), state_columns().end());
    Sampler sampler(spec.seed);

    std::vector<SampleRecord> records;
    double timestamp = 0.0;
    for (const auto& level : spec.levels) {
        const std::vector<double>& truth = spec.unified_truth.empty()
                                               ? spec.level_truth.at(level.freq_mhz)
                                               : spec.unified_truth;
        for (const auto& profile : spec.benchmarks) {
            for (int s = 0; s < spec.samples_per_benchmark_per_level; ++s) {
                SampleRecord rec;
                rec.cluster = spec.cluster;
                rec.benchmark_id = profile.benchmark_id;
                rec.frequency_mhz = level.freq_mhz;
                rec.voltage = level.voltage;
                rec.temperature = 45.0;  // default when the profile has no entry

                bool accepted = false;
                for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
                    rec.pmu.clear();
                    rec.cpu_state.clear();
                    double state_sum = 0.0;
                    for (const auto& [name, dist] : profile.regressors) {
                        const double value = sampler.truncated_normal(dist);
                        if (name == "temperature") {
                            rec.temperature = value;
                        } else if (states.count(name) > 0) {
                            rec.cpu_state[name] = value;
                            state_sum += value;
                        } else {
                            rec.pmu[name] = value;
                        }
                    }
                    if (state_sum > 1.0) {  // keep the fractions inside the simplex
                        for (auto& [name, value] : rec.cpu_state) value /= state_sum;
                    }
                    const auto row = regressor_row(family_spec, rec);
                    if (!row) continue;  // zero denominator, redraw
                    double power = 0.0;
                    for (std::size_t i = 0; i < row->size(); ++i) power += truth[i] * (*row)[i];
                    power += spec.noise_sigma * sampler.normal();
                    if (power <= 0.0) continue;
                    rec.power = power;
                    accepted = true;
                }
                if (!accepted) {
                    throw InvalidSpec("could not draw a valid sample for benchmark '" +
                                      profile.benchmark_id + "' at " +
                                      std::to_string(level.freq_mhz) +
                                      " MHz; the truth produces non-positive power");
                }
                rec.timestamp = timestamp;
                timestamp += 0.1;
                records.push_back(std::move(rec));
            }
        }
    }

    GeneratedTrace generated;
    generated.trace = validate_trace(records);
    generated.truth.family = spec.family;
    generated.truth.coefficient_names = family_spec.column_names();
    generated.truth.unified = spec.unified_truth;
    generated.truth.per_level = spec.level_truth;
    return generated;
}

ClusterPair make_cluster_pair(const GroundTruthSpec& spec, double event_scale,
                              double power_offset_w, const std::vector<int>& little_levels) {
    if (!(event_scale > 0.0) || !std::isfinite(event_scale)) {
        throw InvalidSpec("event_scale must be positive");
    }
    if (!std::isfinite(power_offset_w)) throw InvalidSpec("power offset must be finite");

    std::set<int> spec_levels;
    for (const auto& level : spec.levels) spec_levels.insert(level.freq_mhz);
    for (const int level : little_levels) {
        if (spec_levels.count(level) == 0) {
            throw InvalidSpec("little level " + std::to_string(level) +
                              " is not one of the spec's levels");
        }
    }

    GroundTruthSpec big_spec = spec;
    big_spec.cluster = Cluster::Big;
    GeneratedTrace big = generate_trace(big_spec);

    std::vector<SampleRecord> little_records;
    const std::set<int> keep(little_levels.begin(), little_levels.end());
    for (const auto& rec : big.trace.records) {
        if (!keep.empty() && keep.count(rec.frequency_mhz) == 0) continue;
        SampleRecord twin = rec;
        twin.cluster = Cluster::Little;
        for (auto& [name, value] : twin.pmu) value *= event_scale;
        twin.power += power_offset_w;
        if (twin.power <= 0.0) {
            throw InvalidSpec("power offset drives LITTLE power non-positive");
        }
        little_records.push_back(std::move(twin));
    }
    if (little_records.empty()) throw InvalidSpec("little trace would be empty");

    ClusterPair pair;
    pair.little = validate_trace(little_records);
    pair.big = std::move(big.trace);
    pair.truth = std::move(big.truth);
    return pair;
}

}  // namespace powerfit
