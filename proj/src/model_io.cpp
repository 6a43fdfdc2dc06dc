#include "powerfit/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "powerfit/errors.hpp"

namespace powerfit {

namespace {

using nlohmann::json;

json coefficients_to_json(const CoefficientVector& coeffs) {
    json pairs = json::array();
    for (std::size_t i = 0; i < coeffs.names.size(); ++i) {
        pairs.push_back({{"name", coeffs.names[i]},
                         {"value", coeffs.values(static_cast<Eigen::Index>(i))}});
    }
    return pairs;
}

CoefficientVector coefficients_from_json(const json& pairs, int rank, double condition) {
    CoefficientVector coeffs;
    coeffs.rank = rank;
    coeffs.condition_estimate = condition;
    coeffs.values.resize(static_cast<Eigen::Index>(pairs.size()));
    Eigen::Index i = 0;
    for (const auto& pair : pairs) {
        coeffs.names.push_back(pair.at("name").get<std::string>());
        coeffs.values(i++) = pair.at("value").get<double>();
    }
    return coeffs;
}

json power_model_to_json(const PowerModel& model) {
    json entry;
    entry["frequency_mhz"] =
        model.frequency_mhz ? json(*model.frequency_mhz) : json(nullptr);
    entry["coefficients"] = coefficients_to_json(model.coefficients);
    entry["rank"] = model.coefficients.rank;
    entry["condition_estimate"] = model.coefficients.condition_estimate;
    entry["sample_count"] = model.info.sample_count;
    entry["dropped_rows"] = model.info.dropped_rows;
    entry["trace_fingerprint"] = model.info.trace_fingerprint;
    return entry;
}

PowerModel power_model_from_json(const json& entry, ModelFamily family, TrainingMode mode) {
    PowerModel model;
    model.family = family;
    model.mode = mode;
    if (!entry.at("frequency_mhz").is_null()) {
        model.frequency_mhz = entry.at("frequency_mhz").get<int>();
    }
    model.coefficients =
        coefficients_from_json(entry.at("coefficients"), entry.at("rank").get<int>(),
                               entry.at("condition_estimate").get<double>());
    model.info.sample_count = entry.at("sample_count").get<std::size_t>();
    model.info.dropped_rows = entry.at("dropped_rows").get<std::size_t>();
    model.info.trace_fingerprint = entry.at("trace_fingerprint").get<std::uint64_t>();
    return model;
}

template <typename Fn>
auto translate_json_errors(Fn&& fn, const std::string& what) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw SchemaViolation(what + ": " + e.what());
    }
}

}  // namespace

std::string export_model_json(const TrainedModel& model) {
    json doc;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    doc["family"] = std::string(to_string(model.family));
    doc["mode"] = std::string(to_string(model.mode));
    if (!model.selected_events.empty()) doc["selected_events"] = model.selected_events;
    if (model.split_seed) doc["split_seed"] = *model.split_seed;
    if (!model.skipped_levels.empty()) doc["skipped_levels"] = model.skipped_levels;
    json entries = json::array();
    if (model.unified) {
        entries.push_back(power_model_to_json(*model.unified));
    }
    for (const auto& [level, fitted] : model.per_frequency) {
        entries.push_back(power_model_to_json(fitted));
    }
    doc["models"] = entries;
    return doc.dump(2) + "\n";
}

TrainedModel import_model_json(const std::string& text) {
    return translate_json_errors(
        [&] {
            const json doc = json::parse(text);
            TrainedModel model;
            model.family = family_from_string(doc.at("family").get<std::string>());
            model.mode = mode_from_string(doc.at("mode").get<std::string>());
            if (doc.contains("selected_events")) {
                model.selected_events =
                    doc.at("selected_events").get<std::vector<std::string>>();
            }
            if (doc.contains("split_seed")) {
                model.split_seed = doc.at("split_seed").get<std::uint64_t>();
            }
            if (doc.contains("skipped_levels")) {
                model.skipped_levels = doc.at("skipped_levels").get<std::vector<int>>();
            }
            for (const auto& entry : doc.at("models")) {
                PowerModel fitted = power_model_from_json(entry, model.family, model.mode);
                if (fitted.frequency_mhz) {
                    model.per_frequency.emplace(*fitted.frequency_mhz, std::move(fitted));
                } else {
                    if (model.mode != TrainingMode::Unified) {
                        throw SchemaViolation(
                            "per-frequency model file contains an entry without frequency_mhz");
                    }
                    model.unified = std::move(fitted);
                }
            }
            if (model.mode == TrainingMode::Unified && !model.unified) {
                throw SchemaViolation("unified model file has no model entry");
            }
            if (model.mode == TrainingMode::PerFrequency && model.per_frequency.empty()) {
                throw SchemaViolation("per-frequency model file has no model entries");
            }
            return model;
        },
        "invalid model file");
}

void write_model_file(const std::string& path, const TrainedModel& model) {
    std::ofstream out(path);
    if (!out) throw SchemaViolation("cannot open '" + path + "' for writing");
    out << export_model_json(model);
}

TrainedModel read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaViolation("cannot open model file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return import_model_json(buffer.str());
}

std::string export_report_json(const EvaluationReport& report) {
    json doc;
    doc["model"] = report.model_label;
    doc["cross_naive"] = report.cross_naive;
    doc["overall_mape"] = report.overall_mape;
    json per_freq = json::array();
    for (const auto& [level, mape] : report.per_frequency_mape) {
        per_freq.push_back({{"freq_mhz", level}, {"mape", mape}});
    }
    doc["per_frequency_mape"] = per_freq;
    doc["skipped"] = {{"count", report.skipped}, {"reasons", report.skip_reasons}};
    json samples = json::array();
    for (const auto& sample : report.per_sample) {
        samples.push_back({{"timestamp", sample.timestamp},
                           {"benchmark", sample.benchmark_id},
                           {"freq_mhz", sample.frequency_mhz},
                           {"measured_w", sample.measured_w},
                           {"predicted_w", sample.predicted_w},
                           {"percent_error", sample.percent_error}});
    }
    doc["per_sample"] = samples;
    return doc.dump(2) + "\n";
}

EvaluationReport import_report_json(const std::string& text) {
    return translate_json_errors(
        [&] {
            const json doc = json::parse(text);
            EvaluationReport report;
            report.model_label = doc.at("model").get<std::string>();
            report.cross_naive = doc.at("cross_naive").get<bool>();
            report.overall_mape = doc.at("overall_mape").get<double>();
            for (const auto& entry : doc.at("per_frequency_mape")) {
                report.per_frequency_mape[entry.at("freq_mhz").get<int>()] =
                    entry.at("mape").get<double>();
            }
            report.skipped = doc.at("skipped").at("count").get<std::size_t>();
            report.skip_reasons = doc.at("skipped")
                                      .at("reasons")
                                      .get<std::map<std::string, std::size_t>>();
            for (const auto& entry : doc.at("per_sample")) {
                SamplePrediction sample;
                sample.timestamp = entry.at("timestamp").get<double>();
                sample.benchmark_id = entry.at("benchmark").get<std::string>();
                sample.frequency_mhz = entry.at("freq_mhz").get<int>();
                sample.measured_w = entry.at("measured_w").get<double>();
                sample.predicted_w = entry.at("predicted_w").get<double>();
                sample.percent_error = entry.at("percent_error").get<double>();
                report.per_sample.push_back(std::move(sample));
            }
            return report;
        },
        "invalid report file");
}

void write_report_file(const std::string& path, const EvaluationReport& report) {
    std::ofstream out(path);
    if (!out) throw SchemaViolation("cannot open '" + path + "' for writing");
    out << export_report_json(report);
}

EvaluationReport read_report_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaViolation("cannot open report file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return import_report_json(buffer.str());
}

GroundTruthSpec parse_ground_truth_spec(const std::string& text) {
    return translate_json_errors(
        [&] {
            const json doc = json::parse(text);
            GroundTruthSpec spec;
            spec.cluster = cluster_from_string(doc.at("cluster").get<std::string>());
            spec.family = family_from_string(doc.at("family").get<std::string>());
            for (const auto& entry : doc.at("levels")) {
                spec.levels.push_back({entry.at("freq_mhz").get<int>(),
                                       entry.at("voltage").get<double>()});
            }
            const json& truth = doc.at("truth");
            if (truth.contains("unified")) {
                spec.unified_truth = truth.at("unified").get<std::vector<double>>();
            }
            if (truth.contains("per_level")) {
                for (const auto& entry : truth.at("per_level")) {
                    spec.level_truth[entry.at("freq_mhz").get<int>()] =
                        entry.at("coefficients").get<std::vector<double>>();
                }
            }
            for (const auto& entry : doc.at("benchmarks")) {
                BenchmarkProfile profile;
                profile.benchmark_id = entry.at("id").get<std::string>();
                for (const auto& [name, dist] : entry.at("regressors").items()) {
                    profile.regressors[name] = {dist.at("mean").get<double>(),
                                                dist.at("spread").get<double>()};
                }
                spec.benchmarks.push_back(std::move(profile));
            }
            spec.noise_sigma = doc.at("noise_sigma").get<double>();
            spec.samples_per_benchmark_per_level =
                doc.at("samples_per_benchmark_per_level").get<int>();
            spec.seed = doc.at("seed").get<std::uint64_t>();
            return spec;
        },
        "invalid ground-truth spec");
}

GroundTruthSpec read_ground_truth_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaViolation("cannot open spec file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_ground_truth_spec(buffer.str());
}

}  // namespace powerfit
