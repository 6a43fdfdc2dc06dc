#include "powerfit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "powerfit/errors.hpp"

namespace powerfit {

namespace {

std::string model_label(const TrainedModel& model) {
    return std::string(to_string(model.family)) + "/" + std::string(to_string(model.mode));
}

const PowerModel* model_for_level(const TrainedModel& model, int freq_mhz) {
    if (model.mode == TrainingMode::Unified) return &*model.unified;
    const auto it = model.per_frequency.find(freq_mhz);
    return it == model.per_frequency.end() ? nullptr : &it->second;
}

void check_columns(const RegressorSpec& spec, const ValidatedTrace& trace) {
    for (const auto& term : spec.terms) {
        for (const std::string& column : {term.col_a, term.col_b}) {
            if (column.empty()) continue;
            const bool everywhere = std::all_of(
                trace.records.begin(), trace.records.end(), [&](const SampleRecord& rec) {
                    return record_column(rec, column).has_value();
                });
            if (!everywhere) {
                throw MissingColumn(column, "evaluating family " +
                                                std::string(to_string(spec.family)));
            }
        }
    }
}

void finalize_report(EvaluationReport& report) {
    if (report.per_sample.empty()) {
        throw EmptyEvaluation("all samples were skipped");
    }
    std::map<int, std::pair<double, std::size_t>> per_level;  // sum, count
    double total = 0.0;
    for (const auto& sample : report.per_sample) {
        total += sample.percent_error;
        auto& [sum, count] = per_level[sample.frequency_mhz];
        sum += sample.percent_error;
        ++count;
    }
    report.overall_mape = total / static_cast<double>(report.per_sample.size());
    for (const auto& [level, acc] : per_level) {
        report.per_frequency_mape[level] = acc.first / static_cast<double>(acc.second);
    }
}

EvaluationReport evaluate_impl(const TrainedModel& model, const ValidatedTrace& test,
                               bool cross_naive) {
    const RegressorSpec spec = spec_for(model);
    check_columns(spec, test);

    if (model.mode == TrainingMode::PerFrequency && cross_naive) {
        const bool any_common = std::any_of(
            test.frequency_levels.begin(), test.frequency_levels.end(),
            [&](int level) { return model.per_frequency.count(level) > 0; });
        if (!any_common) {
            throw NoCommonFrequencies("model and test trace share no frequency level");
        }
    }

    EvaluationReport report;
    report.model_label = model_label(model);
    report.cross_naive = cross_naive;
    for (const auto& rec : test.records) {
        const PowerModel* fitted = model_for_level(model, rec.frequency_mhz);
        if (fitted == nullptr) {
            ++report.skipped;
            ++report.skip_reasons["no_model_for_frequency"];
            continue;
        }
        const auto row = regressor_row(spec, rec);
        if (!row) {
            ++report.skipped;
            ++report.skip_reasons["undefined_regressor"];
            continue;
        }
        double predicted = 0.0;
        for (std::size_t i = 0; i < row->size(); ++i) {
            predicted += fitted->coefficients.values(static_cast<Eigen::Index>(i)) * (*row)[i];
        }
        SamplePrediction sample;
        sample.timestamp = rec.timestamp;
        sample.benchmark_id = rec.benchmark_id;
        sample.frequency_mhz = rec.frequency_mhz;
        sample.measured_w = rec.power;
        sample.predicted_w = predicted;
        // Negative watt predictions are physically meaningless as an error
        // base; score against 0 and keep the raw value.
        sample.percent_error = percent_error(rec.power, std::max(predicted, 0.0));
        report.per_sample.push_back(std::move(sample));
    }
    finalize_report(report);
    return report;
}

ColumnLookup joined_row_lookup(const JoinedRow& row) {
    return [&row](std::string_view name) -> std::optional<double> {
        if (name == "frequency") return static_cast<double>(row.frequency_mhz) / 1000.0;
        const auto it = row.regressors.find(std::string(name));
        if (it == row.regressors.end()) return std::nullopt;
        return it->second;
    };
}

void check_joined_columns(const RegressorSpec& spec, const std::vector<JoinedRow>& rows) {
    for (const auto& term : spec.terms) {
        for (const std::string& column : {term.col_a, term.col_b}) {
            if (column.empty() || column == "frequency") continue;
            const bool everywhere = std::all_of(rows.begin(), rows.end(), [&](const JoinedRow& row) {
                return row.regressors.count(column) > 0;
            });
            if (!everywhere) {
                throw MissingColumn(column, "cross-prediction averages for family " +
                                                std::string(to_string(spec.family)));
            }
        }
    }
}

DesignMatrix build_joined_design(const RegressorSpec& spec, const std::vector<JoinedRow>& rows) {
    std::vector<std::vector<double>> kept;
    std::vector<double> targets;
    std::size_t dropped = 0;
    for (const auto& row : rows) {
        auto values = regressor_row(spec, joined_row_lookup(row));
        if (!values) {
            ++dropped;
            continue;
        }
        kept.push_back(std::move(*values));
        targets.push_back(row.target_power_w);
    }
    if (kept.empty()) {
        throw AllRowsDropped("every joined row of family " +
                             std::string(to_string(spec.family)) +
                             " had an undefined transform");
    }
    DesignMatrix design;
    design.column_names = spec.column_names();
    design.dropped_rows = dropped;
    design.rows.resize(static_cast<Eigen::Index>(kept.size()),
                       static_cast<Eigen::Index>(spec.column_count()));
    design.targets.resize(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        for (std::size_t j = 0; j < kept[i].size(); ++j) {
            design.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kept[i][j];
        }
        design.targets(static_cast<Eigen::Index>(i)) = targets[i];
    }
    return design;
}

}  // namespace

double percent_error(double measured_w, double predicted_w) {
    if (measured_w <= 0.0) {
        throw NonPositiveMeasured("measured power must be positive, got " +
                                  std::to_string(measured_w));
    }
    return 100.0 * std::abs(measured_w - predicted_w) / measured_w;
}

EvaluationReport evaluate(const TrainedModel& model, const ValidatedTrace& test) {
    return evaluate_impl(model, test, false);
}

EvaluationReport cross_predict_naive(const TrainedModel& model, const ValidatedTrace& test) {
    return evaluate_impl(model, test, true);
}

CrossPredictionPair join_benchmark_averages(const ValidatedTrace& power_source,
                                            const ValidatedTrace& event_source) {
    std::set<std::string> common_benchmarks;
    for (const auto& name : power_source.benchmarks) {
        if (event_source.benchmarks.count(name) > 0) common_benchmarks.insert(name);
    }
    if (common_benchmarks.empty()) {
        throw NoCommonBenchmarks("traces share no benchmark id");
    }

    CrossPredictionPair pair;
    pair.power_cluster = power_source.cluster;
    pair.event_cluster = event_source.cluster;

    const std::set<int> power_levels(power_source.frequency_levels.begin(),
                                     power_source.frequency_levels.end());
    const std::set<int> event_levels(event_source.frequency_levels.begin(),
                                     event_source.frequency_levels.end());
    for (const int level : power_levels) {
        if (event_levels.count(level) > 0) {
            pair.frequency_pairing.emplace_back(level, level);
        } else {
            pair.unpaired_power_levels.push_back(level);
        }
    }
    for (const int level : event_levels) {
        if (power_levels.count(level) == 0) pair.unpaired_event_levels.push_back(level);
    }
    if (pair.frequency_pairing.empty()) {
        throw NoCommonFrequencies("traces share no frequency level");
    }

    std::map<std::pair<std::string, int>, BenchmarkAverage> power_avgs;
    for (auto& avg : benchmark_averages(power_source)) {
        power_avgs.emplace(std::make_pair(avg.benchmark_id, avg.frequency_mhz), std::move(avg));
    }
    std::map<std::pair<std::string, int>, BenchmarkAverage> event_avgs;
    for (auto& avg : benchmark_averages(event_source)) {
        event_avgs.emplace(std::make_pair(avg.benchmark_id, avg.frequency_mhz), std::move(avg));
    }

    for (const auto& [power_level, event_level] : pair.frequency_pairing) {
        for (const auto& benchmark : common_benchmarks) {
            const auto p = power_avgs.find({benchmark, power_level});
            const auto e = event_avgs.find({benchmark, event_level});
            if (p == power_avgs.end() || e == event_avgs.end()) continue;
            JoinedRow row;
            row.benchmark_id = benchmark;
            row.frequency_mhz = power_level;
            row.target_power_w = p->second.mean_power;
            row.regressors = e->second.mean_regressors;
            pair.rows.push_back(std::move(row));
        }
    }
    if (pair.rows.empty()) {
        throw NoCommonBenchmarks("no shared benchmark at any paired frequency");
    }
    return pair;
}

TrainedModel train_cross_model(ModelFamily family, const ValidatedTrace& power_source,
                               const ValidatedTrace& event_source, TrainingMode mode,
                               const TrainOptions& opts) {
    const CrossPredictionPair pair = join_benchmark_averages(power_source, event_source);

    TrainedModel trained;
    trained.family = family;
    trained.mode = mode;
    if (opts.select_events &&
        (family == ModelFamily::Pmu || family == ModelFamily::P2 || family == ModelFamily::P2S)) {
        std::vector<std::string> candidates = available_pmu_columns(event_source);
        std::erase(candidates, std::string("cycles"));
        trained.selected_events = select_pmu_events(event_source, candidates, opts.selection_slots);
    }
    const RegressorSpec spec = spec_for(trained);
    check_joined_columns(spec, pair.rows);

    const std::uint64_t fingerprint =
        trace_fingerprint(power_source) ^ (trace_fingerprint(event_source) * 0x9e3779b97f4a7c15ull);

    const auto fit_rows = [&](const std::vector<JoinedRow>& rows, std::optional<int> level) {
        DesignMatrix design = build_joined_design(spec, rows);
        PowerModel model;
        model.family = family;
        model.mode = mode;
        model.frequency_mhz = level;
        model.coefficients = fit_ols(design, opts.ols);
        model.info.trace_fingerprint = fingerprint;
        model.info.sample_count = static_cast<std::size_t>(design.rows.rows());
        model.info.dropped_rows = design.dropped_rows;
        return model;
    };

    if (mode == TrainingMode::Unified) {
        trained.unified = fit_rows(pair.rows, std::nullopt);
        return trained;
    }

    std::map<int, std::vector<JoinedRow>> by_level;
    for (const auto& row : pair.rows) by_level[row.frequency_mhz].push_back(row);
    for (const auto& [level, rows] : by_level) {
        if (rows.size() < opts.min_samples_per_level) {
            trained.skipped_levels.push_back(level);
            continue;
        }
        trained.per_frequency.emplace(level, fit_rows(rows, level));
    }
    if (trained.per_frequency.empty()) {
        throw DegenerateDesign("no paired frequency level has at least " +
                               std::to_string(opts.min_samples_per_level) + " joined rows");
    }
    return trained;
}

EvaluationReport evaluate_cross_model(const TrainedModel& model,
                                      const ValidatedTrace& power_source,
                                      const ValidatedTrace& event_source) {
    const CrossPredictionPair pair = join_benchmark_averages(power_source, event_source);
    const RegressorSpec spec = spec_for(model);
    check_joined_columns(spec, pair.rows);

    EvaluationReport report;
    report.model_label = model_label(model) + "/cross_averaged";
    for (const auto& row : pair.rows) {
        const PowerModel* fitted = model_for_level(model, row.frequency_mhz);
        if (fitted == nullptr) {
            ++report.skipped;
            ++report.skip_reasons["no_model_for_frequency"];
            continue;
        }
        const auto values = regressor_row(spec, joined_row_lookup(row));
        if (!values) {
            ++report.skipped;
            ++report.skip_reasons["undefined_regressor"];
            continue;
        }
        double predicted = 0.0;
        for (std::size_t i = 0; i < values->size(); ++i) {
            predicted += fitted->coefficients.values(static_cast<Eigen::Index>(i)) * (*values)[i];
        }
        SamplePrediction sample;
        sample.timestamp = 0.0;  // averaged rows carry no timestamp
        sample.benchmark_id = row.benchmark_id;
        sample.frequency_mhz = row.frequency_mhz;
        sample.measured_w = row.target_power_w;
        sample.predicted_w = predicted;
        sample.percent_error = percent_error(row.target_power_w, std::max(predicted, 0.0));
        report.per_sample.push_back(std::move(sample));
    }
    finalize_report(report);
    return report;
}

double report_sse(const EvaluationReport& report) {
    double sse = 0.0;
    for (const auto& sample : report.per_sample) {
        const double residual = sample.measured_w - sample.predicted_w;
        sse += residual * residual;
    }
    return sse;
}

}  // namespace powerfit
