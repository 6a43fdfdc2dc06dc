#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "powerfit/models.hpp"
#include "powerfit/trace.hpp"

namespace powerfit {

struct SamplePrediction {
    double timestamp = 0.0;
    std::string benchmark_id;
    int frequency_mhz = 0;
    double measured_w = 0.0;
    double predicted_w = 0.0;    // raw model output, may be negative
    double percent_error = 0.0;  // against the 0-clamped prediction
};

struct EvaluationReport {
    std::string model_label;
    bool cross_naive = false;
    std::vector<SamplePrediction> per_sample;
    std::map<int, double> per_frequency_mape;
    double overall_mape = 0.0;  // mean over per_sample, not over per-frequency means
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;
};

/// 100 * |measured - predicted| / measured.
double percent_error(double measured_w, double predicted_w);

/// Applies the model row by row and aggregates per-frequency and overall mean
/// percent error. Samples at frequencies without a per-frequency model, or
/// with undefined regressor transforms, are skipped and counted.
EvaluationReport evaluate(const TrainedModel& model, const ValidatedTrace& test);

/// Same mechanics as evaluate, but the test trace comes from the other
/// cluster; the report is flagged cross-naive.
EvaluationReport cross_predict_naive(const TrainedModel& model, const ValidatedTrace& test);

/// One training/evaluation row of the averaged cross-prediction procedure:
/// power from one cluster's benchmark means, regressors from the other's.
struct JoinedRow {
    std::string benchmark_id;
    int frequency_mhz = 0;  // equal-MHz paired level
    double target_power_w = 0.0;
    std::map<std::string, double> regressors;
};

struct CrossPredictionPair {
    Cluster power_cluster = Cluster::Big;
    Cluster event_cluster = Cluster::Little;
    std::vector<std::pair<int, int>> frequency_pairing;  // (power MHz, event MHz)
    std::vector<int> unpaired_power_levels;
    std::vector<int> unpaired_event_levels;
    std::vector<JoinedRow> rows;
};

/// Inner join of both traces' benchmark averages on (benchmark, equal MHz).
CrossPredictionPair join_benchmark_averages(const ValidatedTrace& power_source,
                                            const ValidatedTrace& event_source);

/// Fits the family on joined benchmark averages: regressors from event_source,
/// target power from power_source.
TrainedModel train_cross_model(ModelFamily family, const ValidatedTrace& power_source,
                               const ValidatedTrace& event_source, TrainingMode mode,
                               const TrainOptions& opts = {});

/// Scores a cross model on the joined averages of a test pair. Rows carry the
/// benchmark id; timestamps are not meaningful for averages and are zero.
EvaluationReport evaluate_cross_model(const TrainedModel& model,
                                      const ValidatedTrace& power_source,
                                      const ValidatedTrace& event_source);

/// Sum of squared residuals over the report's raw (unclamped) predictions.
double report_sse(const EvaluationReport& report);

}  // namespace powerfit
