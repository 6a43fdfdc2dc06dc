#pragma once

#include <string>

#include "powerfit/evaluation.hpp"
#include "powerfit/models.hpp"
#include "powerfit/synth.hpp"

namespace powerfit {

inline constexpr const char* kToolName = "powerfit";
inline constexpr const char* kToolVersion = "0.1.0";

/// Model files hold the family, mode, ordered coefficient name/value pairs,
/// rank and training metadata. Per-frequency variants serialize as one
/// frequency-keyed array in a single document. Round-trips exactly:
/// export -> import -> predict is bit-identical.
std::string export_model_json(const TrainedModel& model);
TrainedModel import_model_json(const std::string& text);
void write_model_file(const std::string& path, const TrainedModel& model);
TrainedModel read_model_file(const std::string& path);

std::string export_report_json(const EvaluationReport& report);
EvaluationReport import_report_json(const std::string& text);
void write_report_file(const std::string& path, const EvaluationReport& report);
EvaluationReport read_report_file(const std::string& path);

/// Ground-truth spec for the synth command, as JSON.
GroundTruthSpec parse_ground_truth_spec(const std::string& text);
GroundTruthSpec read_ground_truth_spec_file(const std::string& path);

}  // namespace powerfit
