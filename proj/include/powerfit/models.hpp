#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "powerfit/regression.hpp"
#include "powerfit/trace.hpp"

namespace powerfit {

/// The ten model families. Physical, Pmu and CpuState are the component
/// models; P2 and P2S are their hybrids; UoP, UoSIdle, UoSFull, Csr and
/// CsrUpdated are the published comparison models.
enum class ModelFamily {
    Physical,
    Pmu,
    CpuState,
    P2,
    P2S,
    UoP,
    UoSIdle,
    UoSFull,
    Csr,
    CsrUpdated,
};

inline constexpr std::array<ModelFamily, 10> kAllFamilies = {
    ModelFamily::Physical, ModelFamily::Pmu,     ModelFamily::CpuState,
    ModelFamily::P2,       ModelFamily::P2S,     ModelFamily::UoP,
    ModelFamily::UoSIdle,  ModelFamily::UoSFull, ModelFamily::Csr,
    ModelFamily::CsrUpdated,
};

std::string_view to_string(ModelFamily family);
ModelFamily family_from_string(std::string_view text);  // throws SchemaViolation

enum class TransformKind {
    Raw,          // column
    Square,       // column^2
    Product,      // a * b
    SquareTimes,  // a^2 * b
    Ratio,        // a / b, undefined when b == 0
    Ipc,          // instructions / cycles, undefined when cycles == 0
};

struct RegressorTerm {
    std::string name;  // design-matrix column name
    TransformKind kind = TransformKind::Raw;
    std::string col_a;
    std::string col_b;  // second operand for Product/SquareTimes/Ratio/Ipc
};

/// Ordered regressor transforms of one family. The implicit leading "const"
/// column is part of the column count but not of terms.
struct RegressorSpec {
    ModelFamily family = ModelFamily::Physical;
    std::vector<RegressorTerm> terms;

    std::size_t column_count() const { return terms.size() + 1; }
    std::vector<std::string> column_names() const;
};

/// The family's published regressor list.
RegressorSpec regressor_spec(ModelFamily family);

/// Pmu/P2/P2S variant with a dynamically selected PMU event list (must start
/// with "cycles"). Other families reject the override.
RegressorSpec regressor_spec(ModelFamily family, const std::vector<std::string>& pmu_events);

enum class TrainingMode { Unified, PerFrequency };

std::string_view to_string(TrainingMode mode);
TrainingMode mode_from_string(std::string_view text);

struct TrainingInfo {
    std::uint64_t trace_fingerprint = 0;
    std::size_t sample_count = 0;
    std::size_t dropped_rows = 0;
};

/// One fitted equation: coefficients plus provenance.
struct PowerModel {
    ModelFamily family = ModelFamily::Physical;
    TrainingMode mode = TrainingMode::Unified;
    std::optional<int> frequency_mhz;  // set in per-frequency mode
    CoefficientVector coefficients;
    TrainingInfo info;
};

struct TrainOptions {
    std::size_t min_samples_per_level = 2;  // per-frequency partitions below this are skipped
    bool select_events = false;             // re-derive PMU columns from the train set
    int selection_slots = 5;
    OlsOptions ols;
};

/// Result of train(): exactly one of unified / per_frequency is populated.
struct TrainedModel {
    ModelFamily family = ModelFamily::Physical;
    TrainingMode mode = TrainingMode::Unified;
    std::optional<PowerModel> unified;
    std::map<int, PowerModel> per_frequency;
    std::vector<int> skipped_levels;           // too few samples to fit
    std::vector<std::string> selected_events;  // empty when the published list was used
    std::optional<std::uint64_t> split_seed;   // set when the CLI split by benchmark
};

/// Regressor spec the model was actually trained with.
RegressorSpec spec_for(const TrainedModel& model);

using ColumnLookup = std::function<std::optional<double>(std::string_view)>;

/// Transform values for one row, aligned with RegressorSpec::column_names()
/// (leading 1.0 for const). nullopt when a denominator is zero or a source
/// column is missing.
std::optional<std::vector<double>> regressor_row(const RegressorSpec& spec,
                                                 const ColumnLookup& lookup);
std::optional<std::vector<double>> regressor_row(const RegressorSpec& spec,
                                                 const SampleRecord& record);

DesignMatrix build_design_matrix(const RegressorSpec& spec, const ValidatedTrace& trace);
DesignMatrix build_design_matrix(ModelFamily family, const ValidatedTrace& trace);

/// Fits the family on the trace, either one unified model over all rows or one
/// model per frequency partition with the equations unchanged.
TrainedModel train(ModelFamily family, const ValidatedTrace& trace, TrainingMode mode,
                   const TrainOptions& opts = {});

std::uint64_t trace_fingerprint(const ValidatedTrace& trace);

}  // namespace powerfit
