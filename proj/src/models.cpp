#include "powerfit/models.hpp"

#include <algorithm>
#include <cstring>

#include "powerfit/errors.hpp"

namespace powerfit {

namespace {

RegressorTerm raw(const std::string& column) {
    return {column, TransformKind::Raw, column, ""};
}

RegressorTerm square(const std::string& column) {
    return {column + "^2", TransformKind::Square, column, ""};
}

RegressorTerm product(const std::string& a, const std::string& b) {
    return {a + "*" + b, TransformKind::Product, a, b};
}

RegressorTerm square_times(const std::string& a, const std::string& b) {
    return {a + "^2*" + b, TransformKind::SquareTimes, a, b};
}

RegressorTerm per_instruction(const std::string& column, const std::string& name) {
    return {name, TransformKind::Ratio, column, "instructions"};
}

std::vector<RegressorTerm> physical_terms() {
    return {raw("voltage"), raw("frequency"), raw("temperature")};
}

std::vector<RegressorTerm> pmu_terms(const std::vector<std::string>& events) {
    std::vector<RegressorTerm> terms;
    terms.reserve(events.size());
    for (const auto& event : events) terms.push_back(raw(event));
    return terms;
}

std::vector<RegressorTerm> state_terms() {
    std::vector<RegressorTerm> terms;
    for (const auto& state : state_columns()) terms.push_back(raw(state));
    return terms;
}

std::vector<RegressorTerm> csr_terms() {
    return {
        {"ipc", TransformKind::Ipc, "instructions", "cycles"},
        per_instruction("int_instructions", "int_per_instr"),
        per_instruction("vfp_instructions", "vfp_per_instr"),
        per_instruction("l1d_access", "l1d_per_instr"),
        per_instruction("l2_access", "l2_access_per_instr"),
        per_instruction("l2_refill", "l2_refill_per_instr"),
    };
}

std::vector<RegressorTerm> concat(std::vector<RegressorTerm> a,
                                  const std::vector<RegressorTerm>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

RegressorSpec make_spec(ModelFamily family, const std::vector<std::string>& pmu_events) {
    RegressorSpec spec;
    spec.family = family;
    switch (family) {
        case ModelFamily::Physical:
            spec.terms = physical_terms();
            break;
        case ModelFamily::Pmu:
            spec.terms = pmu_terms(pmu_events);
            break;
        case ModelFamily::CpuState:
            spec.terms = state_terms();
            break;
        case ModelFamily::P2:
            spec.terms = concat(physical_terms(), pmu_terms(pmu_events));
            break;
        case ModelFamily::P2S:
            spec.terms = concat(concat(physical_terms(), pmu_terms(pmu_events)), state_terms());
            break;
        case ModelFamily::UoP:
            spec.terms = {raw("frequency"), square("frequency")};
            break;
        case ModelFamily::UoSIdle:
            spec.terms = {raw("idle"), square("idle")};
            break;
        case ModelFamily::UoSFull:
            spec.terms = {raw("idle"), raw("frequency"), product("idle", "frequency"),
                          square("idle"), square_times("idle", "frequency")};
            break;
        case ModelFamily::Csr:
            spec.terms = csr_terms();
            break;
        case ModelFamily::CsrUpdated:
            spec.terms = concat(concat(physical_terms(), csr_terms()), state_terms());
            break;
    }
    return spec;
}

bool family_has_pmu_block(ModelFamily family) {
    return family == ModelFamily::Pmu || family == ModelFamily::P2 ||
           family == ModelFamily::P2S;
}

}  // namespace

std::string_view to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::Physical: return "physical";
        case ModelFamily::Pmu: return "pmu";
        case ModelFamily::CpuState: return "cpu_state";
        case ModelFamily::P2: return "p2";
        case ModelFamily::P2S: return "p2s";
        case ModelFamily::UoP: return "uop";
        case ModelFamily::UoSIdle: return "uos_idle";
        case ModelFamily::UoSFull: return "uos_full";
        case ModelFamily::Csr: return "csr";
        case ModelFamily::CsrUpdated: return "csr_updated";
    }
    return "?";
}

ModelFamily family_from_string(std::string_view text) {
    for (const ModelFamily family : kAllFamilies) {
        if (text == to_string(family)) return family;
    }
    throw SchemaViolation("unknown model family '" + std::string(text) + "'");
}

std::string_view to_string(TrainingMode mode) {
    return mode == TrainingMode::Unified ? "unified" : "per_frequency";
}

TrainingMode mode_from_string(std::string_view text) {
    if (text == "unified") return TrainingMode::Unified;
    if (text == "per_frequency" || text == "perfreq") return TrainingMode::PerFrequency;
    throw SchemaViolation("unknown training mode '" + std::string(text) + "'");
}

std::vector<std::string> RegressorSpec::column_names() const {
    std::vector<std::string> names;
    names.reserve(terms.size() + 1);
    names.emplace_back("const");
    for (const auto& term : terms) names.push_back(term.name);
    return names;
}

RegressorSpec regressor_spec(ModelFamily family) {
    return make_spec(family, core_pmu_columns());
}

RegressorSpec regressor_spec(ModelFamily family, const std::vector<std::string>& pmu_events) {
    if (!family_has_pmu_block(family)) {
        throw Error(std::string("family '") + std::string(to_string(family)) +
                    "' has no selectable PMU event list");
    }
    if (pmu_events.empty() || pmu_events.front() != "cycles") {
        throw Error("selected PMU event list must start with 'cycles'");
    }
    return make_spec(family, pmu_events);
}

RegressorSpec spec_for(const TrainedModel& model) {
    if (!model.selected_events.empty()) {
        return regressor_spec(model.family, model.selected_events);
    }
    return regressor_spec(model.family);
}

std::optional<std::vector<double>> regressor_row(const RegressorSpec& spec,
                                                 const ColumnLookup& lookup) {
    std::vector<double> row;
    row.reserve(spec.column_count());
    row.push_back(1.0);
    for (const auto& term : spec.terms) {
        const auto a = lookup(term.col_a);
        if (!a) return std::nullopt;
        switch (term.kind) {
            case TransformKind::Raw:
                row.push_back(*a);
                break;
            case TransformKind::Square:
                row.push_back(*a * *a);
                break;
            case TransformKind::Product:
            case TransformKind::SquareTimes:
            case TransformKind::Ratio:
            case TransformKind::Ipc: {
                const auto b = lookup(term.col_b);
                if (!b) return std::nullopt;
                if (term.kind == TransformKind::Product) {
                    row.push_back(*a * *b);
                } else if (term.kind == TransformKind::SquareTimes) {
                    row.push_back(*a * *a * *b);
                } else {
                    if (*b == 0.0) return std::nullopt;  // undefined ratio
                    row.push_back(*a / *b);
                }
                break;
            }
        }
    }
    return row;
}

std::optional<std::vector<double>> regressor_row(const RegressorSpec& spec,
                                                 const SampleRecord& record) {
    return regressor_row(spec, [&record](std::string_view name) {
        return record_column(record, name);
    });
}

DesignMatrix build_design_matrix(const RegressorSpec& spec, const ValidatedTrace& trace) {
    // Every source column must be present in every record before any row math.
    for (const auto& term : spec.terms) {
        for (const std::string& column : {term.col_a, term.col_b}) {
            if (column.empty()) continue;
            const bool everywhere = std::all_of(
                trace.records.begin(), trace.records.end(), [&](const SampleRecord& rec) {
                    return record_column(rec, column).has_value();
                });
            if (!everywhere) {
                throw MissingColumn(column, "family " + std::string(to_string(spec.family)));
            }
        }
    }

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(trace.size());
    targets.reserve(trace.size());
    std::size_t dropped = 0;
    for (const auto& rec : trace.records) {
        auto row = regressor_row(spec, rec);
        if (!row) {
            ++dropped;  // zero denominator in a ratio transform
            continue;
        }
        rows.push_back(std::move(*row));
        targets.push_back(rec.power);
    }
    if (rows.empty()) {
        throw AllRowsDropped("every row of family " + std::string(to_string(spec.family)) +
                             " had an undefined transform");
    }

    DesignMatrix design;
    design.column_names = spec.column_names();
    design.dropped_rows = dropped;
    design.rows.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(spec.column_count()));
    design.targets.resize(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            design.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        design.targets(static_cast<Eigen::Index>(i)) = targets[i];
    }
    return design;
}

DesignMatrix build_design_matrix(ModelFamily family, const ValidatedTrace& trace) {
    return build_design_matrix(regressor_spec(family), trace);
}

std::uint64_t trace_fingerprint(const ValidatedTrace& trace) {
    // FNV-1a over the record fields that identify the training data.
    std::uint64_t hash = 14695981039346656037ull;
    const auto mix = [&hash](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash ^= bytes[i];
            hash *= 1099511628211ull;
        }
    };
    const auto mix_double = [&](double v) { mix(&v, sizeof v); };
    const std::size_t count = trace.size();
    mix(&count, sizeof count);
    const int cluster = static_cast<int>(trace.cluster);
    mix(&cluster, sizeof cluster);
    for (const auto& rec : trace.records) {
        mix_double(rec.timestamp);
        mix(&rec.frequency_mhz, sizeof rec.frequency_mhz);
        mix_double(rec.power);
        mix(rec.benchmark_id.data(), rec.benchmark_id.size());
    }
    return hash;
}

TrainedModel train(ModelFamily family, const ValidatedTrace& trace, TrainingMode mode,
                   const TrainOptions& opts) {
    TrainedModel trained;
    trained.family = family;
    trained.mode = mode;

    RegressorSpec spec;
    if (opts.select_events && family_has_pmu_block(family)) {
        std::vector<std::string> candidates = available_pmu_columns(trace);
        std::erase(candidates, std::string("cycles"));
        trained.selected_events = select_pmu_events(trace, candidates, opts.selection_slots);
        spec = regressor_spec(family, trained.selected_events);
    } else {
        spec = regressor_spec(family);
    }

    const auto fit_one = [&](const ValidatedTrace& rows, std::optional<int> level) {
        DesignMatrix design = build_design_matrix(spec, rows);
        PowerModel model;
        model.family = family;
        model.mode = mode;
        model.frequency_mhz = level;
        model.coefficients = fit_ols(design, opts.ols);
        model.info.trace_fingerprint = trace_fingerprint(rows);
        model.info.sample_count = static_cast<std::size_t>(design.rows.rows());
        model.info.dropped_rows = design.dropped_rows;
        return model;
    };

    if (mode == TrainingMode::Unified) {
        trained.unified = fit_one(trace, std::nullopt);
        return trained;
    }

    for (const auto& [level, partition] : partition_by_frequency(trace)) {
        if (partition.size() < opts.min_samples_per_level) {
            trained.skipped_levels.push_back(level);
            continue;
        }
        trained.per_frequency.emplace(level, fit_one(partition, level));
    }
    if (trained.per_frequency.empty()) {
        throw DegenerateDesign("no frequency level has at least " +
                               std::to_string(opts.min_samples_per_level) + " samples");
    }
    return trained;
}

}  // namespace powerfit
