#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "powerfit/csv_io.hpp"
#include "powerfit/errors.hpp"
#include "powerfit/evaluation.hpp"
#include "powerfit/model_io.hpp"
#include "powerfit/models.hpp"
#include "powerfit/regression.hpp"
#include "powerfit/synth.hpp"
#include "powerfit/trace.hpp"

namespace {

using namespace powerfit;

// Exit codes: 0 ok, 1 usage, 2 malformed input file, 3 modelling error,
// 4 empty evaluation.
constexpr int kExitSchema = 2;
constexpr int kExitModel = 3;
constexpr int kExitEmptyEvaluation = 4;

struct GlobalOptions {
    std::uint64_t seed = 12345;  // fixed default, never wall-clock
    bool quiet = false;
    bool pmu_per_second = false;
};

void info(const GlobalOptions& global, const std::string& message) {
    if (!global.quiet) std::cerr << message << "\n";
}

ValidatedTrace load_trace(const GlobalOptions& global, const std::string& path) {
    CsvReadOptions opts;
    opts.pmu_per_second = global.pmu_per_second;
    CsvReadResult result = read_trace_csv_file(path, opts);
    for (const auto& warning : result.warnings) info(global, path + ": " + warning);
    ValidatedTrace trace = validate_trace(result.records);
    if (trace.dropped_count > 0) {
        info(global, path + ": dropped " + std::to_string(trace.dropped_count) +
                         " invalid record(s)");
    }
    for (const auto& column : trace.missing_columns) {
        info(global, path + ": column '" + column + "' is not present in every record");
    }
    return trace;
}

// Deterministic Fisher-Yates so a split seed means the same split everywhere.
std::vector<std::string> shuffled(std::vector<std::string> names, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    for (std::size_t i = names.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(engine() % i);
        std::swap(names[i - 1], names[j]);
    }
    return names;
}

struct BenchmarkSplit {
    std::set<std::string> train;
    std::set<std::string> test;
};

BenchmarkSplit split_benchmarks(const std::set<std::string>& benchmarks, std::uint64_t seed,
                                double fraction) {
    std::vector<std::string> names(benchmarks.begin(), benchmarks.end());
    names = shuffled(std::move(names), seed);
    const auto train_count = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(names.size())));
    BenchmarkSplit split;
    for (std::size_t i = 0; i < names.size(); ++i) {
        (i < train_count ? split.train : split.test).insert(names[i]);
    }
    return split;
}

ValidatedTrace filter_benchmarks(const ValidatedTrace& trace,
                                 const std::set<std::string>& keep) {
    std::vector<SampleRecord> records;
    for (const auto& rec : trace.records) {
        if (keep.count(rec.benchmark_id) > 0) records.push_back(rec);
    }
    if (records.empty()) {
        throw EmptyTrace("benchmark split leaves no records");
    }
    return validate_trace(records);
}

void print_model_diagnostics(const GlobalOptions& global, const TrainedModel& model) {
    const auto report = [&](const PowerModel& fitted) {
        const std::string where = fitted.frequency_mhz
                                      ? std::to_string(*fitted.frequency_mhz) + " MHz"
                                      : std::string("unified");
        const auto columns = static_cast<int>(fitted.coefficients.names.size());
        if (fitted.coefficients.rank < columns) {
            info(global, "warning: " + std::string(to_string(model.family)) + " @ " + where +
                             ": rank " + std::to_string(fitted.coefficients.rank) + " of " +
                             std::to_string(columns) +
                             " columns, minimum-norm coefficients (condition " +
                             format_double(fitted.coefficients.condition_estimate) + ")");
        } else {
            info(global, std::string(to_string(model.family)) + " @ " + where + ": " +
                             std::to_string(fitted.info.sample_count) + " samples, condition " +
                             format_double(fitted.coefficients.condition_estimate));
        }
    };
    if (model.unified) report(*model.unified);
    for (const auto& [level, fitted] : model.per_frequency) report(fitted);
    for (const int level : model.skipped_levels) {
        info(global, "warning: skipped level " + std::to_string(level) +
                         " MHz (too few samples)");
    }
}

void print_report(const EvaluationReport& report, bool per_frequency_table) {
    std::cout << "overall_mape," << format_double(report.overall_mape) << "\n";
    if (per_frequency_table) {
        std::cout << "freq_mhz,mape\n";
        for (const auto& [level, mape] : report.per_frequency_mape) {
            std::cout << level << "," << format_double(mape) << "\n";
        }
    }
    if (report.skipped > 0) {
        std::cerr << "skipped " << report.skipped << " sample(s):";
        for (const auto& [reason, count] : report.skip_reasons) {
            std::cerr << " " << reason << "=" << count;
        }
        std::cerr << "\n";
    }
}

std::vector<std::string> family_names() {
    std::vector<std::string> names;
    for (const ModelFamily family : kAllFamilies) names.emplace_back(to_string(family));
    return names;
}

int run(int argc, char** argv) {
    CLI::App app{"run-time CPU power modelling from sampled traces"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.fallthrough();
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "seed for seeded operations (default 12345)");
    app.add_flag("--quiet", global.quiet, "suppress informational stderr output");
    app.add_flag("--pmu-per-second", global.pmu_per_second,
                 "divide PMU counts by the local sample interval at ingestion");

    // train
    auto* train_cmd = app.add_subcommand("train", "fit a model family on a trace CSV");
    std::string train_csv;
    std::string family_name = "p2s";
    std::string mode_name = "unified";
    std::string model_out = "model.json";
    std::string test_out;
    bool select_events = false;
    int slots = 5;
    std::uint64_t split_seed = 0;
    bool split_given = false;
    double split_fraction = 0.7;
    std::size_t min_samples = 2;
    train_cmd->add_option("train_csv", train_csv, "training trace CSV")->required();
    train_cmd->add_option("--family", family_name, "model family")
        ->check(CLI::IsMember(family_names()));
    train_cmd->add_option("--mode", mode_name, "unified|perfreq");
    train_cmd->add_flag("--select-events", select_events,
                        "re-derive the PMU event list from the train set");
    train_cmd->add_option("--slots", slots, "PMU event slots including cycles (default 5)");
    train_cmd->add_option("--split-by-benchmark", split_seed,
                          "hold out a benchmark subset chosen with this seed")
        ->trigger_on_parse()
        ->each([&](const std::string&) { split_given = true; });
    train_cmd->add_option("--split-fraction", split_fraction,
                          "fraction of benchmarks used for training (default 0.7)");
    train_cmd->add_option("--test-out", test_out, "write the held-out records to this CSV");
    train_cmd->add_option("--min-samples", min_samples,
                          "minimum samples per frequency level (default 2)");
    train_cmd->add_option("--out", model_out, "model output file (default model.json)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a model file on a test trace CSV");
    std::string eval_model;
    std::string eval_csv;
    std::string report_out;
    bool per_frequency_table = false;
    eval_cmd->add_option("model", eval_model, "model JSON file")->required();
    eval_cmd->add_option("test_csv", eval_csv, "test trace CSV")->required();
    eval_cmd->add_option("--report", report_out, "write the full report JSON here");
    eval_cmd->add_flag("--per-frequency-table", per_frequency_table,
                       "print freq_mhz,mape rows");

    // correlate
    auto* corr_cmd = app.add_subcommand("correlate", "rank PMU events by |pearson| vs power");
    std::string corr_csv;
    int corr_slots = 5;
    corr_cmd->add_option("train_csv", corr_csv, "trace CSV")->required();
    corr_cmd->add_option("--slots", corr_slots, "events to keep including cycles (default 5)");

    // crosspredict
    auto* cross_cmd = app.add_subcommand(
        "crosspredict", "predict one cluster's power from the other cluster's events");
    std::string power_csv;
    std::string event_csv;
    std::string cross_family = "p2s";
    std::string cross_mode = "perfreq";
    bool naive = false;
    bool averaged = false;
    std::string cross_out;
    std::string cross_report_out;
    bool cross_table = false;
    std::uint64_t cross_split_seed = 0;
    bool cross_split_given = false;
    double cross_split_fraction = 0.7;
    cross_cmd->add_option("power_csv", power_csv, "trace of the cluster whose power is modelled")
        ->required();
    cross_cmd->add_option("event_csv", event_csv, "trace of the cluster supplying events")
        ->required();
    cross_cmd->add_option("--family", cross_family, "model family")
        ->check(CLI::IsMember(family_names()));
    cross_cmd->add_option("--mode", cross_mode, "unified|perfreq");
    auto* naive_flag = cross_cmd->add_flag("--naive", naive,
                                           "feed the event trace into the power-side model");
    cross_cmd->add_flag("--averaged", averaged, "train on joined benchmark averages")
        ->excludes(naive_flag);
    cross_cmd->add_option("--split-by-benchmark", cross_split_seed,
                          "hold out a benchmark subset chosen with this seed")
        ->trigger_on_parse()
        ->each([&](const std::string&) { cross_split_given = true; });
    cross_cmd->add_option("--split-fraction", cross_split_fraction,
                          "fraction of benchmarks used for training (default 0.7)");
    cross_cmd->add_option("--out", cross_out, "save the fitted model JSON here");
    cross_cmd->add_option("--report", cross_report_out, "write the full report JSON here");
    cross_cmd->add_flag("--per-frequency-table", cross_table, "print freq_mhz,mape rows");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a trace from a ground-truth spec");
    std::string spec_path;
    std::string synth_out = "trace.csv";
    std::string little_out;
    double event_scale = 1.0;
    double power_offset = 0.0;
    std::vector<int> little_levels;
    bool synth_seed_given = false;
    synth_cmd->add_option("spec", spec_path, "ground-truth spec JSON")->required();
    synth_cmd->add_option("--out", synth_out, "output trace CSV (default trace.csv)");
    synth_cmd->add_option("--little-out", little_out,
                          "also write a scaled LITTLE twin trace to this CSV");
    synth_cmd->add_option("--event-scale", event_scale,
                          "PMU scale factor for the LITTLE twin (default 1)");
    synth_cmd->add_option("--power-offset", power_offset,
                          "power shift in watts for the LITTLE twin (default 0)");
    synth_cmd->add_option("--little-levels", little_levels,
                          "restrict the LITTLE twin to these MHz levels");

    // report
    auto* report_cmd = app.add_subcommand("report", "print a saved report JSON as tables");
    std::string report_path;
    bool report_table = false;
    report_cmd->add_option("report", report_path, "report JSON file")->required();
    report_cmd->add_flag("--per-frequency-table", report_table, "print freq_mhz,mape rows");

    CLI11_PARSE(app, argc, argv);

    for (auto* opt : app.get_options()) {
        if (opt->get_name() == "--seed" && opt->count() > 0) synth_seed_given = true;
    }

    if (train_cmd->parsed()) {
        ValidatedTrace trace = load_trace(global, train_csv);
        std::optional<std::uint64_t> used_split_seed;
        if (split_given) {
            const BenchmarkSplit split =
                split_benchmarks(trace.benchmarks, split_seed, split_fraction);
            info(global, "train split: " + std::to_string(split.train.size()) +
                             " benchmark(s), held out " + std::to_string(split.test.size()));
            if (!test_out.empty() && !split.test.empty()) {
                write_trace_csv_file(test_out, filter_benchmarks(trace, split.test));
                info(global, "wrote held-out trace to " + test_out);
            }
            trace = filter_benchmarks(trace, split.train);
            used_split_seed = split_seed;
        }
        TrainOptions opts;
        opts.min_samples_per_level = min_samples;
        opts.select_events = select_events;
        opts.selection_slots = slots;
        TrainedModel model =
            train(family_from_string(family_name), trace, mode_from_string(mode_name), opts);
        model.split_seed = used_split_seed;
        print_model_diagnostics(global, model);
        if (!model.selected_events.empty()) {
            std::string joined;
            for (const auto& event : model.selected_events) {
                if (!joined.empty()) joined += ",";
                joined += event;
            }
            info(global, "selected events: " + joined);
        }
        write_model_file(model_out, model);
        info(global, "wrote model to " + model_out);
        return 0;
    }

    if (eval_cmd->parsed()) {
        const TrainedModel model = read_model_file(eval_model);
        const ValidatedTrace test = load_trace(global, eval_csv);
        const EvaluationReport report = evaluate(model, test);
        print_report(report, per_frequency_table);
        if (!report_out.empty()) {
            write_report_file(report_out, report);
            info(global, "wrote report to " + report_out);
        }
        return 0;
    }

    if (corr_cmd->parsed()) {
        const ValidatedTrace trace = load_trace(global, corr_csv);
        std::vector<std::string> candidates = available_pmu_columns(trace);
        std::erase(candidates, std::string("cycles"));
        const std::vector<std::string> selected =
            select_pmu_events(trace, candidates, corr_slots);

        std::vector<double> power(trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) power[i] = trace.records[i].power;
        std::cout << "slot,event,pearson_r\n";
        for (std::size_t i = 0; i < selected.size(); ++i) {
            std::vector<double> column(trace.size());
            for (std::size_t j = 0; j < trace.size(); ++j) {
                column[j] = trace.records[j].pmu.at(selected[i]);
            }
            const auto r = pearson(column, power);
            std::cout << (i + 1) << "," << selected[i] << ","
                      << (r ? format_double(*r) : "undefined") << "\n";
        }
        return 0;
    }

    if (cross_cmd->parsed()) {
        if (!naive && !averaged) {
            std::cerr << "crosspredict needs --naive or --averaged\n";
            return 1;
        }
        ValidatedTrace power_trace = load_trace(global, power_csv);
        ValidatedTrace event_trace = load_trace(global, event_csv);
        ValidatedTrace power_test = power_trace;
        ValidatedTrace event_test = event_trace;
        if (cross_split_given) {
            std::set<std::string> all = power_trace.benchmarks;
            all.insert(event_trace.benchmarks.begin(), event_trace.benchmarks.end());
            const BenchmarkSplit split =
                split_benchmarks(all, cross_split_seed, cross_split_fraction);
            power_test = filter_benchmarks(power_trace, split.test);
            event_test = filter_benchmarks(event_trace, split.test);
            power_trace = filter_benchmarks(power_trace, split.train);
            event_trace = filter_benchmarks(event_trace, split.train);
        }
        const ModelFamily family = family_from_string(cross_family);
        const TrainingMode mode = mode_from_string(cross_mode);
        TrainedModel model;
        EvaluationReport report;
        if (naive) {
            model = train(family, power_trace, mode);
            report = cross_predict_naive(model, event_test);
        } else {
            model = train_cross_model(family, power_trace, event_trace, mode);
            report = evaluate_cross_model(model, power_test, event_test);
        }
        if (cross_split_given) model.split_seed = cross_split_seed;
        print_model_diagnostics(global, model);
        print_report(report, cross_table);
        if (!cross_out.empty()) {
            write_model_file(cross_out, model);
            info(global, "wrote model to " + cross_out);
        }
        if (!cross_report_out.empty()) {
            write_report_file(cross_report_out, report);
            info(global, "wrote report to " + cross_report_out);
        }
        return 0;
    }

    if (synth_cmd->parsed()) {
        GroundTruthSpec spec = read_ground_truth_spec_file(spec_path);
        if (synth_seed_given) spec.seed = global.seed;
        if (!little_out.empty()) {
            const ClusterPair pair =
                make_cluster_pair(spec, event_scale, power_offset, little_levels);
            write_trace_csv_file(synth_out, pair.big);
            write_trace_csv_file(little_out, pair.little);
            info(global, "wrote " + std::to_string(pair.big.size()) + " big records to " +
                             synth_out + " and " + std::to_string(pair.little.size()) +
                             " little records to " + little_out);
        } else {
            const GeneratedTrace generated = generate_trace(spec);
            write_trace_csv_file(synth_out, generated.trace);
            info(global, "wrote " + std::to_string(generated.trace.size()) + " records (" +
                             std::to_string(generated.trace.frequency_levels.size()) +
                             " levels, " + std::to_string(generated.trace.benchmarks.size()) +
                             " benchmarks) to " + synth_out);
        }
        return 0;
    }

    if (report_cmd->parsed()) {
        const EvaluationReport report = read_report_file(report_path);
        std::cerr << "model " << report.model_label
                  << (report.cross_naive ? " (cross-naive)" : "") << ", "
                  << report.per_sample.size() << " samples\n";
        print_report(report, report_table);
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const SchemaViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const EmptyEvaluation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEmptyEvaluation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModel;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModel;
    }
}
