#include "powerfit/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "powerfit/errors.hpp"

namespace powerfit {

CoefficientVector fit_ols(const DesignMatrix& design, const OlsOptions& opts) {
    const Eigen::Index n = design.rows.rows();
    const Eigen::Index p = design.rows.cols();
    if (p != static_cast<Eigen::Index>(design.column_names.size())) {
        throw Error("design matrix has " + std::to_string(p) + " columns but " +
                    std::to_string(design.column_names.size()) + " names");
    }
    if (design.targets.size() != n) {
        throw Error("design matrix rows and targets disagree");
    }
    if (n < opts.min_rows) {
        throw DegenerateDesign("need at least " + std::to_string(opts.min_rows) +
                               " rows, got " + std::to_string(n));
    }
    if (!design.rows.allFinite() || !design.targets.allFinite()) {
        throw NonFiniteInput("design matrix or targets contain NaN/inf");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design.rows,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(opts.sv_rel_tolerance);

    CoefficientVector coeffs;
    coeffs.names = design.column_names;
    coeffs.values = svd.solve(design.targets);
    coeffs.rank = static_cast<int>(svd.rank());
    const auto& sv = svd.singularValues();
    coeffs.condition_estimate =
        coeffs.rank > 0 ? sv(0) / sv(coeffs.rank - 1) : 0.0;
    return coeffs;
}

double predict(const CoefficientVector& coeffs, const std::map<std::string, double>& row) {
    double sum = 0.0;
    for (std::size_t i = 0; i < coeffs.names.size(); ++i) {
        const std::string& name = coeffs.names[i];
        if (name == "const") {
            sum += coeffs.values(static_cast<Eigen::Index>(i));
            continue;
        }
        const auto it = row.find(name);
        if (it == row.end()) throw MissingRegressor(name);
        sum += coeffs.values(static_cast<Eigen::Index>(i)) * it->second;
    }
    return sum;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw LengthMismatch("pearson inputs have lengths " + std::to_string(x.size()) +
                             " and " + std::to_string(y.size()));
    }
    const std::size_t n = x.size();
    if (n == 0) return std::nullopt;

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // constant vector
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::string> select_pmu_events(const ValidatedTrace& trace,
                                           const std::vector<std::string>& candidates,
                                           int slots) {
    if (slots < 1) throw Error("selection needs at least 1 slot");

    const std::vector<std::string> available = available_pmu_columns(trace);
    const auto has = [&](const std::string& name) {
        return std::find(available.begin(), available.end(), name) != available.end();
    };
    if (!has("cycles")) throw MissingColumn("cycles", "event selection");

    std::vector<double> power(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) power[i] = trace.records[i].power;

    struct Scored {
        std::string name;
        std::optional<double> abs_r;
    };
    std::vector<Scored> scored;
    for (const auto& name : candidates) {
        if (name == "cycles" || !has(name)) continue;
        std::vector<double> column(trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) {
            column[i] = trace.records[i].pmu.at(name);
        }
        const auto r = pearson(column, power);
        scored.push_back({name, r ? std::optional<double>(std::abs(*r)) : std::nullopt});
    }
    if (scored.empty()) throw NoCandidates("no usable candidate events in trace");

    // Highest |r| first; undefined (constant) columns sort below every defined
    // value; ties break by ascending name.
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.abs_r.has_value() != b.abs_r.has_value()) return a.abs_r.has_value();
        if (a.abs_r && b.abs_r && *a.abs_r != *b.abs_r) return *a.abs_r > *b.abs_r;
        return a.name < b.name;
    });

    std::vector<std::string> selected = {"cycles"};
    for (const auto& entry : scored) {
        if (selected.size() >= static_cast<std::size_t>(slots)) break;
        selected.push_back(entry.name);
    }
    return selected;
}

}  // namespace powerfit
