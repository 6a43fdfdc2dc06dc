#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "powerfit/trace.hpp"

namespace powerfit {

/// Regression inputs: n rows of p regressors plus the measured power targets.
/// The first column is always the all-ones intercept named "const".
struct DesignMatrix {
    std::vector<std::string> column_names;
    Eigen::MatrixXd rows;
    Eigen::VectorXd targets;
    std::size_t dropped_rows = 0;  // rows skipped because a transform was undefined
};

struct CoefficientVector {
    std::vector<std::string> names;
    Eigen::VectorXd values;  // watts per regressor unit
    int rank = 0;            // effective numerical rank of the solve
    double condition_estimate = 0.0;
};

struct OlsOptions {
    int min_rows = 2;
    // Singular values below rel_tolerance * largest are treated as zero.
    double sv_rel_tolerance = 1e-10;
};

/// Minimum-norm least-squares solution via SVD. Collinear or constant columns
/// reduce the reported rank instead of failing.
CoefficientVector fit_ols(const DesignMatrix& design, const OlsOptions& opts = {});

/// beta_0 + sum(beta_i * row[name_i]). The row must supply every non-const
/// coefficient name. Negative results are returned as-is.
double predict(const CoefficientVector& coeffs, const std::map<std::string, double>& row);

/// Sample Pearson correlation; nullopt when either vector is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// "cycles" plus the (slots - 1) candidates with the highest |pearson| against
/// power. Candidates not present in every record are ignored; ties break by
/// ascending name; undefined correlations rank below every defined one.
std::vector<std::string> select_pmu_events(const ValidatedTrace& trace,
                                           const std::vector<std::string>& candidates,
                                           int slots);

}  // namespace powerfit
