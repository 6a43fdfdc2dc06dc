#pragma once

#include <stdexcept>
#include <string>

namespace powerfit {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Trace validation
class EmptyTrace : public Error { public: using Error::Error; };
class MixedClusters : public Error { public: using Error::Error; };

// A column required by a model family is not present in every record.
class MissingColumn : public Error {
public:
    MissingColumn(const std::string& column, const std::string& context)
        : Error("missing column '" + column + "' (" + context + ")"), column_(column) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

// Regression
class DegenerateDesign : public Error { public: using Error::Error; };
class NonFiniteInput : public Error { public: using Error::Error; };
class LengthMismatch : public Error { public: using Error::Error; };
class NoCandidates : public Error { public: using Error::Error; };

class MissingRegressor : public Error {
public:
    explicit MissingRegressor(const std::string& name)
        : Error("row does not supply regressor '" + name + "'"), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

// Design-matrix construction
class AllRowsDropped : public Error { public: using Error::Error; };

// Evaluation
class NonPositiveMeasured : public Error { public: using Error::Error; };
class EmptyEvaluation : public Error { public: using Error::Error; };
class NoCommonFrequencies : public Error { public: using Error::Error; };
class NoCommonBenchmarks : public Error { public: using Error::Error; };

// Synthetic trace generation
class InvalidSpec : public Error { public: using Error::Error; };

// Malformed input files (CSV traces, JSON models/specs)
class SchemaViolation : public Error { public: using Error::Error; };

}  // namespace powerfit
