#ifndef MYOSHAPE_ERRORS_HPP
#define MYOSHAPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace myoshape {

/// Coarse error class used to map failures onto CLI exit codes and the
/// machine-readable error JSON. `Validation` covers bad inputs and bad
/// configuration; `Numerical` covers degenerate geometry, divergence and
/// undefined results.
enum class ErrorKind {
    Validation,
    Numerical,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string type, const std::string& msg)
        : std::runtime_error(msg), kind_(kind), type_(std::move(type)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& type() const { return type_; }

private:
    ErrorKind kind_;
    std::string type_;
};

struct InvalidInputError : Error {
    explicit InvalidInputError(const std::string& msg)
        : Error(ErrorKind::Validation, "invalid-input", msg) {}
};

struct ConfigurationError : Error {
    explicit ConfigurationError(const std::string& msg)
        : Error(ErrorKind::Validation, "configuration", msg) {}
};

struct TopologyError : Error {
    explicit TopologyError(const std::string& msg)
        : Error(ErrorKind::Numerical, "topology", msg) {}
};

struct AmbiguityError : Error {
    explicit AmbiguityError(const std::string& msg)
        : Error(ErrorKind::Numerical, "ambiguity", msg) {}
};

struct DegenerateConfigurationError : Error {
    explicit DegenerateConfigurationError(const std::string& msg)
        : Error(ErrorKind::Numerical, "degenerate-configuration", msg) {}
};

struct RankError : Error {
    explicit RankError(const std::string& msg)
        : Error(ErrorKind::Numerical, "rank", msg) {}
};

struct UndefinedVarianceError : Error {
    explicit UndefinedVarianceError(const std::string& msg)
        : Error(ErrorKind::Numerical, "undefined-variance", msg) {}
};

struct UndefinedMetricError : Error {
    explicit UndefinedMetricError(const std::string& msg)
        : Error(ErrorKind::Numerical, "undefined-metric", msg) {}
};

struct UndefinedCorrelationError : Error {
    explicit UndefinedCorrelationError(const std::string& msg)
        : Error(ErrorKind::Numerical, "undefined-correlation", msg) {}
};

struct NonStarShapedError : Error {
    explicit NonStarShapedError(const std::string& msg)
        : Error(ErrorKind::Numerical, "non-star-shaped", msg) {}
};

struct UnrealisticShapeError : Error {
    explicit UnrealisticShapeError(const std::string& msg)
        : Error(ErrorKind::Numerical, "unrealistic-shape", msg) {}
};

struct InfeasibleConfigError : Error {
    explicit InfeasibleConfigError(const std::string& msg)
        : Error(ErrorKind::Numerical, "infeasible-config", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg)
        : Error(ErrorKind::Validation, "io", msg) {}
};

}  // namespace myoshape

#endif  // MYOSHAPE_ERRORS_HPP
