#pragma once

#include <stdexcept>
#include <string>

namespace lmot {

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error("dimension error: " + msg) {}
};

struct ContractViolation : std::runtime_error {
    explicit ContractViolation(const std::string& msg) : std::runtime_error("contract violation: " + msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error("parse error: " + msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error("numerical error: " + msg) {}
};

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error("training error: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

}  // namespace lmot
