#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oaca {

/// Base of every error caused by bad input data rather than misuse of the API.
/// The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedLine : public DataError {
public:
    MalformedLine(std::size_t line_no, const std::string& reason)
        : DataError("line " + std::to_string(line_no) + ": " + reason),
          line_no_(line_no), reason_(reason) {}

    std::size_t line_no() const noexcept { return line_no_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_no_;
    std::string reason_;
};

class DuplicateId : public DataError {
public:
    explicit DuplicateId(const std::string& id)
        : DataError("duplicate id: " + id), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class OutOfWindowYear : public DataError {
public:
    OutOfWindowYear(const std::string& id, int year)
        : DataError("record " + id + ": year " + std::to_string(year) + " outside study window"),
          id_(id), year_(year) {}
    const std::string& id() const noexcept { return id_; }
    int year() const noexcept { return year_; }

private:
    std::string id_;
    int year_;
};

class UnknownEnumValue : public DataError {
public:
    UnknownEnumValue(const std::string& field, const std::string& value)
        : DataError("unknown value '" + value + "' for field " + field),
          field_(field), value_(value) {}
    const std::string& field() const noexcept { return field_; }
    const std::string& value() const noexcept { return value_; }

private:
    std::string field_;
    std::string value_;
};

class NonFiniteInput : public DataError {
public:
    using DataError::DataError;
};

class DomainViolation : public DataError {
public:
    using DataError::DataError;
};

class EmptyOaSample : public DataError {
public:
    using DataError::DataError;
};

class EmptySample : public DataError {
public:
    using DataError::DataError;
};

class StructuralZero : public DataError {
public:
    StructuralZero(const std::string& margin, std::size_t category)
        : DataError("structural zero: margin " + margin + " category " + std::to_string(category) +
                    " has a positive target but no pool mass"),
          margin_(margin), category_(category) {}
    const std::string& margin() const noexcept { return margin_; }
    std::size_t category() const noexcept { return category_; }

private:
    std::string margin_;
    std::size_t category_;
};

class InfeasibleTargets : public DataError {
public:
    using DataError::DataError;
};

class ZeroExpectedCitations : public DataError {
public:
    using DataError::DataError;
};

class MissingCell : public DataError {
public:
    using DataError::DataError;
};

class WeightSampleMismatch : public DataError {
public:
    using DataError::DataError;
};

class ZeroDenominator : public DataError {
public:
    using DataError::DataError;
};

class InvalidConfig : public DataError {
public:
    using DataError::DataError;
};

class EmptySeries : public DataError {
public:
    using DataError::DataError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by consumers that refuse best-effort raking weights. Exit code 3.
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace oaca
