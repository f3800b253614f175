#pragma once

#include <stdexcept>
#include <string>

namespace tabgr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (tables, datasets, indices).
class InputError : public Error {
public:
    using Error::Error;
};

class EmptyHeader : public InputError {
public:
    EmptyHeader() : InputError("table has zero columns") {}
};

class MalformedRecord : public InputError {
public:
    using InputError::InputError;
};

class WidthMismatch : public InputError {
public:
    using InputError::InputError;
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

class IndexOutOfRange : public InputError {
public:
    using InputError::InputError;
};

class EmptyGraph : public InputError {
public:
    EmptyGraph() : InputError("propagation requested over zero triples") {}
};

class MissingTable : public InputError {
public:
    explicit MissingTable(const std::string& table_id)
        : InputError("unknown table id: " + table_id), table_id_(table_id) {}
    const std::string& table_id() const noexcept { return table_id_; }

private:
    std::string table_id_;
};

class MissingPlaceholder : public Error {
public:
    explicit MissingPlaceholder(const std::string& name)
        : Error("unbound prompt placeholder {" + name + "}"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failures at the LLM boundary. All of them map to CLI exit code 3.
class LlmError : public Error {
public:
    using Error::Error;
};

class LlmUnavailable : public LlmError {
public:
    using LlmError::LlmError;
};

class AuthError : public LlmError {
public:
    using LlmError::LlmError;
};

class TimeoutError : public LlmError {
public:
    using LlmError::LlmError;
};

}  // namespace tabgr
