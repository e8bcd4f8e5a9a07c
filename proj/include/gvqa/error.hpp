// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gvqa {

/// Pipeline stage an error originated from. Doubles as the CLI exit-code map.
enum class Stage { config, dataset, imaging, backend, retrieval, ragcore, guardrails, eval, io };

const char* stage_name(Stage stage) noexcept;

/// Process exit status for a failure in `stage` (0 ok, 2 config, 3 dataset, 4 backend, 5 retrieval).
int exit_code_for(Stage stage) noexcept;

class Error : public std::runtime_error {
public:
    Error(Stage stage, const std::string& message)
        : std::runtime_error(message), m_stage(stage) {}

    Stage stage() const noexcept { return m_stage; }

private:
    Stage m_stage;
};

/// Precondition / invariant violation on caller-provided data.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File-system failure (missing file, unwritable directory).
class IoError : public Error {
public:
    explicit IoError(const std::string& message, Stage stage = Stage::io) : Error(stage, message) {}
};

/// Structurally inconsistent input (ids missing across files, overlapping patches).
class StructuralError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    BackendError(const std::string& message, bool retryable)
        : Error(Stage::backend, message), m_retryable(retryable) {}

    bool retryable() const noexcept { return m_retryable; }

private:
    bool m_retryable;
};

/// Malformed response on the inference wire protocol.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& message, Stage stage = Stage::backend) : Error(stage, message) {}
};

class TransportError : public Error {
public:
    TransportError(const std::string& message, bool retryable, Stage stage = Stage::retrieval)
        : Error(stage, message), m_retryable(retryable) {}

    bool retryable() const noexcept { return m_retryable; }

private:
    bool m_retryable;
};

class NotFoundError : public Error {
public:
    NotFoundError(const std::string& what, std::string key)
        : Error(Stage::retrieval, what), m_key(std::move(key)) {}

    const std::string& key() const noexcept { return m_key; }

private:
    std::string m_key;
};

}  // namespace gvqa
