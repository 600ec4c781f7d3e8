#pragma once

#include <stdexcept>
#include <string>

namespace wedas {

enum class ErrorKind {
    network,             // transient transport/HTTP failure, retryable
    auth,                // credentials rejected, fatal
    empty_corpus,        // local search backend with zero documents
    script_miss,         // scripted LLM backend has no fixture for a fingerprint
    json_extract,        // completion contained no parseable JSON object
    schema,              // JSON failed schema validation after the repair retry
    missing_evaluation,  // judge output could not be aligned to an expected query
    config,              // invalid configuration or input file
    io,                  // filesystem failure
    internal,            // broken internal invariant; indicates a bug
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::network: return "NetworkError";
        case ErrorKind::auth: return "AuthError";
        case ErrorKind::empty_corpus: return "EmptyCorpus";
        case ErrorKind::script_miss: return "ScriptMiss";
        case ErrorKind::json_extract: return "JsonExtractError";
        case ErrorKind::schema: return "SchemaError";
        case ErrorKind::missing_evaluation: return "MissingEvaluation";
        case ErrorKind::config: return "ConfigError";
        case ErrorKind::io: return "IoError";
        case ErrorKind::internal: return "InternalError";
    }
    return "Error";
}

}  // namespace wedas
