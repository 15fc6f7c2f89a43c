#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace claimsearch {

// Base of every error raised by the library. code() is a stable machine-readable
// identifier used by the CLI error record.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& message) : Error("precondition", message) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error("format", message) {}
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(std::string id)
        : Error("duplicate_id", "duplicate patent_id: " + id), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class EmptyFieldError : public Error {
public:
    EmptyFieldError(std::string field, const std::string& patent_id)
        : Error("empty_field", "record '" + patent_id + "': field '" + field + "' is missing or empty"),
          field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class MissingIdError : public Error {
public:
    MissingIdError(std::string id, const std::string& where)
        : Error("missing_id", "id '" + id + "' not found in " + where), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class CorpusTooSmallError : public Error {
public:
    explicit CorpusTooSmallError(const std::string& message) : Error("corpus_too_small", message) {}
};

class ClaimTooLongError : public Error {
public:
    ClaimTooLongError(std::size_t claim_words, std::size_t max_words)
        : Error("claim_too_long",
                "claim has " + std::to_string(claim_words) + " words, budget is " +
                    std::to_string(max_words) +
                    "; dividing the claim into sub-claims is not supported") {}
};

// A classifier backend failed. Carries the ids of the pairs left unscored.
class BackendError : public Error {
public:
    BackendError(std::string code, const std::string& message, std::vector<std::string> failed_pair_ids)
        : Error(std::move(code), message), failed_(std::move(failed_pair_ids)) {}
    const std::vector<std::string>& failed_pair_ids() const noexcept { return failed_; }

private:
    std::vector<std::string> failed_;
};

// Backend unreachable, timed out or answered with a server error.
class TransportError : public BackendError {
public:
    TransportError(const std::string& message, std::vector<std::string> failed_pair_ids = {})
        : BackendError("transport", message, std::move(failed_pair_ids)) {}
};

// Backend answered, but the answer does not follow the wire protocol.
class ProtocolError : public BackendError {
public:
    ProtocolError(const std::string& message, std::vector<std::string> failed_pair_ids = {})
        : BackendError("protocol", message, std::move(failed_pair_ids)) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

}  // namespace claimsearch
