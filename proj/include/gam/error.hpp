#pragma once

#include <stdexcept>
#include <string>

namespace gam {

// Error codes shared across modules. Each maps to one failure family;
// the message carries the specifics (doc_id, field, offending value).
enum class Errc {
    nonfinite,
    shape,
    overlap,
    range,
    role,
    parse,
    ontology,
    coef,
    span,
    vocab,
    config,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace gam
