#pragma once

#include <stdexcept>
#include <string>

namespace pcg {

// All recoverable failures are thrown as PcgError with a stable code string.
// The CLI maps the code into its structured JSON error output.
class PcgError : public std::runtime_error {
public:
    PcgError(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

} // namespace pcg
