#pragma once

#include <stdexcept>
#include <string>

namespace ptm {

// Category drives the CLI exit code: input 2, training 3, evaluation 4.
enum class ErrorCategory { input = 2, training = 3, evaluation = 4 };

// Base for all library errors. `code` is a stable machine-parsable token
// printed by the CLI as "ERROR <CODE>: <message>".
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string code, const std::string& message)
        : std::runtime_error(message), category_(category), code_(std::move(code)) {}

    ErrorCategory category() const { return category_; }
    const std::string& code() const { return code_; }

private:
    ErrorCategory category_;
    std::string code_;
};

struct MissingFile : Error {
    explicit MissingFile(const std::string& path)
        : Error(ErrorCategory::input, "MISSING_FILE", "missing file: " + path) {}
};

inline int exit_code(const Error& e) {
    return static_cast<int>(e.category());
}

}  // namespace ptm
