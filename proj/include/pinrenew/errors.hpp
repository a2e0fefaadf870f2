#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pinrenew {

// Error with a stable machine-readable code next to the human message.
// The CLI maps codes onto exit statuses, so codes are part of the interface.
class error : public std::runtime_error {
public:
    error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

enum class error_kind { invalid_input, non_convergence, invariant_violation };

inline error_kind classify_error_code(const std::string& code) {
    if (code == "no-convergence" || code == "precision-exhausted" ||
        code == "tail-not-resolvable" || code == "tail-dominates" ||
        code == "grid-unstable" || code == "degenerate-variance" ||
        code == "not-localized" || code == "endpoint-singularity-unresolved" ||
        code == "inconclusive")
        return error_kind::non_convergence;
    if (code == "invariant-violation")
        return error_kind::invariant_violation;
    return error_kind::invalid_input;
}

inline int exit_status_for(const std::string& code) {
    switch (classify_error_code(code)) {
    case error_kind::invalid_input: return 1;
    case error_kind::non_convergence: return 2;
    case error_kind::invariant_violation: return 3;
    }
    return 1;
}

} // namespace pinrenew
