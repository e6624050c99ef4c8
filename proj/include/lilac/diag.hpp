#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lilac {

struct SourceLoc {
    int line = 0;
    int column = 0;
    bool valid() const { return line > 0; }
};

// Hard failure codes. Parsers and the interpreter throw these; analyses that
// report findings use Diagnostic lists instead.
enum class Errc {
    SyntaxError,
    DuplicateIterator,
    EmptyBody,
    MultiIndexUnsupported,
    KindConflict,
    OutOfBounds,
    UnboundVariable,
    DuplicateHarness,
    UnbalancedCodeBlock,
    UnknownOpcode,
    TypeAnnotationMismatch,
    StepLimitExceeded,
    UnregisteredHarness,
    DuplicateRegistration,
    TypeTrap,
    NonCanonicalLoop,
    BudgetExceeded,
    ArgNotLoopInvariant,
    SideEffectsInLoop,
    VerifyFailed,
    MissingClass,
    HookFailure,
    ProtectionUnsupported,
    IoError,
    DataError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message, SourceLoc loc = {})
        : std::runtime_error(format_message(code, message, loc)),
          code_(code),
          loc_(loc) {}

    Errc code() const { return code_; }
    SourceLoc loc() const { return loc_; }

private:
    static std::string format_message(Errc code, const std::string& message, SourceLoc loc);

    Errc code_;
    SourceLoc loc_;
};

// A non-fatal finding. `code` is a short camel-case tag such as
// "DominanceViolation" or "UnknownArray"; consumers match on it.
struct Diagnostic {
    std::string code;
    std::string message;
    SourceLoc loc;
};

using Diagnostics = std::vector<Diagnostic>;

bool has_diag(const Diagnostics& diags, const std::string& code);
std::string render_diags(const Diagnostics& diags);

} // namespace lilac
