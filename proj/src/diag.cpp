#include "lilac/diag.hpp"

#include <sstream>

namespace lilac {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::DuplicateIterator: return "DuplicateIterator";
    case Errc::EmptyBody: return "EmptyBody";
    case Errc::MultiIndexUnsupported: return "MultiIndexUnsupported";
    case Errc::KindConflict: return "KindConflict";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::UnboundVariable: return "UnboundVariable";
    case Errc::DuplicateHarness: return "DuplicateHarness";
    case Errc::UnbalancedCodeBlock: return "UnbalancedCodeBlock";
    case Errc::UnknownOpcode: return "UnknownOpcode";
    case Errc::TypeAnnotationMismatch: return "TypeAnnotationMismatch";
    case Errc::StepLimitExceeded: return "StepLimitExceeded";
    case Errc::UnregisteredHarness: return "UnregisteredHarness";
    case Errc::DuplicateRegistration: return "DuplicateRegistration";
    case Errc::TypeTrap: return "TypeTrap";
    case Errc::NonCanonicalLoop: return "NonCanonicalLoop";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::ArgNotLoopInvariant: return "ArgNotLoopInvariant";
    case Errc::SideEffectsInLoop: return "SideEffectsInLoop";
    case Errc::VerifyFailed: return "VerifyFailed";
    case Errc::MissingClass: return "MissingClass";
    case Errc::HookFailure: return "HookFailure";
    case Errc::ProtectionUnsupported: return "ProtectionUnsupported";
    case Errc::IoError: return "IoError";
    case Errc::DataError: return "DataError";
    }
    return "Error";
}

std::string Error::format_message(Errc code, const std::string& message, SourceLoc loc) {
    std::ostringstream os;
    os << errc_name(code);
    if (loc.valid())
        os << " at " << loc.line << ":" << loc.column;
    os << ": " << message;
    return os.str();
}

bool has_diag(const Diagnostics& diags, const std::string& code) {
    for (const auto& d : diags)
        if (d.code == code)
            return true;
    return false;
}

std::string render_diags(const Diagnostics& diags) {
    std::ostringstream os;
    for (const auto& d : diags) {
        os << d.code;
        if (d.loc.valid())
            os << " at " << d.loc.line << ":" << d.loc.column;
        os << ": " << d.message << "\n";
    }
    return os.str();
}

} // namespace lilac
