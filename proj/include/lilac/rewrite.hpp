#pragma once

// Swaps a matched loop nest for one harness call: the call lands in the nest
// preheader, the preheader then branches straight to the exit block, and the
// unreachable nest is dropped. Nests with effects the match does not account
// for are refused outright.

#include "lilac/matcher.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lilac::rewrite {

struct RewritePlan {
    match::Match match;
    std::string harness_name;          // call target, e.g. "lilac.spmv_csr"
    std::vector<ir::Operand> args;     // harness signature order, scalar result excluded
    // Scalar-result matches: fresh value name receiving the call result. The
    // one-element result buffer itself lives inside the harness; the IR has
    // no allocation primitive, so the call returns the f64 directly.
    std::optional<std::string> scalar_result_slot;
};

// Resolves every signature entry from the match bindings. Throws
// ArgNotLoopInvariant when a binding is defined inside the nest and
// SideEffectsInLoop when the nest stores or calls anything beyond the
// matched result store. The module locates definitions relative to the nest.
RewritePlan plan(const ir::Module& m, const match::Match& mt, const what::HarnessSignature& sig,
                 const std::string& harness_name);

struct RewriteResult {
    ir::Module module;  // rewritten on success, the input module otherwise
    bool applied = false;
    Diagnostics diags;  // VerifyFailed detail when the rewrite was rolled back
};

// The module must be the one the match refers to (detect's normalized copy).
RewriteResult apply(const ir::Module& m, const RewritePlan& plan);

// detect / plan / apply until nothing changes. Matches that refuse to plan
// or roll back are skipped and surface as diagnostics; the returned module
// is normalized either way.
struct RewriteAllResult {
    ir::Module module;
    int applied = 0;
    Diagnostics diags;
};

RewriteAllResult rewrite_all(const ir::Module& m, const what::WhatProgram& p,
                             const std::string& harness_name,
                             int budget = match::kDefaultBudget);

} // namespace lilac::rewrite
