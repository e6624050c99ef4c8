#pragma once

// Two-phase detection. Phase one scans for canonical loop nests of the right
// depth whose innermost loop carries a float reduction phi; phase two runs a
// backtracking search assigning computation expressions to IR values. Every
// assignment is recorded in a replayable trace.

#include "lilac/analysis.hpp"
#include "lilac/ir.hpp"
#include "lilac/what.hpp"

#include <map>
#include <string>
#include <vector>

namespace lilac::match {

struct Skeleton {
    int forall_depth = 0;
    bool reduction = true;
};

Skeleton skeleton_of(const what::WhatProgram& p);

// A nest chain (outermost..innermost, all canonical) plus one reduction phi
// of the innermost loop: init literal 0.0 from the preheader, fadd update
// from the latch. Loop info is copied out of the per-function analysis.
struct Candidate {
    std::string function;
    std::vector<analysis::LoopInfo> chain;
    std::string reduction;         // the accumulator phi result
    std::string reduction_update;  // the fadd feeding it
};

std::vector<Candidate> candidates(const ir::Module& m, const Skeleton& s);

// Slots name what an event assigns: "node:<id>" for expression nodes,
// "iter:<level>" for loop iterators, "free:<name>" for computation
// variables, "reduction" and "product" for the dot itself.
struct TraceEvent {
    enum class Kind { Assign, Fail, Backtrack };
    Kind kind = Kind::Assign;
    std::string slot;
    std::string value;  // Assign only: printed IR operand
    int to_step = -1;   // Backtrack only: every assignment from this event on is undone
};
using SearchTrace = std::vector<TraceEvent>;

// Applies the events in order; the result of replaying a successful search
// equals the solution's slot map.
std::map<std::string, std::string> replay(const SearchTrace& t);

std::string print_trace(const SearchTrace& t, const what::WhatProgram& p);

struct Solution {
    std::map<std::string, std::string> slots;    // slot -> printed IR operand
    std::map<std::string, ir::Operand> frees;    // computation variable -> IR operand
};

// Where the reduction result lands: a store instruction inside the nest
// (array targets), or the out-of-loop uses of the reduction phi (scalar
// targets; the uses are recomputed by the rewriter).
struct TargetRef {
    bool is_store = false;
    std::string block;
    int index = -1;
};

enum class SolveStatus { Found, NoMatch, Budget };

constexpr int kDefaultBudget = 10000;

struct SolveResult {
    SolveStatus status = SolveStatus::NoMatch;
    Solution solution;  // populated only when status == Found
    TargetRef target;
    SearchTrace trace;
};

SolveResult solve(const ir::Module& m, const Candidate& c, const what::WhatProgram& p,
                  int budget = kDefaultBudget);

struct Match {
    std::string what;
    std::string function;
    std::vector<analysis::LoopInfo> chain;
    std::string reduction;
    std::string reduction_update;
    Solution solution;
    TargetRef target;
};

struct DetectResult {
    ir::Module module;  // normalized; matches refer to this module
    std::vector<Candidate> cands;
    std::vector<SolveResult> results;  // aligned with cands
    std::vector<Match> matches;
    Diagnostics diags;  // BudgetExceeded per exhausted candidate
};

DetectResult detect(const ir::Module& m, const what::WhatProgram& p, int budget = kDefaultBudget);

} // namespace lilac::match
