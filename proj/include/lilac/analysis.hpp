#pragma once

// CFG construction, dominators, natural-loop discovery and the normalization
// pipeline that canonicalizes front-end quirks (countdown loops, shifted
// induction variables, sle guards, trampoline blocks) before matching.

#include "lilac/ir.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lilac::analysis {

// Block-indexed CFG with reverse postorder and immediate dominators.
// Requires resolvable branch targets (parse guarantees block existence only
// after verify; callers run verify first).
struct Cfg {
    std::map<std::string, int> index;
    std::vector<std::vector<int>> succs;
    std::vector<std::vector<int>> preds;
    std::vector<int> rpo;      // reachable blocks in reverse postorder
    std::vector<int> rpo_pos;  // -1 when unreachable
    std::vector<int> idom;     // -1 when unreachable; entry maps to itself

    bool reachable(int b) const { return rpo_pos[static_cast<size_t>(b)] >= 0; }
    bool dominates(int a, int b) const;
};

Cfg build_cfg(const ir::Function& f);

// A natural loop. Canonical means: single latch, dedicated preheader, an i64
// iterator phi (init from preheader, +1 step from latch) guarded by
// icmp.slt(iterator, upper) feeding the header condbr whose false edge is the
// only exit.
struct LoopInfo {
    int header = -1;
    int latch = -1;      // -1 when multiple latches
    int preheader = -1;  // -1 when absent
    int exit = -1;       // false edge of the header guard (canonical loops)
    std::vector<int> blocks;  // sorted block indices, header included

    bool canonical = false;
    std::string iterator;    // header phi result
    std::string iter_next;   // its +1 update
    std::string guard;       // icmp result
    ir::Operand lower;       // phi init
    ir::Operand upper;       // icmp bound

    int parent = -1;
    std::vector<int> children;
    int depth = 0;

    bool contains(int block) const;
};

struct LoopNest {
    std::vector<LoopInfo> loops;  // outer loops before their children
    std::vector<int> roots;
    Diagnostics diags;  // IrreducibleRegion, MultiLatch, MultiExit, NonCanonicalLoop
};

LoopNest find_loops(const ir::Function& f, const Cfg& g);

// Phi init and compare bound of a canonical loop; throws NonCanonicalLoop.
std::pair<ir::Operand, ir::Operand> loop_bounds(const LoopInfo& l);

// Fixpoint of: preheader insertion, constant folding and copy propagation,
// countdown-to-countup rewriting, sle-to-slt guards, induction-variable
// rebasing onto the canonical iterator, dead code elimination, same-address
// store-store elimination, branch folding, unreachable-block removal and
// trampoline elimination. Semantics-preserving; idempotent.
ir::Module normalize(const ir::Module& m);

} // namespace lilac::analysis
