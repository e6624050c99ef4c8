#include "lilac/analysis.hpp"

#include <algorithm>
#include <set>

namespace lilac::analysis {

using namespace lilac::ir;

bool Cfg::dominates(int a, int b) const {
    while (b != a) {
        int up = idom[static_cast<size_t>(b)];
        if (up == b || up < 0) return false;
        b = up;
    }
    return true;
}

Cfg build_cfg(const Function& f) {
    Cfg g;
    int n = static_cast<int>(f.blocks.size());
    for (int i = 0; i < n; ++i) g.index.emplace(f.blocks[static_cast<size_t>(i)].name, i);
    g.succs.resize(static_cast<size_t>(n));
    g.preds.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Instr* term = f.blocks[static_cast<size_t>(i)].terminator();
        if (!term) continue;
        for (const std::string& t : term->targets) {
            int j = g.index.at(t);
            g.succs[static_cast<size_t>(i)].push_back(j);
            g.preds[static_cast<size_t>(j)].push_back(i);
        }
    }

    g.rpo_pos.assign(static_cast<size_t>(n), -1);
    std::vector<int> post;
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::vector<std::pair<int, size_t>> stack;
    if (n > 0) {
        stack.emplace_back(0, 0);
        seen[0] = 1;
    }
    while (!stack.empty()) {
        auto& [b, next] = stack.back();
        if (next < g.succs[static_cast<size_t>(b)].size()) {
            int s = g.succs[static_cast<size_t>(b)][next++];
            if (!seen[static_cast<size_t>(s)]) {
                seen[static_cast<size_t>(s)] = 1;
                stack.emplace_back(s, 0);
            }
        } else {
            post.push_back(b);
            stack.pop_back();
        }
    }
    g.rpo.assign(post.rbegin(), post.rend());
    for (size_t i = 0; i < g.rpo.size(); ++i) g.rpo_pos[static_cast<size_t>(g.rpo[i])] = static_cast<int>(i);

    // Cooper/Harvey/Kennedy iterative dominators over the reachable subgraph
    g.idom.assign(static_cast<size_t>(n), -1);
    if (n == 0) return g;
    g.idom[0] = 0;
    auto intersect = [&](int a, int b) {
        while (a != b) {
            while (g.rpo_pos[static_cast<size_t>(a)] > g.rpo_pos[static_cast<size_t>(b)])
                a = g.idom[static_cast<size_t>(a)];
            while (g.rpo_pos[static_cast<size_t>(b)] > g.rpo_pos[static_cast<size_t>(a)])
                b = g.idom[static_cast<size_t>(b)];
        }
        return a;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (int b : g.rpo) {
            if (b == 0) continue;
            int new_idom = -1;
            for (int p : g.preds[static_cast<size_t>(b)]) {
                if (!g.reachable(p) || g.idom[static_cast<size_t>(p)] < 0) continue;
                new_idom = new_idom < 0 ? p : intersect(new_idom, p);
            }
            if (new_idom >= 0 && g.idom[static_cast<size_t>(b)] != new_idom) {
                g.idom[static_cast<size_t>(b)] = new_idom;
                changed = true;
            }
        }
    }
    return g;
}

bool LoopInfo::contains(int block) const {
    return std::binary_search(blocks.begin(), blocks.end(), block);
}

namespace {

// Fills the canonical-iterator facts of `l`; leaves canonical=false (with a
// diagnostic) when the loop does not fit the rigid shape.
void classify_loop(const Function& f, const Cfg& g, LoopInfo& l, Diagnostics& diags) {
    const Block& header = f.blocks[static_cast<size_t>(l.header)];
    auto note = [&](const std::string& code, const std::string& msg) {
        diags.push_back({code, msg + " (loop at '" + header.name + "' in @" + f.name + ")", header.loc});
    };

    if (l.latch < 0) {
        note("MultiLatch", "loop has several back edges");
        return;
    }

    // dedicated preheader: unique predecessor outside the loop whose only
    // successor is the header
    std::vector<int> outside;
    for (int p : g.preds[static_cast<size_t>(l.header)])
        if (!l.contains(p)) outside.push_back(p);
    if (outside.size() == 1 && g.succs[static_cast<size_t>(outside[0])].size() == 1)
        l.preheader = outside[0];

    // all exits must leave from the header
    for (int b : l.blocks)
        for (int s : g.succs[static_cast<size_t>(b)])
            if (!l.contains(s) && b != l.header) {
                note("MultiExit", "loop exits from '" + f.blocks[static_cast<size_t>(b)].name + "'");
                return;
            }

    const Instr* term = header.terminator();
    if (!term || term->op != Opcode::CondBr) {
        note("NonCanonicalLoop", "header does not end in a conditional branch");
        return;
    }
    int then_b = g.index.at(term->targets[0]);
    int else_b = g.index.at(term->targets[1]);
    if (!l.contains(then_b) || l.contains(else_b)) {
        note("NonCanonicalLoop", "header guard must stay in the loop on true and exit on false");
        return;
    }
    l.exit = else_b;

    // guard: icmp.slt(iterator, bound) defined in the header
    if (!term->args[0].is_value()) {
        note("NonCanonicalLoop", "guard condition is not a compare result");
        return;
    }
    const Instr* cmp = nullptr;
    for (const Instr& in : header.instrs)
        if (in.has_result() && in.result == term->args[0].name) cmp = &in;
    if (!cmp || cmp->op != Opcode::IcmpSlt) {
        note("NonCanonicalLoop", "guard is not icmp.slt in the header");
        return;
    }
    if (!cmp->args[0].is_value()) {
        note("NonCanonicalLoop", "guard left operand is not the iterator");
        return;
    }

    // iterator: header phi (preheader init, +1 from latch) named by the guard
    const std::string& iter = cmp->args[0].name;
    const Instr* phi = nullptr;
    for (const Instr& in : header.instrs)
        if (in.op == Opcode::Phi && in.result == iter) phi = &in;
    if (!phi || l.preheader < 0) {
        note("NonCanonicalLoop", phi ? "loop has no dedicated preheader" : "guard operand is not a header phi");
        return;
    }
    const std::string& pre_name = f.blocks[static_cast<size_t>(l.preheader)].name;
    const std::string& latch_name = f.blocks[static_cast<size_t>(l.latch)].name;
    const Operand* init = nullptr;
    const Operand* next = nullptr;
    for (const PhiIncoming& inc : phi->incomings) {
        if (inc.pred == pre_name) init = &inc.value;
        if (inc.pred == latch_name) next = &inc.value;
    }
    if (!init || !next || !next->is_value()) {
        note("NonCanonicalLoop", "iterator phi does not pair preheader init with latch update");
        return;
    }
    // the update must be add(iterator, 1) inside the loop
    const Instr* step = nullptr;
    for (int b : l.blocks)
        for (const Instr& in : f.blocks[static_cast<size_t>(b)].instrs)
            if (in.has_result() && in.result == next->name) step = &in;
    auto is_one = [](const Operand& o) { return o.kind == Operand::Kind::IntLit && o.ival == 1; };
    bool step_ok = step && step->op == Opcode::Add &&
                   ((step->args[0].is_value() && step->args[0].name == iter && is_one(step->args[1])) ||
                    (step->args[1].is_value() && step->args[1].name == iter && is_one(step->args[0])));
    if (!step_ok) {
        note("NonCanonicalLoop", "iterator update is not a +1 step");
        return;
    }

    l.canonical = true;
    l.iterator = iter;
    l.iter_next = next->name;
    l.guard = cmp->result;
    l.lower = *init;
    l.upper = cmp->args[1];
}

} // namespace

LoopNest find_loops(const Function& f, const Cfg& g) {
    LoopNest nest;
    int n = static_cast<int>(f.blocks.size());

    // back edges t->h with h dominating t; retreating edges that are not back
    // edges signal irreducibility
    std::map<int, std::vector<int>> latches_by_header;
    for (int b = 0; b < n; ++b) {
        if (!g.reachable(b)) continue;
        for (int s : g.succs[static_cast<size_t>(b)]) {
            if (g.rpo_pos[static_cast<size_t>(s)] > g.rpo_pos[static_cast<size_t>(b)]) continue;
            if (g.dominates(s, b)) {
                latches_by_header[s].push_back(b);
            } else {
                // retreating but the target does not dominate the source
                nest.diags.push_back(
                    {"IrreducibleRegion",
                     "retreating edge " + f.blocks[static_cast<size_t>(b)].name + " -> " +
                         f.blocks[static_cast<size_t>(s)].name + " into a non-dominating block in @" + f.name,
                     f.blocks[static_cast<size_t>(b)].loc});
            }
        }
    }

    for (auto& [h, latches] : latches_by_header) {
        LoopInfo l;
        l.header = h;
        l.latch = latches.size() == 1 ? latches[0] : -1;
        // natural loop body: blocks reaching a latch without passing the header
        std::set<int> body{h};
        std::vector<int> work(latches.begin(), latches.end());
        while (!work.empty()) {
            int b = work.back();
            work.pop_back();
            if (!body.insert(b).second) continue;
            for (int p : g.preds[static_cast<size_t>(b)])
                if (g.reachable(p)) work.push_back(p);
        }
        l.blocks.assign(body.begin(), body.end());
        classify_loop(f, g, l, nest.diags);
        nest.loops.push_back(std::move(l));
    }

    // containment tree: parent = smallest strictly-containing loop
    std::sort(nest.loops.begin(), nest.loops.end(),
              [](const LoopInfo& a, const LoopInfo& b) { return a.blocks.size() > b.blocks.size(); });
    for (size_t i = 0; i < nest.loops.size(); ++i) {
        int best = -1;
        for (size_t j = 0; j < nest.loops.size(); ++j) {
            if (i == j) continue;
            if (!nest.loops[j].contains(nest.loops[i].header) || nest.loops[j].header == nest.loops[i].header)
                continue;
            if (best < 0 || nest.loops[static_cast<size_t>(best)].blocks.size() > nest.loops[j].blocks.size())
                best = static_cast<int>(j);
        }
        nest.loops[i].parent = best;
    }
    for (size_t i = 0; i < nest.loops.size(); ++i) {
        if (nest.loops[i].parent < 0)
            nest.roots.push_back(static_cast<int>(i));
        else
            nest.loops[static_cast<size_t>(nest.loops[i].parent)].children.push_back(static_cast<int>(i));
    }
    // depths and stable child order by header position
    auto by_header = [&](int a, int b) {
        return nest.loops[static_cast<size_t>(a)].header < nest.loops[static_cast<size_t>(b)].header;
    };
    std::sort(nest.roots.begin(), nest.roots.end(), by_header);
    for (LoopInfo& l : nest.loops) std::sort(l.children.begin(), l.children.end(), by_header);
    std::vector<int> work = nest.roots;
    while (!work.empty()) {
        int i = work.back();
        work.pop_back();
        LoopInfo& l = nest.loops[static_cast<size_t>(i)];
        for (int c : l.children) {
            nest.loops[static_cast<size_t>(c)].depth = l.depth + 1;
            work.push_back(c);
        }
    }
    return nest;
}

std::pair<Operand, Operand> loop_bounds(const LoopInfo& l) {
    if (!l.canonical)
        throw Error(Errc::NonCanonicalLoop, "loop_bounds requires a canonical loop");
    return {l.lower, l.upper};
}

} // namespace lilac::analysis
