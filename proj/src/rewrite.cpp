#include "lilac/rewrite.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace lilac::rewrite {

using ir::Instr;
using ir::Opcode;
using ir::Operand;

namespace {

std::map<std::string, int> def_blocks(const ir::Function& f) {
    std::map<std::string, int> out;
    for (size_t bi = 0; bi < f.blocks.size(); ++bi)
        for (const Instr& in : f.blocks[bi].instrs)
            if (in.has_result()) out[in.result] = static_cast<int>(bi);
    return out;
}

std::set<std::string> value_names(const ir::Function& f) {
    std::set<std::string> names;
    for (const ir::FuncParam& p : f.params) names.insert(p.name);
    for (const ir::Block& b : f.blocks)
        for (const Instr& in : b.instrs)
            if (in.has_result()) names.insert(in.result);
    return names;
}

// The reduction value plus every phi that merely forwards it (all incomings
// one and the same value already in the set) — the matcher admits out-of-loop
// uses through such phis, so the rewriter must chase the same closure.
std::set<std::string> reduction_closure(const ir::Function& f, const std::string& root) {
    std::set<std::string> vals{root};
    bool changed = true;
    while (changed) {
        changed = false;
        for (const ir::Block& b : f.blocks)
            for (const Instr& in : b.instrs) {
                if (in.op != Opcode::Phi || !in.has_result()) continue;
                if (vals.count(in.result) || in.incomings.empty()) continue;
                const Operand& v0 = in.incomings[0].value;
                if (!v0.is_value() || !vals.count(v0.name)) continue;
                bool same = true;
                for (const ir::PhiIncoming& inc : in.incomings)
                    if (!ir::operand_equal(inc.value, v0)) {
                        same = false;
                        break;
                    }
                if (same) {
                    vals.insert(in.result);
                    changed = true;
                }
            }
    }
    return vals;
}

} // namespace

RewritePlan plan(const ir::Module& m, const match::Match& mt, const what::HarnessSignature& sig,
                 const std::string& harness_name) {
    const ir::Function* f = m.find_function(mt.function);
    if (!f) throw Error(Errc::DataError, "plan: unknown function '" + mt.function + "'");
    std::set<int> nest(mt.chain.front().blocks.begin(), mt.chain.front().blocks.end());
    std::map<std::string, int> defs = def_blocks(*f);

    RewritePlan p;
    p.match = mt;
    p.harness_name = harness_name;

    for (const what::Param& prm : sig.params) {
        if (sig.scalar_result && prm.kind == what::ParamKind::ArrayFloatOut) continue;
        auto it = mt.solution.frees.find(prm.name);
        if (it == mt.solution.frees.end())
            throw Error(Errc::DataError, "plan: match has no binding for '" + prm.name + "'");
        const Operand& v = it->second;
        if (v.is_value()) {
            auto db = defs.find(v.name);
            if (db != defs.end() && nest.count(db->second))
                throw Error(Errc::ArgNotLoopInvariant,
                            "argument '" + prm.name + "' binds to " + ir::print_operand(v) +
                                ", which is defined inside the matched nest");
        }
        p.args.push_back(v);
    }

    for (int bi : mt.chain.front().blocks) {
        const ir::Block& b = f->blocks[static_cast<size_t>(bi)];
        for (size_t ii = 0; ii < b.instrs.size(); ++ii) {
            const Instr& in = b.instrs[ii];
            if (in.op == Opcode::Store) {
                bool matched = mt.target.is_store && b.name == mt.target.block &&
                               static_cast<int>(ii) == mt.target.index;
                if (!matched)
                    throw Error(Errc::SideEffectsInLoop,
                                "store in block '" + b.name + "' is not part of the match");
            } else if (in.op == Opcode::Call) {
                throw Error(Errc::SideEffectsInLoop,
                            "call in block '" + b.name + "' is not part of the match");
            }
        }
    }

    if (sig.scalar_result) {
        std::set<std::string> taken = value_names(*f);
        std::string base = mt.what + ".result";
        std::string name = base;
        for (int i = 1; taken.count(name); ++i) name = base + "." + std::to_string(i);
        p.scalar_result_slot = name;
    }
    return p;
}

RewriteResult apply(const ir::Module& m, const RewritePlan& plan) {
    RewriteResult res;
    ir::Module work = m;
    ir::Function* f = work.find_function(plan.match.function);
    if (!f) throw Error(Errc::DataError, "apply: unknown function '" + plan.match.function + "'");
    const analysis::LoopInfo& top = plan.match.chain.front();
    std::set<int> nest(top.blocks.begin(), top.blocks.end());
    const std::string pname = f->blocks[static_cast<size_t>(top.preheader)].name;
    const std::string hname = f->blocks[static_cast<size_t>(top.header)].name;
    const std::string ename = f->blocks[static_cast<size_t>(top.exit)].name;

    // Scalar results: reroute every out-of-nest consumer of the reduction to
    // the call result and drop the forwarding phis that carried it out.
    if (plan.scalar_result_slot) {
        std::set<std::string> closure = reduction_closure(*f, plan.match.reduction);
        Operand repl = Operand::value(*plan.scalar_result_slot);
        for (size_t bi = 0; bi < f->blocks.size(); ++bi) {
            if (nest.count(static_cast<int>(bi))) continue;
            auto& instrs = f->blocks[bi].instrs;
            for (auto it = instrs.begin(); it != instrs.end();) {
                if (it->op == Opcode::Phi && closure.count(it->result)) {
                    it = instrs.erase(it);
                    continue;
                }
                for (Operand& a : it->args)
                    if (a.is_value() && closure.count(a.name)) a = repl;
                for (ir::PhiIncoming& inc : it->incomings)
                    if (inc.value.is_value() && closure.count(inc.value.name)) inc.value = repl;
                ++it;
            }
        }
    }

    {
        Instr call;
        call.op = Opcode::Call;
        call.callee = plan.harness_name;
        call.args = plan.args;
        if (plan.scalar_result_slot) call.result = *plan.scalar_result_slot;
        ir::Block* pb = f->find_block(pname);
        pb->instrs.insert(pb->instrs.end() - 1, std::move(call));
        Instr& term = pb->instrs.back();
        for (std::string& t : term.targets)
            if (t == hname) t = ename;
    }

    for (Instr& in : f->find_block(ename)->instrs) {
        if (in.op != Opcode::Phi) break;
        for (ir::PhiIncoming& inc : in.incomings)
            if (inc.pred == hname) inc.pred = pname;
    }

    // blocks are unreachable now; erase back to front so indices stay valid
    for (auto it = top.blocks.rbegin(); it != top.blocks.rend(); ++it)
        f->blocks.erase(f->blocks.begin() + *it);

    Diagnostics d = ir::verify(work);
    if (!d.empty()) {
        res.module = m;
        res.diags.push_back({"VerifyFailed",
                             "rewrite of function '" + plan.match.function + "' rolled back", {}});
        for (Diagnostic& dg : d) res.diags.push_back(std::move(dg));
        return res;
    }
    res.module = std::move(work);
    res.applied = true;
    return res;
}

RewriteAllResult rewrite_all(const ir::Module& m, const what::WhatProgram& p,
                             const std::string& harness_name, int budget) {
    RewriteAllResult res;
    what::HarnessSignature sig = what::infer_interface(p);
    res.module = analysis::normalize(m);
    while (true) {
        match::DetectResult d = match::detect(res.module, p, budget);
        res.module = std::move(d.module);
        res.diags = std::move(d.diags);  // refusals below are stable, so the
                                         // last round's view is the full one
        bool advanced = false;
        for (const match::Match& mt : d.matches) {
            try {
                RewritePlan pl = plan(res.module, mt, sig, harness_name);
                RewriteResult ar = apply(res.module, pl);
                if (!ar.applied) {
                    for (Diagnostic& dg : ar.diags) res.diags.push_back(std::move(dg));
                    continue;
                }
                res.module = std::move(ar.module);
                ++res.applied;
                advanced = true;
                break;
            } catch (const Error& e) {
                if (e.code() == Errc::ArgNotLoopInvariant || e.code() == Errc::SideEffectsInLoop) {
                    res.diags.push_back({errc_name(e.code()), e.what(), {}});
                    continue;
                }
                throw;
            }
        }
        if (!advanced) break;
    }
    return res;
}

} // namespace lilac::rewrite
