#include "lilac/matcher.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>

namespace lilac::match {

using analysis::Cfg;
using analysis::LoopInfo;
using ir::Operand;

Skeleton skeleton_of(const what::WhatProgram& p) {
    Skeleton s;
    s.forall_depth = static_cast<int>(p.foralls.size());
    return s;
}

namespace {

struct DefSite {
    int block = -1;
    int instr = -1;
};

// Value name -> defining instruction; params and literals have no site.
struct DefIndex {
    const ir::Function* fn = nullptr;
    std::map<std::string, DefSite> sites;

    const ir::Instr* find(const std::string& name) const {
        auto it = sites.find(name);
        if (it == sites.end()) return nullptr;
        const DefSite& s = it->second;
        return &fn->blocks[static_cast<size_t>(s.block)].instrs[static_cast<size_t>(s.instr)];
    }
    int block_of(const std::string& name) const {
        auto it = sites.find(name);
        return it == sites.end() ? -1 : it->second.block;
    }
};

DefIndex index_defs(const ir::Function& f) {
    DefIndex d;
    d.fn = &f;
    for (size_t bi = 0; bi < f.blocks.size(); ++bi)
        for (size_t ii = 0; ii < f.blocks[bi].instrs.size(); ++ii) {
            const ir::Instr& in = f.blocks[bi].instrs[ii];
            if (in.has_result()) d.sites[in.result] = {static_cast<int>(bi), static_cast<int>(ii)};
        }
    return d;
}

bool is_plus_zero(const Operand& o) {
    return o.kind == Operand::Kind::FloatLit && std::bit_cast<std::uint64_t>(o.fval) == 0;
}

std::string node_slot(const what::Expr& e) { return "node:" + std::to_string(e.node_id); }

class Solver {
public:
    Solver(const ir::Function& f, const Candidate& c, const what::WhatProgram& p, int budget)
        : f_(f), c_(c), p_(p), budget_(budget), defs_(index_defs(f)) {
        for (int b : c.chain.front().blocks) nest_.insert(b);
        for (int b : c.chain.back().blocks) inner_.insert(b);
    }

    SolveResult run() {
        SolveResult res;
        if (!seed()) {
            res.status = budget_hit_ ? SolveStatus::Budget : SolveStatus::NoMatch;
            res.trace = std::move(events_);
            return res;
        }
        build_vars();
        int k = 0;
        while (true) {
            if (budget_hit_) {
                res.status = SolveStatus::Budget;
                res.trace = std::move(events_);
                return res;
            }
            if (k == static_cast<int>(vars_.size())) break;
            MainVar& v = vars_[static_cast<size_t>(k)];
            v.trail_mark = static_cast<int>(trail_.size());
            bool advanced = false;
            while (v.idx < static_cast<int>(v.domain.size())) {
                size_t tm = trail_.size(), pm = pending_.size();
                if (try_var(v, v.idx)) {
                    v.commit_start = static_cast<int>(events_.size());
                    commit();
                    advanced = true;
                    break;
                }
                rollback(tm, pm);
                if (budget_hit_) break;
                ++v.idx;
            }
            if (budget_hit_) continue;
            if (advanced) {
                ++k;
                if (k < static_cast<int>(vars_.size())) vars_[static_cast<size_t>(k)].idx = 0;
                continue;
            }
            events_.push_back({TraceEvent::Kind::Fail, slot_of(v), "", -1});
            while (true) {
                --k;
                if (k < 0) {
                    res.status = SolveStatus::NoMatch;
                    res.trace = std::move(events_);
                    return res;
                }
                MainVar& b = vars_[static_cast<size_t>(k)];
                events_.push_back({TraceEvent::Kind::Backtrack, "", "", b.commit_start});
                rollback(static_cast<size_t>(b.trail_mark), 0);
                ++b.idx;
                if (b.idx < static_cast<int>(b.domain.size())) break;
                events_.push_back({TraceEvent::Kind::Fail, slot_of(b), "", -1});
            }
        }
        res.status = SolveStatus::Found;
        res.target = target_;
        res.solution.slots = slots_;
        res.solution.frees = frees_;
        res.trace = std::move(events_);
        return res;
    }

private:
    struct MainVar {
        enum class Kind { Target, LhsAddr, RhsAddr, Product };
        Kind kind = Kind::Target;
        std::vector<DefSite> domain;
        Operand assigned;  // load result for the addr vars
        int trail_mark = 0;
        int commit_start = -1;
        int idx = 0;
    };

    const ir::Function& f_;
    const Candidate& c_;
    const what::WhatProgram& p_;
    int budget_;
    DefIndex defs_;
    std::set<int> nest_, inner_;

    std::map<std::string, std::string> slots_;
    std::map<std::string, Operand> frees_;
    struct TrailEntry {
        bool is_free;
        std::string key;
    };
    std::vector<TrailEntry> trail_;
    SearchTrace events_;
    std::vector<TraceEvent> pending_;
    std::vector<MainVar> vars_;
    int lhs_vi_ = -1, rhs_vi_ = -1;
    TargetRef target_;
    int steps_ = 0;
    bool budget_hit_ = false;

    bool tick() {
        if (++steps_ > budget_) {
            budget_hit_ = true;
            return false;
        }
        return true;
    }

    void assign_slot(const std::string& slot, const std::string& value) {
        slots_[slot] = value;
        trail_.push_back({false, slot});
        pending_.push_back({TraceEvent::Kind::Assign, slot, value, -1});
    }

    void bind_free(const std::string& name, const Operand& v) {
        frees_[name] = v;
        trail_.push_back({true, name});
        assign_slot("free:" + name, ir::print_operand(v));
    }

    void rollback(size_t trail_mark, size_t pending_mark) {
        while (trail_.size() > trail_mark) {
            const TrailEntry& e = trail_.back();
            if (e.is_free)
                frees_.erase(e.key);
            else
                slots_.erase(e.key);
            trail_.pop_back();
        }
        pending_.resize(pending_mark);
    }

    void commit() {
        for (TraceEvent& ev : pending_) events_.push_back(std::move(ev));
        pending_.clear();
    }

    bool defined_inside_nest(const Operand& v) const {
        return v.is_value() && nest_.count(defs_.block_of(v.name)) > 0;
    }

    std::optional<std::int64_t> eval_const(const what::Expr& e) const {
        using what::ExprKind;
        switch (e.kind) {
        case ExprKind::Const:
            return e.value;
        case ExprKind::Add:
        case ExprKind::Mul: {
            auto a = eval_const(*e.a), b = eval_const(*e.b);
            if (!a || !b) return std::nullopt;
            auto ua = static_cast<std::uint64_t>(*a), ub = static_cast<std::uint64_t>(*b);
            return static_cast<std::int64_t>(e.kind == ExprKind::Add ? ua + ub : ua * ub);
        }
        default:
            return std::nullopt;
        }
    }

    void assign_const_nodes(const what::Expr& e) {
        if (e.kind == what::ExprKind::Const) {
            assign_slot(node_slot(e), std::to_string(e.value));
            return;
        }
        assign_const_nodes(*e.a);
        assign_const_nodes(*e.b);
        assign_slot(node_slot(e), std::to_string(*eval_const(e)));
    }

    bool bind_base(const std::string& name, const Operand& base) {
        auto it = frees_.find(name);
        if (it != frees_.end()) return ir::operand_equal(it->second, base);
        if (!base.is_value()) return false;
        if (defined_inside_nest(base)) return false;
        bind_free(name, base);
        return true;
    }

    // Directed structural match of a computation expression against an IR
    // operand, descending through definitions. Commutativity of add/mul is
    // tried locally; partial bindings are rolled back on failure.
    bool match_expr(const what::Expr& e, const Operand& v) {
        if (!tick()) return false;
        using what::ExprKind;
        switch (e.kind) {
        case ExprKind::Const:
            if (v.kind == Operand::Kind::IntLit && v.ival == e.value) {
                assign_slot(node_slot(e), ir::print_operand(v));
                return true;
            }
            return false;
        case ExprKind::Name: {
            auto it = frees_.find(e.name);
            if (it != frees_.end()) {
                if (!ir::operand_equal(it->second, v)) return false;
                assign_slot(node_slot(e), ir::print_operand(v));
                return true;
            }
            // free scalars are fixed for the whole nest
            if (v.kind == Operand::Kind::FloatLit) return false;
            if (defined_inside_nest(v)) return false;
            bind_free(e.name, v);
            assign_slot(node_slot(e), ir::print_operand(v));
            return true;
        }
        case ExprKind::Addr: {
            if (!e.a || !v.is_value()) return false;
            const ir::Instr* ld = defs_.find(v.name);
            if (!ld || ld->op != ir::Opcode::Load) return false;
            const Operand& addr = ld->args[0];
            if (!addr.is_value()) return false;
            const ir::Instr* ep = defs_.find(addr.name);
            if (!ep || ep->op != ir::Opcode::ElemPtr) return false;
            if (!bind_base(e.name, ep->args[0])) return false;
            if (!match_expr(*e.a, ep->args[1])) return false;
            assign_slot(node_slot(e), ir::print_operand(v));
            return true;
        }
        case ExprKind::Add:
        case ExprKind::Mul: {
            if (v.kind == Operand::Kind::IntLit) {
                auto cv = eval_const(e);
                if (!cv || *cv != v.ival) return false;
                assign_const_nodes(e);
                return true;
            }
            if (!v.is_value()) return false;
            const ir::Instr* in = defs_.find(v.name);
            ir::Opcode want = e.kind == ExprKind::Add ? ir::Opcode::Add : ir::Opcode::Mul;
            if (!in || in->op != want) return false;
            size_t tm = trail_.size(), pm = pending_.size();
            if (match_expr(*e.a, in->args[0]) && match_expr(*e.b, in->args[1])) {
                assign_slot(node_slot(e), ir::print_operand(v));
                return true;
            }
            rollback(tm, pm);
            if (match_expr(*e.a, in->args[1]) && match_expr(*e.b, in->args[0])) {
                assign_slot(node_slot(e), ir::print_operand(v));
                return true;
            }
            rollback(tm, pm);
            return false;
        }
        }
        return false;
    }

    bool seed_match(const what::Expr& e, const Operand& v) {
        size_t tm = trail_.size(), pm = pending_.size();
        if (match_expr(e, v)) {
            commit();
            return true;
        }
        rollback(tm, pm);
        if (!budget_hit_) events_.push_back({TraceEvent::Kind::Fail, node_slot(e), "", -1});
        return false;
    }

    // Iterators and ranges come straight from loop analysis; bounds are
    // matched with outer iterators in scope but not the level's own.
    bool seed() {
        for (size_t k = 0; k < c_.chain.size(); ++k) {
            const LoopInfo& l = c_.chain[k];
            const what::Range& rg = k < p_.foralls.size() ? p_.foralls[k] : p_.dot.range;
            if (!seed_match(*rg.lower, l.lower)) return false;
            if (!seed_match(*rg.upper, l.upper)) return false;
            if (frees_.count(rg.iterator)) {
                events_.push_back({TraceEvent::Kind::Fail, "iter:" + std::to_string(k), "", -1});
                return false;
            }
            bind_free(rg.iterator, Operand::value(l.iterator));
            assign_slot("iter:" + std::to_string(k), ir::print_operand(Operand::value(l.iterator)));
            commit();
        }
        assign_slot("reduction", ir::print_operand(Operand::value(c_.reduction)));
        commit();
        return true;
    }

    bool scalar_target() const {
        return p_.dot.target->kind == what::ExprKind::Name || p_.dot.target->is_scalar_addr();
    }

    std::vector<DefSite> store_domain() const {
        std::vector<DefSite> out;
        for (size_t bi = 0; bi < f_.blocks.size(); ++bi) {
            int b = static_cast<int>(bi);
            if (!nest_.count(b) || inner_.count(b)) continue;
            for (size_t ii = 0; ii < f_.blocks[bi].instrs.size(); ++ii)
                if (f_.blocks[bi].instrs[ii].op == ir::Opcode::Store)
                    out.push_back({b, static_cast<int>(ii)});
        }
        return out;
    }

    // Loads from a pointer param of the wrong element type can never be a
    // float factor; everything else stays in the domain.
    bool float_load(const ir::Instr& ld) const {
        if (!ld.args[0].is_value()) return true;
        const ir::Instr* ep = defs_.find(ld.args[0].name);
        if (!ep || ep->op != ir::Opcode::ElemPtr || !ep->args[0].is_value()) return true;
        const ir::FuncParam* prm = f_.find_param(ep->args[0].name);
        return !prm || prm->type == ir::Type::PtrF64;
    }

    std::vector<DefSite> load_domain() const {
        std::vector<DefSite> out;
        for (size_t bi = 0; bi < f_.blocks.size(); ++bi) {
            if (!inner_.count(static_cast<int>(bi))) continue;
            for (size_t ii = 0; ii < f_.blocks[bi].instrs.size(); ++ii) {
                const ir::Instr& in = f_.blocks[bi].instrs[ii];
                if (in.op == ir::Opcode::Load && float_load(in))
                    out.push_back({static_cast<int>(bi), static_cast<int>(ii)});
            }
        }
        return out;
    }

    void build_vars() {
        MainVar t;
        t.kind = MainVar::Kind::Target;
        t.domain = scalar_target() ? std::vector<DefSite>{DefSite{}} : store_domain();
        vars_.push_back(std::move(t));
        if (p_.dot.lhs->kind == what::ExprKind::Addr) {
            MainVar v;
            v.kind = MainVar::Kind::LhsAddr;
            v.domain = load_domain();
            lhs_vi_ = static_cast<int>(vars_.size());
            vars_.push_back(std::move(v));
        }
        if (p_.dot.rhs->kind == what::ExprKind::Addr) {
            MainVar v;
            v.kind = MainVar::Kind::RhsAddr;
            v.domain = load_domain();
            rhs_vi_ = static_cast<int>(vars_.size());
            vars_.push_back(std::move(v));
        }
        MainVar pr;
        pr.kind = MainVar::Kind::Product;
        pr.domain = {DefSite{}};
        vars_.push_back(std::move(pr));
    }

    std::string slot_of(const MainVar& v) const {
        switch (v.kind) {
        case MainVar::Kind::Target: return node_slot(*p_.dot.target);
        case MainVar::Kind::LhsAddr: return node_slot(*p_.dot.lhs);
        case MainVar::Kind::RhsAddr: return node_slot(*p_.dot.rhs);
        case MainVar::Kind::Product: return "product";
        }
        return "?";
    }

    bool try_var(MainVar& v, int cand) {
        if (!tick()) return false;
        switch (v.kind) {
        case MainVar::Kind::Target: return try_target(v, cand);
        case MainVar::Kind::LhsAddr: return try_addr(v, *p_.dot.lhs, cand);
        case MainVar::Kind::RhsAddr: return try_addr(v, *p_.dot.rhs, cand);
        case MainVar::Kind::Product: return try_product();
        }
        return false;
    }

    std::string resolve_phis(std::string name) const {
        std::set<std::string> seen;
        while (seen.insert(name).second) {
            const ir::Instr* d = defs_.find(name);
            if (!d || d->op != ir::Opcode::Phi || d->incomings.empty()) break;
            const Operand& v0 = d->incomings[0].value;
            if (!v0.is_value()) break;
            bool same = true;
            for (const ir::PhiIncoming& inc : d->incomings)
                if (!ir::operand_equal(inc.value, v0)) {
                    same = false;
                    break;
                }
            if (!same) break;
            name = v0.name;
        }
        return name;
    }

    // Everything the reduction value flows into via forwarding phis.
    std::set<std::string> reduction_aliases() const {
        std::set<std::string> vals{c_.reduction};
        bool changed = true;
        while (changed) {
            changed = false;
            for (const ir::Block& b : f_.blocks)
                for (const ir::Instr& in : b.instrs) {
                    if (in.op != ir::Opcode::Phi || !in.has_result()) continue;
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

    bool reduction_escapes() const {
        std::set<std::string> vals = reduction_aliases();
        for (size_t bi = 0; bi < f_.blocks.size(); ++bi) {
            if (nest_.count(static_cast<int>(bi))) continue;
            for (const ir::Instr& in : f_.blocks[bi].instrs) {
                for (const Operand& a : in.args)
                    if (a.is_value() && vals.count(a.name)) return true;
                for (const ir::PhiIncoming& inc : in.incomings)
                    if (inc.value.is_value() && vals.count(inc.value.name)) return true;
            }
        }
        return false;
    }

    bool try_target(MainVar& v, int cand) {
        const what::Expr& t = *p_.dot.target;
        if (scalar_target()) {
            if (!reduction_escapes()) return false;
            if (frees_.count(t.name)) return false;
            Operand rv = Operand::value(c_.reduction);
            bind_free(t.name, rv);
            assign_slot(node_slot(t), ir::print_operand(rv));
            target_ = TargetRef{};
            return true;
        }
        const DefSite& s = v.domain[static_cast<size_t>(cand)];
        const ir::Instr& st = f_.blocks[static_cast<size_t>(s.block)].instrs[static_cast<size_t>(s.instr)];
        const Operand& sval = st.args[0];
        if (!sval.is_value() || resolve_phis(sval.name) != c_.reduction) return false;
        const Operand& addr = st.args[1];
        if (!addr.is_value()) return false;
        const ir::Instr* ep = defs_.find(addr.name);
        if (!ep || ep->op != ir::Opcode::ElemPtr) return false;
        if (!bind_base(t.name, ep->args[0])) return false;
        if (!match_expr(*t.a, ep->args[1])) return false;
        assign_slot(node_slot(t), ir::print_operand(addr));
        target_.is_store = true;
        target_.block = f_.blocks[static_cast<size_t>(s.block)].name;
        target_.index = s.instr;
        return true;
    }

    bool try_addr(MainVar& v, const what::Expr& e, int cand) {
        const DefSite& s = v.domain[static_cast<size_t>(cand)];
        const ir::Instr& ld = f_.blocks[static_cast<size_t>(s.block)].instrs[static_cast<size_t>(s.instr)];
        Operand val = Operand::value(ld.result);
        if (!match_expr(e, val)) return false;
        v.assigned = val;
        return true;
    }

    bool factor_matches(const what::Expr& e, int vi, const Operand& op) {
        if (vi >= 0) return ir::operand_equal(vars_[static_cast<size_t>(vi)].assigned, op);
        return match_expr(e, op);
    }

    bool try_product() {
        const ir::Instr* u = defs_.find(c_.reduction_update);
        if (!u) return false;
        Operand m = u->args[0];
        if (m.is_value() && m.name == c_.reduction) m = u->args[1];
        if (!m.is_value()) return false;
        const ir::Instr* mi = defs_.find(m.name);
        if (!mi || mi->op != ir::Opcode::FMul) return false;
        size_t tm = trail_.size(), pm = pending_.size();
        if (factor_matches(*p_.dot.lhs, lhs_vi_, mi->args[0]) &&
            factor_matches(*p_.dot.rhs, rhs_vi_, mi->args[1])) {
            assign_slot("product", ir::print_operand(m));
            return true;
        }
        rollback(tm, pm);
        if (factor_matches(*p_.dot.lhs, lhs_vi_, mi->args[1]) &&
            factor_matches(*p_.dot.rhs, rhs_vi_, mi->args[0])) {
            assign_slot("product", ir::print_operand(m));
            return true;
        }
        rollback(tm, pm);
        return false;
    }
};

} // namespace

std::vector<Candidate> candidates(const ir::Module& m, const Skeleton& s) {
    std::vector<Candidate> out;
    for (const ir::Function& f : m.functions) {
        Cfg g = analysis::build_cfg(f);
        analysis::LoopNest nest = analysis::find_loops(f, g);
        DefIndex defs = index_defs(f);
        std::vector<std::pair<std::pair<int, int>, Candidate>> found;
        for (size_t li = 0; li < nest.loops.size(); ++li) {
            // the innermost d+1 loops of this chain, if that many exist
            std::vector<int> idxs{static_cast<int>(li)};
            for (int step = 0; step < s.forall_depth; ++step) {
                int parent = nest.loops[static_cast<size_t>(idxs.back())].parent;
                if (parent < 0) break;
                idxs.push_back(parent);
            }
            if (static_cast<int>(idxs.size()) != s.forall_depth + 1) continue;
            bool ok = true;
            for (int ix : idxs)
                if (!nest.loops[static_cast<size_t>(ix)].canonical) ok = false;
            if (!ok) continue;
            const LoopInfo& inner = nest.loops[li];
            const ir::Block& header = f.blocks[static_cast<size_t>(inner.header)];
            const std::string pre_name = f.blocks[static_cast<size_t>(inner.preheader)].name;
            const std::string latch_name = f.blocks[static_cast<size_t>(inner.latch)].name;
            for (size_t pi = 0; pi < header.instrs.size(); ++pi) {
                const ir::Instr& phi = header.instrs[pi];
                if (phi.op != ir::Opcode::Phi) break;
                if (phi.result == inner.iterator) continue;
                const Operand* init = nullptr;
                const Operand* upd = nullptr;
                for (const ir::PhiIncoming& inc : phi.incomings) {
                    if (inc.pred == pre_name) init = &inc.value;
                    if (inc.pred == latch_name) upd = &inc.value;
                }
                if (!init || !upd || !is_plus_zero(*init) || !upd->is_value()) continue;
                const ir::Instr* u = defs.find(upd->name);
                if (!u || u->op != ir::Opcode::FAdd) continue;
                int ub = defs.block_of(upd->name);
                if (!inner.contains(ub) || !g.dominates(ub, inner.latch)) continue;
                bool reads_phi = false;
                for (const Operand& a : u->args)
                    if (a.is_value() && a.name == phi.result) reads_phi = true;
                if (!reads_phi) continue;
                Candidate c;
                c.function = f.name;
                for (auto it = idxs.rbegin(); it != idxs.rend(); ++it)
                    c.chain.push_back(nest.loops[static_cast<size_t>(*it)]);
                c.reduction = phi.result;
                c.reduction_update = upd->name;
                found.push_back({{inner.header, static_cast<int>(pi)}, std::move(c)});
            }
        }
        std::sort(found.begin(), found.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [key, c] : found) out.push_back(std::move(c));
    }
    return out;
}

SolveResult solve(const ir::Module& m, const Candidate& c, const what::WhatProgram& p, int budget) {
    const ir::Function* f = m.find_function(c.function);
    if (!f) throw Error(Errc::DataError, "solve: unknown function '" + c.function + "'");
    return Solver(*f, c, p, budget).run();
}

std::map<std::string, std::string> replay(const SearchTrace& t) {
    std::map<std::string, std::string> state;
    std::vector<std::pair<int, std::string>> log;
    for (size_t i = 0; i < t.size(); ++i) {
        const TraceEvent& ev = t[i];
        switch (ev.kind) {
        case TraceEvent::Kind::Assign:
            state[ev.slot] = ev.value;
            log.push_back({static_cast<int>(i), ev.slot});
            break;
        case TraceEvent::Kind::Fail:
            break;
        case TraceEvent::Kind::Backtrack:
            while (!log.empty() && log.back().first >= ev.to_step) {
                state.erase(log.back().second);
                log.pop_back();
            }
            break;
        }
    }
    return state;
}

std::string print_trace(const SearchTrace& t, const what::WhatProgram& p) {
    auto render = [&](const std::string& slot) -> std::string {
        if (slot.rfind("node:", 0) == 0) return p.node_label(std::stoi(slot.substr(5)));
        if (slot.rfind("iter:", 0) == 0) {
            size_t k = std::stoul(slot.substr(5));
            return "iterator " +
                   (k < p.foralls.size() ? p.foralls[k].iterator : p.dot.range.iterator);
        }
        if (slot.rfind("free:", 0) == 0) return slot.substr(5);
        return slot;
    };
    std::ostringstream os;
    for (size_t i = 0; i < t.size(); ++i) {
        os << i << ": ";
        switch (t[i].kind) {
        case TraceEvent::Kind::Assign:
            os << "assign " << render(t[i].slot) << " := " << t[i].value;
            break;
        case TraceEvent::Kind::Fail:
            os << "fail " << render(t[i].slot);
            break;
        case TraceEvent::Kind::Backtrack:
            os << "backtrack -> step " << t[i].to_step;
            break;
        }
        os << "\n";
    }
    return os.str();
}

DetectResult detect(const ir::Module& m, const what::WhatProgram& p, int budget) {
    DetectResult res;
    res.module = analysis::normalize(m);
    res.cands = candidates(res.module, skeleton_of(p));
    for (const Candidate& c : res.cands) {
        SolveResult sr = solve(res.module, c, p, budget);
        if (sr.status == SolveStatus::Found) {
            Match mt;
            mt.what = p.name;
            mt.function = c.function;
            mt.chain = c.chain;
            mt.reduction = c.reduction;
            mt.reduction_update = c.reduction_update;
            mt.solution = sr.solution;
            mt.target = sr.target;
            res.matches.push_back(std::move(mt));
        } else if (sr.status == SolveStatus::Budget) {
            const ir::Function* f = res.module.find_function(c.function);
            std::string hdr =
                f ? f->blocks[static_cast<size_t>(c.chain.back().header)].name : "?";
            res.diags.push_back({"BudgetExceeded",
                                 "search budget exhausted in function '" + c.function +
                                     "', loop at '" + hdr + "'",
                                 {}});
        }
        res.results.push_back(std::move(sr));
    }
    return res;
}

} // namespace lilac::match
