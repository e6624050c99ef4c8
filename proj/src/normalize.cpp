#include "lilac/analysis.hpp"

#include <algorithm>
#include <cassert>
#include <set>

namespace lilac::analysis {

using namespace lilac::ir;

namespace {

bool is_int_lit(const Operand& o, std::int64_t v) {
    return o.kind == Operand::Kind::IntLit && o.ival == v;
}

size_t phi_group_end(const Block& b) {
    size_t i = 0;
    while (i < b.instrs.size() && b.instrs[i].op == Opcode::Phi) ++i;
    return i;
}

// One function at a time; every pass mutates in place and reports whether it
// changed anything. normalize() drives rounds to a fixpoint.
class Normalizer {
public:
    explicit Normalizer(Function& f) : f_(f) {
        for (const FuncParam& p : f_.params) value_names_.insert(p.name);
        for (const Block& b : f_.blocks) {
            block_names_.insert(b.name);
            for (const Instr& in : b.instrs)
                if (in.has_result()) value_names_.insert(in.result);
        }
    }

    bool round() {
        bool changed = false;
        changed |= drop_unreachable();
        changed |= insert_preheaders();
        changed |= fold_constants();
        changed |= rewrite_countdown();
        changed |= rewrite_sle();
        changed |= rebase_ivs();
        changed |= eliminate_dead_stores();
        changed |= eliminate_dead_code();
        changed |= fold_branches();
        changed |= drop_trampolines();
        return changed;
    }

private:
    Function& f_;
    std::set<std::string> value_names_;
    std::set<std::string> block_names_;

    std::string fresh_value(const std::string& hint) {
        std::string name = hint;
        for (int k = 1; value_names_.count(name); ++k) name = hint + "." + std::to_string(k);
        value_names_.insert(name);
        return name;
    }

    std::string fresh_block(const std::string& hint) {
        std::string name = hint;
        for (int k = 1; block_names_.count(name); ++k) name = hint + std::to_string(k);
        block_names_.insert(name);
        return name;
    }

    Instr* find_def(const std::string& name) {
        for (Block& b : f_.blocks)
            for (Instr& in : b.instrs)
                if (in.has_result() && in.result == name) return &in;
        return nullptr;
    }

    int replace_uses(const std::string& name, const Operand& with) {
        int count = 0;
        auto swap = [&](Operand& o) {
            if (o.is_value() && o.name == name) {
                o = with;
                ++count;
            }
        };
        for (Block& b : f_.blocks)
            for (Instr& in : b.instrs) {
                for (Operand& o : in.args) swap(o);
                for (PhiIncoming& inc : in.incomings) swap(inc.value);
            }
        return count;
    }

    // ---- preheaders ---------------------------------------------------------

    bool insert_preheaders() {
        Cfg g = build_cfg(f_);
        LoopNest nest = find_loops(f_, g);
        for (const LoopInfo& l : nest.loops) {
            if (l.latch < 0 || l.preheader >= 0) continue;
            // only headers carrying phis profit; a bare br block in front of a
            // phi-free target would be cut right back out as a trampoline
            const Block& header = f_.blocks[static_cast<size_t>(l.header)];
            if (header.instrs.empty() || header.instrs[0].op != Opcode::Phi) continue;
            if (make_preheader(g, l)) return true;  // indices went stale; next round finds the rest
        }
        return false;
    }

    // false when the header has no entering edge to steer (it is the function
    // entry); such loops stay preheader-less
    bool make_preheader(const Cfg& g, const LoopInfo& l) {
        Block& header = f_.blocks[static_cast<size_t>(l.header)];
        std::string header_name = header.name;
        std::vector<int> outside;
        for (int p : g.preds[static_cast<size_t>(l.header)])
            if (!l.contains(p)) outside.push_back(p);
        std::sort(outside.begin(), outside.end());
        outside.erase(std::unique(outside.begin(), outside.end()), outside.end());
        if (outside.empty()) return false;

        Block pre;
        pre.name = fresh_block(header_name + ".pre");

        std::set<std::string> outside_names;
        for (int p : outside) outside_names.insert(f_.blocks[static_cast<size_t>(p)].name);

        // each header phi folds its outside incomings into one edge from the
        // new preheader, adding a gathering phi there when values differ
        for (Instr& phi : header.instrs) {
            if (phi.op != Opcode::Phi) break;
            std::vector<PhiIncoming> from_out, kept;
            for (PhiIncoming& inc : phi.incomings)
                (outside_names.count(inc.pred) ? from_out : kept).push_back(inc);
            if (from_out.empty()) continue;
            bool all_same = true;
            for (const PhiIncoming& inc : from_out)
                if (!operand_equal(inc.value, from_out[0].value)) all_same = false;
            Operand merged;
            if (all_same || from_out.size() == 1) {
                merged = from_out[0].value;
            } else {
                Instr gather;
                gather.op = Opcode::Phi;
                gather.result = fresh_value(phi.result + ".pre");
                gather.incomings = from_out;
                pre.instrs.push_back(std::move(gather));
                merged = Operand::value(pre.instrs.back().result);
            }
            kept.push_back({merged, pre.name});
            phi.incomings = std::move(kept);
        }

        Instr jump;
        jump.op = Opcode::Br;
        jump.targets = {header_name};
        pre.instrs.push_back(std::move(jump));

        for (int p : outside) {
            Instr& term = f_.blocks[static_cast<size_t>(p)].instrs.back();
            for (std::string& t : term.targets)
                if (t == header_name) t = pre.name;
        }
        f_.blocks.insert(f_.blocks.begin() + l.header, std::move(pre));
        return true;
    }

    // ---- folding ------------------------------------------------------------

    bool fold_constants() {
        bool changed = false;
        std::vector<std::pair<size_t, size_t>> drop;
        for (size_t bi = 0; bi < f_.blocks.size(); ++bi) {
            Block& b = f_.blocks[bi];
            for (size_t ii = 0; ii < b.instrs.size(); ++ii) {
                Instr& in = b.instrs[ii];

                // constants ride on the right of commutative integer ops
                if ((in.op == Opcode::Add || in.op == Opcode::Mul || in.op == Opcode::FAdd ||
                     in.op == Opcode::FMul) &&
                    !in.args[0].is_value() && in.args[1].is_value()) {
                    std::swap(in.args[0], in.args[1]);
                    changed = true;
                }

                // sub x, c  ->  add x, -c
                if (in.op == Opcode::Sub && in.args[1].kind == Operand::Kind::IntLit &&
                    in.args[1].ival != INT64_MIN) {
                    in.op = Opcode::Add;
                    in.args[1].ival = -in.args[1].ival;
                    changed = true;
                }

                auto fold_to = [&](const Operand& value) {
                    replace_uses(in.result, value);
                    drop.emplace_back(bi, ii);
                    changed = true;
                };

                bool lit2 = in.args.size() == 2 && in.args[0].kind == Operand::Kind::IntLit &&
                            in.args[1].kind == Operand::Kind::IntLit;
                bool flit2 = in.args.size() == 2 && in.args[0].kind == Operand::Kind::FloatLit &&
                             in.args[1].kind == Operand::Kind::FloatLit;
                auto wrap = [](std::int64_t x, std::int64_t y, Opcode op) {
                    auto ux = static_cast<std::uint64_t>(x), uy = static_cast<std::uint64_t>(y);
                    std::uint64_t r = op == Opcode::Add ? ux + uy : op == Opcode::Sub ? ux - uy : ux * uy;
                    return static_cast<std::int64_t>(r);
                };

                switch (in.op) {
                case Opcode::Add:
                    if (lit2) {
                        fold_to(Operand::int_lit(wrap(in.args[0].ival, in.args[1].ival, Opcode::Add)));
                    } else if (is_int_lit(in.args[1], 0) && in.args[0].is_value()) {
                        fold_to(in.args[0]);
                    } else if (in.args[0].is_value() && in.args[1].kind == Operand::Kind::IntLit) {
                        // merge add(add(x, c1), c2) into add(x, c1 + c2)
                        Instr* inner = find_def(in.args[0].name);
                        if (inner && inner->op == Opcode::Add && inner->args[1].kind == Operand::Kind::IntLit &&
                            &in != inner) {
                            in.args[0] = inner->args[0];
                            in.args[1] =
                                Operand::int_lit(wrap(inner->args[1].ival, in.args[1].ival, Opcode::Add));
                            changed = true;
                        }
                    }
                    break;
                case Opcode::Sub:
                    if (lit2)
                        fold_to(Operand::int_lit(wrap(in.args[0].ival, in.args[1].ival, Opcode::Sub)));
                    else if (in.args[0].is_value() && in.args[1].is_value() &&
                             in.args[0].name == in.args[1].name)
                        fold_to(Operand::int_lit(0));
                    break;
                case Opcode::Mul:
                    if (lit2)
                        fold_to(Operand::int_lit(wrap(in.args[0].ival, in.args[1].ival, Opcode::Mul)));
                    else if (is_int_lit(in.args[1], 1) && in.args[0].is_value())
                        fold_to(in.args[0]);
                    else if (is_int_lit(in.args[1], 0))
                        fold_to(Operand::int_lit(0));
                    break;
                case Opcode::FAdd:
                    if (flit2) fold_to(Operand::float_lit(in.args[0].fval + in.args[1].fval));
                    break;
                case Opcode::FSub:
                    if (flit2) fold_to(Operand::float_lit(in.args[0].fval - in.args[1].fval));
                    break;
                case Opcode::FMul:
                    if (flit2) fold_to(Operand::float_lit(in.args[0].fval * in.args[1].fval));
                    break;
                default: break;
                }
            }
        }
        for (auto it = drop.rbegin(); it != drop.rend(); ++it)
            f_.blocks[it->first].instrs.erase(f_.blocks[it->first].instrs.begin() +
                                              static_cast<long>(it->second));
        return changed;
    }

    // ---- loop canonicalization ---------------------------------------------

    struct RawLoopGuard {
        Block* header;
        Instr* cmp;        // header icmp feeding the condbr
        std::string pre;   // preheader name
        std::string latch; // latch name
    };

    // common legwork for the guard rewrites: single-latch loop with dedicated
    // preheader whose header ends in condbr(cmp, in-loop, out-of-loop)
    bool guard_of(const Cfg& g, const LoopInfo& l, RawLoopGuard& out) {
        if (l.latch < 0 || l.preheader < 0) return false;
        Block& header = f_.blocks[static_cast<size_t>(l.header)];
        Instr* term = header.instrs.empty() ? nullptr : &header.instrs.back();
        if (!term || term->op != Opcode::CondBr || !term->args[0].is_value()) return false;
        auto then_it = g.index.find(term->targets[0]);
        auto else_it = g.index.find(term->targets[1]);
        if (then_it == g.index.end() || else_it == g.index.end()) return false;
        if (!l.contains(then_it->second) || l.contains(else_it->second)) return false;
        Instr* cmp = nullptr;
        for (Instr& in : header.instrs)
            if (in.has_result() && in.result == term->args[0].name) cmp = &in;
        if (!cmp) return false;
        // the compare must serve only this branch; rewriting it would change
        // other users
        int uses = 0;
        for (Block& b : f_.blocks)
            for (Instr& in : b.instrs) {
                for (Operand& o : in.args)
                    if (o.is_value() && o.name == cmp->result) ++uses;
                for (PhiIncoming& inc : in.incomings)
                    if (inc.value.is_value() && inc.value.name == cmp->result) ++uses;
            }
        if (uses != 1) return false;
        out = {&header, cmp, f_.blocks[static_cast<size_t>(l.preheader)].name,
               f_.blocks[static_cast<size_t>(l.latch)].name};
        return true;
    }

    Instr* phi_incoming_def(Block& header, const std::string& result) {
        for (Instr& in : header.instrs) {
            if (in.op != Opcode::Phi) break;
            if (in.result == result) return &in;
        }
        return nullptr;
    }

    const Operand* incoming_from(const Instr& phi, const std::string& pred) {
        for (const PhiIncoming& inc : phi.incomings)
            if (inc.pred == pred) return &inc.value;
        return nullptr;
    }

    // while (0 < d) { ...; d -= 1 }  becomes  while (t < d0) { ...; t += 1 }
    // with a fresh zero-based iterator t; the countdown phi dies by DCE.
    bool rewrite_countdown() {
        Cfg g = build_cfg(f_);
        LoopNest nest = find_loops(f_, g);
        bool changed = false;
        for (const LoopInfo& l : nest.loops) {
            RawLoopGuard rg;
            if (!guard_of(g, l, rg)) continue;
            Instr& cmp = *rg.cmp;
            if (cmp.op != Opcode::IcmpSlt || !is_int_lit(cmp.args[0], 0) || !cmp.args[1].is_value())
                continue;
            Instr* down = phi_incoming_def(*rg.header, cmp.args[1].name);
            if (!down) continue;
            const Operand* init = incoming_from(*down, rg.pre);
            const Operand* next = incoming_from(*down, rg.latch);
            if (!init || !next || !next->is_value()) continue;
            Instr* step = find_def(next->name);
            bool down_step = step && ((step->op == Opcode::Add && step->args[0].is_value() &&
                                       step->args[0].name == down->result && is_int_lit(step->args[1], -1)) ||
                                      (step->op == Opcode::Sub && step->args[0].is_value() &&
                                       step->args[0].name == down->result && is_int_lit(step->args[1], 1)));
            if (!down_step) continue;

            std::string t = fresh_value("t");
            std::string t_next = fresh_value("t.next");
            std::string cmp_name = cmp.result;
            Operand upper = *init;  // trip count: d runs init..1, t runs 0..init-1

            Instr phi;
            phi.op = Opcode::Phi;
            phi.result = t;
            phi.incomings = {{Operand::int_lit(0), rg.pre}, {Operand::value(t_next), rg.latch}};
            Block& header = *rg.header;
            header.instrs.insert(header.instrs.begin() + static_cast<long>(phi_group_end(header)),
                                 std::move(phi));

            Instr bump;
            bump.op = Opcode::Add;
            bump.result = t_next;
            bump.args = {Operand::value(t), Operand::int_lit(1)};
            Block* latch = f_.find_block(rg.latch);
            latch->instrs.insert(latch->instrs.end() - 1, std::move(bump));

            // the insert may have moved header.instrs; re-find the compare
            for (Instr& in : header.instrs)
                if (in.has_result() && in.result == cmp_name) {
                    in.args = {Operand::value(t), upper};
                    break;
                }
            changed = true;
        }
        return changed;
    }

    // i <= u guards become i < u+1, with the bump hoisted to the preheader
    bool rewrite_sle() {
        Cfg g = build_cfg(f_);
        LoopNest nest = find_loops(f_, g);
        bool changed = false;
        for (const LoopInfo& l : nest.loops) {
            RawLoopGuard rg;
            if (!guard_of(g, l, rg)) continue;
            Instr& cmp = *rg.cmp;
            if (cmp.op != Opcode::IcmpSle) continue;
            if (cmp.args[1].kind == Operand::Kind::IntLit) {
                if (cmp.args[1].ival == INT64_MAX) continue;
                cmp.op = Opcode::IcmpSlt;
                cmp.args[1].ival += 1;
                changed = true;
                continue;
            }
            if (!cmp.args[1].is_value()) continue;
            // the bound must be loop-invariant to be bumped in the preheader
            bool inside = false;
            for (int b : l.blocks)
                for (const Instr& in : f_.blocks[static_cast<size_t>(b)].instrs)
                    if (in.has_result() && in.result == cmp.args[1].name) inside = true;
            if (inside) continue;
            std::string bumped = fresh_value(cmp.args[1].name + ".sle");
            Instr add;
            add.op = Opcode::Add;
            add.result = bumped;
            add.args = {cmp.args[1], Operand::int_lit(1)};
            Block* pre = f_.find_block(rg.pre);
            pre->instrs.insert(pre->instrs.end() - 1, std::move(add));
            cmp.op = Opcode::IcmpSlt;
            cmp.args[1] = Operand::value(bumped);
            changed = true;
        }
        return changed;
    }

    // Secondary +1 induction variables are expressed through the canonical
    // iterator: a phi (c, +1) in a header whose iterator starts at l becomes
    // iterator + (c - l), letting shifted counters (FORTRAN 1-based) collapse.
    bool rebase_ivs() {
        Cfg g = build_cfg(f_);
        LoopNest nest = find_loops(f_, g);
        bool changed = false;
        for (const LoopInfo& l : nest.loops) {
            if (!l.canonical) continue;
            Block& header = f_.blocks[static_cast<size_t>(l.header)];
            std::string pre = f_.blocks[static_cast<size_t>(l.preheader)].name;
            std::string latch = f_.blocks[static_cast<size_t>(l.latch)].name;
            for (size_t pi = 0; pi < phi_group_end(header); ++pi) {
                Instr& phi = header.instrs[pi];
                if (phi.result == l.iterator) continue;
                const Operand* init = incoming_from(phi, pre);
                const Operand* next = incoming_from(phi, latch);
                if (!init || !next || !next->is_value()) continue;
                Instr* step = find_def(next->name);
                bool one_step = step && step->op == Opcode::Add && step->args[0].is_value() &&
                                step->args[0].name == phi.result && is_int_lit(step->args[1], 1);
                if (!one_step) continue;

                if (operand_equal(*init, l.lower)) {
                    // same sequence as the iterator itself; once every use
                    // reads the iterator, the phi and its update die by DCE
                    replace_uses(phi.result, Operand::value(l.iterator));
                    changed = true;
                } else if (init->kind == Operand::Kind::IntLit && l.lower.kind == Operand::Kind::IntLit) {
                    std::int64_t delta = init->ival - l.lower.ival;
                    std::string lin = fresh_value(phi.result + ".lin");
                    Instr add;
                    add.op = Opcode::Add;
                    add.result = lin;
                    add.args = {Operand::value(l.iterator), Operand::int_lit(delta)};
                    std::string phi_name = phi.result;
                    header.instrs.insert(header.instrs.begin() + static_cast<long>(phi_group_end(header)),
                                         std::move(add));
                    // `phi` reference is stale after the insert; replace by name
                    int n = 0;
                    auto swap = [&](Operand& o) {
                        if (o.is_value() && o.name == phi_name) {
                            o = Operand::value(lin);
                            ++n;
                        }
                    };
                    for (Block& b : f_.blocks)
                        for (Instr& in : b.instrs) {
                            if (in.has_result() && in.result == lin) continue;  // not its own base
                            for (Operand& o : in.args) swap(o);
                            for (PhiIncoming& inc : in.incomings) swap(inc.value);
                        }
                    (void)n;
                    changed = true;
                }
            }
        }
        return changed;
    }

    // ---- cleanups -----------------------------------------------------------

    bool eliminate_dead_code() {
        // mark: stores, calls and terminators are roots
        std::set<std::string> live;
        std::vector<const Operand*> work;
        auto feed = [&](const Instr& in) {
            for (const Operand& o : in.args)
                if (o.is_value()) work.push_back(&o);
            for (const PhiIncoming& inc : in.incomings)
                if (inc.value.is_value()) work.push_back(&inc.value);
        };
        for (const Block& b : f_.blocks)
            for (const Instr& in : b.instrs)
                if (in.op == Opcode::Store || in.op == Opcode::Call || is_terminator(in.op)) feed(in);
        while (!work.empty()) {
            const Operand* o = work.back();
            work.pop_back();
            if (!live.insert(o->name).second) continue;
            for (const Block& b : f_.blocks)
                for (const Instr& in : b.instrs)
                    if (in.has_result() && in.result == o->name) feed(in);
        }
        bool changed = false;
        for (Block& b : f_.blocks) {
            auto last = std::remove_if(b.instrs.begin(), b.instrs.end(), [&](const Instr& in) {
                if (!in.has_result() || live.count(in.result)) return false;
                return in.op != Opcode::Store && in.op != Opcode::Call && !is_terminator(in.op);
            });
            if (last != b.instrs.end()) {
                b.instrs.erase(last, b.instrs.end());
                changed = true;
            }
        }
        return changed;
    }

    // store a, p; store b, p with no interfering read between: the first
    // store is invisible. Loads and calls block the window conservatively.
    bool eliminate_dead_stores() {
        bool changed = false;
        for (Block& b : f_.blocks) {
            std::map<std::string, size_t> pending;  // pointer value -> store idx
            std::vector<size_t> dead;
            for (size_t i = 0; i < b.instrs.size(); ++i) {
                const Instr& in = b.instrs[i];
                if (in.op == Opcode::Store && in.args[1].is_value()) {
                    auto [it, inserted] = pending.emplace(in.args[1].name, i);
                    if (!inserted) {
                        dead.push_back(it->second);
                        it->second = i;
                    }
                } else if (in.op == Opcode::Load || in.op == Opcode::Call) {
                    pending.clear();
                }
            }
            for (auto it = dead.rbegin(); it != dead.rend(); ++it) {
                b.instrs.erase(b.instrs.begin() + static_cast<long>(*it));
                changed = true;
            }
        }
        return changed;
    }

    bool fold_branches() {
        bool changed = false;
        for (Block& b : f_.blocks) {
            if (b.instrs.empty()) continue;
            Instr& term = b.instrs.back();
            if (term.op != Opcode::CondBr) continue;
            if (term.targets[0] == term.targets[1]) {
                term.op = Opcode::Br;
                term.args.clear();
                term.targets.pop_back();
                changed = true;
                continue;
            }
            if (!term.args[0].is_value()) continue;
            Instr* cmp = find_def(term.args[0].name);
            if (!cmp || cmp->args.size() != 2 || cmp->args[0].kind != Operand::Kind::IntLit ||
                cmp->args[1].kind != Operand::Kind::IntLit)
                continue;
            std::int64_t x = cmp->args[0].ival, y = cmp->args[1].ival;
            bool taken;
            switch (cmp->op) {
            case Opcode::IcmpEq: taken = x == y; break;
            case Opcode::IcmpNe: taken = x != y; break;
            case Opcode::IcmpSlt: taken = x < y; break;
            case Opcode::IcmpSle: taken = x <= y; break;
            default: continue;
            }
            std::string keep = term.targets[taken ? 0 : 1];
            std::string gone = term.targets[taken ? 1 : 0];
            term.op = Opcode::Br;
            term.args.clear();
            term.targets = {keep};
            // the abandoned edge disappears from the target's phis
            if (Block* dst = f_.find_block(gone))
                for (Instr& in : dst->instrs) {
                    if (in.op != Opcode::Phi) break;
                    std::erase_if(in.incomings,
                                  [&](const PhiIncoming& inc) { return inc.pred == b.name; });
                }
            changed = true;
        }
        return changed;
    }

    bool drop_unreachable() {
        if (f_.blocks.empty()) return false;
        Cfg g = build_cfg(f_);
        bool any = false;
        for (size_t i = 0; i < f_.blocks.size(); ++i)
            if (!g.reachable(static_cast<int>(i))) any = true;
        if (!any) return false;
        std::set<std::string> removed;
        for (size_t i = 0; i < f_.blocks.size(); ++i)
            if (!g.reachable(static_cast<int>(i))) removed.insert(f_.blocks[i].name);
        std::erase_if(f_.blocks, [&](const Block& b) { return removed.count(b.name) > 0; });
        for (Block& b : f_.blocks)
            for (Instr& in : b.instrs) {
                if (in.op != Opcode::Phi) break;
                std::erase_if(in.incomings,
                              [&](const PhiIncoming& inc) { return removed.count(inc.pred) > 0; });
            }
        return true;
    }

    // blocks that only jump on are cut out, except in front of phi-carrying
    // targets (that shape is a dedicated preheader and must stay)
    bool drop_trampolines() {
        for (size_t bi = 1; bi < f_.blocks.size(); ++bi) {
            Block& b = f_.blocks[bi];
            if (b.instrs.size() != 1 || b.instrs[0].op != Opcode::Br) continue;
            const std::string target = b.instrs[0].targets[0];
            if (target == b.name) continue;
            Block* dst = f_.find_block(target);
            if (!dst || dst->instrs.empty()) continue;
            if (dst->instrs[0].op == Opcode::Phi) continue;
            std::string gone = b.name;
            f_.blocks.erase(f_.blocks.begin() + static_cast<long>(bi));
            for (Block& p : f_.blocks)
                if (!p.instrs.empty())
                    for (std::string& t : p.instrs.back().targets)
                        if (t == gone) t = target;
            return true;
        }
        return false;
    }
};

} // namespace

Module normalize(const Module& m) {
    Module out = m;
    for (Function& f : out.functions) {
        Normalizer n(f);
        for (int round = 0; round < 64 && n.round(); ++round) {
        }
    }
    return out;
}

} // namespace lilac::analysis
