#include "lilac/ir.hpp"

#include "lilac/analysis.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace lilac::ir {

namespace {

using analysis::Cfg;
using analysis::build_cfg;

std::string in_func(const Function& f, const std::string& msg) { return msg + " in @" + f.name; }

struct DefSite {
    int block = -1;  // -1 = function parameter
    int instr = -1;
};

struct Verifier {
    const Module& m;
    Diagnostics diags;

    void diag(std::string code, std::string msg, SourceLoc loc = {}) {
        diags.push_back({std::move(code), std::move(msg), loc});
    }

    void run() {
        std::set<std::string> fnames;
        for (const Function& f : m.functions) {
            if (!fnames.insert(f.name).second)
                diag("DuplicateFunction", "function '@" + f.name + "' defined twice");
        }
        for (const Function& f : m.functions) check_function(f);
    }

    void check_function(const Function& f) {
        if (f.blocks.empty()) {
            diag("EmptyFunction", "function '@" + f.name + "' has no blocks");
            return;
        }

        bool names_ok = check_names(f);
        bool shape_ok = check_block_shape(f);
        if (!names_ok || !shape_ok) return;  // CFG checks would cascade

        Cfg g = build_cfg(f);
        for (size_t i = 0; i < f.blocks.size(); ++i)
            if (!g.reachable(static_cast<int>(i)))
                diag("UnreachableBlock", in_func(f, "block '" + f.blocks[i].name + "' is unreachable"),
                     f.blocks[i].loc);

        check_phis(f, g);
        check_dominance(f, g);
        check_types(f);
    }

    // SSA name uniqueness; fills nothing, pure reporting. Returns false when
    // later checks would be meaningless.
    bool check_names(const Function& f) {
        bool ok = true;
        std::set<std::string> blocks;
        for (const Block& b : f.blocks)
            if (!blocks.insert(b.name).second) {
                diag("DuplicateBlock", in_func(f, "label '" + b.name + "' defined twice"), b.loc);
                ok = false;
            }
        std::set<std::string> values;
        for (const FuncParam& p : f.params)
            if (!values.insert(p.name).second) {
                diag("DuplicateValue", in_func(f, "parameter '%" + p.name + "' defined twice"));
                ok = false;
            }
        for (const Block& b : f.blocks)
            for (const Instr& in : b.instrs)
                if (in.has_result() && !values.insert(in.result).second) {
                    diag("DuplicateValue", in_func(f, "value '%" + in.result + "' defined twice"), in.loc);
                    ok = false;
                }
        // branch targets and phi predecessors must name real blocks
        for (const Block& b : f.blocks)
            for (const Instr& in : b.instrs) {
                for (const std::string& t : in.targets)
                    if (!blocks.count(t)) {
                        diag("UnknownBlock", in_func(f, "branch to unknown label '" + t + "'"), in.loc);
                        ok = false;
                    }
                for (const PhiIncoming& inc : in.incomings)
                    if (!blocks.count(inc.pred)) {
                        diag("UnknownBlock", in_func(f, "phi references unknown label '" + inc.pred + "'"),
                             in.loc);
                        ok = false;
                    }
            }
        return ok;
    }

    bool check_block_shape(const Function& f) {
        bool ok = true;
        for (const Block& b : f.blocks) {
            if (b.instrs.empty() || !is_terminator(b.instrs.back().op)) {
                diag("MissingTerminator", in_func(f, "block '" + b.name + "' does not end in a terminator"),
                     b.loc);
                ok = false;
            }
            bool past_phis = false;
            for (size_t i = 0; i < b.instrs.size(); ++i) {
                const Instr& in = b.instrs[i];
                if (is_terminator(in.op) && i + 1 != b.instrs.size()) {
                    diag("MisplacedTerminator",
                         in_func(f, "terminator in the middle of block '" + b.name + "'"), in.loc);
                    ok = false;
                }
                if (in.op == Opcode::Phi) {
                    if (past_phis) {
                        diag("PhiNotAtTop", in_func(f, "phi below non-phi in block '" + b.name + "'"),
                             in.loc);
                        ok = false;
                    }
                } else {
                    past_phis = true;
                }
            }
        }
        return ok;
    }

    void check_phis(const Function& f, const Cfg& g) {
        for (size_t bi = 0; bi < f.blocks.size(); ++bi) {
            if (!g.reachable(static_cast<int>(bi))) continue;
            const Block& b = f.blocks[bi];
            std::set<std::string> pred_names;
            for (int p : g.preds[bi]) pred_names.insert(f.blocks[static_cast<size_t>(p)].name);
            for (const Instr& in : b.instrs) {
                if (in.op != Opcode::Phi) break;
                std::set<std::string> listed;
                for (const PhiIncoming& inc : in.incomings) {
                    if (!listed.insert(inc.pred).second)
                        diag("PhiCoverage",
                             in_func(f, "phi lists predecessor '" + inc.pred + "' twice"), in.loc);
                    else if (!pred_names.count(inc.pred))
                        diag("PhiCoverage",
                             in_func(f, "phi lists '" + inc.pred + "', not a predecessor of '" + b.name + "'"),
                             in.loc);
                }
                for (const std::string& p : pred_names)
                    if (!listed.count(p))
                        diag("PhiCoverage",
                             in_func(f, "phi misses predecessor '" + p + "' of '" + b.name + "'"), in.loc);
            }
        }
    }

    void check_dominance(const Function& f, const Cfg& g) {
        std::map<std::string, DefSite> defs;
        for (const FuncParam& p : f.params) defs[p.name] = {};
        for (size_t bi = 0; bi < f.blocks.size(); ++bi)
            for (size_t ii = 0; ii < f.blocks[bi].instrs.size(); ++ii) {
                const Instr& in = f.blocks[bi].instrs[ii];
                if (in.has_result()) defs[in.result] = {static_cast<int>(bi), static_cast<int>(ii)};
            }

        auto check_use = [&](const Operand& o, int use_block, int use_instr, bool is_phi_use,
                             const std::string& pred, const Instr& in) {
            if (!o.is_value()) return;
            auto it = defs.find(o.name);
            if (it == defs.end()) {
                diag("UnknownValue", in_func(f, "use of undefined value '%" + o.name + "'"), in.loc);
                return;
            }
            const DefSite& d = it->second;
            if (d.block < 0) return;  // parameters dominate everything
            if (!g.reachable(d.block)) return;  // covered by UnreachableBlock
            bool ok;
            if (is_phi_use) {
                // the value must be available at the end of the predecessor
                int p = g.index.at(pred);
                ok = d.block == p || g.dominates(d.block, p);
            } else if (d.block == use_block) {
                ok = d.instr < use_instr;
            } else {
                ok = g.dominates(d.block, use_block);
            }
            if (!ok)
                diag("DominanceViolation",
                     in_func(f, "use of '%" + o.name + "' is not dominated by its definition"), in.loc);
        };

        for (size_t bi = 0; bi < f.blocks.size(); ++bi) {
            if (!g.reachable(static_cast<int>(bi))) continue;
            const Block& b = f.blocks[bi];
            for (size_t ii = 0; ii < b.instrs.size(); ++ii) {
                const Instr& in = b.instrs[ii];
                if (in.op == Opcode::Phi) {
                    for (const PhiIncoming& inc : in.incomings)
                        check_use(inc.value, static_cast<int>(bi), static_cast<int>(ii), true, inc.pred, in);
                } else {
                    for (const Operand& o : in.args)
                        check_use(o, static_cast<int>(bi), static_cast<int>(ii), false, "", in);
                }
            }
        }
    }

    void check_types(const Function& f) {
        std::map<std::string, Type> types = infer_value_types(f, m, diags);

        auto type_of = [&](const Operand& o) -> std::optional<Type> {
            switch (o.kind) {
            case Operand::Kind::IntLit: return Type::I64;
            case Operand::Kind::FloatLit: return Type::F64;
            case Operand::Kind::Value: {
                auto it = types.find(o.name);
                if (it == types.end()) return std::nullopt;
                return it->second;
            }
            }
            return std::nullopt;
        };

        auto want = [&](const Operand& o, Type expect, const Instr& in) {
            auto t = type_of(o);
            if (t && *t != expect)
                diag("TypeMismatch",
                     in_func(f, std::string(opcode_name(in.op)) + " operand " + print_operand(o) + " has type " +
                                    type_name(*t) + ", expected " + type_name(expect)),
                     in.loc);
        };

        for (const Block& b : f.blocks)
            for (const Instr& in : b.instrs) {
                switch (in.op) {
                case Opcode::Add:
                case Opcode::Sub:
                case Opcode::Mul:
                case Opcode::IcmpEq:
                case Opcode::IcmpNe:
                case Opcode::IcmpSlt:
                case Opcode::IcmpSle:
                    want(in.args[0], Type::I64, in);
                    want(in.args[1], Type::I64, in);
                    break;
                case Opcode::FAdd:
                case Opcode::FSub:
                case Opcode::FMul:
                    want(in.args[0], Type::F64, in);
                    want(in.args[1], Type::F64, in);
                    break;
                case Opcode::ElemPtr: {
                    auto base = type_of(in.args[0]);
                    if (base && !is_ptr(*base))
                        diag("TypeMismatch", in_func(f, "elemptr base must be a pointer"), in.loc);
                    want(in.args[1], Type::I64, in);
                    break;
                }
                case Opcode::Load: {
                    auto p = type_of(in.args[0]);
                    if (p && !is_ptr(*p))
                        diag("TypeMismatch", in_func(f, "load operand must be a pointer"), in.loc);
                    break;
                }
                case Opcode::Store: {
                    auto p = type_of(in.args[1]);
                    if (p && !is_ptr(*p))
                        diag("TypeMismatch", in_func(f, "store destination must be a pointer"), in.loc);
                    else if (p)
                        want(in.args[0], pointee(*p), in);
                    break;
                }
                case Opcode::CondBr:
                    want(in.args[0], Type::I1, in);
                    break;
                case Opcode::Ret: {
                    if (f.ret == Type::Void) {
                        if (!in.args.empty())
                            diag("ReturnTypeMismatch", in_func(f, "void function returns a value"), in.loc);
                    } else if (in.args.empty()) {
                        diag("ReturnTypeMismatch", in_func(f, "non-void function returns nothing"), in.loc);
                    } else {
                        auto t = type_of(in.args[0]);
                        if (t && *t != f.ret)
                            diag("ReturnTypeMismatch",
                                 in_func(f, std::string("returned ") + type_name(*t) + ", function declares " +
                                                type_name(f.ret)),
                                 in.loc);
                    }
                    break;
                }
                case Opcode::Phi: {
                    auto rt = types.find(in.result);
                    if (rt == types.end()) break;
                    for (const PhiIncoming& inc : in.incomings) {
                        auto t = type_of(inc.value);
                        if (t && *t != rt->second)
                            diag("TypeMismatch",
                                 in_func(f, "phi incoming " + print_operand(inc.value) + " has type " +
                                                type_name(*t) + ", expected " + type_name(rt->second)),
                                 in.loc);
                    }
                    break;
                }
                case Opcode::Call: {
                    const Function* callee = m.find_function(in.callee);
                    if (!callee) break;  // external harnesses: arguments unconstrained
                    if (callee->params.size() != in.args.size()) {
                        diag("CallArity",
                             in_func(f, "call to @" + in.callee + " passes " + std::to_string(in.args.size()) +
                                            " args, expected " + std::to_string(callee->params.size())),
                             in.loc);
                        break;
                    }
                    for (size_t i = 0; i < in.args.size(); ++i) want(in.args[i], callee->params[i].type, in);
                    if (in.has_result() && callee->ret == Type::Void)
                        diag("TypeMismatch", in_func(f, "call to void @" + in.callee + " names a result"),
                             in.loc);
                    break;
                }
                default: break;
                }
            }
    }
};

} // namespace

std::map<std::string, Type> infer_value_types(const Function& f, const Module& m, Diagnostics& diags) {
    std::map<std::string, Type> types;
    for (const FuncParam& p : f.params) types[p.name] = p.type;

    auto operand_type = [&](const Operand& o) -> std::optional<Type> {
        switch (o.kind) {
        case Operand::Kind::IntLit: return Type::I64;
        case Operand::Kind::FloatLit: return Type::F64;
        case Operand::Kind::Value: {
            auto it = types.find(o.name);
            if (it == types.end()) return std::nullopt;
            return it->second;
        }
        }
        return std::nullopt;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const Block& b : f.blocks)
            for (const Instr& in : b.instrs) {
                if (!in.has_result() || types.count(in.result)) continue;
                std::optional<Type> t;
                switch (in.op) {
                case Opcode::Add:
                case Opcode::Sub:
                case Opcode::Mul: t = Type::I64; break;
                case Opcode::IcmpEq:
                case Opcode::IcmpNe:
                case Opcode::IcmpSlt:
                case Opcode::IcmpSle: t = Type::I1; break;
                case Opcode::FAdd:
                case Opcode::FSub:
                case Opcode::FMul: t = Type::F64; break;
                case Opcode::ElemPtr: {
                    auto base = operand_type(in.args[0]);
                    if (base && is_ptr(*base)) t = base;
                    break;
                }
                case Opcode::Load: {
                    auto p = operand_type(in.args[0]);
                    if (p && is_ptr(*p)) t = pointee(*p);
                    break;
                }
                case Opcode::Phi: {
                    for (const PhiIncoming& inc : in.incomings)
                        if (auto ti = operand_type(inc.value)) {
                            t = ti;
                            break;
                        }
                    break;
                }
                case Opcode::Call: {
                    const Function* callee = m.find_function(in.callee);
                    // externals with a result follow the scalar-result
                    // protocol and produce f64
                    t = callee ? callee->ret : Type::F64;
                    if (t == Type::Void) t.reset();
                    break;
                }
                default: break;
                }
                if (t) {
                    types[in.result] = *t;
                    changed = true;
                }
            }
    }

    for (const Block& b : f.blocks)
        for (const Instr& in : b.instrs)
            if (in.has_result() && !types.count(in.result))
                diags.push_back({"UntypedValue",
                                 in_func(f, "could not infer a type for '%" + in.result + "'"), in.loc});
    return types;
}

Diagnostics verify(const Module& m) {
    Verifier v{m, {}};
    v.run();
    return v.diags;
}

} // namespace lilac::ir
