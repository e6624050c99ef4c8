#include "lilac/interp.hpp"

#include <sstream>

namespace lilac::interp {

using namespace lilac::ir;

// ---- Memory ----------------------------------------------------------------

int Memory::alloc_ints(std::string label, std::vector<std::int64_t> data) {
    buffers_.push_back({std::move(label), ElemKind::I64, std::move(data), {}, 0});
    return static_cast<int>(buffers_.size()) - 1;
}

int Memory::alloc_floats(std::string label, std::vector<double> data) {
    buffers_.push_back({std::move(label), ElemKind::F64, {}, std::move(data), 0});
    return static_cast<int>(buffers_.size()) - 1;
}

int Memory::find(const std::string& label) const {
    for (size_t i = 0; i < buffers_.size(); ++i)
        if (buffers_[i].label == label) return static_cast<int>(i);
    return -1;
}

const Memory::Buffer& Memory::at(int b) const {
    if (b < 0 || b >= count()) throw Error(Errc::TypeTrap, "wild pointer: no buffer " + std::to_string(b));
    return buffers_[static_cast<size_t>(b)];
}

Memory::Buffer& Memory::at(int b) {
    return const_cast<Buffer&>(static_cast<const Memory*>(this)->at(b));
}

std::int64_t Memory::size(int b) const {
    const Buffer& buf = at(b);
    return static_cast<std::int64_t>(buf.kind == ElemKind::I64 ? buf.i.size() : buf.f.size());
}

namespace {

[[noreturn]] void oob(const std::string& label, std::int64_t offset, std::int64_t n) {
    std::ostringstream msg;
    msg << "access to " << label << "[" << offset << "] outside 0.." << n - 1;
    throw Error(Errc::OutOfBounds, msg.str());
}

} // namespace

std::int64_t Memory::load_int(const Pointer& p) const {
    const Buffer& buf = at(p.buffer);
    if (buf.kind != ElemKind::I64)
        throw Error(Errc::TypeTrap, "integer load from float buffer " + buf.label);
    if (p.offset < 0 || p.offset >= static_cast<std::int64_t>(buf.i.size()))
        oob(buf.label, p.offset, static_cast<std::int64_t>(buf.i.size()));
    return buf.i[static_cast<size_t>(p.offset)];
}

double Memory::load_float(const Pointer& p) const {
    const Buffer& buf = at(p.buffer);
    if (buf.kind != ElemKind::F64)
        throw Error(Errc::TypeTrap, "float load from integer buffer " + buf.label);
    if (p.offset < 0 || p.offset >= static_cast<std::int64_t>(buf.f.size()))
        oob(buf.label, p.offset, static_cast<std::int64_t>(buf.f.size()));
    return buf.f[static_cast<size_t>(p.offset)];
}

void Memory::store_int(const Pointer& p, std::int64_t v) {
    Buffer& buf = at(p.buffer);
    if (buf.kind != ElemKind::I64)
        throw Error(Errc::TypeTrap, "integer store to float buffer " + buf.label);
    if (p.offset < 0 || p.offset >= static_cast<std::int64_t>(buf.i.size()))
        oob(buf.label, p.offset, static_cast<std::int64_t>(buf.i.size()));
    buf.i[static_cast<size_t>(p.offset)] = v;
    ++buf.version;
}

void Memory::store_float(const Pointer& p, double v) {
    Buffer& buf = at(p.buffer);
    if (buf.kind != ElemKind::F64)
        throw Error(Errc::TypeTrap, "float store to integer buffer " + buf.label);
    if (p.offset < 0 || p.offset >= static_cast<std::int64_t>(buf.f.size()))
        oob(buf.label, p.offset, static_cast<std::int64_t>(buf.f.size()));
    buf.f[static_cast<size_t>(p.offset)] = v;
    ++buf.version;
}

const std::vector<std::int64_t>& Memory::ints(int b) const {
    const Buffer& buf = at(b);
    if (buf.kind != ElemKind::I64) throw Error(Errc::TypeTrap, buf.label + " is not an integer buffer");
    return buf.i;
}

const std::vector<double>& Memory::floats(int b) const {
    const Buffer& buf = at(b);
    if (buf.kind != ElemKind::F64) throw Error(Errc::TypeTrap, buf.label + " is not a float buffer");
    return buf.f;
}

// ---- HarnessRegistry -------------------------------------------------------

void HarnessRegistry::add(std::string name, HarnessFn fn) {
    if (fns_.count(name))
        throw Error(Errc::DuplicateRegistration, "harness '" + name + "' registered twice");
    fns_.emplace(std::move(name), std::move(fn));
}

const HarnessFn* HarnessRegistry::find(const std::string& name) const {
    auto it = fns_.find(name);
    return it == fns_.end() ? nullptr : &it->second;
}

std::vector<std::string> HarnessRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : fns_) out.push_back(name);
    return out;
}

// ---- execution -------------------------------------------------------------

namespace {

std::int64_t as_int(const Value& v, const char* what) {
    if (const auto* p = std::get_if<std::int64_t>(&v)) return *p;
    throw Error(Errc::TypeTrap, std::string(what) + " is not an integer");
}

double as_float(const Value& v, const char* what) {
    if (const auto* p = std::get_if<double>(&v)) return *p;
    throw Error(Errc::TypeTrap, std::string(what) + " is not a float");
}

Pointer as_ptr(const Value& v, const char* what) {
    if (const auto* p = std::get_if<Pointer>(&v)) return *p;
    throw Error(Errc::TypeTrap, std::string(what) + " is not a pointer");
}

std::int64_t wrap(std::int64_t x, std::int64_t y, Opcode op) {
    auto ux = static_cast<std::uint64_t>(x);
    auto uy = static_cast<std::uint64_t>(y);
    std::uint64_t r = op == Opcode::Add ? ux + uy : op == Opcode::Sub ? ux - uy : ux * uy;
    return static_cast<std::int64_t>(r);
}

class Machine {
public:
    Machine(const Module& m, Memory& mem, const HarnessRegistry& reg, std::int64_t step_limit)
        : m_(m), mem_(mem), reg_(reg), steps_left_(step_limit) {}

    Value call(const Function& f, const std::vector<Value>& args) {
        if (args.size() != f.params.size())
            throw Error(Errc::TypeTrap, "@" + f.name + " takes " + std::to_string(f.params.size()) +
                                            " arguments, got " + std::to_string(args.size()));
        std::map<std::string, Value> env;
        for (size_t i = 0; i < args.size(); ++i) {
            check_param(f.params[i], args[i]);
            env[f.params[i].name] = args[i];
        }

        const Block* block = &f.blocks.at(0);
        const Block* came_from = nullptr;
        for (;;) {
            // phis read their incomings simultaneously before any assignment
            std::vector<std::pair<std::string, Value>> phi_values;
            for (const Instr& in : block->instrs) {
                if (in.op != Opcode::Phi) break;
                tick(in);
                const Operand* chosen = nullptr;
                for (const PhiIncoming& inc : in.incomings)
                    if (came_from && inc.pred == came_from->name) chosen = &inc.value;
                if (!chosen)
                    throw Error(Errc::TypeTrap, "phi '%" + in.result + "' has no incoming for this edge");
                phi_values.emplace_back(in.result, eval(*chosen, env));
            }
            for (auto& [name, v] : phi_values) env[name] = std::move(v);

            for (const Instr& in : block->instrs) {
                if (in.op == Opcode::Phi) continue;
                tick(in);
                switch (in.op) {
                case Opcode::Add:
                case Opcode::Sub:
                case Opcode::Mul:
                    env[in.result] = wrap(as_int(eval(in.args[0], env), "operand"),
                                          as_int(eval(in.args[1], env), "operand"), in.op);
                    break;
                case Opcode::IcmpEq:
                case Opcode::IcmpNe:
                case Opcode::IcmpSlt:
                case Opcode::IcmpSle: {
                    std::int64_t x = as_int(eval(in.args[0], env), "compare operand");
                    std::int64_t y = as_int(eval(in.args[1], env), "compare operand");
                    bool r = in.op == Opcode::IcmpEq    ? x == y
                             : in.op == Opcode::IcmpNe  ? x != y
                             : in.op == Opcode::IcmpSlt ? x < y
                                                        : x <= y;
                    env[in.result] = static_cast<std::int64_t>(r);
                    break;
                }
                case Opcode::FAdd:
                    env[in.result] = as_float(eval(in.args[0], env), "operand") +
                                     as_float(eval(in.args[1], env), "operand");
                    break;
                case Opcode::FSub:
                    env[in.result] = as_float(eval(in.args[0], env), "operand") -
                                     as_float(eval(in.args[1], env), "operand");
                    break;
                case Opcode::FMul:
                    env[in.result] = as_float(eval(in.args[0], env), "operand") *
                                     as_float(eval(in.args[1], env), "operand");
                    break;
                case Opcode::ElemPtr: {
                    Pointer p = as_ptr(eval(in.args[0], env), "elemptr base");
                    p.offset += as_int(eval(in.args[1], env), "elemptr index");
                    env[in.result] = p;
                    break;
                }
                case Opcode::Load: {
                    Pointer p = as_ptr(eval(in.args[0], env), "load address");
                    if (mem_.kind(p.buffer) == ElemKind::I64)
                        env[in.result] = mem_.load_int(p);
                    else
                        env[in.result] = mem_.load_float(p);
                    break;
                }
                case Opcode::Store: {
                    Value v = eval(in.args[0], env);
                    Pointer p = as_ptr(eval(in.args[1], env), "store address");
                    if (mem_.kind(p.buffer) == ElemKind::I64)
                        mem_.store_int(p, as_int(v, "stored value"));
                    else
                        mem_.store_float(p, as_float(v, "stored value"));
                    break;
                }
                case Opcode::Call: {
                    std::vector<Value> callee_args;
                    callee_args.reserve(in.args.size());
                    for (const Operand& o : in.args) callee_args.push_back(eval(o, env));
                    Value r = dispatch(in.callee, callee_args);
                    if (in.has_result()) {
                        if (std::holds_alternative<std::monostate>(r))
                            throw Error(Errc::TypeTrap,
                                        "@" + in.callee + " returned nothing but a result is named");
                        env[in.result] = std::move(r);
                    }
                    break;
                }
                case Opcode::Br:
                    came_from = block;
                    block = f.find_block(in.targets[0]);
                    if (!block) throw Error(Errc::TypeTrap, "branch to missing block", in.loc);
                    goto next_block;
                case Opcode::CondBr: {
                    bool taken = as_int(eval(in.args[0], env), "branch condition") != 0;
                    came_from = block;
                    block = f.find_block(in.targets[taken ? 0 : 1]);
                    if (!block) throw Error(Errc::TypeTrap, "branch to missing block", in.loc);
                    goto next_block;
                }
                case Opcode::Ret:
                    if (in.args.empty()) return {};
                    return eval(in.args[0], env);
                case Opcode::Phi: break;  // unreachable
                }
            }
            throw Error(Errc::TypeTrap, "block fell through without a terminator");
        next_block:;
        }
    }

private:
    const Module& m_;
    Memory& mem_;
    const HarnessRegistry& reg_;
    std::int64_t steps_left_;

    void tick(const Instr& in) {
        if (--steps_left_ < 0)
            throw Error(Errc::StepLimitExceeded, "step limit exhausted", in.loc);
    }

    static void check_param(const FuncParam& p, const Value& v) {
        bool ok = false;
        switch (p.type) {
        case Type::I1:
        case Type::I64: ok = std::holds_alternative<std::int64_t>(v); break;
        case Type::F64: ok = std::holds_alternative<double>(v); break;
        case Type::PtrI64:
        case Type::PtrF64: ok = std::holds_alternative<Pointer>(v); break;
        case Type::Void: ok = false; break;
        }
        if (!ok)
            throw Error(Errc::TypeTrap,
                        "argument for %" + p.name + " does not match " + std::string(type_name(p.type)));
    }

    Value eval(const Operand& o, const std::map<std::string, Value>& env) {
        switch (o.kind) {
        case Operand::Kind::IntLit: return o.ival;
        case Operand::Kind::FloatLit: return o.fval;
        case Operand::Kind::Value: {
            auto it = env.find(o.name);
            if (it == env.end()) throw Error(Errc::TypeTrap, "value '%" + o.name + "' has no binding");
            return it->second;
        }
        }
        return {};
    }

    Value dispatch(const std::string& callee, const std::vector<Value>& args) {
        if (const Function* f = m_.find_function(callee)) return call(*f, args);
        if (const HarnessFn* fn = reg_.find(callee)) return (*fn)(mem_, args);
        throw Error(Errc::UnregisteredHarness, "no harness registered for @" + callee);
    }
};

} // namespace

Value run(const Module& m, const std::string& entry, const std::vector<Value>& args, Memory& mem,
          const HarnessRegistry& reg, std::int64_t step_limit) {
    const Function* f = m.find_function(entry);
    if (!f) throw Error(Errc::DataError, "module has no function @" + entry);
    Machine machine(m, mem, reg, step_limit);
    return machine.call(*f, args);
}

// ---- reference harnesses ---------------------------------------------------

void register_reference_harnesses(HarnessRegistry& reg, const std::vector<what::WhatProgram>& whats) {
    for (const what::WhatProgram& w : whats) {
        // the closure outlives the caller's programs: keep a private copy
        auto prog = std::make_shared<what::WhatProgram>(what::parse_what(what::print_what(w)));
        auto sig = std::make_shared<what::HarnessSignature>(what::infer_interface(*prog));
        std::string scalar_name = sig->scalar_result ? prog->dot.target->name : "";

        reg.add("lilac." + w.name, [prog, sig, scalar_name](Memory& mem,
                                                            const std::vector<Value>& args) -> Value {
            what::Bindings b;
            std::vector<std::pair<std::string, Pointer>> write_back;
            size_t ai = 0;
            for (const what::Param& p : sig->params) {
                if (p.name == scalar_name) {
                    b.float_arrays[p.name] = {0.0};  // synthesized result slot
                    continue;
                }
                if (ai >= args.size())
                    throw Error(Errc::TypeTrap, "harness call is missing an argument for " + p.name);
                const Value& v = args[ai++];
                switch (p.kind) {
                case what::ParamKind::ScalarInt:
                    b.scalars[p.name] = as_int(v, p.name.c_str());
                    break;
                case what::ParamKind::ArrayInt: {
                    Pointer ptr = as_ptr(v, p.name.c_str());
                    const auto& all = mem.ints(ptr.buffer);
                    if (ptr.offset < 0 || ptr.offset > static_cast<std::int64_t>(all.size()))
                        oob(p.name, ptr.offset, static_cast<std::int64_t>(all.size()));
                    b.int_arrays[p.name].assign(all.begin() + ptr.offset, all.end());
                    break;
                }
                case what::ParamKind::ArrayFloatIn:
                case what::ParamKind::ArrayFloatOut: {
                    Pointer ptr = as_ptr(v, p.name.c_str());
                    const auto& all = mem.floats(ptr.buffer);
                    if (ptr.offset < 0 || ptr.offset > static_cast<std::int64_t>(all.size()))
                        oob(p.name, ptr.offset, static_cast<std::int64_t>(all.size()));
                    b.float_arrays[p.name].assign(all.begin() + ptr.offset, all.end());
                    if (p.kind == what::ParamKind::ArrayFloatOut) write_back.emplace_back(p.name, ptr);
                    break;
                }
                }
            }
            if (ai != args.size())
                throw Error(Errc::TypeTrap, "harness call passes " + std::to_string(args.size()) +
                                                " arguments, expected " + std::to_string(ai));

            what::Bindings out = what::interpret_what(*prog, std::move(b));

            for (const auto& [name, ptr] : write_back) {
                const std::vector<double>& vals = out.float_arrays.at(name);
                for (size_t i = 0; i < vals.size(); ++i)
                    mem.store_float({ptr.buffer, ptr.offset + static_cast<std::int64_t>(i)}, vals[i]);
            }
            if (!scalar_name.empty()) return out.float_arrays.at(scalar_name).at(0);
            return {};
        });
    }
}

} // namespace lilac::interp
