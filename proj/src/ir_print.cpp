#include "lilac/ir.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace lilac::ir {

const char* type_name(Type t) {
    switch (t) {
    case Type::Void: return "void";
    case Type::I1: return "i1";
    case Type::I64: return "i64";
    case Type::F64: return "f64";
    case Type::PtrI64: return "ptr i64";
    case Type::PtrF64: return "ptr f64";
    }
    return "?";
}

const char* opcode_name(Opcode op) {
    switch (op) {
    case Opcode::Add: return "add";
    case Opcode::Sub: return "sub";
    case Opcode::Mul: return "mul";
    case Opcode::IcmpEq: return "icmp.eq";
    case Opcode::IcmpNe: return "icmp.ne";
    case Opcode::IcmpSlt: return "icmp.slt";
    case Opcode::IcmpSle: return "icmp.sle";
    case Opcode::FAdd: return "fadd";
    case Opcode::FSub: return "fsub";
    case Opcode::FMul: return "fmul";
    case Opcode::ElemPtr: return "elemptr";
    case Opcode::Load: return "load";
    case Opcode::Store: return "store";
    case Opcode::Phi: return "phi";
    case Opcode::Br: return "br";
    case Opcode::CondBr: return "condbr";
    case Opcode::Call: return "call";
    case Opcode::Ret: return "ret";
    }
    return "?";
}

bool is_terminator(Opcode op) {
    return op == Opcode::Br || op == Opcode::CondBr || op == Opcode::Ret;
}

std::string format_f64(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = std::strtod(buf, nullptr);
        if (std::memcmp(&back, &v, sizeof v) == 0) break;
    }
    std::string s = buf;
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

std::string print_operand(const Operand& o) {
    switch (o.kind) {
    case Operand::Kind::Value: return "%" + o.name;
    case Operand::Kind::IntLit: return std::to_string(o.ival);
    case Operand::Kind::FloatLit: return format_f64(o.fval);
    }
    return "?";
}

bool operand_equal(const Operand& a, const Operand& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Operand::Kind::Value: return a.name == b.name;
    case Operand::Kind::IntLit: return a.ival == b.ival;
    case Operand::Kind::FloatLit: return std::memcmp(&a.fval, &b.fval, sizeof a.fval) == 0;
    }
    return false;
}

std::string print_instr(const Instr& in) {
    std::ostringstream os;
    if (in.has_result()) os << "%" << in.result << " = ";
    os << opcode_name(in.op);
    switch (in.op) {
    case Opcode::Phi: {
        bool first = true;
        for (const PhiIncoming& inc : in.incomings) {
            os << (first ? " " : ", ") << "[" << print_operand(inc.value) << ", " << inc.pred << "]";
            first = false;
        }
        break;
    }
    case Opcode::Br:
        os << " " << in.targets.at(0);
        break;
    case Opcode::CondBr:
        os << " " << print_operand(in.args.at(0)) << ", " << in.targets.at(0) << ", " << in.targets.at(1);
        break;
    case Opcode::Call: {
        os << " @" << in.callee << "(";
        for (size_t i = 0; i < in.args.size(); ++i) {
            if (i) os << ", ";
            os << print_operand(in.args[i]);
        }
        os << ")";
        break;
    }
    default: {
        for (size_t i = 0; i < in.args.size(); ++i) {
            os << (i ? ", " : " ") << print_operand(in.args[i]);
        }
        break;
    }
    }
    return os.str();
}

std::string print_function(const Function& f) {
    std::ostringstream os;
    os << "func @" << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
        if (i) os << ", ";
        os << "%" << f.params[i].name << ": " << type_name(f.params[i].type);
    }
    os << ") -> " << type_name(f.ret) << " {\n";
    for (const Block& b : f.blocks) {
        os << b.name << ":\n";
        for (const Instr& in : b.instrs) os << "  " << print_instr(in) << "\n";
    }
    os << "}\n";
    return os.str();
}

std::string print_module(const Module& m) {
    std::ostringstream os;
    for (size_t i = 0; i < m.functions.size(); ++i) {
        if (i) os << "\n";
        os << print_function(m.functions[i]);
    }
    return os.str();
}

bool module_equal(const Module& a, const Module& b) {
    // print is canonical and total, so structural equality is text equality
    return print_module(a) == print_module(b);
}

} // namespace lilac::ir
