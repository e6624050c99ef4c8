#pragma once

// LLVM-flavored textual SSA IR: single integer and float width, one-level
// pointers, explicit blocks with named labels. Modules are value types;
// transformations copy and rebuild rather than mutate in place.

#include "lilac/diag.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lilac::ir {

enum class Type { Void, I1, I64, F64, PtrI64, PtrF64 };

constexpr bool is_ptr(Type t) { return t == Type::PtrI64 || t == Type::PtrF64; }
constexpr Type pointee(Type t) { return t == Type::PtrI64 ? Type::I64 : Type::F64; }
constexpr Type pointer_to(Type t) { return t == Type::I64 ? Type::PtrI64 : Type::PtrF64; }
const char* type_name(Type t);

enum class Opcode {
    Add, Sub, Mul,
    IcmpEq, IcmpNe, IcmpSlt, IcmpSle,
    FAdd, FSub, FMul,
    ElemPtr, Load, Store,
    Phi, Br, CondBr, Call, Ret,
};

const char* opcode_name(Opcode op);
bool is_terminator(Opcode op);

struct Operand {
    enum class Kind { Value, IntLit, FloatLit };
    Kind kind = Kind::Value;
    std::string name;        // Value
    std::int64_t ival = 0;   // IntLit
    double fval = 0.0;       // FloatLit

    static Operand value(std::string n);
    static Operand int_lit(std::int64_t v);
    static Operand float_lit(double v);

    bool is_value() const { return kind == Kind::Value; }
};

bool operand_equal(const Operand& a, const Operand& b);  // floats compared bitwise
std::string print_operand(const Operand& o);

struct PhiIncoming {
    Operand value;
    std::string pred;  // block label
};

struct Instr {
    Opcode op = Opcode::Ret;
    std::string result;                   // empty when the op produces nothing
    std::vector<Operand> args;            // value operands, opcode-specific order
    std::vector<PhiIncoming> incomings;   // phi only
    std::string callee;                   // call only
    std::vector<std::string> targets;     // br: {dest}; condbr: {then, else}
    SourceLoc loc;

    bool has_result() const { return !result.empty(); }
};

struct Block {
    std::string name;
    std::vector<Instr> instrs;
    SourceLoc loc;

    const Instr* terminator() const {
        return instrs.empty() || !is_terminator(instrs.back().op) ? nullptr : &instrs.back();
    }
};

struct FuncParam {
    std::string name;
    Type type = Type::I64;
};

struct Function {
    std::string name;
    std::vector<FuncParam> params;
    Type ret = Type::Void;
    std::vector<Block> blocks;  // first block is the entry

    Block* find_block(std::string_view label);
    const Block* find_block(std::string_view label) const;
    const FuncParam* find_param(std::string_view name) const;
};

struct Module {
    std::vector<Function> functions;

    Function* find_function(std::string_view name);
    const Function* find_function(std::string_view name) const;
};

// Errors: SyntaxError, UnknownOpcode, TypeAnnotationMismatch, all with
// line/column.
Module parse_module(std::string_view text);

// Canonical form; block and instruction order is authoritative, names are kept
// verbatim. parse(print(m)) is structurally identical to m.
std::string print_module(const Module& m);
std::string print_function(const Function& f);
std::string print_instr(const Instr& in);

// Shortest decimal form that scans back to the same bits; always contains a
// '.' or exponent so it re-lexes as a float.
std::string format_f64(double v);

bool module_equal(const Module& a, const Module& b);

// Structural and type checks; empty result means the module is well-formed.
// Diagnostic codes: DuplicateFunction, DuplicateBlock, DuplicateValue,
// EmptyFunction, MissingTerminator, MisplacedTerminator, PhiNotAtTop,
// PhiCoverage, UnknownBlock, UnknownValue, DominanceViolation,
// UnreachableBlock, TypeMismatch, UntypedValue, ReturnTypeMismatch, CallArity.
Diagnostics verify(const Module& m);

// Value name -> type for one function, params included. External calls with a
// result are typed f64 by convention (the scalar-result protocol of harness
// calls). Inference problems are appended to diags.
std::map<std::string, Type> infer_value_types(const Function& f, const Module& m, Diagnostics& diags);

} // namespace lilac::ir
