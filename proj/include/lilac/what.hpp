#pragma once

#include "lilac/diag.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lilac::what {

// Expression tree of the computation language. Addresses are expression nodes
// too: a scalar address has no index, an array address has exactly one.
// Deeper index chains are recognized by the parser and rejected.
enum class ExprKind { Name, Const, Addr, Add, Mul };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    ExprKind kind;
    std::string name;  // Name / Addr base
    std::int64_t value = 0;
    ExprPtr a, b;      // Add/Mul children; Addr index lives in `a` (may be null)
    int node_id = -1;  // source-order index, assigned after parse
    SourceLoc loc;

    bool is_scalar_addr() const { return kind == ExprKind::Addr && !a; }
};

ExprPtr make_name(std::string name, SourceLoc loc = {});
ExprPtr make_const(std::int64_t v, SourceLoc loc = {});
ExprPtr make_addr(std::string base, ExprPtr index, SourceLoc loc = {});  // null index = scalar
ExprPtr make_binary(ExprKind kind, ExprPtr a, ExprPtr b, SourceLoc loc = {});

ExprPtr clone(const Expr& e);
bool expr_equal(const Expr& x, const Expr& y);
std::string print_expr(const Expr& e);

// lower <= iterator < upper, unit stride
struct Range {
    ExprPtr lower;
    std::string iterator;
    ExprPtr upper;
    SourceLoc loc;
};

struct DotOp {
    ExprPtr target;  // Addr, scalar or single-index
    Range range;
    ExprPtr lhs;     // Addr, single-index
    ExprPtr rhs;     // Addr, single-index
};

// The body is a linear chain: zero or more forall wrappers around one dot.
struct WhatProgram {
    std::string name;
    std::vector<Range> foralls;  // outermost first
    DotOp dot;

    // Node table in source order; node_label is the printed subexpression for
    // traces and diagnostics.
    std::vector<const Expr*> nodes;
    const Expr* node(int id) const { return nodes.at(static_cast<size_t>(id)); }
    std::string node_label(int id) const;
};

WhatProgram parse_what(std::string_view text);
std::string print_what(const WhatProgram& p);
bool program_equal(const WhatProgram& x, const WhatProgram& y);

// Rebuilds the node table; parse_what does this automatically, call it after
// constructing a program by hand.
void assign_node_ids(WhatProgram& p);

enum class ParamKind { ScalarInt, ArrayInt, ArrayFloatIn, ArrayFloatOut };
const char* param_kind_name(ParamKind k);

struct Param {
    std::string name;
    ParamKind kind;
};

// Free variables in first-lexical-appearance order; this is the harness
// calling convention for the computation.
struct HarnessSignature {
    std::vector<Param> params;
    bool scalar_result = false;  // target is a bare name, passed as a length-1 array

    const Param* find(const std::string& name) const;
};

HarnessSignature infer_interface(const WhatProgram& p);

struct Bindings {
    std::map<std::string, std::int64_t> scalars;
    std::map<std::string, std::vector<std::int64_t>> int_arrays;
    std::map<std::string, std::vector<double>> float_arrays;
};

// Reference semantics: lexicographic iteration, left-to-right accumulation
// from an exact 0.0. Only target arrays are modified.
Bindings interpret_what(const WhatProgram& p, Bindings env);

} // namespace lilac::what
