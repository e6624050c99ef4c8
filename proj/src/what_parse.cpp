#include "lilac/what.hpp"

#include "speclex.hpp"

#include <cassert>
#include <map>
#include <set>
#include <sstream>

namespace lilac::what {

using speclex::Lexer;
using speclex::Token;

ExprPtr make_name(std::string name, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Name;
    e->name = std::move(name);
    e->loc = loc;
    return e;
}

ExprPtr make_const(std::int64_t v, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Const;
    e->value = v;
    e->loc = loc;
    return e;
}

ExprPtr make_addr(std::string base, ExprPtr index, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Addr;
    e->name = std::move(base);
    e->a = std::move(index);
    e->loc = loc;
    return e;
}

ExprPtr make_binary(ExprKind kind, ExprPtr a, ExprPtr b, SourceLoc loc) {
    assert(kind == ExprKind::Add || kind == ExprKind::Mul);
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->a = std::move(a);
    e->b = std::move(b);
    e->loc = loc;
    return e;
}

ExprPtr clone(const Expr& e) {
    auto out = std::make_unique<Expr>();
    out->kind = e.kind;
    out->name = e.name;
    out->value = e.value;
    out->loc = e.loc;
    if (e.a) out->a = clone(*e.a);
    if (e.b) out->b = clone(*e.b);
    return out;
}

bool expr_equal(const Expr& x, const Expr& y) {
    if (x.kind != y.kind) return false;
    switch (x.kind) {
    case ExprKind::Name: return x.name == y.name;
    case ExprKind::Const: return x.value == y.value;
    case ExprKind::Addr:
        if (x.name != y.name) return false;
        if (!x.a != !y.a) return false;
        return !x.a || expr_equal(*x.a, *y.a);
    case ExprKind::Add:
    case ExprKind::Mul:
        return expr_equal(*x.a, *y.a) && expr_equal(*x.b, *y.b);
    }
    return false;
}

std::string print_expr(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Name: return e.name;
    case ExprKind::Const: return std::to_string(e.value);
    case ExprKind::Addr:
        if (!e.a) return e.name;
        return e.name + "[" + print_expr(*e.a) + "]";
    case ExprKind::Add: return print_expr(*e.a) + " + " + print_expr(*e.b);
    case ExprKind::Mul:
        // The expression grammar has no parentheses, so a sum can never sit
        // under a product; the parser cannot build such trees.
        assert(e.a->kind != ExprKind::Add && e.b->kind != ExprKind::Add);
        return print_expr(*e.a) + " * " + print_expr(*e.b);
    }
    return "?";
}

namespace {

class WhatParser {
public:
    explicit WhatParser(Lexer& lex) : lex_(lex) {}

    // expect_end rejects trailing input; spec files parsing several
    // constructs from one lexer pass false and continue after the body
    WhatProgram parse(bool expect_end) {
        expect_keyword("COMPUTATION");
        WhatProgram p;
        p.name = expect_ident("computation name");
        parse_body(p);
        if (expect_end && !lex_.at_end()) lex_.fail("trailing input after computation body");
        return p;
    }

private:
    Lexer& lex_;
    std::set<std::string> iterators_;

    void expect_keyword(std::string_view kw) {
        Token t = lex_.next();
        if (!t.is_ident(kw))
            throw Error(Errc::SyntaxError, "expected '" + std::string(kw) + "'", t.loc);
    }

    std::string expect_ident(const char* what) {
        Token t = lex_.next();
        if (t.kind != Token::Kind::Ident)
            throw Error(Errc::SyntaxError, std::string("expected ") + what, t.loc);
        return t.text;
    }

    void expect_punct(std::string_view p) {
        Token t = lex_.next();
        if (!t.is_punct(p))
            throw Error(Errc::SyntaxError, "expected '" + std::string(p) + "'", t.loc);
    }

    // body ::= forall | dotp
    void parse_body(WhatProgram& p) {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::End)
            throw Error(Errc::EmptyBody, "computation has no body", t.loc);
        if (t.is_ident("forall")) {
            lex_.next();
            Range r = parse_range();
            push_iterator(r);
            expect_punct("{");
            if (lex_.peek().is_punct("}"))
                throw Error(Errc::EmptyBody, "forall body is empty", lex_.peek().loc);
            p.foralls.push_back(std::move(r));
            parse_body(p);
            expect_punct("}");
            return;
        }
        p.dot = parse_dotp();
    }

    // range ::= "(" exp "<=" name "<" exp ")"
    Range parse_range() {
        Range r;
        r.loc = lex_.here();
        expect_punct("(");
        r.lower = parse_exp();
        expect_punct("<=");
        Token it = lex_.next();
        if (it.kind != Token::Kind::Ident)
            throw Error(Errc::SyntaxError, "expected iterator name", it.loc);
        r.iterator = it.text;
        expect_punct("<");
        r.upper = parse_exp();
        expect_punct(")");
        check_bound(*r.lower, r);
        check_bound(*r.upper, r);
        return r;
    }

    void push_iterator(const Range& r) {
        if (!iterators_.insert(r.iterator).second)
            throw Error(Errc::DuplicateIterator,
                        "iterator '" + r.iterator + "' shadows an enclosing one", r.loc);
    }

    void check_bound(const Expr& e, const Range& r) {
        if (e.kind == ExprKind::Name && e.name == r.iterator)
            throw Error(Errc::SyntaxError, "range bound refers to the iterator it defines", e.loc);
        if (e.a) check_bound(*e.a, r);
        if (e.b) check_bound(*e.b, r);
    }

    // dotp ::= addr "=" ("dot"|"sum") range addr "*" addr ";"
    DotOp parse_dotp() {
        DotOp d;
        d.target = parse_addr();
        expect_punct("=");
        Token kw = lex_.next();
        if (!kw.is_ident("dot") && !kw.is_ident("sum"))
            throw Error(Errc::SyntaxError, "expected 'dot' or 'sum'", kw.loc);
        d.range = parse_range();
        push_iterator(d.range);
        d.lhs = parse_operand();
        expect_punct("*");
        d.rhs = parse_operand();
        expect_punct(";");
        return d;
    }

    ExprPtr parse_operand() {
        ExprPtr e = parse_addr();
        if (!e->a)
            throw Error(Errc::SyntaxError, "dot operand must index an array", e->loc);
        return e;
    }

    // addr ::= name { "[" exp "]" }   -- at most one subscript in this version
    ExprPtr parse_addr() {
        Token base = lex_.next();
        if (base.kind != Token::Kind::Ident)
            throw Error(Errc::SyntaxError, "expected array or scalar name", base.loc);
        ExprPtr index;
        int count = 0;
        while (lex_.peek().is_punct("[")) {
            lex_.next();
            ExprPtr e = parse_exp();
            expect_punct("]");
            if (++count > 1)
                throw Error(Errc::MultiIndexUnsupported,
                            "'" + base.text + "' uses more than one subscript; flatten the index instead",
                            base.loc);
            index = std::move(e);
        }
        return make_addr(base.text, std::move(index), base.loc);
    }

    // exp ::= term { "+" term } ; term ::= factor { "*" factor }
    ExprPtr parse_exp() {
        ExprPtr e = parse_term();
        while (lex_.peek().is_punct("+")) {
            SourceLoc loc = lex_.next().loc;
            e = make_binary(ExprKind::Add, std::move(e), parse_term(), loc);
        }
        return e;
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        while (lex_.peek().is_punct("*")) {
            SourceLoc loc = lex_.next().loc;
            e = make_binary(ExprKind::Mul, std::move(e), parse_factor(), loc);
        }
        return e;
    }

    ExprPtr parse_factor() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Int) {
            Token c = lex_.next();
            return make_const(c.ival, c.loc);
        }
        if (t.kind != Token::Kind::Ident)
            throw Error(Errc::SyntaxError, "expected name, literal or subscripted array", t.loc);
        ExprPtr a = parse_addr();
        if (!a->a) a->kind = ExprKind::Name;  // plain name, not a subscript
        return a;
    }
};

void number_expr(WhatProgram& p, Expr* e) {
    if (!e) return;
    e->node_id = static_cast<int>(p.nodes.size());
    p.nodes.push_back(e);
    number_expr(p, e->a.get());
    number_expr(p, e->b.get());
}

} // namespace

// Nodes are numbered in source order: each forall contributes its bounds,
// then the dot contributes target, range bounds, lhs, rhs.
void assign_node_ids(WhatProgram& p) {
    p.nodes.clear();
    for (auto& f : p.foralls) {
        number_expr(p, f.lower.get());
        number_expr(p, f.upper.get());
    }
    number_expr(p, p.dot.target.get());
    number_expr(p, p.dot.range.lower.get());
    number_expr(p, p.dot.range.upper.get());
    number_expr(p, p.dot.lhs.get());
    number_expr(p, p.dot.rhs.get());
}

WhatProgram parse_what(std::string_view text) {
    Lexer lex(text);
    WhatParser parser(lex);
    WhatProgram p = parser.parse(true);
    assign_node_ids(p);
    return p;
}

WhatProgram parse_one_computation(speclex::Lexer& lex) {
    WhatParser parser(lex);
    WhatProgram p = parser.parse(false);
    assign_node_ids(p);
    return p;
}

std::string WhatProgram::node_label(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes.size())) return "<node " + std::to_string(id) + ">";
    return print_expr(*nodes[static_cast<size_t>(id)]);
}

static void print_range(std::ostream& os, const Range& r) {
    os << "(" << print_expr(*r.lower) << " <= " << r.iterator << " < " << print_expr(*r.upper) << ")";
}

std::string print_what(const WhatProgram& p) {
    std::ostringstream os;
    os << "COMPUTATION " << p.name << "\n";
    std::string indent;
    for (const Range& f : p.foralls) {
        os << indent << "forall ";
        print_range(os, f);
        os << " {\n";
        indent += "    ";
    }
    os << indent << print_expr(*p.dot.target) << " = dot ";
    print_range(os, p.dot.range);
    os << " " << print_expr(*p.dot.lhs) << " * " << print_expr(*p.dot.rhs) << ";\n";
    for (size_t i = p.foralls.size(); i > 0; --i) {
        indent.resize(indent.size() - 4);
        os << indent << "}\n";
    }
    return os.str();
}

static bool range_equal(const Range& x, const Range& y) {
    return x.iterator == y.iterator && expr_equal(*x.lower, *y.lower) && expr_equal(*x.upper, *y.upper);
}

bool program_equal(const WhatProgram& x, const WhatProgram& y) {
    if (x.name != y.name || x.foralls.size() != y.foralls.size()) return false;
    for (size_t i = 0; i < x.foralls.size(); ++i)
        if (!range_equal(x.foralls[i], y.foralls[i])) return false;
    return expr_equal(*x.dot.target, *y.dot.target) && range_equal(x.dot.range, y.dot.range) &&
           expr_equal(*x.dot.lhs, *y.dot.lhs) && expr_equal(*x.dot.rhs, *y.dot.rhs);
}

const char* param_kind_name(ParamKind k) {
    switch (k) {
    case ParamKind::ScalarInt: return "scalar-int";
    case ParamKind::ArrayInt: return "array-int";
    case ParamKind::ArrayFloatIn: return "array-float-in";
    case ParamKind::ArrayFloatOut: return "array-float-out";
    }
    return "?";
}

namespace {

class InterfaceBuilder {
public:
    explicit InterfaceBuilder(const WhatProgram& p) : p_(p) {}

    HarnessSignature build() {
        // Bounds are walked with only the enclosing iterators in scope, the
        // same way the interpreter binds them.
        for (const Range& f : p_.foralls) {
            index_expr(*f.lower);
            index_expr(*f.upper);
            iterators_.insert(f.iterator);
        }
        const Expr& target = *p_.dot.target;
        assign(target.name, ParamKind::ArrayFloatOut, target.loc);
        if (target.a) index_expr(*target.a);
        index_expr(*p_.dot.range.lower);
        index_expr(*p_.dot.range.upper);
        iterators_.insert(p_.dot.range.iterator);
        value_addr(*p_.dot.lhs);
        value_addr(*p_.dot.rhs);

        HarnessSignature sig;
        sig.scalar_result = target.is_scalar_addr();
        for (const std::string& name : order_)
            sig.params.push_back({name, kinds_.at(name)});
        return sig;
    }

private:
    const WhatProgram& p_;
    std::set<std::string> iterators_;
    std::map<std::string, ParamKind> kinds_;
    std::vector<std::string> order_;

    void assign(const std::string& name, ParamKind kind, SourceLoc loc) {
        auto [it, inserted] = kinds_.emplace(name, kind);
        if (inserted) {
            order_.push_back(name);
        } else if (it->second != kind) {
            throw Error(Errc::KindConflict,
                        "'" + name + "' is used both as " + param_kind_name(it->second) + " and as " +
                            param_kind_name(kind),
                        loc);
        }
    }

    void value_addr(const Expr& e) {
        assign(e.name, ParamKind::ArrayFloatIn, e.loc);
        if (e.a) index_expr(*e.a);
    }

    // Everything inside a subscript or bound computes an integer.
    void index_expr(const Expr& e) {
        switch (e.kind) {
        case ExprKind::Name:
            if (!iterators_.count(e.name)) assign(e.name, ParamKind::ScalarInt, e.loc);
            return;
        case ExprKind::Const: return;
        case ExprKind::Addr:
            assign(e.name, ParamKind::ArrayInt, e.loc);
            if (e.a) index_expr(*e.a);
            return;
        case ExprKind::Add:
        case ExprKind::Mul:
            index_expr(*e.a);
            index_expr(*e.b);
            return;
        }
    }
};

} // namespace

HarnessSignature infer_interface(const WhatProgram& p) { return InterfaceBuilder(p).build(); }

const Param* HarnessSignature::find(const std::string& name) const {
    for (const Param& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

} // namespace lilac::what
