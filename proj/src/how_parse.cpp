#include "lilac/how.hpp"

#include "speclex.hpp"
#include "what_internal.hpp"

#include <set>
#include <sstream>

namespace lilac::how {

using speclex::Lexer;
using speclex::Token;

const char* marshal_kind_name(MarshalKind k) {
    return k == MarshalKind::Input ? "INPUT" : "OUTPUT";
}

namespace {

bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Joins raw tokens back into a type or header string. A space is only needed
// where two word tokens would otherwise fuse, so `DeviceArray < int >` comes
// back as "DeviceArray<int>" but `unsigned long` keeps its space.
std::string join_tokens(const std::vector<Token>& toks) {
    std::string out;
    for (const Token& t : toks) {
        if (!out.empty() && word_char(out.back()) && !t.text.empty() && word_char(t.text.front()))
            out.push_back(' ');
        out += t.text;
    }
    return out;
}

class HowParser {
public:
    explicit HowParser(Lexer& lex) : lex_(lex) {}

    void parse_into(SpecFile& sf) {
        while (!lex_.at_end()) {
            const Token& t = lex_.peek();
            if (t.is_ident("COMPUTATION")) {
                sf.whats.push_back(what::parse_one_computation(lex_));
            } else if (t.is_ident("HARNESS")) {
                sf.how.harnesses.push_back(parse_harness());
            } else if (t.is_ident("INPUT") || t.is_ident("OUTPUT")) {
                sf.how.marshal_classes.push_back(parse_class());
            } else {
                fail_at(t, "expected COMPUTATION, HARNESS, INPUT, or OUTPUT at top level");
            }
        }
    }

private:
    Lexer& lex_;

    [[noreturn]] void fail_at(const Token& t, const std::string& msg, Errc code = Errc::SyntaxError) {
        throw Error(code, msg, t.loc);
    }

    std::string expect_ident(const char* what) {
        Token t = lex_.next();
        if (t.kind != Token::Kind::Ident) fail_at(t, std::string("expected ") + what);
        return t.text;
    }

    void expect_punct(const char* p) {
        Token t = lex_.next();
        if (!t.is_punct(p)) fail_at(t, std::string("expected '") + p + "'");
    }

    // Gathers tokens up to `stop` (consumed). Structural punctuation other
    // than `stop` means the entry went off the rails, so fail there rather
    // than swallow the rest of the section.
    std::vector<Token> collect_until(const char* stop, const char* what) {
        std::vector<Token> toks;
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Token::Kind::End)
                lex_.fail(std::string("unterminated ") + what + ", expected '" + stop + "'");
            if (t.is_punct(stop)) break;
            if (t.is_punct("{") || t.is_punct("}") || t.is_punct(";") || t.is_punct("="))
                fail_at(t, std::string("expected '") + stop + "' in " + what);
            toks.push_back(lex_.next());
        }
        lex_.next();
        return toks;
    }

    MarshalClassDef parse_class() {
        Token kw = lex_.next();
        MarshalClassDef c;
        c.loc = kw.loc;
        c.kind = kw.is_ident("INPUT") ? MarshalKind::Input : MarshalKind::Output;
        c.name = expect_ident("marshal class name");
        c.update_code = lex_.capture_block();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.is_ident("BeforeFirstExecution")) {
                if (c.construct_code) fail_at(t, "duplicate BeforeFirstExecution section");
                lex_.next();
                c.construct_code = lex_.capture_block();
            } else if (t.is_ident("AfterLastExecution")) {
                if (c.destruct_code) fail_at(t, "duplicate AfterLastExecution section");
                lex_.next();
                c.destruct_code = lex_.capture_block();
            } else {
                break;
            }
        }
        return c;
    }

    Harness parse_harness() {
        Token kw = lex_.next();
        Harness h;
        h.loc = kw.loc;
        h.name = expect_ident("harness name");
        Token imp = lex_.next();
        if (!imp.is_ident("IMPLEMENTS")) fail_at(imp, "expected IMPLEMENTS after harness name");
        h.implements = expect_ident("computation name");
        h.code = lex_.capture_block();
        // Optional sections may come in any order, each at most once.
        bool seen_marshal = false, seen_persist = false, seen_headers = false;
        for (;;) {
            const Token& t = lex_.peek();
            if (t.is_ident("Marshaling")) {
                if (seen_marshal) fail_at(t, "duplicate Marshaling section");
                seen_marshal = true;
                lex_.next();
                parse_marshaling(h);
            } else if (t.is_ident("PersistentVariables")) {
                if (seen_persist) fail_at(t, "duplicate PersistentVariables section");
                seen_persist = true;
                lex_.next();
                parse_persistent(h);
            } else if (t.is_ident("BeforeFirstExecution")) {
                if (h.before_first) fail_at(t, "duplicate BeforeFirstExecution section");
                lex_.next();
                h.before_first = lex_.capture_block();
            } else if (t.is_ident("AfterLastExecution")) {
                if (h.after_last) fail_at(t, "duplicate AfterLastExecution section");
                lex_.next();
                h.after_last = lex_.capture_block();
            } else if (t.is_ident("CppHeaderFiles")) {
                if (seen_headers) fail_at(t, "duplicate CppHeaderFiles section");
                seen_headers = true;
                lex_.next();
                parse_headers(h);
            } else {
                break;
            }
        }
        return h;
    }

    void parse_marshaling(Harness& h) {
        expect_punct("{");
        while (!lex_.peek().is_punct("}")) {
            h.bindings.push_back(parse_binding());
        }
        lex_.next();
    }

    MarshalBinding parse_binding() {
        MarshalBinding b;
        b.loc = lex_.peek().loc;
        std::vector<Token> decl = collect_until("=", "marshal binding");
        if (decl.empty() || decl.back().kind != Token::Kind::Ident)
            throw Error(Errc::SyntaxError, "marshal binding needs '<type> <name>' before '='", b.loc);
        b.out_name = decl.back().text;
        decl.pop_back();
        if (decl.empty())
            throw Error(Errc::SyntaxError, "marshal binding '" + b.out_name + "' is missing an output type", b.loc);
        b.out_type = join_tokens(decl);
        b.class_name = expect_ident("marshal class name");
        Token of = lex_.next();
        if (!of.is_ident("of")) fail_at(of, "expected 'of' in marshal binding");
        b.array_name = expect_ident("array name");
        expect_punct("[");
        Token zero = lex_.next();
        if (zero.kind != Token::Kind::Int || zero.ival != 0) fail_at(zero, "marshal extents start at 0");
        expect_punct("..");
        b.extent = parse_extent();
        expect_punct("]");
        expect_punct(";");
        return b;
    }

    void parse_persistent(Harness& h) {
        expect_punct("{");
        std::set<std::string> names;
        while (!lex_.peek().is_punct("}")) {
            SourceLoc loc = lex_.peek().loc;
            std::vector<Token> decl = collect_until(";", "persistent variable declaration");
            if (decl.empty() || decl.back().kind != Token::Kind::Ident)
                throw Error(Errc::SyntaxError, "persistent variable declaration needs '<type> <name>;'", loc);
            PersistentVar v;
            v.loc = loc;
            v.name = decl.back().text;
            decl.pop_back();
            if (decl.empty())
                throw Error(Errc::SyntaxError, "persistent variable '" + v.name + "' is missing a type", loc);
            v.type = join_tokens(decl);
            if (!names.insert(v.name).second)
                throw Error(Errc::SyntaxError, "duplicate persistent variable '" + v.name + "'", loc);
            h.persistent_vars.push_back(std::move(v));
        }
        lex_.next();
    }

    void parse_headers(Harness& h) {
        expect_punct("{");
        while (!lex_.peek().is_punct("}")) {
            SourceLoc loc = lex_.peek().loc;
            std::vector<Token> toks = collect_until(";", "header file entry");
            if (toks.empty()) throw Error(Errc::SyntaxError, "empty header file entry", loc);
            h.headers.push_back(join_tokens(toks));
        }
        lex_.next();
    }

    // Extents reuse the What expression grammar restricted to names,
    // constants, '+' and '*'; same precedence, no parentheses.
    what::ExprPtr parse_extent() {
        what::ExprPtr e = parse_extent_term();
        while (lex_.peek().is_punct("+")) {
            SourceLoc loc = lex_.next().loc;
            e = what::make_binary(what::ExprKind::Add, std::move(e), parse_extent_term(), loc);
        }
        return e;
    }

    what::ExprPtr parse_extent_term() {
        what::ExprPtr e = parse_extent_factor();
        while (lex_.peek().is_punct("*")) {
            SourceLoc loc = lex_.next().loc;
            e = what::make_binary(what::ExprKind::Mul, std::move(e), parse_extent_factor(), loc);
        }
        return e;
    }

    what::ExprPtr parse_extent_factor() {
        Token t = lex_.next();
        if (t.kind == Token::Kind::Ident) return what::make_name(t.text, t.loc);
        if (t.kind == Token::Kind::Int) return what::make_const(t.ival, t.loc);
        fail_at(t, "expected name or integer in extent expression");
    }
};

void print_block(std::ostream& os, const std::string& code) {
    os << "{" << code << "}\n";
}

void print_class(std::ostream& os, const MarshalClassDef& c) {
    os << marshal_kind_name(c.kind) << " " << c.name << "\n";
    print_block(os, c.update_code);
    if (c.construct_code) {
        os << "BeforeFirstExecution\n";
        print_block(os, *c.construct_code);
    }
    if (c.destruct_code) {
        os << "AfterLastExecution\n";
        print_block(os, *c.destruct_code);
    }
}

void print_harness(std::ostream& os, const Harness& h) {
    os << "HARNESS " << h.name << " IMPLEMENTS " << h.implements << "\n";
    print_block(os, h.code);
    if (!h.bindings.empty()) {
        os << "Marshaling\n{\n";
        for (const MarshalBinding& b : h.bindings)
            os << "    " << b.out_type << " " << b.out_name << " = " << b.class_name << " of "
               << b.array_name << "[0 .. " << what::print_expr(*b.extent) << "];\n";
        os << "}\n";
    }
    if (!h.persistent_vars.empty()) {
        os << "PersistentVariables\n{\n";
        for (const PersistentVar& v : h.persistent_vars) os << "    " << v.type << " " << v.name << ";\n";
        os << "}\n";
    }
    if (h.before_first) {
        os << "BeforeFirstExecution\n";
        print_block(os, *h.before_first);
    }
    if (h.after_last) {
        os << "AfterLastExecution\n";
        print_block(os, *h.after_last);
    }
    if (!h.headers.empty()) {
        os << "CppHeaderFiles\n{\n";
        for (const std::string& s : h.headers) os << "    " << s << ";\n";
        os << "}\n";
    }
}

void check_extent(const what::Expr& e, const std::set<std::string>& scope, const MarshalBinding& b,
                  Diagnostics& out) {
    switch (e.kind) {
    case what::ExprKind::Name:
        if (!scope.count(e.name))
            out.push_back({"OpenExtent",
                           "extent of binding '" + b.out_name + "' references '" + e.name +
                               "', which is neither a scalar of the computation nor an earlier binding output",
                           e.loc});
        return;
    case what::ExprKind::Const:
        return;
    default:
        if (e.a) check_extent(*e.a, scope, b, out);
        if (e.b) check_extent(*e.b, scope, b, out);
        return;
    }
}

} // namespace

const Harness* HowProgram::find_harness(const std::string& name) const {
    for (const Harness& h : harnesses)
        if (h.name == name) return &h;
    return nullptr;
}

const MarshalClassDef* HowProgram::find_class(const std::string& name) const {
    for (const MarshalClassDef& c : marshal_classes)
        if (c.name == name) return &c;
    return nullptr;
}

const what::WhatProgram* SpecFile::find_what(const std::string& name) const {
    for (const what::WhatProgram& w : whats)
        if (w.name == name) return &w;
    return nullptr;
}

SpecFile parse_spec(std::string_view text) {
    Lexer lex(text);
    SpecFile sf;
    HowParser(lex).parse_into(sf);
    std::set<std::string> seen;
    for (const what::WhatProgram& w : sf.whats)
        if (!seen.insert(w.name).second)
            throw Error(Errc::SyntaxError, "duplicate computation '" + w.name + "'");
    seen.clear();
    for (const Harness& h : sf.how.harnesses)
        if (!seen.insert(h.name).second)
            throw Error(Errc::DuplicateHarness, "duplicate harness '" + h.name + "'", h.loc);
    seen.clear();
    for (const MarshalClassDef& c : sf.how.marshal_classes)
        if (!seen.insert(c.name).second)
            throw Error(Errc::DuplicateHarness, "duplicate marshal class '" + c.name + "'", c.loc);
    return sf;
}

HowProgram parse_how(std::string_view text) {
    return parse_spec(text).how;
}

std::string print_how(const HowProgram& h) {
    std::ostringstream os;
    bool first = true;
    for (const MarshalClassDef& c : h.marshal_classes) {
        if (!first) os << "\n";
        first = false;
        print_class(os, c);
    }
    for (const Harness& hr : h.harnesses) {
        if (!first) os << "\n";
        first = false;
        print_harness(os, hr);
    }
    return os.str();
}

std::string print_spec(const SpecFile& sf) {
    std::ostringstream os;
    bool first = true;
    for (const what::WhatProgram& w : sf.whats) {
        if (!first) os << "\n";
        first = false;
        os << print_what(w);
    }
    std::string rest = print_how(sf.how);
    if (!rest.empty()) {
        if (!first) os << "\n";
        os << rest;
    }
    return os.str();
}

Diagnostics validate_how(const HowProgram& h, const std::vector<what::WhatProgram>& whats) {
    Diagnostics out;
    for (const Harness& hr : h.harnesses) {
        const what::WhatProgram* prog = nullptr;
        for (const what::WhatProgram& w : whats)
            if (w.name == hr.implements) {
                prog = &w;
                break;
            }
        std::optional<what::HarnessSignature> sig;
        if (!prog) {
            out.push_back({"UnknownComputation",
                           "harness '" + hr.name + "' implements unknown computation '" + hr.implements + "'",
                           hr.loc});
        } else {
            sig = what::infer_interface(*prog);
        }
        std::set<std::string> scope;
        if (sig)
            for (const what::Param& p : sig->params)
                if (p.kind == what::ParamKind::ScalarInt) scope.insert(p.name);
        for (const MarshalBinding& b : hr.bindings) {
            if (!h.find_class(b.class_name))
                out.push_back({"UnknownClass",
                               "binding '" + b.out_name + "' uses unknown marshal class '" + b.class_name + "'",
                               b.loc});
            if (sig) {
                const what::Param* p = sig->find(b.array_name);
                if (!p || p->kind == what::ParamKind::ScalarInt)
                    out.push_back({"UnknownArray",
                                   "binding '" + b.out_name + "' marshals '" + b.array_name +
                                       "', which is not an array of computation '" + hr.implements + "'",
                                   b.loc});
                check_extent(*b.extent, scope, b, out);
            }
            // Later extents may consume this output, in declaration order.
            scope.insert(b.out_name);
        }
    }
    return out;
}

} // namespace lilac::how
