#include "lilac/ir.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>

namespace lilac::ir {

namespace {

// Dedicated lexer: newlines terminate instructions, ';' comments to the end of
// the line. Identifiers may contain '.' (dotted opcodes, suffixed SSA names).
struct IrToken {
    enum class Kind { Ident, IntLit, FloatLit, Punct, Newline, End };
    Kind kind = Kind::End;
    std::string text;
    std::int64_t ival = 0;
    double fval = 0.0;
    SourceLoc loc;

    bool is_punct(std::string_view s) const { return kind == Kind::Punct && text == s; }
    bool is_ident(std::string_view s) const { return kind == Kind::Ident && text == s; }
};

class IrLexer {
public:
    explicit IrLexer(std::string_view text) : text_(text) {}

    const IrToken& peek() {
        if (!has_peek_) {
            peek_ = lex();
            has_peek_ = true;
        }
        return peek_;
    }

    IrToken next() {
        peek();
        has_peek_ = false;
        return peek_;
    }

    // Skips newline tokens; used between top-level constructs.
    const IrToken& peek_solid() {
        while (peek().kind == IrToken::Kind::Newline) next();
        return peek();
    }

private:
    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    bool has_peek_ = false;
    IrToken peek_;

    char cur() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    char at(size_t k) const { return pos_ + k < text_.size() ? text_[pos_ + k] : '\0'; }

    void bump() {
        if (pos_ >= text_.size()) return;
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    }

    IrToken lex() {
        for (;;) {
            char c = cur();
            if (c == ' ' || c == '\t' || c == '\r') {
                bump();
            } else if (c == ';') {
                while (cur() != '\n' && cur() != '\0') bump();
            } else {
                break;
            }
        }
        IrToken t;
        t.loc = {line_, col_};
        char c = cur();
        if (c == '\0') return t;
        if (c == '\n') {
            bump();
            t.kind = IrToken::Kind::Newline;
            return t;
        }
        if (ident_start(c)) {
            t.kind = IrToken::Kind::Ident;
            while (ident_char(cur())) {
                t.text.push_back(cur());
                bump();
            }
            return t;
        }
        bool neg = c == '-' && std::isdigit(static_cast<unsigned char>(at(1)));
        if (std::isdigit(static_cast<unsigned char>(c)) || neg) {
            bool is_float = false;
            if (neg) {
                t.text.push_back('-');
                bump();
            }
            while (std::isdigit(static_cast<unsigned char>(cur()))) {
                t.text.push_back(cur());
                bump();
            }
            if (cur() == '.' && std::isdigit(static_cast<unsigned char>(at(1)))) {
                is_float = true;
                t.text.push_back('.');
                bump();
                while (std::isdigit(static_cast<unsigned char>(cur()))) {
                    t.text.push_back(cur());
                    bump();
                }
            }
            if ((cur() == 'e' || cur() == 'E') &&
                (std::isdigit(static_cast<unsigned char>(at(1))) ||
                 ((at(1) == '+' || at(1) == '-') && std::isdigit(static_cast<unsigned char>(at(2)))))) {
                is_float = true;
                t.text.push_back(cur());
                bump();
                if (cur() == '+' || cur() == '-') {
                    t.text.push_back(cur());
                    bump();
                }
                while (std::isdigit(static_cast<unsigned char>(cur()))) {
                    t.text.push_back(cur());
                    bump();
                }
            }
            if (is_float) {
                t.kind = IrToken::Kind::FloatLit;
                t.fval = std::strtod(t.text.c_str(), nullptr);
            } else {
                t.kind = IrToken::Kind::IntLit;
                errno = 0;
                t.ival = std::strtoll(t.text.c_str(), nullptr, 10);
                if (errno == ERANGE)
                    throw Error(Errc::SyntaxError, "integer literal out of range: " + t.text, t.loc);
            }
            return t;
        }
        t.kind = IrToken::Kind::Punct;
        if (c == '-' && at(1) == '>') {
            t.text = "->";
            bump();
            bump();
            return t;
        }
        static const std::string_view singles = "@%(){}[],:=";
        if (singles.find(c) != std::string_view::npos) {
            t.text.push_back(c);
            bump();
            return t;
        }
        throw Error(Errc::SyntaxError, std::string("unexpected character '") + c + "'", t.loc);
    }
};

struct OpInfo {
    Opcode op;
    int arity;          // fixed value-operand count; -1 = special form
    bool has_result;    // value-producing
};

std::optional<OpInfo> opcode_info(std::string_view name) {
    if (name == "add") return OpInfo{Opcode::Add, 2, true};
    if (name == "sub") return OpInfo{Opcode::Sub, 2, true};
    if (name == "mul") return OpInfo{Opcode::Mul, 2, true};
    if (name == "icmp.eq") return OpInfo{Opcode::IcmpEq, 2, true};
    if (name == "icmp.ne") return OpInfo{Opcode::IcmpNe, 2, true};
    if (name == "icmp.slt") return OpInfo{Opcode::IcmpSlt, 2, true};
    if (name == "icmp.sle") return OpInfo{Opcode::IcmpSle, 2, true};
    if (name == "fadd") return OpInfo{Opcode::FAdd, 2, true};
    if (name == "fsub") return OpInfo{Opcode::FSub, 2, true};
    if (name == "fmul") return OpInfo{Opcode::FMul, 2, true};
    if (name == "elemptr") return OpInfo{Opcode::ElemPtr, 2, true};
    if (name == "load") return OpInfo{Opcode::Load, 1, true};
    if (name == "store") return OpInfo{Opcode::Store, 2, false};
    if (name == "phi") return OpInfo{Opcode::Phi, -1, true};
    if (name == "br") return OpInfo{Opcode::Br, -1, false};
    if (name == "condbr") return OpInfo{Opcode::CondBr, -1, false};
    if (name == "call") return OpInfo{Opcode::Call, -1, false};
    if (name == "ret") return OpInfo{Opcode::Ret, -1, false};
    return std::nullopt;
}

class IrParser {
public:
    explicit IrParser(std::string_view text) : lex_(text) {}

    Module parse() {
        Module m;
        while (lex_.peek_solid().kind != IrToken::Kind::End) m.functions.push_back(parse_function());
        return m;
    }

private:
    IrLexer lex_;

    [[noreturn]] void fail(const std::string& msg, SourceLoc loc, Errc code = Errc::SyntaxError) {
        throw Error(code, msg, loc);
    }

    IrToken expect_punct(std::string_view p) {
        IrToken t = lex_.next();
        if (!t.is_punct(p)) fail("expected '" + std::string(p) + "'", t.loc);
        return t;
    }

    std::string expect_ident(const char* what) {
        IrToken t = lex_.next();
        if (t.kind != IrToken::Kind::Ident) fail(std::string("expected ") + what, t.loc);
        return t.text;
    }

    std::string parse_value_name() {
        expect_punct("%");
        return expect_ident("value name after '%'");
    }

    Type parse_type(bool allow_void) {
        IrToken t = lex_.next();
        if (t.kind != IrToken::Kind::Ident) fail("expected type", t.loc);
        if (t.text == "i1") return Type::I1;
        if (t.text == "i64") return Type::I64;
        if (t.text == "f64") return Type::F64;
        if (t.text == "void") {
            if (!allow_void) fail("'void' is only valid as a return type", t.loc, Errc::TypeAnnotationMismatch);
            return Type::Void;
        }
        if (t.text == "ptr") {
            IrToken p = lex_.next();
            if (p.is_ident("i64")) return Type::PtrI64;
            if (p.is_ident("f64")) return Type::PtrF64;
            fail("pointers are one-level to i64 or f64", p.loc, Errc::TypeAnnotationMismatch);
        }
        fail("unknown type '" + t.text + "'", t.loc, Errc::TypeAnnotationMismatch);
    }

    Function parse_function() {
        IrToken kw = lex_.next();
        if (!kw.is_ident("func")) fail("expected 'func'", kw.loc);
        Function f;
        expect_punct("@");
        f.name = expect_ident("function name");
        expect_punct("(");
        if (!lex_.peek().is_punct(")")) {
            for (;;) {
                FuncParam p;
                p.name = parse_value_name();
                expect_punct(":");
                p.type = parse_type(false);
                f.params.push_back(std::move(p));
                if (lex_.peek().is_punct(",")) {
                    lex_.next();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        expect_punct("->");
        f.ret = parse_type(true);
        expect_punct("{");

        while (!lex_.peek_solid().is_punct("}")) {
            const IrToken& t = lex_.peek();
            if (t.kind == IrToken::Kind::End) fail("unterminated function body", t.loc);
            f.blocks.push_back(parse_block());
        }
        lex_.next();  // '}'
        if (f.blocks.empty()) fail("function '" + f.name + "' has no blocks", kw.loc);
        return f;
    }

    Block parse_block() {
        Block b;
        IrToken label = lex_.next();
        if (label.kind != IrToken::Kind::Ident) fail("expected block label", label.loc);
        b.name = label.text;
        b.loc = label.loc;
        expect_punct(":");
        for (;;) {
            const IrToken& t = lex_.peek_solid();
            if (t.is_punct("}") || t.kind == IrToken::Kind::End) break;
            // a label is an ident followed by ':'; an instruction line starts
            // with '%' or an opcode ident
            if (t.kind == IrToken::Kind::Ident && !opcode_info(t.text)) break;
            b.instrs.push_back(parse_instr());
        }
        return b;
    }

    void end_of_instr() {
        const IrToken& t = lex_.peek();
        if (t.kind == IrToken::Kind::Newline) {
            lex_.next();
            return;
        }
        if (t.kind == IrToken::Kind::End || t.is_punct("}")) return;
        fail("expected end of instruction", t.loc);
    }

    Operand parse_operand() {
        IrToken t = lex_.next();
        if (t.is_punct("%")) {
            IrToken n = lex_.next();
            if (n.kind != IrToken::Kind::Ident) fail("expected value name after '%'", n.loc);
            return Operand::value(n.text);
        }
        if (t.kind == IrToken::Kind::IntLit) return Operand::int_lit(t.ival);
        if (t.kind == IrToken::Kind::FloatLit) return Operand::float_lit(t.fval);
        fail("expected operand", t.loc);
    }

    Instr parse_instr() {
        Instr in;
        in.loc = lex_.peek().loc;
        if (lex_.peek().is_punct("%")) {
            in.result = parse_value_name();
            expect_punct("=");
        }
        IrToken opname = lex_.next();
        if (opname.kind != IrToken::Kind::Ident) fail("expected opcode", opname.loc);
        auto info = opcode_info(opname.text);
        if (!info) fail("unknown opcode '" + opname.text + "'", opname.loc, Errc::UnknownOpcode);
        in.op = info->op;

        if (info->arity >= 0) {
            if (info->has_result && in.result.empty())
                fail(std::string(opcode_name(in.op)) + " must name its result", opname.loc);
            if (!info->has_result && !in.result.empty())
                fail(std::string(opcode_name(in.op)) + " produces no result", opname.loc);
            for (int i = 0; i < info->arity; ++i) {
                if (i > 0) expect_punct(",");
                in.args.push_back(parse_operand());
            }
            end_of_instr();
            return in;
        }

        switch (in.op) {
        case Opcode::Phi: {
            if (in.result.empty()) fail("phi must name its result", opname.loc);
            for (;;) {
                expect_punct("[");
                PhiIncoming inc;
                inc.value = parse_operand();
                expect_punct(",");
                inc.pred = expect_ident("predecessor label");
                expect_punct("]");
                in.incomings.push_back(std::move(inc));
                if (lex_.peek().is_punct(",")) {
                    lex_.next();
                    continue;
                }
                break;
            }
            break;
        }
        case Opcode::Br: {
            if (!in.result.empty()) fail("br produces no result", opname.loc);
            in.targets.push_back(expect_ident("branch target"));
            break;
        }
        case Opcode::CondBr: {
            if (!in.result.empty()) fail("condbr produces no result", opname.loc);
            in.args.push_back(parse_operand());
            expect_punct(",");
            in.targets.push_back(expect_ident("branch target"));
            expect_punct(",");
            in.targets.push_back(expect_ident("branch target"));
            break;
        }
        case Opcode::Call: {
            expect_punct("@");
            in.callee = expect_ident("callee name");
            expect_punct("(");
            if (!lex_.peek().is_punct(")")) {
                for (;;) {
                    in.args.push_back(parse_operand());
                    if (lex_.peek().is_punct(",")) {
                        lex_.next();
                        continue;
                    }
                    break;
                }
            }
            expect_punct(")");
            break;
        }
        case Opcode::Ret: {
            if (!in.result.empty()) fail("ret produces no result", opname.loc);
            const IrToken& t = lex_.peek();
            bool bare = t.kind == IrToken::Kind::Newline || t.kind == IrToken::Kind::End || t.is_punct("}");
            if (!bare) in.args.push_back(parse_operand());
            break;
        }
        default: break;
        }
        end_of_instr();
        return in;
    }
};

} // namespace

Operand Operand::value(std::string n) {
    Operand o;
    o.kind = Kind::Value;
    o.name = std::move(n);
    return o;
}

Operand Operand::int_lit(std::int64_t v) {
    Operand o;
    o.kind = Kind::IntLit;
    o.ival = v;
    return o;
}

Operand Operand::float_lit(double v) {
    Operand o;
    o.kind = Kind::FloatLit;
    o.fval = v;
    return o;
}

Module parse_module(std::string_view text) { return IrParser(text).parse(); }

Block* Function::find_block(std::string_view label) {
    for (Block& b : blocks)
        if (b.name == label) return &b;
    return nullptr;
}

const Block* Function::find_block(std::string_view label) const {
    return const_cast<Function*>(this)->find_block(label);
}

const FuncParam* Function::find_param(std::string_view name) const {
    for (const FuncParam& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

Function* Module::find_function(std::string_view name) {
    for (Function& f : functions)
        if (f.name == name) return &f;
    return nullptr;
}

const Function* Module::find_function(std::string_view name) const {
    return const_cast<Module*>(this)->find_function(name);
}

} // namespace lilac::ir
