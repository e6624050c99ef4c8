#include "speclex.hpp"

#include <cctype>

namespace lilac::speclex {

void Lexer::advance_char() {
    if (pos_ >= text_.size()) return;
    if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
    } else {
        ++col_;
    }
    ++pos_;
}

SourceLoc Lexer::here() {
    skip_trivia();
    return {line_, col_};
}

void Lexer::skip_trivia() {
    if (has_peek_) return;
    for (;;) {
        char c = cur();
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance_char();
        } else if (c == '/' && at(1) == '/') {
            while (cur() != '\n' && cur() != '\0') advance_char();
        } else if (c == '/' && at(1) == '*') {
            advance_char();
            advance_char();
            while (!(cur() == '*' && at(1) == '/')) {
                if (cur() == '\0') fail("unterminated block comment");
                advance_char();
            }
            advance_char();
            advance_char();
        } else {
            return;
        }
    }
}

static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

Token Lexer::lex_token() {
    skip_trivia();
    Token t;
    t.loc = {line_, col_};
    char c = cur();
    if (c == '\0') {
        t.kind = Token::Kind::End;
        return t;
    }
    if (ident_start(c)) {
        t.kind = Token::Kind::Ident;
        while (ident_char(cur())) {
            t.text.push_back(cur());
            advance_char();
        }
        return t;
    }
    bool neg = c == '-' && std::isdigit(static_cast<unsigned char>(at(1)));
    if (std::isdigit(static_cast<unsigned char>(c)) || neg) {
        t.kind = Token::Kind::Int;
        if (neg) {
            t.text.push_back('-');
            advance_char();
        }
        while (std::isdigit(static_cast<unsigned char>(cur()))) {
            t.text.push_back(cur());
            advance_char();
        }
        try {
            t.ival = std::stoll(t.text);
        } catch (const std::out_of_range&) {
            throw Error(Errc::SyntaxError, "integer literal out of range: " + t.text, t.loc);
        }
        return t;
    }
    t.kind = Token::Kind::Punct;
    // two-character operators first
    if ((c == '<' && at(1) == '=') || (c == '.' && at(1) == '.') ||
        (c == '=' && at(1) == '=')) {
        t.text.push_back(c);
        advance_char();
        t.text.push_back(cur());
        advance_char();
        return t;
    }
    static const std::string_view singles = "()[]{}<>=;+*,.-/:&";
    if (singles.find(c) != std::string_view::npos) {
        t.text.push_back(c);
        advance_char();
        return t;
    }
    throw Error(Errc::SyntaxError, std::string("unexpected character '") + c + "'", t.loc);
}

const Token& Lexer::peek() {
    if (!has_peek_) {
        peek_ = lex_token();
        has_peek_ = true;
    }
    return peek_;
}

Token Lexer::next() {
    peek();
    has_peek_ = false;
    return peek_;
}

bool Lexer::at_end() { return peek().kind == Token::Kind::End; }

std::string Lexer::capture_block() {
    Token open = next();
    if (!open.is_punct("{")) throw Error(Errc::SyntaxError, "expected '{' to open code block", open.loc);
    std::string out;
    int depth = 1;
    while (depth > 0) {
        char c = cur();
        if (c == '\0') throw Error(Errc::UnbalancedCodeBlock, "unterminated code block", open.loc);
        if (c == '/' && at(1) == '/') {
            while (cur() != '\n' && cur() != '\0') {
                out.push_back(cur());
                advance_char();
            }
            continue;
        }
        if (c == '/' && at(1) == '*') {
            out.push_back(cur());
            advance_char();
            out.push_back(cur());
            advance_char();
            while (!(cur() == '*' && at(1) == '/')) {
                if (cur() == '\0') throw Error(Errc::UnbalancedCodeBlock, "unterminated code block", open.loc);
                out.push_back(cur());
                advance_char();
            }
            out.push_back(cur());
            advance_char();
            out.push_back(cur());
            advance_char();
            continue;
        }
        if (c == '"' || c == '\'') {
            char quote = c;
            out.push_back(cur());
            advance_char();
            while (cur() != quote) {
                if (cur() == '\0') throw Error(Errc::UnbalancedCodeBlock, "unterminated code block", open.loc);
                if (cur() == '\\') {
                    out.push_back(cur());
                    advance_char();
                }
                out.push_back(cur());
                advance_char();
            }
            out.push_back(cur());
            advance_char();
            continue;
        }
        if (c == '{') ++depth;
        if (c == '}') {
            --depth;
            if (depth == 0) {
                advance_char();
                break;
            }
        }
        out.push_back(cur());
        advance_char();
    }
    return out;
}

} // namespace lilac::speclex
