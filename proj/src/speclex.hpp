#pragma once

// Lexer shared by the What and How parsers. Code blocks in How specs are
// captured verbatim, so the lexer exposes a raw balanced-brace mode next to
// ordinary tokenization.

#include "lilac/diag.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace lilac::speclex {

struct Token {
    enum class Kind { Ident, Int, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    std::int64_t ival = 0;
    SourceLoc loc;

    bool is_ident(std::string_view s) const { return kind == Kind::Ident && text == s; }
    bool is_punct(std::string_view s) const { return kind == Kind::Punct && text == s; }
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    const Token& peek();
    Token next();
    bool at_end();

    // Consumes a '{'-delimited block and returns the inner text verbatim.
    // Braces inside comments, string and character literals do not count
    // toward nesting.
    std::string capture_block();

    SourceLoc here();

    [[noreturn]] void fail(const std::string& msg, Errc code = Errc::SyntaxError) {
        throw Error(code, msg, here());
    }

private:
    void skip_trivia();
    void advance_char();
    char cur() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    char at(size_t off) const { return pos_ + off < text_.size() ? text_[pos_ + off] : '\0'; }
    Token lex_token();

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    bool has_peek_ = false;
    Token peek_;
};

} // namespace lilac::speclex
