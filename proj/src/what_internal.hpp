#pragma once

#include "lilac/what.hpp"
#include "speclex.hpp"

namespace lilac::what {

// Parses a single COMPUTATION starting at the lexer's current position and
// leaves the lexer just past its body, so callers can mix computations with
// other top-level constructs in one file.
WhatProgram parse_one_computation(speclex::Lexer& lex);

}  // namespace lilac::what
