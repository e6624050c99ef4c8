#pragma once

// LiLAC-How: harness declarations that bind library implementations to
// computations, plus the marshal classes that move data for them. Code
// blocks are opaque text; we never parse the embedded language.

#include "lilac/diag.hpp"
#include "lilac/what.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lilac::how {

enum class MarshalKind { Input, Output };

const char* marshal_kind_name(MarshalKind k);

// INPUT/OUTPUT class. The main block runs whenever the tracked region is
// dirty; the optional blocks run once per (in, size) lifetime. Blocks see
// the reserved names `in`, `size`, and `out`.
struct MarshalClassDef {
    MarshalKind kind = MarshalKind::Input;
    std::string name;
    std::string update_code;
    std::optional<std::string> construct_code;
    std::optional<std::string> destruct_code;
    SourceLoc loc;
};

struct PersistentVar {
    std::string type;
    std::string name;
    SourceLoc loc;
};

// `<out_type> <out_name> = <class_name> of <array_name> [ 0 .. extent ];`
// extent reuses the What expression grammar restricted to names, constants,
// add, and mul.
struct MarshalBinding {
    std::string out_type;
    std::string out_name;
    std::string class_name;
    std::string array_name;
    what::ExprPtr extent;
    SourceLoc loc;
};

struct Harness {
    std::string name;
    std::string implements;
    std::string code;
    std::vector<std::string> headers;
    std::vector<PersistentVar> persistent_vars;
    std::optional<std::string> before_first;
    std::optional<std::string> after_last;
    std::vector<MarshalBinding> bindings;
    SourceLoc loc;
};

struct HowProgram {
    std::vector<Harness> harnesses;
    std::vector<MarshalClassDef> marshal_classes;

    const Harness* find_harness(const std::string& name) const;
    const MarshalClassDef* find_class(const std::string& name) const;
};

// A .lilac file: computations and harness machinery interleaved freely.
struct SpecFile {
    std::vector<what::WhatProgram> whats;
    HowProgram how;

    const what::WhatProgram* find_what(const std::string& name) const;
};

SpecFile parse_spec(std::string_view text);
HowProgram parse_how(std::string_view text);

std::string print_how(const HowProgram& h);
std::string print_spec(const SpecFile& sf);

// Pure checks; diagnostics in harness order, then binding order. Codes:
// UnknownComputation, UnknownClass, UnknownArray, OpenExtent.
Diagnostics validate_how(const HowProgram& h, const std::vector<what::WhatProgram>& whats);

} // namespace lilac::how
