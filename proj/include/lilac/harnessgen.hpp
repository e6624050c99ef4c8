#pragma once

// Turns LiLAC-How declarations into C++ harness sources. The output is
// template-text assembly: embedded code blocks are spliced verbatim, the
// byte stream is deterministic, and nothing checks that the result compiles
// (that is the vendor toolchain's job).

#include "lilac/how.hpp"

#include <string>
#include <utility>
#include <vector>

namespace lilac::harnessgen {

// One translation unit for one harness: vendor headers, the three hook
// functions of every marshal class the bindings reference, a persistent
// state record, and an entry function with the computation's calling
// convention. Throws MissingClass when a binding names an unknown class.
std::string gen_harness(const how::Harness& h, const what::HarnessSignature& sig,
                        const std::vector<how::MarshalClassDef>& classes);

// Validates, then generates every harness in declaration order. Throws
// DataError carrying the validation report when validate_how objects.
std::vector<std::pair<std::string, std::string>> gen_all(const how::HowProgram& h,
                                                         const std::vector<what::WhatProgram>& whats);

} // namespace lilac::harnessgen
