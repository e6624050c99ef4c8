#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lilac/ir.hpp"
#include "support/irgen.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace lilac;
using namespace lilac::ir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE_MESSAGE(in.good(), "cannot open ", p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::SyntaxError;
}

const char* kDotLoop = R"(
; canonical dot product: phi iterator, two elemptr+load, fmul, fadd
func @dot(%n: i64, %a: ptr f64, %b: ptr f64) -> f64 {
entry:
  br head
head:
  %i = phi [0, entry], [%i.next, latch]
  %acc = phi [0.0, entry], [%acc.next, latch]
  %cmp = icmp.slt %i, %n
  condbr %cmp, body, exit
body:
  %pa = elemptr %a, %i
  %va = load %pa
  %pb = elemptr %b, %i
  %vb = load %pb
  %prod = fmul %va, %vb
  %acc.next = fadd %acc, %prod
  br latch
latch:
  %i.next = add %i, 1
  br head
exit:
  ret %acc
}
)";

} // namespace

TEST_CASE("dot-product loop parses into three-plus blocks and verifies") {
    Module m = parse_module(kDotLoop);
    REQUIRE(m.functions.size() == 1);
    const Function& f = m.functions[0];
    CHECK(f.name == "dot");
    CHECK(f.ret == Type::F64);
    REQUIRE(f.params.size() == 3);
    CHECK(f.params[1].type == Type::PtrF64);
    CHECK(f.blocks.size() == 5);
    CHECK(f.blocks[0].name == "entry");
    CHECK(f.blocks[1].instrs[0].op == Opcode::Phi);
    CHECK(verify(m).empty());
}

TEST_CASE("parse errors") {
    CHECK(code_of([] { parse_module("func @f() -> void {\n  ret\n}\n"); }) == Errc::SyntaxError);
    CHECK(code_of([] { parse_module("func @f() -> void {\nentry:\n  %x = frobnicate %y\n  ret\n}\n"); }) ==
          Errc::UnknownOpcode);
    CHECK(code_of([] { parse_module("func @f(%p: ptr i1) -> void {\nentry:\n  ret\n}\n"); }) ==
          Errc::TypeAnnotationMismatch);
    CHECK(code_of([] { parse_module("func @f() -> banana {\nentry:\n  ret\n}\n"); }) ==
          Errc::TypeAnnotationMismatch);
    CHECK(code_of([] { parse_module("func @f() -> void {\nentry:\n  store 1, \n  ret\n}\n"); }) ==
          Errc::SyntaxError);
    CHECK(code_of([] { parse_module("func @f(%x: void) -> void {\nentry:\n  ret\n}\n"); }) ==
          Errc::TypeAnnotationMismatch);
}

TEST_CASE("round-trip and idempotent printing") {
    Module m = parse_module(kDotLoop);
    std::string once = print_module(m);
    Module m2 = parse_module(once);
    CHECK(module_equal(m, m2));
    CHECK(print_module(m2) == once);
}

TEST_CASE("fixture corpus round-trips and verifies clean") {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(FIXTURE_DIR "/ir")) {
        if (entry.path().extension() != ".lir") continue;
        ++seen;
        INFO("fixture ", entry.path().filename().string());
        std::string text = slurp(entry.path());
        Module m = parse_module(text);
        Diagnostics diags = verify(m);
        CHECK_MESSAGE(diags.empty(), render_diags(diags));
        std::string once = print_module(m);
        CHECK(module_equal(parse_module(once), m));
        CHECK(print_module(parse_module(once)) == once);
    }
    CHECK(seen >= 1);
}

TEST_CASE("verifier diagnostics") {
    auto diags_of = [](const char* text) { return verify(parse_module(text)); };

    SUBCASE("clean empty module") { CHECK(verify(Module{}).empty()); }

    SUBCASE("dominance violation") {
        Diagnostics d = diags_of(R"(
func @f(%c: i1) -> i64 {
entry:
  condbr %c, a, b
a:
  %x = add 1, 2
  br join
b:
  br join
join:
  %y = add %x, 1
  ret %y
}
)");
        CHECK(has_diag(d, "DominanceViolation"));
    }

    SUBCASE("missing terminator") {
        Diagnostics d = diags_of("func @f() -> void {\nentry:\n  %x = add 1, 2\n}\n");
        CHECK(has_diag(d, "MissingTerminator"));
    }

    SUBCASE("phi coverage") {
        Diagnostics d = diags_of(R"(
func @f() -> void {
entry:
  br head
head:
  %i = phi [0, entry]
  %c = icmp.slt %i, 3
  condbr %c, head, exit
exit:
  ret
}
)");
        CHECK(has_diag(d, "PhiCoverage"));  // misses the head->head back edge
    }

    SUBCASE("type mismatch") {
        Diagnostics d = diags_of(R"(
func @f(%x: i64) -> void {
entry:
  %y = fadd %x, 1.0
  ret
}
)");
        CHECK(has_diag(d, "TypeMismatch"));
    }

    SUBCASE("store type must match pointee") {
        Diagnostics d = diags_of(R"(
func @f(%p: ptr f64) -> void {
entry:
  store 1, %p
  ret
}
)");
        CHECK(has_diag(d, "TypeMismatch"));
    }

    SUBCASE("unreachable block") {
        Diagnostics d = diags_of("func @f() -> void {\nentry:\n  ret\nisland:\n  ret\n}\n");
        CHECK(has_diag(d, "UnreachableBlock"));
    }

    SUBCASE("duplicate value") {
        Diagnostics d = diags_of("func @f() -> void {\nentry:\n  %x = add 1, 2\n  %x = add 3, 4\n  ret\n}\n");
        CHECK(has_diag(d, "DuplicateValue"));
    }

    SUBCASE("undefined value") {
        Diagnostics d = diags_of("func @f() -> i64 {\nentry:\n  ret %nope\n}\n");
        CHECK(has_diag(d, "UnknownValue"));
    }

    SUBCASE("return type") {
        Diagnostics d = diags_of("func @f() -> i64 {\nentry:\n  ret\n}\n");
        CHECK(has_diag(d, "ReturnTypeMismatch"));
    }

    SUBCASE("internal call arity") {
        Diagnostics d = diags_of(R"(
func @g(%x: i64) -> void {
entry:
  ret
}

func @f() -> void {
entry:
  call @g(1, 2)
  ret
}
)");
        CHECK(has_diag(d, "CallArity"));
    }
}

TEST_CASE("float literals print in shortest round-trip form") {
    CHECK(format_f64(0.0) == "0.0");
    CHECK(format_f64(-0.0) == "-0.0");
    CHECK(format_f64(1.0) == "1.0");
    CHECK(format_f64(1.5) == "1.5");
    CHECK(format_f64(0.1) == "0.1");
    CHECK(format_f64(1e300) == "1e+300");
    double third = 1.0 / 3.0;
    std::string s = format_f64(third);
    CHECK(std::strtod(s.c_str(), nullptr) == third);
    // a value needing all 17 digits
    double awkward = 0.1 + 0.2;
    CHECK(std::strtod(format_f64(awkward).c_str(), nullptr) == awkward);
}

TEST_CASE("random well-typed modules round-trip and verify") {
    std::mt19937_64 rng(20240818);
    for (int trial = 0; trial < 100; ++trial) {
        Module m = irgen::random_module(rng);
        Diagnostics diags = verify(m);
        CHECK_MESSAGE(diags.empty(), "trial ", trial, ":\n", render_diags(diags), print_module(m));
        std::string once = print_module(m);
        Module back = parse_module(once);
        CHECK(module_equal(back, m));
        CHECK(print_module(back) == once);
    }
}
