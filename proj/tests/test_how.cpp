#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lilac/how.hpp"
#include "support/programs.hpp"

#include <functional>
#include <string>

using namespace lilac;
using namespace lilac::how;
using namespace programs;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::SyntaxError;
}

std::string full_sample() { return std::string(kSpmvCsr) + kCusparseSpmv; }

} // namespace

TEST_CASE("input class parses with all three code blocks") {
    const char* text = R"RAW(INPUT Fancy
{
    if (cond) { emit("}"); }  /* } not a close */
    char c = '}';  // } still fine
}
BeforeFirstExecution
{
    setup();
}
)RAW";
    const char* body = R"RAW(
    if (cond) { emit("}"); }  /* } not a close */
    char c = '}';  // } still fine
)RAW";
    HowProgram h = parse_how(text);
    REQUIRE(h.marshal_classes.size() == 1);
    const MarshalClassDef& c = h.marshal_classes[0];
    CHECK(c.kind == MarshalKind::Input);
    CHECK(c.name == "Fancy");
    CHECK(c.update_code == body);
    REQUIRE(c.construct_code.has_value());
    CHECK(*c.construct_code == "\n    setup();\n");
    CHECK(!c.destruct_code.has_value());

    HowProgram again = parse_how(print_how(h));
    REQUIRE(again.marshal_classes.size() == 1);
    CHECK(again.marshal_classes[0].update_code == body);
}

TEST_CASE("full sample file parses into computations and harness") {
    SpecFile sf = parse_spec(full_sample());
    REQUIRE(sf.whats.size() == 1);
    CHECK(sf.whats[0].name == "spmv_csr");
    CHECK(sf.find_what("spmv_csr") != nullptr);
    CHECK(sf.find_what("nope") == nullptr);

    REQUIRE(sf.how.marshal_classes.size() == 4);
    CHECK(sf.how.find_class("CudaRead") != nullptr);
    CHECK(sf.how.find_class("CudaWrite")->kind == MarshalKind::Output);
    const MarshalClassDef* mx = sf.how.find_class("ReadableMax");
    REQUIRE(mx != nullptr);
    CHECK(mx->update_code.find("maxv") != std::string::npos);
    CHECK(!mx->construct_code.has_value());
    CHECK(!mx->destruct_code.has_value());

    REQUIRE(sf.how.harnesses.size() == 1);
    const Harness& h = sf.how.harnesses[0];
    CHECK(h.name == "cusparse_spmv");
    CHECK(h.implements == "spmv_csr");
    CHECK(h.code.find("cusparseDcsrmv") != std::string::npos);
    CHECK(h.before_first.has_value());
    CHECK(h.after_last.has_value());
    REQUIRE(h.persistent_vars.size() == 2);
    CHECK(h.persistent_vars[0].type == "cusparseHandle_t");
    CHECK(h.persistent_vars[0].name == "handle");
    REQUIRE(h.headers.size() == 2);
    CHECK(h.headers[0] == "<cuda_runtime.h>");
    CHECK(h.headers[1] == "<cusparse.h>");

    REQUIRE(h.bindings.size() == 7);
    const MarshalBinding& b0 = h.bindings[0];
    CHECK(b0.out_type == "int");
    CHECK(b0.out_name == "nnz");
    CHECK(b0.class_name == "LastEntry");
    CHECK(b0.array_name == "row_ptr");
    auto expect0 = what::make_binary(what::ExprKind::Add, what::make_name("rows"), what::make_const(1));
    CHECK(what::expr_equal(*b0.extent, *expect0));
    CHECK(h.bindings[2].out_type == "DeviceArray<int>");
    CHECK(h.bindings[6].class_name == "CudaWrite");
}

TEST_CASE("validator accepts the full sample") {
    SpecFile sf = parse_spec(full_sample());
    Diagnostics d = validate_how(sf.how, sf.whats);
    CHECK(render_diags(d) == "");
    CHECK(d.empty());
}

TEST_CASE("print and reparse keep structure and code block bytes") {
    SpecFile sf = parse_spec(full_sample());
    std::string printed = print_spec(sf);
    SpecFile sf2 = parse_spec(printed);

    REQUIRE(sf2.whats.size() == sf.whats.size());
    CHECK(what::program_equal(sf.whats[0], sf2.whats[0]));
    REQUIRE(sf2.how.harnesses.size() == 1);
    CHECK(sf2.how.harnesses[0].code == sf.how.harnesses[0].code);
    CHECK(sf2.how.harnesses[0].headers == sf.how.harnesses[0].headers);
    REQUIRE(sf2.how.marshal_classes.size() == sf.how.marshal_classes.size());
    for (size_t i = 0; i < sf.how.marshal_classes.size(); ++i) {
        CHECK(sf2.how.marshal_classes[i].update_code == sf.how.marshal_classes[i].update_code);
        CHECK(sf2.how.marshal_classes[i].construct_code == sf.how.marshal_classes[i].construct_code);
        CHECK(sf2.how.marshal_classes[i].destruct_code == sf.how.marshal_classes[i].destruct_code);
    }
    for (size_t i = 0; i < sf.how.harnesses[0].bindings.size(); ++i) {
        const MarshalBinding& a = sf.how.harnesses[0].bindings[i];
        const MarshalBinding& b = sf2.how.harnesses[0].bindings[i];
        CHECK(a.out_type == b.out_type);
        CHECK(a.out_name == b.out_name);
        CHECK(what::expr_equal(*a.extent, *b.extent));
    }
    CHECK(print_spec(sf2) == printed);
    CHECK(validate_how(sf2.how, sf2.whats).empty());
}

TEST_CASE("harness without IMPLEMENTS is a syntax error") {
    CHECK(code_of([] { parse_how("HARNESS h\n{\n}\n"); }) == Errc::SyntaxError);
}

TEST_CASE("unterminated code block") {
    CHECK(code_of([] { parse_how("HARNESS h IMPLEMENTS c\n{\n    foo("); }) == Errc::UnbalancedCodeBlock);
    CHECK(code_of([] { parse_how("INPUT X\n{\n    s = \"abc"); }) == Errc::UnbalancedCodeBlock);
}

TEST_CASE("duplicate names are rejected") {
    CHECK(code_of([] {
              parse_how("HARNESS h IMPLEMENTS a\n{\n}\nHARNESS h IMPLEMENTS b\n{\n}\n");
          }) == Errc::DuplicateHarness);
    CHECK(code_of([] { parse_how("INPUT A\n{\n}\nINPUT A\n{\n}\n"); }) == Errc::DuplicateHarness);
    CHECK(code_of([] {
              parse_spec(std::string(kDotProduct) + kDotProduct);
          }) == Errc::SyntaxError);
    CHECK(code_of([] {
              parse_how("HARNESS h IMPLEMENTS a\n{\n}\nCppHeaderFiles\n{\n}\nCppHeaderFiles\n{\n}\n");
          }) == Errc::SyntaxError);
    CHECK(code_of([] {
              parse_how("HARNESS h IMPLEMENTS a\n{\n}\nPersistentVariables\n{\n    int x;\n    long x;\n}\n");
          }) == Errc::SyntaxError);
}

TEST_CASE("optional sections parse in any order") {
    const char* text = R"(
HARNESS tidy IMPLEMENTS dotproduct
{
    call_lib(pa, b, length, &result);
}
CppHeaderFiles
{
    <lib.h>;
}
AfterLastExecution
{
    teardown(ctx);
}
PersistentVariables
{
    void* ctx;
}
Marshaling
{
    const double* pa = PinHost of a[0 .. length];
}
BeforeFirstExecution
{
    init(&ctx);
}

INPUT PinHost
{
    out = pin(in, size);
}
)";
    SpecFile sf = parse_spec(std::string(kDotProduct) + text);
    const Harness* h = sf.how.find_harness("tidy");
    REQUIRE(h != nullptr);
    CHECK(h->headers.size() == 1);
    CHECK(h->persistent_vars.size() == 1);
    CHECK(h->persistent_vars[0].type == "void*");
    REQUIRE(h->bindings.size() == 1);
    CHECK(h->bindings[0].out_type == "const double*");
    CHECK(h->before_first.has_value());
    CHECK(h->after_last.has_value());
    CHECK(validate_how(sf.how, sf.whats).empty());
}

TEST_CASE("extent expressions follow the term grammar") {
    const char* tmpl = R"(
INPUT G
{
    out = 0;
}
HARNESS e IMPLEMENTS dotproduct
{
}
Marshaling
{
    int v = G of a[0 .. %];
}
)";
    auto with_extent = [&](const char* ext) {
        std::string t = tmpl;
        t.replace(t.find('%'), 1, ext);
        HowProgram h = parse_how(t);
        return std::move(h.harnesses.at(0).bindings.at(0).extent);
    };
    using what::ExprKind;
    auto e1 = with_extent("length + 2 * length");
    auto want1 = what::make_binary(
        ExprKind::Add, what::make_name("length"),
        what::make_binary(ExprKind::Mul, what::make_const(2), what::make_name("length")));
    CHECK(what::expr_equal(*e1, *want1));

    auto e2 = with_extent("3 * length + 1");
    auto want2 = what::make_binary(
        ExprKind::Add, what::make_binary(ExprKind::Mul, what::make_const(3), what::make_name("length")),
        what::make_const(1));
    CHECK(what::expr_equal(*e2, *want2));

    std::string bad = tmpl;
    bad.replace(bad.find("0 .. %"), 6, "1 .. length");
    CHECK(code_of([&] { parse_how(bad); }) == Errc::SyntaxError);
}

TEST_CASE("validator reports problems in declaration order") {
    const char* text = R"(
INPUT Grab
{
    out = 0;
}

HARNESS ghost IMPLEMENTS spmv_coo
{
}
Marshaling
{
    int g = Grab of val[0 .. rows];
}

HARNESS patchy IMPLEMENTS spmv_csr
{
}
Marshaling
{
    int a = NoSuchClass of matrix_values[0 .. bogus + very_bogus];
    int b = Grab of val[0 .. later];
    int later = Grab of val[0 .. rows];
    int self = Grab of val[0 .. self];
    int usesa = Grab of val[0 .. a];
}
)";
    SpecFile sf = parse_spec(std::string(kSpmvCsr) + text);
    Diagnostics d = validate_how(sf.how, sf.whats);
    REQUIRE(d.size() == 7);
    CHECK(d[0].code == "UnknownComputation");
    CHECK(d[0].message.find("spmv_coo") != std::string::npos);
    CHECK(d[1].code == "UnknownClass");
    CHECK(d[1].message.find("NoSuchClass") != std::string::npos);
    CHECK(d[2].code == "UnknownArray");
    CHECK(d[2].message.find("matrix_values") != std::string::npos);
    CHECK(d[3].code == "OpenExtent");
    CHECK(d[3].message.find("'bogus'") != std::string::npos);
    CHECK(d[4].code == "OpenExtent");
    CHECK(d[4].message.find("'very_bogus'") != std::string::npos);
    CHECK(d[5].code == "OpenExtent");
    CHECK(d[5].message.find("'later'") != std::string::npos);
    CHECK(d[6].code == "OpenExtent");
    CHECK(d[6].message.find("'self'") != std::string::npos);

    Diagnostics d2 = validate_how(sf.how, sf.whats);
    REQUIRE(d2.size() == d.size());
    for (size_t i = 0; i < d.size(); ++i) {
        CHECK(d2[i].code == d[i].code);
        CHECK(d2[i].message == d[i].message);
    }
}

TEST_CASE("marshaling a scalar parameter is an unknown array") {
    const char* text = R"(
INPUT Grab
{
    out = 0;
}
HARNESS h IMPLEMENTS spmv_csr
{
}
Marshaling
{
    int r = Grab of rows[0 .. 1];
}
)";
    SpecFile sf = parse_spec(std::string(kSpmvCsr) + text);
    Diagnostics d = validate_how(sf.how, sf.whats);
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == "UnknownArray");
    CHECK(d[0].message.find("rows") != std::string::npos);
}

TEST_CASE("parse_how keeps only harness material") {
    HowProgram h = parse_how(full_sample());
    CHECK(h.harnesses.size() == 1);
    CHECK(h.marshal_classes.size() == 4);
}

TEST_CASE("unknown top-level construct") {
    CHECK(code_of([] { parse_spec("FOO bar\n"); }) == Errc::SyntaxError);
}
