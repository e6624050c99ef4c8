#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lilac/analysis.hpp"
#include "lilac/interp.hpp"
#include "support/oracles.hpp"
#include "support/programs.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace lilac;
using namespace lilac::interp;
using namespace programs;
using lilac::ir::Module;
using lilac::what::Bindings;
using lilac::what::WhatProgram;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE_MESSAGE(in.good(), "cannot open ", p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Module load_fixture(const char* name) {
    Module m = ir::parse_module(slurp(std::filesystem::path(FIXTURE_DIR) / "ir" / name));
    Diagnostics d = ir::verify(m);
    REQUIRE_MESSAGE(d.empty(), render_diags(d));
    return m;
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

std::uint64_t bits(double d) { return std::bit_cast<std::uint64_t>(d); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (bits(a[i]) != bits(b[i])) return false;
    return true;
}

// csr memory image in the harness calling convention order
struct CsrRun {
    Memory mem;
    int output, row_ptr, val, x, col_ind;
    std::vector<Value> args;

    CsrRun(const oracle::Csr& m, const std::vector<double>& xv) {
        output = mem.alloc_floats("output", std::vector<double>(static_cast<size_t>(m.rows), 0.0));
        row_ptr = mem.alloc_ints("row_ptr", m.row_ptr);
        val = mem.alloc_floats("val", m.val);
        x = mem.alloc_floats("x", xv);
        col_ind = mem.alloc_ints("col_ind", m.col_ind);
        args = {m.rows,          Pointer{output, 0}, Pointer{row_ptr, 0},
                Pointer{val, 0}, Pointer{x, 0},      Pointer{col_ind, 0}};
    }
};

oracle::Csr sample_csr() {
    using namespace oracle::sample5;
    return {rows, cols, csr_val, csr_col_ind, csr_row_ptr};
}

} // namespace

TEST_CASE("the csr kernel computes the sample matrix-vector products") {
    Module m = load_fixture("csr_c.lir");

    CsrRun ones(sample_csr(), oracle::ones(5));
    Value r = run(m, "spmv", ones.args, ones.mem);
    CHECK(std::holds_alternative<std::monostate>(r));
    CHECK_EQ(ones.mem.floats(ones.output), oracle::sample5::y_ones);

    CsrRun counting(sample_csr(), {1, 2, 3, 4, 5});
    run(m, "spmv", counting.args, counting.mem);
    CHECK_EQ(counting.mem.floats(counting.output), oracle::sample5::y_counting);
}

TEST_CASE("two runs with equal inputs are equal, write versions included") {
    Module m = load_fixture("csr_c.lir");
    CsrRun a(sample_csr(), {0.5, -1, 2, 0.25, 3});
    CsrRun b(sample_csr(), {0.5, -1, 2, 0.25, 3});
    run(m, "spmv", a.args, a.mem);
    run(m, "spmv", b.args, b.mem);
    CHECK(same_bits(a.mem.floats(a.output), b.mem.floats(b.output)));
    REQUIRE_EQ(a.mem.count(), b.mem.count());
    for (int i = 0; i < a.mem.count(); ++i) CHECK_EQ(a.mem.write_version(i), b.mem.write_version(i));
    // the loop stores exactly once per row
    CHECK_EQ(a.mem.write_version(a.output), 5);
}

TEST_CASE("the dot fixture reduces orthogonal vectors to exactly zero") {
    Module m = load_fixture("dot_c.lir");
    Memory mem;
    int a = mem.alloc_floats("a", {1, 0});
    int b = mem.alloc_floats("b", {0, 1});
    Value r = run(m, "dot", {std::int64_t{2}, Pointer{a, 0}, Pointer{b, 0}}, mem);
    CHECK_EQ(std::get<double>(r), 0.0);
}

TEST_CASE("runaway loops hit the step limit") {
    Module m = load_fixture("infinite.lir");
    Memory mem;
    CHECK_EQ(code_of([&] { run(m, "spin", {}, mem, {}, 1'000'000); }), Errc::StepLimitExceeded);
}

TEST_CASE("loads outside a buffer are refused") {
    Module m = load_fixture("dot_c.lir");
    Memory mem;
    int a = mem.alloc_floats("a", {1, 2, 3});
    int b = mem.alloc_floats("b", {1, 2});  // one short
    CHECK_EQ(code_of([&] { run(m, "dot", {std::int64_t{3}, Pointer{a, 0}, Pointer{b, 0}}, mem); }),
             Errc::OutOfBounds);
}

TEST_CASE("argument kinds are checked against the entry signature") {
    Module m = load_fixture("dot_c.lir");
    Memory mem;
    int a = mem.alloc_floats("a", {1});
    CHECK_EQ(code_of([&] { run(m, "dot", {Pointer{a, 0}, Pointer{a, 0}, Pointer{a, 0}}, mem); }),
             Errc::TypeTrap);
    CHECK_EQ(code_of([&] { run(m, "nope", {}, mem); }), Errc::DataError);
}

TEST_CASE("calls into a registry without the harness are refused") {
    Module m = ir::parse_module(R"(func @driver(%rows: i64, %output: ptr f64, %nzcnt: ptr i64) -> void {
entry:
  call @lilac.spmv_jds(%rows, %output, %nzcnt)
  ret
}
)");
    REQUIRE(ir::verify(m).empty());
    Memory mem;
    int out = mem.alloc_floats("output", {0});
    int nz = mem.alloc_ints("nzcnt", {0});
    CHECK_EQ(code_of([&] {
                 run(m, "driver", {std::int64_t{1}, Pointer{out, 0}, Pointer{nz, 0}}, mem);
             }),
             Errc::UnregisteredHarness);
}

TEST_CASE("registering the same computations twice is refused") {
    std::vector<WhatProgram> progs;
    progs.push_back(what::parse_what(kDotProduct));
    HarnessRegistry reg;
    register_reference_harnesses(reg, progs);
    CHECK_EQ(code_of([&] { register_reference_harnesses(reg, progs); }), Errc::DuplicateRegistration);
    CHECK_EQ(reg.names(), std::vector<std::string>{"lilac.dotproduct"});
}

TEST_CASE("an IR call through the registry reproduces the csr oracle") {
    std::vector<WhatProgram> progs;
    progs.push_back(what::parse_what(kSpmvCsr));
    HarnessRegistry reg;
    register_reference_harnesses(reg, progs);

    Module m = ir::parse_module(
        R"(func @driver(%rows: i64, %output: ptr f64, %row_ptr: ptr i64, %val: ptr f64, %x: ptr f64, %col_ind: ptr i64) -> void {
entry:
  call @lilac.spmv_csr(%rows, %output, %row_ptr, %val, %x, %col_ind)
  ret
}
)");
    REQUIRE(ir::verify(m).empty());

    CsrRun r(sample_csr(), oracle::ones(5));
    run(m, "driver", r.args, r.mem, reg);
    CHECK_EQ(r.mem.floats(r.output), oracle::sample5::y_ones);
}

TEST_CASE("a scalar-result call returns the dot product directly") {
    std::vector<WhatProgram> progs;
    progs.push_back(what::parse_what(kDotProduct));
    HarnessRegistry reg;
    register_reference_harnesses(reg, progs);

    Module m = ir::parse_module(R"(func @driver(%length: i64, %a: ptr f64, %b: ptr f64) -> f64 {
entry:
  %r = call @lilac.dotproduct(%length, %a, %b)
  ret %r
}
)");
    REQUIRE(ir::verify(m).empty());

    std::mt19937_64 rng(5150);
    for (int t = 0; t < 20; ++t) {
        std::int64_t n = static_cast<std::int64_t>(rng() % 9);
        std::vector<double> av = oracle::random_vector(rng, n);
        std::vector<double> bv = oracle::random_vector(rng, n);
        Memory mem;
        int a = mem.alloc_floats("a", av);
        int b = mem.alloc_floats("b", bv);
        Value r = run(m, "driver", {n, Pointer{a, 0}, Pointer{b, 0}}, mem, reg);
        CHECK_EQ(bits(std::get<double>(r)), bits(oracle::dot(av, bv)));
    }
}

TEST_CASE("reference harnesses match interpret_what bit for bit") {
    std::vector<WhatProgram> progs;
    progs.push_back(what::parse_what(kSpmvCsr));
    progs.push_back(what::parse_what(kSpmvJds));
    progs.push_back(what::parse_what(kGemm));
    HarnessRegistry reg;
    register_reference_harnesses(reg, progs);

    std::mt19937_64 rng(424242);
    for (int t = 0; t < 50; ++t) {
        std::int64_t rows = 1 + static_cast<std::int64_t>(rng() % 8);
        std::int64_t cols = 1 + static_cast<std::int64_t>(rng() % 8);
        std::vector<double> dense = oracle::random_dense(rng, rows, cols, 0.4);
        std::vector<double> xv = oracle::random_vector(rng, cols);

        // csr
        {
            oracle::Csr m = oracle::csr_from_dense(rows, cols, dense);
            Bindings env;
            env.scalars["rows"] = m.rows;
            env.int_arrays["row_ptr"] = m.row_ptr;
            env.int_arrays["col_ind"] = m.col_ind;
            env.float_arrays["val"] = m.val;
            env.float_arrays["x"] = xv;
            env.float_arrays["output"] = std::vector<double>(static_cast<size_t>(rows), 0.0);
            Bindings direct = what::interpret_what(progs[0], std::move(env));

            CsrRun r(m, xv);
            (*reg.find("lilac.spmv_csr"))(r.mem, r.args);
            CHECK(same_bits(r.mem.floats(r.output), direct.float_arrays.at("output")));
        }

        // jds
        {
            oracle::Jds m = oracle::jds_from_dense(rows, cols, dense);
            Bindings env;
            env.scalars["rows"] = m.rows;
            env.int_arrays["nzcnt"] = m.nzcnt;
            env.int_arrays["perm"] = m.perm;
            env.int_arrays["jd_ptr"] = m.jd_ptr;
            env.int_arrays["col_ind"] = m.col_ind;
            env.float_arrays["val"] = m.val;
            env.float_arrays["x"] = xv;
            env.float_arrays["output"] = std::vector<double>(static_cast<size_t>(rows), 0.0);
            Bindings direct = what::interpret_what(progs[1], std::move(env));

            Memory mem;
            int output = mem.alloc_floats("output", std::vector<double>(static_cast<size_t>(rows), 0.0));
            int nzcnt = mem.alloc_ints("nzcnt", m.nzcnt);
            int perm = mem.alloc_ints("perm", m.perm);
            int val = mem.alloc_floats("val", m.val);
            int jd_ptr = mem.alloc_ints("jd_ptr", m.jd_ptr);
            int x = mem.alloc_floats("x", xv);
            int col_ind = mem.alloc_ints("col_ind", m.col_ind);
            std::vector<Value> args = {m.rows,           Pointer{output, 0}, Pointer{nzcnt, 0},
                                       Pointer{perm, 0}, Pointer{val, 0},    Pointer{jd_ptr, 0},
                                       Pointer{x, 0},    Pointer{col_ind, 0}};
            (*reg.find("lilac.spmv_jds"))(mem, args);
            CHECK(same_bits(mem.floats(output), direct.float_arrays.at("output")));
        }

        // gemm: reuse the dense matrix as a, a fresh one as b
        {
            std::int64_t n = rows, mm = cols, p = 1 + static_cast<std::int64_t>(rng() % 6);
            std::vector<double> a = oracle::random_dense(rng, n, p, 0.8);
            std::vector<double> b = oracle::random_dense(rng, p, mm, 0.8);
            Bindings env;
            env.scalars["n"] = n;
            env.scalars["m"] = mm;
            env.scalars["p"] = p;
            env.float_arrays["a"] = a;
            env.float_arrays["b"] = b;
            env.float_arrays["c"] = std::vector<double>(static_cast<size_t>(n * mm), 0.0);
            Bindings direct = what::interpret_what(progs[2], std::move(env));

            Memory mem;
            int c = mem.alloc_floats("c", std::vector<double>(static_cast<size_t>(n * mm), 0.0));
            int ab = mem.alloc_floats("a", a);
            int bb = mem.alloc_floats("b", b);
            std::vector<Value> args = {n, mm, Pointer{c, 0}, p, Pointer{ab, 0}, Pointer{bb, 0}};
            (*reg.find("lilac.gemm"))(mem, args);
            CHECK(same_bits(mem.floats(c), direct.float_arrays.at("c")));
            CHECK(same_bits(mem.floats(c), oracle::gemm(n, mm, p, a, b)));
        }
    }
}

TEST_CASE("normalization does not change what the kernels compute") {
    Module csr = load_fixture("csr_c.lir");
    Module csr_n = analysis::normalize(csr);
    Module dot = load_fixture("dot_c.lir");
    Module dot_n = analysis::normalize(dot);

    std::mt19937_64 rng(777);
    for (int t = 0; t < 10; ++t) {
        std::int64_t rows = 1 + static_cast<std::int64_t>(rng() % 10);
        std::int64_t cols = 1 + static_cast<std::int64_t>(rng() % 10);
        oracle::Csr m = oracle::csr_from_dense(rows, cols, oracle::random_dense(rng, rows, cols, 0.3));
        std::vector<double> xv = oracle::random_vector(rng, cols);
        CsrRun before(m, xv);
        CsrRun after(m, xv);
        run(csr, "spmv", before.args, before.mem);
        run(csr_n, "spmv", after.args, after.mem);
        CHECK(same_bits(before.mem.floats(before.output), after.mem.floats(after.output)));

        std::int64_t n = static_cast<std::int64_t>(rng() % 12);
        std::vector<double> av = oracle::random_vector(rng, n);
        std::vector<double> bv = oracle::random_vector(rng, n);
        Memory m1, m2;
        std::vector<Value> dargs1 = {n, Pointer{m1.alloc_floats("a", av), 0},
                                     Pointer{m1.alloc_floats("b", bv), 0}};
        std::vector<Value> dargs2 = {n, Pointer{m2.alloc_floats("a", av), 0},
                                     Pointer{m2.alloc_floats("b", bv), 0}};
        Value r1 = run(dot, "dot", dargs1, m1);
        Value r2 = run(dot_n, "dot", dargs2, m2);
        CHECK_EQ(bits(std::get<double>(r1)), bits(std::get<double>(r2)));
    }
}
