#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lilac/interp.hpp"
#include "lilac/rewrite.hpp"
#include "support/oracles.hpp"
#include "support/programs.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace lilac;
using namespace lilac::ir;
using interp::Pointer;
using interp::Value;
namespace mt = lilac::match;
namespace rw = lilac::rewrite;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE_MESSAGE(in.good(), "cannot open ", p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Module load_fixture(const char* name) {
    Module m = parse_module(slurp(std::filesystem::path(FIXTURE_DIR) / "ir" / name));
    Diagnostics d = verify(m);
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

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    return true;
}

interp::HarnessRegistry reference_registry() {
    std::vector<what::WhatProgram> whats;
    whats.push_back(what::parse_what(programs::kSpmvCsr));
    whats.push_back(what::parse_what(programs::kDotProduct));
    interp::HarnessRegistry reg;
    interp::register_reference_harnesses(reg, whats);
    return reg;
}

// csr memory image in the harness calling convention order
struct CsrRun {
    interp::Memory mem;
    int output;
    std::vector<Value> args;

    explicit CsrRun(const oracle::Csr& m, const std::vector<double>& xv) {
        output = mem.alloc_floats("output", std::vector<double>(static_cast<size_t>(m.rows), 0.0));
        int row_ptr = mem.alloc_ints("row_ptr", m.row_ptr);
        int val = mem.alloc_floats("val", m.val);
        int x = mem.alloc_floats("x", xv);
        int col_ind = mem.alloc_ints("col_ind", m.col_ind);
        args = {m.rows,          Pointer{output, 0}, Pointer{row_ptr, 0},
                Pointer{val, 0}, Pointer{x, 0},      Pointer{col_ind, 0}};
    }
};

std::vector<double> run_csr(const Module& m, const oracle::Csr& mat, const std::vector<double>& xv,
                            const interp::HarnessRegistry& reg) {
    CsrRun r(mat, xv);
    interp::run(m, "spmv", r.args, r.mem, reg);
    return r.mem.floats(r.output);
}

mt::Match first_match(const mt::DetectResult& d) {
    REQUIRE(d.matches.size() >= 1);
    return d.matches[0];
}

} // namespace

TEST_CASE("csr plan resolves the full signature in order") {
    Module m = load_fixture("csr_c.lir");
    what::WhatProgram p = what::parse_what(programs::kSpmvCsr);
    mt::DetectResult d = mt::detect(m, p);
    rw::RewritePlan pl = rw::plan(d.module, first_match(d), what::infer_interface(p), "lilac.spmv_csr");

    REQUIRE(pl.args.size() == 6);
    const char* expect[] = {"rows", "output", "row_ptr", "val", "x", "col_ind"};
    for (size_t i = 0; i < 6; ++i) {
        REQUIRE(pl.args[i].is_value());
        CHECK(pl.args[i].name == expect[i]);
    }
    CHECK_FALSE(pl.scalar_result_slot.has_value());
    CHECK(pl.harness_name == "lilac.spmv_csr");
}

TEST_CASE("scalar plan carves out a result value") {
    Module m = load_fixture("dot_c.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    mt::DetectResult d = mt::detect(m, p);
    rw::RewritePlan pl = rw::plan(d.module, first_match(d), what::infer_interface(p), "lilac.dotproduct");

    REQUIRE(pl.args.size() == 3);  // result param dropped
    CHECK(pl.args[0].name == "length");
    CHECK(pl.args[1].name == "a");
    CHECK(pl.args[2].name == "b");
    REQUIRE(pl.scalar_result_slot.has_value());
    CHECK(*pl.scalar_result_slot == "dotproduct.result");
}

TEST_CASE("unmatched stores refuse the rewrite") {
    Module m = load_fixture("csr_sideeffect.lir");
    what::WhatProgram p = what::parse_what(programs::kSpmvCsr);
    mt::DetectResult d = mt::detect(m, p);
    REQUIRE(d.matches.size() == 1);  // the match itself is fine
    CHECK(code_of([&] {
              rw::plan(d.module, d.matches[0], what::infer_interface(p), "lilac.spmv_csr");
          }) == Errc::SideEffectsInLoop);

    rw::RewriteAllResult all = rw::rewrite_all(m, p, "lilac.spmv_csr");
    CHECK(all.applied == 0);
    CHECK(has_diag(all.diags, "SideEffectsInLoop"));
    CHECK(module_equal(all.module, analysis::normalize(m)));
}

TEST_CASE("bindings defined inside the nest are rejected") {
    Module m = load_fixture("csr_c.lir");
    what::WhatProgram p = what::parse_what(programs::kSpmvCsr);
    mt::DetectResult d = mt::detect(m, p);
    mt::Match tampered = first_match(d);
    tampered.solution.frees["val"] = Operand::value("lo");  // defined in outer_body
    CHECK(code_of([&] {
              rw::plan(d.module, tampered, what::infer_interface(p), "lilac.spmv_csr");
          }) == Errc::ArgNotLoopInvariant);
}

TEST_CASE("csr rewrite reproduces the golden file") {
    Module m = load_fixture("csr_c.lir");
    what::WhatProgram p = what::parse_what(programs::kSpmvCsr);
    rw::RewriteAllResult all = rw::rewrite_all(m, p, "lilac.spmv_csr");
    REQUIRE(all.applied == 1);
    CHECK(all.diags.empty());
    CHECK(print_module(all.module) ==
          slurp(std::filesystem::path(FIXTURE_DIR) / "ir" / "csr_c.rewritten.lir"));
    CHECK(verify(all.module).empty());
    CHECK(module_equal(analysis::normalize(all.module), all.module));

    // nothing left to match
    CHECK(mt::detect(all.module, p).matches.empty());
}

TEST_CASE("rewritten csr is bit-exact against the original") {
    Module m = load_fixture("csr_c.lir");
    what::WhatProgram p = what::parse_what(programs::kSpmvCsr);
    Module rewritten = rw::rewrite_all(m, p, "lilac.spmv_csr").module;
    interp::HarnessRegistry reg = reference_registry();

    oracle::Csr sample{oracle::sample5::rows, oracle::sample5::cols, oracle::sample5::csr_val,
                       oracle::sample5::csr_col_ind, oracle::sample5::csr_row_ptr};
    CHECK(same_bits(run_csr(m, sample, oracle::ones(sample.cols), {}),
                    run_csr(rewritten, sample, oracle::ones(sample.cols), reg)));

    std::mt19937_64 rng(2024);
    for (int t = 0; t < 10; ++t) {
        std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 24);
        std::vector<double> dense = oracle::random_dense(rng, n, n, 0.3);
        oracle::Csr mat = oracle::csr_from_dense(n, n, dense);
        std::vector<double> xv = oracle::random_vector(rng, n);
        std::vector<double> want = run_csr(m, mat, xv, {});
        CHECK(same_bits(want, run_csr(rewritten, mat, xv, reg)));
        CHECK(same_bits(want, oracle::dense_spmv(n, n, dense, xv)));
    }
}

TEST_CASE("rewritten scalar dot is bit-exact against the original") {
    Module m = load_fixture("dot_c.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    rw::RewriteAllResult all = rw::rewrite_all(m, p, "lilac.dotproduct");
    REQUIRE(all.applied == 1);
    CHECK(verify(all.module).empty());
    CHECK(module_equal(analysis::normalize(all.module), all.module));
    interp::HarnessRegistry reg = reference_registry();

    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t) {
        std::int64_t n = static_cast<std::int64_t>(rng() % 40);
        std::vector<double> av = oracle::random_vector(rng, n);
        std::vector<double> bv = oracle::random_vector(rng, n);

        interp::Memory m1;
        Value r1 = interp::run(m, "dot",
                               {n, Pointer{m1.alloc_floats("a", av), 0},
                                Pointer{m1.alloc_floats("b", bv), 0}},
                               m1);
        interp::Memory m2;
        Value r2 = interp::run(all.module, "dot",
                               {n, Pointer{m2.alloc_floats("a", av), 0},
                                Pointer{m2.alloc_floats("b", bv), 0}},
                               m2, reg);
        CHECK(std::bit_cast<std::uint64_t>(std::get<double>(r1)) ==
              std::bit_cast<std::uint64_t>(std::get<double>(r2)));
    }
}

TEST_CASE("both dots of a pair rewrite and agree") {
    Module m = load_fixture("dot_pair.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    rw::RewriteAllResult all = rw::rewrite_all(m, p, "lilac.dotproduct");
    REQUIRE(all.applied == 2);
    CHECK(verify(all.module).empty());
    interp::HarnessRegistry reg = reference_registry();

    std::mt19937_64 rng(11);
    std::int64_t n = 17;
    std::vector<double> pv = oracle::random_vector(rng, n);
    std::vector<double> qv = oracle::random_vector(rng, n);
    std::vector<double> rv = oracle::random_vector(rng, n);

    auto run_twice = [&](const Module& mod, const interp::HarnessRegistry& r) {
        interp::Memory mem;
        int out = mem.alloc_floats("out", {0.0, 0.0});
        interp::run(mod, "twice",
                    {n, Pointer{mem.alloc_floats("p", pv), 0}, Pointer{mem.alloc_floats("q", qv), 0},
                     Pointer{mem.alloc_floats("r", rv), 0}, Pointer{out, 0}},
                    mem, r);
        return mem.floats(out);
    };
    std::vector<double> want = run_twice(m, {});
    CHECK(same_bits(want, run_twice(all.module, reg)));
    CHECK(std::bit_cast<std::uint64_t>(want[0]) ==
          std::bit_cast<std::uint64_t>(oracle::dot(pv, qv)));
    CHECK(std::bit_cast<std::uint64_t>(want[1]) ==
          std::bit_cast<std::uint64_t>(oracle::dot(pv, rv)));
}

TEST_CASE("values escaping the nest besides the result roll the rewrite back") {
    // the final iterator value leaks out through the exit block, which the
    // call cannot reproduce
    const char* text = R"(
func @leaky(%length: i64, %a: ptr f64, %b: ptr f64, %out: ptr f64) -> void {
entry:
  br head
head:
  %i = phi [0, entry], [%i.next, latch]
  %acc = phi [0.0, entry], [%acc.next, latch]
  %cmp = icmp.slt %i, %length
  condbr %cmp, body, done
body:
  %a.addr = elemptr %a, %i
  %av = load %a.addr
  %b.addr = elemptr %b, %i
  %bv = load %b.addr
  %prod = fmul %av, %bv
  %acc.next = fadd %acc, %prod
  br latch
latch:
  %i.next = add %i, 1
  br head
done:
  %o = elemptr %out, %i
  store %acc, %o
  ret
}
)";
    Module m = parse_module(text);
    REQUIRE(verify(m).empty());
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    mt::DetectResult d = mt::detect(m, p);
    REQUIRE(d.matches.size() == 1);
    rw::RewritePlan pl = rw::plan(d.module, d.matches[0], what::infer_interface(p), "lilac.dotproduct");
    rw::RewriteResult r = rw::apply(d.module, pl);
    CHECK_FALSE(r.applied);
    CHECK(has_diag(r.diags, "VerifyFailed"));
    CHECK(module_equal(r.module, d.module));

    rw::RewriteAllResult all = rw::rewrite_all(m, p, "lilac.dotproduct");
    CHECK(all.applied == 0);
    CHECK(has_diag(all.diags, "VerifyFailed"));
}

TEST_CASE("no matches means no changes") {
    Module m = load_fixture("saxpy.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    rw::RewriteAllResult all = rw::rewrite_all(m, p, "lilac.dotproduct");
    CHECK(all.applied == 0);
    CHECK(all.diags.empty());
    CHECK(module_equal(all.module, m));
}
