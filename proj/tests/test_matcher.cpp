#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lilac/matcher.hpp"
#include "support/programs.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lilac;
using namespace lilac::ir;
namespace mt = lilac::match;

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

int block_named(const Function& f, const std::string& name) {
    for (size_t i = 0; i < f.blocks.size(); ++i)
        if (f.blocks[i].name == name) return static_cast<int>(i);
    FAIL("no block ", name);
    return -1;
}

int count_kind(const mt::SearchTrace& t, mt::TraceEvent::Kind k) {
    int n = 0;
    for (const mt::TraceEvent& ev : t)
        if (ev.kind == k) ++n;
    return n;
}

const std::string& free_name(const mt::Solution& s, const std::string& var) {
    auto it = s.frees.find(var);
    REQUIRE_MESSAGE(it != s.frees.end(), "no binding for ", var);
    REQUIRE(it->second.is_value());
    return it->second.name;
}

} // namespace

TEST_CASE("skeletons count the forall depth") {
    CHECK(mt::skeleton_of(what::parse_what(programs::kDotProduct)).forall_depth == 0);
    CHECK(mt::skeleton_of(what::parse_what(programs::kSpmvCsr)).forall_depth == 1);
    CHECK(mt::skeleton_of(what::parse_what(programs::kSpmvJds)).forall_depth == 1);
    CHECK(mt::skeleton_of(what::parse_what(programs::kGemm)).forall_depth == 2);
}

TEST_CASE("matcher fixtures are already in normal form") {
    for (const char* name : {"dot_c.lir", "csr_c.lir", "dot_reversed.lir", "dot_pair.lir",
                             "saxpy.lir", "gemm_c.lir"}) {
        Module m = load_fixture(name);
        CHECK_MESSAGE(module_equal(analysis::normalize(m), m), name);
    }
}

TEST_CASE("candidate enumeration") {
    Module csr = load_fixture("csr_c.lir");
    auto c1 = mt::candidates(csr, {1, true});
    REQUIRE(c1.size() == 1);
    CHECK(c1[0].function == "spmv");
    REQUIRE(c1[0].chain.size() == 2);
    CHECK(c1[0].chain[0].header == block_named(csr.functions[0], "outer_head"));
    CHECK(c1[0].chain[1].header == block_named(csr.functions[0], "inner_head"));
    CHECK(c1[0].reduction == "acc");
    CHECK(c1[0].reduction_update == "acc.next");

    CHECK(mt::candidates(csr, {2, true}).empty());
    CHECK(mt::candidates(load_fixture("saxpy.lir"), {0, true}).empty());
    CHECK(mt::candidates(load_fixture("dot_pair.lir"), {0, true}).size() == 2);
    // the depth-3 nest offers its two inner loops as a depth-2 chain, but
    // only the innermost pair carries the reduction
    Module gemm = load_fixture("gemm_c.lir");
    CHECK(mt::candidates(gemm, {2, true}).size() == 1);
    CHECK(mt::candidates(gemm, {1, true}).size() == 1);
}

TEST_CASE("csr kernel solves without backtracking") {
    Module m = load_fixture("csr_c.lir");
    what::WhatProgram p = what::parse_what(programs::kSpmvCsr);
    auto cands = mt::candidates(m, mt::skeleton_of(p));
    REQUIRE(cands.size() == 1);
    mt::SolveResult r = mt::solve(m, cands[0], p);
    REQUIRE(r.status == mt::SolveStatus::Found);

    CHECK(free_name(r.solution, "rows") == "rows");
    CHECK(free_name(r.solution, "output") == "output");
    CHECK(free_name(r.solution, "row_ptr") == "row_ptr");
    CHECK(free_name(r.solution, "val") == "val");
    CHECK(free_name(r.solution, "x") == "x");
    CHECK(free_name(r.solution, "col_ind") == "col_ind");
    CHECK(free_name(r.solution, "i") == "i");
    CHECK(free_name(r.solution, "j") == "j");
    CHECK(r.solution.frees.size() == 8);

    CHECK(r.target.is_store);
    CHECK(r.target.block == "inner_exit");
    CHECK(r.target.index == 1);

    CHECK(r.solution.slots.at("reduction") == "%acc");
    CHECK(r.solution.slots.at("product") == "%prod");
    CHECK(r.solution.slots.at("iter:0") == "%i");
    CHECK(r.solution.slots.at("iter:1") == "%j");

    // the wrong-base attempt for x[col_ind[j]] dies inside the try and
    // leaves no trace events
    CHECK(count_kind(r.trace, mt::TraceEvent::Kind::Fail) == 0);
    CHECK(count_kind(r.trace, mt::TraceEvent::Kind::Backtrack) == 0);
    CHECK(mt::replay(r.trace) == r.solution.slots);
}

TEST_CASE("detect pairs kernels with the right computation") {
    Module m = load_fixture("csr_c.lir");
    CHECK(mt::detect(m, what::parse_what(programs::kSpmvCsr)).matches.size() == 1);
    CHECK(mt::detect(m, what::parse_what(programs::kSpmvJds)).matches.empty());
    CHECK(mt::detect(m, what::parse_what(programs::kDotProduct)).matches.empty());

    Module gemm = load_fixture("gemm_c.lir");
    CHECK(mt::detect(gemm, what::parse_what(programs::kSpmvCsr)).matches.empty());
    CHECK(mt::detect(gemm, what::parse_what(programs::kDotProduct)).matches.empty());
}

TEST_CASE("scalar-result dot match") {
    Module m = load_fixture("dot_c.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    mt::DetectResult d = mt::detect(m, p);
    REQUIRE(d.matches.size() == 1);
    const mt::Match& mm = d.matches[0];
    CHECK_FALSE(mm.target.is_store);
    CHECK(free_name(mm.solution, "result") == "acc");
    CHECK(free_name(mm.solution, "length") == "length");
    CHECK(free_name(mm.solution, "a") == "a");
    CHECK(free_name(mm.solution, "b") == "b");
}

TEST_CASE("reversed multiply operands force one backtrack") {
    Module m = load_fixture("dot_reversed.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    auto cands = mt::candidates(m, mt::skeleton_of(p));
    REQUIRE(cands.size() == 1);
    mt::SolveResult r = mt::solve(m, cands[0], p);
    REQUIRE(r.status == mt::SolveStatus::Found);

    // b first picks the same load as a; the product step rejects the pairing
    REQUIRE(count_kind(r.trace, mt::TraceEvent::Kind::Fail) == 1);
    REQUIRE(count_kind(r.trace, mt::TraceEvent::Kind::Backtrack) == 1);
    bool fail_before_backtrack = false;
    for (size_t i = 0; i < r.trace.size(); ++i)
        if (r.trace[i].kind == mt::TraceEvent::Kind::Fail) {
            CHECK(r.trace[i].slot == "product");
            REQUIRE(i + 1 < r.trace.size());
            CHECK(r.trace[i + 1].kind == mt::TraceEvent::Kind::Backtrack);
            fail_before_backtrack = true;
        }
    CHECK(fail_before_backtrack);

    CHECK(free_name(r.solution, "a") == "a");
    CHECK(free_name(r.solution, "b") == "b");
    CHECK(mt::replay(r.trace) == r.solution.slots);

    std::string txt = mt::print_trace(r.trace, p);
    CHECK(txt.find("fail product") != std::string::npos);
    CHECK(txt.find("backtrack -> step") != std::string::npos);
    CHECK(txt.find("b[i]") != std::string::npos);
    CHECK(txt.find(":= %acc") != std::string::npos);
}

TEST_CASE("rejected search unwinds to the seed state") {
    // the accumulator picks up an extra term, so no factor pairing works
    const char* text = R"(
func @near(%length: i64, %a: ptr f64, %b: ptr f64) -> f64 {
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
  %bump = fadd %prod, 1.0
  %acc.next = fadd %acc, %bump
  br latch
latch:
  %i.next = add %i, 1
  br head
done:
  ret %acc
}
)";
    Module m = parse_module(text);
    REQUIRE(verify(m).empty());
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    auto cands = mt::candidates(m, mt::skeleton_of(p));
    REQUIRE(cands.size() == 1);
    mt::SolveResult r = mt::solve(m, cands[0], p);
    CHECK(r.status == mt::SolveStatus::NoMatch);
    CHECK(count_kind(r.trace, mt::TraceEvent::Kind::Fail) > 1);
    CHECK(count_kind(r.trace, mt::TraceEvent::Kind::Backtrack) > 1);

    auto replayed = mt::replay(r.trace);
    CHECK(replayed.count("reduction") == 1);
    CHECK(replayed.count("free:length") == 1);
    CHECK(replayed.count("free:a") == 0);
    CHECK(replayed.count("free:b") == 0);
    CHECK(replayed.count("product") == 0);

    CHECK(mt::detect(m, p).matches.empty());
}

TEST_CASE("budget exhaustion is reported, not fatal") {
    Module m = load_fixture("dot_c.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    auto cands = mt::candidates(m, mt::skeleton_of(p));
    REQUIRE(cands.size() == 1);
    CHECK(mt::solve(m, cands[0], p, 2).status == mt::SolveStatus::Budget);

    mt::DetectResult d = mt::detect(m, p, 2);
    CHECK(d.matches.empty());
    REQUIRE(d.results.size() == 1);
    CHECK(d.results[0].status == mt::SolveStatus::Budget);
    REQUIRE(d.diags.size() == 1);
    CHECK(d.diags[0].code == "BudgetExceeded");
    CHECK(d.diags[0].message.find("dot") != std::string::npos);

    // the default budget is plenty
    CHECK(mt::detect(m, p).matches.size() == 1);
}

TEST_CASE("two dots in one function yield two matches") {
    Module m = load_fixture("dot_pair.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    mt::DetectResult d = mt::detect(m, p);
    REQUIRE(d.matches.size() == 2);
    CHECK(free_name(d.matches[0].solution, "result") == "acc1");
    CHECK(free_name(d.matches[0].solution, "a") == "p");
    CHECK(free_name(d.matches[0].solution, "b") == "q");
    CHECK(free_name(d.matches[1].solution, "result") == "acc2");
    CHECK(free_name(d.matches[1].solution, "a") == "p");
    CHECK(free_name(d.matches[1].solution, "b") == "r");
}

TEST_CASE("gemm matches with renamed arrays") {
    Module m = load_fixture("gemm_c.lir");
    what::WhatProgram p = what::parse_what(programs::kGemm);
    mt::DetectResult d = mt::detect(m, p);
    REQUIRE(d.matches.size() == 1);
    const mt::Match& mm = d.matches[0];
    CHECK(free_name(mm.solution, "c") == "cc");
    CHECK(free_name(mm.solution, "a") == "aa");
    CHECK(free_name(mm.solution, "b") == "bb");
    CHECK(free_name(mm.solution, "n") == "n");
    CHECK(free_name(mm.solution, "m") == "m");
    CHECK(free_name(mm.solution, "p") == "p");
    CHECK(free_name(mm.solution, "i") == "i");
    CHECK(free_name(mm.solution, "j") == "j");
    CHECK(free_name(mm.solution, "k") == "k");
    CHECK(mm.target.is_store);
    CHECK(mm.target.block == "k_exit");
    CHECK(mm.target.index == 3);
    REQUIRE(mm.chain.size() == 3);
}

TEST_CASE("detection is deterministic") {
    Module m = load_fixture("dot_pair.lir");
    what::WhatProgram p = what::parse_what(programs::kDotProduct);
    mt::DetectResult d1 = mt::detect(m, p);
    mt::DetectResult d2 = mt::detect(m, p);
    REQUIRE(d1.matches.size() == d2.matches.size());
    for (size_t i = 0; i < d1.matches.size(); ++i) {
        CHECK(d1.matches[i].solution.slots == d2.matches[i].solution.slots);
        CHECK(d1.matches[i].function == d2.matches[i].function);
    }
    REQUIRE(d1.results.size() == d2.results.size());
    for (size_t i = 0; i < d1.results.size(); ++i)
        CHECK(mt::print_trace(d1.results[i].trace, p) == mt::print_trace(d2.results[i].trace, p));
}
