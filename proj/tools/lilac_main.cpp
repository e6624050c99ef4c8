// lilac: batch front door for the toolkit. Subcommands map 1:1 onto the
// library passes; exit codes are part of the contract:
//   0 success, 1 parse error, 2 validation error, 3 no matches,
//   4 runtime trap, 5 search budget exceeded.

#include "CLI11.hpp"
#include "json.hpp"

#include "lilac/analysis.hpp"
#include "lilac/harnessgen.hpp"
#include "lilac/how.hpp"
#include "lilac/interp.hpp"
#include "lilac/marshal.hpp"
#include "lilac/matcher.hpp"
#include "lilac/rewrite.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using ojson = nlohmann::ordered_json;
using namespace lilac;

namespace {

constexpr const char* kVersionLine = "lilac 0.1.0 (formats: lilac 1, lir 1, json 1)";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write '" + path + "'");
    out << text;
}

// "" means standard output.
void emit(const std::string& path, const std::string& text) {
    if (path.empty())
        std::cout << text;
    else
        spill(path, text);
}

int exit_code_for(Errc c) {
    switch (c) {
    case Errc::SyntaxError:
    case Errc::DuplicateIterator:
    case Errc::EmptyBody:
    case Errc::MultiIndexUnsupported:
    case Errc::KindConflict:
    case Errc::UnboundVariable:
    case Errc::DuplicateHarness:
    case Errc::UnbalancedCodeBlock:
    case Errc::UnknownOpcode:
    case Errc::TypeAnnotationMismatch:
    case Errc::IoError:
        return 1;
    case Errc::OutOfBounds:
    case Errc::StepLimitExceeded:
    case Errc::UnregisteredHarness:
    case Errc::DuplicateRegistration:
    case Errc::TypeTrap:
    case Errc::HookFailure:
        return 4;
    case Errc::BudgetExceeded:
        return 5;
    default:
        return 2;  // validation family
    }
}

void report(const Diagnostics& diags) {
    if (!diags.empty()) std::cerr << render_diags(diags);
}

ojson diags_json(const Diagnostics& diags) {
    ojson arr = ojson::array();
    for (const Diagnostic& d : diags) arr.push_back({{"code", d.code}, {"message", d.message}});
    return arr;
}

// Parses and structurally verifies one .lir file; verify failures are
// validation errors (exit 2) carried as an Error for uniform handling.
ir::Module load_module(const std::string& path) {
    ir::Module m = ir::parse_module(slurp(path));
    Diagnostics diags = ir::verify(m);
    if (!diags.empty()) {
        report(diags);
        throw Error(Errc::DataError, "'" + path + "' failed verification");
    }
    return m;
}

how::SpecFile load_spec(const std::string& path) { return how::parse_spec(slurp(path)); }

// Restrict the computations to --what when given.
std::vector<const what::WhatProgram*> select_whats(const how::SpecFile& sf,
                                                   const std::string& name) {
    if (name.empty()) {
        std::vector<const what::WhatProgram*> all;
        for (const what::WhatProgram& w : sf.whats) all.push_back(&w);
        return all;
    }
    if (const what::WhatProgram* p = sf.find_what(name)) return {p};
    throw Error(Errc::DataError, "unknown computation '" + name + "'");
}

// The contract example prints integer-valued doubles without a decimal point.
std::string fmt_double(double v) {
    if (v == static_cast<double>(static_cast<std::int64_t>(v)) && std::abs(v) < (1LL << 53))
        return std::to_string(static_cast<std::int64_t>(v));
    return ojson(v).dump();
}

// ---- check ------------------------------------------------------------------

struct CheckArgs {
    std::string spec;
    std::string format = "text";
};

int cmd_check(const CheckArgs& a) {
    how::SpecFile sf = load_spec(a.spec);
    if (sf.whats.empty() && sf.how.harnesses.empty() && sf.how.marshal_classes.empty())
        throw Error(Errc::SyntaxError, "'" + a.spec + "' declares nothing");
    Diagnostics diags = how::validate_how(sf.how, sf.whats);
    report(diags);
    if (a.format == "json") {
        ojson out;
        out["computations"] = ojson::array();
        for (const what::WhatProgram& w : sf.whats) out["computations"].push_back(w.name);
        out["harnesses"] = ojson::array();
        for (const how::Harness& h : sf.how.harnesses) out["harnesses"].push_back(h.name);
        out["diags"] = diags_json(diags);
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "ok: " << sf.whats.size() << " computation(s), " << sf.how.harnesses.size()
                  << " harness(es)\n";
    }
    return diags.empty() ? 0 : 2;
}

// ---- detect -----------------------------------------------------------------

struct DetectArgs {
    std::string spec, module;
    std::string what;
    std::string format = "text";
    int budget = match::kDefaultBudget;
    bool trace = false;
};

struct FoundMatch {
    std::string what;
    match::Match m;
    const ir::Module* module;
};

// Bindings rendered in harness-signature order so output is deterministic and
// matches the parameter list users see elsewhere.
std::vector<std::pair<std::string, std::string>> ordered_bindings(const what::WhatProgram& p,
                                                                  const match::Match& m) {
    std::vector<std::pair<std::string, std::string>> out;
    what::HarnessSignature sig = what::infer_interface(p);
    for (const what::Param& prm : sig.params) {
        auto it = m.solution.frees.find(prm.name);
        if (it != m.solution.frees.end()) out.emplace_back(prm.name, ir::print_operand(it->second));
    }
    return out;
}

std::string header_block_of(const ir::Module& m, const match::Match& mt) {
    const ir::Function* f = m.find_function(mt.function);
    if (!f || mt.chain.empty()) return "";
    return f->blocks[static_cast<size_t>(mt.chain.front().header)].name;
}

int cmd_detect(const DetectArgs& a) {
    how::SpecFile sf = load_spec(a.spec);
    std::vector<const what::WhatProgram*> whats = select_whats(sf, a.what);
    ir::Module m = load_module(a.module);

    std::vector<FoundMatch> found;
    std::vector<std::pair<std::string, match::DetectResult>> per_what;
    Diagnostics diags;
    for (const what::WhatProgram* p : whats) {
        match::DetectResult dr = match::detect(m, *p, a.budget);
        for (const match::Match& mt : dr.matches) found.push_back({p->name, mt, nullptr});
        for (const Diagnostic& d : dr.diags) diags.push_back(d);
        per_what.emplace_back(p->name, std::move(dr));
    }
    report(diags);

    if (a.format == "json") {
        ojson out;
        out["matches"] = ojson::array();
        for (const FoundMatch& fm : found) {
            const match::DetectResult& dr = [&]() -> const match::DetectResult& {
                for (auto& [n, r] : per_what)
                    if (n == fm.what) return r;
                throw Error(Errc::DataError, "lost detect result");
            }();
            const what::WhatProgram* p = sf.find_what(fm.what);
            ojson rec;
            rec["what"] = fm.what;
            rec["function"] = fm.m.function;
            rec["header_block"] = header_block_of(dr.module, fm.m);
            ojson binds;
            for (auto& [k, v] : ordered_bindings(*p, fm.m)) binds[k] = v;
            rec["bindings"] = binds;
            out["matches"].push_back(rec);
        }
        out["diags"] = diags_json(diags);
        std::cout << out.dump(2) << "\n";
    } else {
        for (auto& [what_name, dr] : per_what) {
            const what::WhatProgram* p = sf.find_what(what_name);
            if (a.trace) {
                for (size_t i = 0; i < dr.results.size(); ++i) {
                    const char* status = dr.results[i].status == match::SolveStatus::Found
                                             ? "found"
                                             : (dr.results[i].status == match::SolveStatus::Budget
                                                    ? "budget exceeded"
                                                    : "no match");
                    std::cout << "candidate " << what_name << "/" << i << " in @"
                              << dr.cands[i].function << ": " << status << "\n";
                    std::istringstream lines(match::print_trace(dr.results[i].trace, *p));
                    std::string line;
                    while (std::getline(lines, line)) std::cout << "  " << line << "\n";
                }
            }
            for (const match::Match& mt : dr.matches) {
                std::cout << "match: " << what_name << " in @" << mt.function << " at "
                          << header_block_of(dr.module, mt) << "\n";
                for (auto& [k, v] : ordered_bindings(*p, mt))
                    std::cout << "  " << k << " = " << v << "\n";
            }
        }
    }

    if (!found.empty()) return 0;
    return has_diag(diags, "BudgetExceeded") ? 5 : 3;
}

// ---- rewrite ----------------------------------------------------------------

struct RewriteArgs {
    std::string spec, module;
    std::string what, harness, out;
    std::string format = "text";
    int budget = match::kDefaultBudget;
};

int cmd_rewrite(const RewriteArgs& a) {
    how::SpecFile sf = load_spec(a.spec);
    std::vector<const what::WhatProgram*> whats = select_whats(sf, a.what);
    std::string input_text = slurp(a.module);
    ir::Module m = ir::parse_module(input_text);
    {
        Diagnostics vd = ir::verify(m);
        if (!vd.empty()) {
            report(vd);
            throw Error(Errc::DataError, "'" + a.module + "' failed verification");
        }
    }

    int applied = 0;
    Diagnostics diags;
    for (const what::WhatProgram* p : whats) {
        std::string callee = a.harness.empty() ? "lilac." + p->name : a.harness;
        rewrite::RewriteAllResult rr = rewrite::rewrite_all(m, *p, callee, a.budget);
        m = std::move(rr.module);
        applied += rr.applied;
        for (const Diagnostic& d : rr.diags) diags.push_back(d);
    }
    report(diags);

    // zero rewrites: the input passes through untouched
    std::string out_text = applied > 0 ? ir::print_module(m) : input_text;
    if (a.format == "json") {
        if (a.out.empty())
            throw Error(Errc::DataError, "--format json needs -o for the module text");
        spill(a.out, out_text);
        ojson summary{{"applied", applied}, {"diags", diags_json(diags)}};
        std::cout << summary.dump(2) << "\n";
    } else {
        emit(a.out, out_text);
        std::cerr << "rewrote " << applied << " nest(s)\n";
    }

    if (applied > 0) return 0;
    return has_diag(diags, "BudgetExceeded") ? 5 : 3;
}

// ---- gen-harness ------------------------------------------------------------

struct GenArgs {
    std::string spec, out_dir;
    std::string harness;
    std::string ext = ".gen.cpp";
    std::string format = "text";
};

int cmd_gen_harness(const GenArgs& a) {
    how::SpecFile sf = load_spec(a.spec);
    auto outs = harnessgen::gen_all(sf.how, sf.whats);
    if (!a.harness.empty()) {
        std::erase_if(outs, [&](const auto& pr) { return pr.first != a.harness; });
        if (outs.empty()) throw Error(Errc::DataError, "unknown harness '" + a.harness + "'");
    }

    std::filesystem::create_directories(a.out_dir);
    std::vector<std::string> written;
    for (const auto& [name, text] : outs) {
        std::string path = (std::filesystem::path(a.out_dir) / (name + a.ext)).string();
        spill(path, text);
        written.push_back(path);
    }

    if (a.format == "json") {
        ojson out{{"files", written}};
        std::cout << out.dump(2) << "\n";
    } else {
        for (const std::string& p : written) std::cout << "wrote " << p << "\n";
    }
    return 0;
}

// ---- normalize --------------------------------------------------------------

struct NormalizeArgs {
    std::string module, out;
};

int cmd_normalize(const NormalizeArgs& a) {
    ir::Module m = load_module(a.module);
    emit(a.out, ir::print_module(analysis::normalize(m)));
    return 0;
}

// ---- run --------------------------------------------------------------------

struct RunArgs {
    std::string module, entry, data;
    std::string with_reference;  // spec path; empty = no harness registry
    std::string strategy;        // LILAC_MARSHAL_STRATEGY name; empty = plain registry
    std::string format = "text";
    std::int64_t step_limit = interp::kDefaultStepLimit;
    bool stats = false;
};

// One marshal-wrapped array parameter of a reference harness.
struct WrappedParam {
    what::Param param;
    std::unique_ptr<marshal::MarshalObject<std::vector<std::int64_t>>> ints;
    std::unique_ptr<marshal::MarshalObject<std::vector<double>>> floats;

    const marshal::MarshalObjectBase* object() const {
        if (ints) return ints.get();
        return floats.get();
    }
};

struct WrapState {
    std::shared_ptr<what::WhatProgram> prog;
    std::shared_ptr<what::HarnessSignature> sig;
    std::string scalar_name;
    std::vector<std::unique_ptr<WrappedParam>> params;  // signature order, arrays only
};

marshal::RegionRef slice_ref(const interp::Memory& mem, const interp::Pointer& p,
                             std::size_t elem_size) {
    const void* base = nullptr;
    std::size_t count = 0;
    if (mem.kind(p.buffer) == interp::ElemKind::I64) {
        const auto& v = mem.ints(p.buffer);
        base = v.data() + p.offset;
        count = v.size() - static_cast<std::size_t>(p.offset);
    } else {
        const auto& v = mem.floats(p.buffer);
        base = v.data() + p.offset;
        count = v.size() - static_cast<std::size_t>(p.offset);
    }
    return {base, count * elem_size, &mem, p.buffer};
}

// Registers reference harnesses whose array traffic flows through marshal
// objects: inputs are mirrored into host vectors only when the tracked buffer
// changed; outputs go back through write_back. Arithmetic is the shared
// What-interpreter, so results stay bit-identical to the plain registry.
std::vector<std::shared_ptr<WrapState>> register_marshaled_harnesses(
    interp::HarnessRegistry& reg, const std::vector<what::WhatProgram>& whats,
    marshal::Strategy strategy) {
    std::vector<std::shared_ptr<WrapState>> states;
    for (const what::WhatProgram& w : whats) {
        auto st = std::make_shared<WrapState>();
        st->prog = std::make_shared<what::WhatProgram>(what::parse_what(what::print_what(w)));
        st->sig = std::make_shared<what::HarnessSignature>(what::infer_interface(*st->prog));
        st->scalar_name = st->sig->scalar_result ? st->prog->dot.target->name : "";
        for (const what::Param& p : st->sig->params) {
            if (p.kind == what::ParamKind::ScalarInt || p.name == st->scalar_name) continue;
            auto wp = std::make_unique<WrappedParam>();
            wp->param = p;
            std::string label = w.name + "." + p.name;
            if (p.kind == what::ParamKind::ArrayInt)
                wp->ints = std::make_unique<marshal::MarshalObject<std::vector<std::int64_t>>>(
                    label, strategy);
            else
                wp->floats =
                    std::make_unique<marshal::MarshalObject<std::vector<double>>>(label, strategy);
            st->params.push_back(std::move(wp));
        }
        states.push_back(st);

        reg.add("lilac." + w.name, [st](interp::Memory& mem,
                                        const std::vector<interp::Value>& args) -> interp::Value {
            what::Bindings b;
            std::vector<std::pair<WrappedParam*, interp::Pointer>> outputs;
            size_t ai = 0, wi = 0;
            auto nop_i = [](const void*, std::size_t, std::vector<std::int64_t>&) {};
            auto nop_f = [](const void*, std::size_t, std::vector<double>&) {};
            for (const what::Param& p : st->sig->params) {
                if (p.name == st->scalar_name) {
                    b.float_arrays[p.name] = {0.0};
                    continue;
                }
                if (ai >= args.size())
                    throw Error(Errc::TypeTrap, "harness call is missing an argument for " + p.name);
                const interp::Value& v = args[ai++];
                if (p.kind == what::ParamKind::ScalarInt) {
                    if (!std::holds_alternative<std::int64_t>(v))
                        throw Error(Errc::TypeTrap, p.name + " expects an integer");
                    b.scalars[p.name] = std::get<std::int64_t>(v);
                    continue;
                }
                if (!std::holds_alternative<interp::Pointer>(v))
                    throw Error(Errc::TypeTrap, p.name + " expects a pointer");
                interp::Pointer ptr = std::get<interp::Pointer>(v);
                WrappedParam* wp = st->params[wi++].get();
                switch (p.kind) {
                case what::ParamKind::ArrayInt: {
                    auto copy_in = [](const void* in, std::size_t size,
                                      std::vector<std::int64_t>& out) {
                        const auto* src = static_cast<const std::int64_t*>(in);
                        out.assign(src, src + size / sizeof(std::int64_t));
                    };
                    b.int_arrays[p.name] = wp->ints->acquire(
                        slice_ref(mem, ptr, sizeof(std::int64_t)), nop_i, copy_in, nop_i);
                    break;
                }
                case what::ParamKind::ArrayFloatIn: {
                    auto copy_in = [](const void* in, std::size_t size, std::vector<double>& out) {
                        const auto* src = static_cast<const double*>(in);
                        out.assign(src, src + size / sizeof(double));
                    };
                    b.float_arrays[p.name] = wp->floats->acquire(
                        slice_ref(mem, ptr, sizeof(double)), nop_f, copy_in, nop_f);
                    break;
                }
                case what::ParamKind::ArrayFloatOut: {
                    // live contents seed the computation so untouched tail
                    // elements write back unchanged
                    const auto& all = mem.floats(ptr.buffer);
                    b.float_arrays[p.name].assign(all.begin() + ptr.offset, all.end());
                    auto write_out = [pm = &mem, ptr](const void*, std::size_t,
                                                      std::vector<double>& out) {
                        for (size_t i = 0; i < out.size(); ++i)
                            pm->store_float({ptr.buffer,
                                             ptr.offset + static_cast<std::int64_t>(i)},
                                            out[i]);
                    };
                    wp->floats->acquire_out(slice_ref(mem, ptr, sizeof(double)), nop_f, write_out,
                                            nop_f);
                    outputs.emplace_back(wp, ptr);
                    break;
                }
                default:
                    break;
                }
            }
            if (ai != args.size())
                throw Error(Errc::TypeTrap, "harness call passes " + std::to_string(args.size()) +
                                                " arguments, expected " + std::to_string(ai));

            what::Bindings result = what::interpret_what(*st->prog, std::move(b));

            for (auto& [wp, ptr] : outputs) {
                wp->floats->out() = result.float_arrays.at(wp->param.name);
                wp->floats->write_back();
            }
            if (!st->scalar_name.empty()) return result.float_arrays.at(st->scalar_name).at(0);
            return {};
        });
    }
    return states;
}

int cmd_run(const RunArgs& a) {
    ir::Module m = load_module(a.module);
    const ir::Function* f = m.find_function(a.entry);
    if (!f) throw Error(Errc::DataError, "no function '@" + a.entry + "' in '" + a.module + "'");

    ojson data = ojson::object();
    if (!a.data.empty()) {
        try {
            data = ojson::parse(slurp(a.data));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::SyntaxError, std::string("bad data file: ") + e.what());
        }
        if (!data.is_object()) throw Error(Errc::DataError, "data file must be a JSON object");
    }

    // arguments per entry signature, kinds checked against the data file
    interp::Memory mem;
    std::vector<interp::Value> args;
    std::vector<std::pair<std::string, int>> array_params;  // data-file printable arrays
    std::vector<std::uint64_t> versions;
    for (const ir::FuncParam& p : f->params) {
        if (!data.contains(p.name))
            throw Error(Errc::DataError, "data file is missing '" + p.name + "'");
        const ojson& v = data[p.name];
        switch (p.type) {
        case ir::Type::I64:
            if (!v.is_number_integer())
                throw Error(Errc::DataError, "'" + p.name + "' must be an integer");
            args.push_back(v.get<std::int64_t>());
            break;
        case ir::Type::F64:
            if (!v.is_number())
                throw Error(Errc::DataError, "'" + p.name + "' must be a number");
            args.push_back(v.get<double>());
            break;
        case ir::Type::PtrI64: {
            if (!v.is_array())
                throw Error(Errc::DataError, "'" + p.name + "' must be an array of integers");
            std::vector<std::int64_t> vals;
            for (const ojson& e : v) {
                if (!e.is_number_integer())
                    throw Error(Errc::DataError, "'" + p.name + "' must be an array of integers");
                vals.push_back(e.get<std::int64_t>());
            }
            int b = mem.alloc_ints(p.name, std::move(vals));
            array_params.emplace_back(p.name, b);
            args.push_back(interp::Pointer{b, 0});
            break;
        }
        case ir::Type::PtrF64: {
            if (!v.is_array())
                throw Error(Errc::DataError, "'" + p.name + "' must be an array of numbers");
            std::vector<double> vals;
            for (const ojson& e : v) {
                if (!e.is_number())
                    throw Error(Errc::DataError, "'" + p.name + "' must be an array of numbers");
                vals.push_back(e.get<double>());
            }
            int b = mem.alloc_floats(p.name, std::move(vals));
            array_params.emplace_back(p.name, b);
            args.push_back(interp::Pointer{b, 0});
            break;
        }
        default:
            throw Error(Errc::DataError, "'" + p.name + "' has an unsupported parameter type");
        }
    }
    if (data.size() != f->params.size())
        for (auto& [key, _] : data.items())
            if (!f->find_param(key))
                throw Error(Errc::DataError, "data file key '" + key + "' matches no parameter");
    for (auto& [name, b] : array_params) versions.push_back(mem.write_version(b));

    // harness registry, marshal-wrapped when a strategy or stats are wanted
    interp::HarnessRegistry reg;
    std::vector<std::shared_ptr<WrapState>> wrapped;
    if (!a.with_reference.empty()) {
        how::SpecFile sf = load_spec(a.with_reference);
        if (!a.strategy.empty() || a.stats) {
            marshal::Strategy s = a.strategy.empty() ? marshal::default_strategy()
                                                     : marshal::parse_strategy(a.strategy);
            wrapped = register_marshaled_harnesses(reg, sf.whats, s);
        } else {
            interp::register_reference_harnesses(reg, sf.whats);
        }
    }

    interp::Value result = interp::run(m, a.entry, args, mem, reg, a.step_limit);

    ojson stats_rows = ojson::array();
    if (a.stats) {
        for (const auto& st : wrapped)
            for (const auto& wp : st->params) {
                const marshal::MarshalObjectBase* obj = wp->object();
                const marshal::MarshalCounters& c = obj->counters();
                if (c.n_construct == 0 && c.n_update == 0 && c.n_destruct == 0)
                    continue;  // harness never invoked: nothing to report
                stats_rows.push_back({{"region", obj->name()},
                                      {"n_construct", c.n_construct},
                                      {"n_update", c.n_update},
                                      {"n_destruct", c.n_destruct}});
            }
    }
    release_all();

    if (a.format == "json") {
        ojson out;
        if (std::holds_alternative<std::int64_t>(result))
            out["result"] = std::get<std::int64_t>(result);
        else if (std::holds_alternative<double>(result))
            out["result"] = std::get<double>(result);
        else
            out["result"] = nullptr;
        out["outputs"] = ojson::object();
        for (size_t i = 0; i < array_params.size(); ++i) {
            auto& [name, b] = array_params[i];
            if (mem.write_version(b) == versions[i]) continue;
            if (mem.kind(b) == interp::ElemKind::I64)
                out["outputs"][name] = mem.ints(b);
            else
                out["outputs"][name] = mem.floats(b);
        }
        if (a.stats) out["stats"] = stats_rows;
        std::cout << out.dump(2) << "\n";
    } else {
        if (std::holds_alternative<std::int64_t>(result))
            std::cout << "result=" << std::get<std::int64_t>(result) << "\n";
        else if (std::holds_alternative<double>(result))
            std::cout << "result=" << fmt_double(std::get<double>(result)) << "\n";
        for (size_t i = 0; i < array_params.size(); ++i) {
            auto& [name, b] = array_params[i];
            if (mem.write_version(b) == versions[i]) continue;
            std::cout << name << "=[";
            if (mem.kind(b) == interp::ElemKind::I64) {
                const auto& vals = mem.ints(b);
                for (size_t k = 0; k < vals.size(); ++k)
                    std::cout << (k ? "," : "") << vals[k];
            } else {
                const auto& vals = mem.floats(b);
                for (size_t k = 0; k < vals.size(); ++k)
                    std::cout << (k ? "," : "") << fmt_double(vals[k]);
            }
            std::cout << "]\n";
        }
        if (a.stats) std::cout << "stats=" << stats_rows.dump() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"idiom detection and library harness toolkit"};
    app.require_subcommand(0, 1);
    bool version = false;
    app.add_flag("--version", version, "print tool and format versions");

    CheckArgs check_args;
    CLI::App* check = app.add_subcommand("check", "parse and validate a .lilac spec");
    check->add_option("spec", check_args.spec, "spec file")->required();
    check->add_option("--format", check_args.format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    DetectArgs detect_args;
    CLI::App* detect = app.add_subcommand("detect", "find computations in an IR module");
    detect->add_option("spec", detect_args.spec, "spec file")->required();
    detect->add_option("module", detect_args.module, "IR module (.lir)")->required();
    detect->add_option("--what", detect_args.what, "restrict to one computation");
    detect->add_option("--budget", detect_args.budget, "search budget per candidate");
    detect->add_flag("--trace", detect_args.trace, "print search traces");
    detect->add_option("--format", detect_args.format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    RewriteArgs rewrite_args;
    CLI::App* rewr = app.add_subcommand("rewrite", "replace detected nests with harness calls");
    rewr->add_option("spec", rewrite_args.spec, "spec file")->required();
    rewr->add_option("module", rewrite_args.module, "IR module (.lir)")->required();
    rewr->add_option("--what", rewrite_args.what, "restrict to one computation");
    rewr->add_option("--harness", rewrite_args.harness, "call target (default lilac.<what>)");
    rewr->add_option("-o,--output", rewrite_args.out, "rewritten module path (default stdout)");
    rewr->add_option("--budget", rewrite_args.budget, "search budget per candidate");
    rewr->add_option("--format", rewrite_args.format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-harness", "emit harness sources from a spec");
    gen->add_option("spec", gen_args.spec, "spec file")->required();
    gen->add_option("-o,--output", gen_args.out_dir, "output directory")->required();
    gen->add_option("--harness", gen_args.harness, "emit only this harness");
    gen->add_option("--ext", gen_args.ext, "file extension (default .gen.cpp)");
    gen->add_option("--format", gen_args.format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    NormalizeArgs norm_args;
    CLI::App* norm = app.add_subcommand("normalize", "canonicalize loops in an IR module");
    norm->add_option("module", norm_args.module, "IR module (.lir)")->required();
    norm->add_option("-o,--output", norm_args.out, "output path (default stdout)");

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "interpret an IR module");
    run->add_option("module", run_args.module, "IR module (.lir)")->required();
    run->add_option("--entry", run_args.entry, "entry function")->required();
    run->add_option("--data", run_args.data, "JSON object with one entry per parameter");
    run->add_option("--with-reference-harness", run_args.with_reference,
                    "spec file; registers lilac.<name> reference harnesses");
    run->add_option("--marshal-strategy", run_args.strategy,
                    "pageprotect|checksum|exact|naive (wraps reference harnesses)");
    run->add_flag("--stats", run_args.stats, "print marshal transfer counters");
    run->add_option("--step-limit", run_args.step_limit, "interpreter step budget");
    run->add_option("--format", run_args.format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (version) {
        std::cout << kVersionLine << "\n";
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }

    try {
        if (check->parsed()) return cmd_check(check_args);
        if (detect->parsed()) return cmd_detect(detect_args);
        if (rewr->parsed()) return cmd_rewrite(rewrite_args);
        if (gen->parsed()) return cmd_gen_harness(gen_args);
        if (norm->parsed()) return cmd_normalize(norm_args);
        if (run->parsed()) return cmd_run(run_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
