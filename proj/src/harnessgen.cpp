#include "lilac/harnessgen.hpp"

#include <set>
#include <sstream>

namespace lilac::harnessgen {

namespace {

const char* param_type(what::ParamKind k) {
    switch (k) {
    case what::ParamKind::ScalarInt: return "std::int64_t";
    case what::ParamKind::ArrayInt: return "const std::int64_t*";
    case what::ParamKind::ArrayFloatIn: return "const double*";
    case what::ParamKind::ArrayFloatOut: return "double*";
    }
    return "?";
}

void emit_hook(std::ostringstream& os, const std::string& cls, const char* which,
               const std::optional<std::string>& code) {
    os << "template <typename In, typename Out>\n";
    os << "static void " << cls << "_" << which << "(In in, std::size_t size, Out& out) {";
    if (code) os << *code;
    os << "}\n\n";
}

void emit_class(std::ostringstream& os, const how::MarshalClassDef& c) {
    os << "// ---- marshal class " << c.name << " ("
       << (c.kind == how::MarshalKind::Input ? "input" : "output") << ") ----\n\n";
    emit_hook(os, c.name, "construct", c.construct_code);
    emit_hook(os, c.name, "update", c.update_code);
    emit_hook(os, c.name, "destruct", c.destruct_code);
}

std::string size_expr(const how::MarshalBinding& b) {
    return "(" + what::print_expr(*b.extent) + ") * sizeof(*" + b.array_name + ")";
}

} // namespace

std::string gen_harness(const how::Harness& h, const what::HarnessSignature& sig,
                        const std::vector<how::MarshalClassDef>& classes) {
    auto find_class = [&](const std::string& name) -> const how::MarshalClassDef& {
        for (const how::MarshalClassDef& c : classes)
            if (c.name == name) return c;
        throw Error(Errc::MissingClass, "harness '" + h.name + "' needs marshal class '" + name +
                                            "', which is not defined");
    };

    // referenced classes in first-use order
    std::vector<const how::MarshalClassDef*> used;
    std::set<std::string> seen;
    for (const how::MarshalBinding& b : h.bindings) {
        const how::MarshalClassDef& c = find_class(b.class_name);
        if (seen.insert(c.name).second) used.push_back(&c);
    }

    const bool has_state = !h.persistent_vars.empty() || !h.bindings.empty();
    const bool has_first_run = h.before_first || h.after_last || !h.bindings.empty();

    std::ostringstream os;
    os << "// Generated harness: " << h.name << " implements " << h.implements << ".\n";
    os << "// Emitted by lilac gen-harness; edits will be overwritten.\n\n";

    for (const std::string& hd : h.headers) os << "#include " << hd << "\n";
    if (!h.headers.empty()) os << "\n";
    os << "#include <lilac/marshal.hpp>\n\n";
    os << "#include <cstddef>\n#include <cstdint>\n#include <cstdlib>\n\n";

    for (const how::MarshalClassDef* c : used) emit_class(os, *c);

    if (has_state) {
        os << "// ---- persistent state ----\n\n";
        os << "static struct " << h.name << "_state {\n";
        for (const how::PersistentVar& v : h.persistent_vars)
            os << "    " << v.type << " " << v.name << ";\n";
        for (const how::MarshalBinding& b : h.bindings)
            os << "    lilac::MarshalObject<" << b.out_type << "> m_" << b.out_name << ";\n";
        if (has_first_run) os << "    bool first_run_done = false;\n";
        os << "} state;\n\n";
    } else if (has_first_run) {
        os << "static bool first_run_done = false;\n\n";
    }

    os << "// ---- entry point ----\n\n";
    os << "extern \"C\" void " << h.name << "(";
    for (size_t i = 0; i < sig.params.size(); ++i) {
        if (i) os << ", ";
        os << param_type(sig.params[i].kind) << " " << sig.params[i].name;
    }
    os << ") {\n";

    // let verbatim code blocks refer to persistent variables by their bare names
    for (const how::PersistentVar& v : h.persistent_vars)
        os << "    auto& " << v.name << " = state." << v.name << ";\n";

    const std::string flag = has_state ? "state.first_run_done" : "first_run_done";
    if (has_first_run) {
        os << "    if (!" << flag << ") {\n";
        os << "        " << flag << " = true;\n";
        if (h.before_first) os << "        {" << *h.before_first << "}\n";
        if (h.after_last || !h.bindings.empty()) {
            os << "        std::atexit([] {\n";
            if (h.after_last)
                for (const how::PersistentVar& v : h.persistent_vars)
                    os << "            auto& " << v.name << " = state." << v.name << ";\n";
            if (h.after_last) os << "            {" << *h.after_last << "}\n";
            if (!h.bindings.empty()) os << "            lilac::release_all();\n";
            os << "        });\n";
        }
        os << "    }\n";
    }

    for (const how::MarshalBinding& b : h.bindings) {
        const how::MarshalClassDef& c = find_class(b.class_name);
        const char* verb = c.kind == how::MarshalKind::Input ? "acquire" : "acquire_out";
        os << "    " << b.out_type << " " << b.out_name << " = state.m_" << b.out_name << "."
           << verb << "(" << b.array_name << ", " << size_expr(b) << ", " << c.name
           << "_construct, " << c.name << "_update, " << c.name << "_destruct);\n";
    }

    os << "    {" << h.code << "}\n";

    for (const how::MarshalBinding& b : h.bindings) {
        const how::MarshalClassDef& c = find_class(b.class_name);
        if (c.kind == how::MarshalKind::Output)
            os << "    state.m_" << b.out_name << ".write_back();\n";
    }

    os << "}\n";
    return os.str();
}

std::vector<std::pair<std::string, std::string>> gen_all(const how::HowProgram& h,
                                                         const std::vector<what::WhatProgram>& whats) {
    Diagnostics d = how::validate_how(h, whats);
    if (!d.empty())
        throw Error(Errc::DataError, "cannot generate harnesses:\n" + render_diags(d));

    std::vector<std::pair<std::string, std::string>> out;
    for (const how::Harness& harness : h.harnesses) {
        const what::WhatProgram* w = nullptr;
        for (const what::WhatProgram& cand : whats)
            if (cand.name == harness.implements) w = &cand;
        what::HarnessSignature sig = what::infer_interface(*w);
        out.emplace_back(harness.name, gen_harness(harness, sig, h.marshal_classes));
    }
    return out;
}

} // namespace lilac::harnessgen
