#include "lilac/what.hpp"

namespace lilac::what {

namespace {

// Integer arithmetic wraps; the desk-scale data sets never get close, but the
// evaluator should not have undefined behaviour either way.
std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

class Eval {
public:
    Eval(const WhatProgram& p, Bindings& env) : p_(p), env_(env) {}

    void run() { run_forall(0); }

private:
    const WhatProgram& p_;
    Bindings& env_;
    std::map<std::string, std::int64_t> iters_;

    [[noreturn]] void out_of_bounds(const Expr& e, std::int64_t index, size_t size) {
        throw Error(Errc::OutOfBounds,
                    "index " + std::to_string(index) + " outside '" + e.name + "' of length " +
                        std::to_string(size),
                    e.loc);
    }

    std::int64_t eval_int(const Expr& e) {
        switch (e.kind) {
        case ExprKind::Name: {
            auto it = iters_.find(e.name);
            if (it != iters_.end()) return it->second;
            auto sc = env_.scalars.find(e.name);
            if (sc == env_.scalars.end())
                throw Error(Errc::UnboundVariable, "no scalar binding for '" + e.name + "'", e.loc);
            return sc->second;
        }
        case ExprKind::Const: return e.value;
        case ExprKind::Addr: {
            auto arr = env_.int_arrays.find(e.name);
            if (arr == env_.int_arrays.end())
                throw Error(Errc::UnboundVariable, "no integer array binding for '" + e.name + "'", e.loc);
            if (!e.a)
                throw Error(Errc::UnboundVariable, "'" + e.name + "' needs a subscript here", e.loc);
            std::int64_t idx = eval_int(*e.a);
            if (idx < 0 || static_cast<size_t>(idx) >= arr->second.size())
                out_of_bounds(e, idx, arr->second.size());
            return arr->second[static_cast<size_t>(idx)];
        }
        case ExprKind::Add: return wrap_add(eval_int(*e.a), eval_int(*e.b));
        case ExprKind::Mul: return wrap_mul(eval_int(*e.a), eval_int(*e.b));
        }
        throw Error(Errc::UnboundVariable, "unreachable expression kind", e.loc);
    }

    double load_float(const Expr& e) {
        auto arr = env_.float_arrays.find(e.name);
        if (arr == env_.float_arrays.end())
            throw Error(Errc::UnboundVariable, "no float array binding for '" + e.name + "'", e.loc);
        std::int64_t idx = eval_int(*e.a);
        if (idx < 0 || static_cast<size_t>(idx) >= arr->second.size())
            out_of_bounds(e, idx, arr->second.size());
        return arr->second[static_cast<size_t>(idx)];
    }

    void run_forall(size_t level) {
        if (level == p_.foralls.size()) {
            run_dot();
            return;
        }
        const Range& r = p_.foralls[level];
        std::int64_t lo = eval_int(*r.lower);
        std::int64_t hi = eval_int(*r.upper);
        for (std::int64_t i = lo; i < hi; ++i) {
            iters_[r.iterator] = i;
            run_forall(level + 1);
        }
        iters_.erase(r.iterator);
    }

    void run_dot() {
        const DotOp& d = p_.dot;
        std::int64_t lo = eval_int(*d.range.lower);
        std::int64_t hi = eval_int(*d.range.upper);
        double acc = 0.0;
        for (std::int64_t k = lo; k < hi; ++k) {
            iters_[d.range.iterator] = k;
            acc += load_float(*d.lhs) * load_float(*d.rhs);
        }
        iters_.erase(d.range.iterator);

        // The target subscript is evaluated in the enclosing forall scope; the
        // reduction iterator is not visible in it.
        auto arr = env_.float_arrays.find(d.target->name);
        if (arr == env_.float_arrays.end())
            throw Error(Errc::UnboundVariable, "no float array binding for '" + d.target->name + "'",
                        d.target->loc);
        std::int64_t idx = d.target->a ? eval_int(*d.target->a) : 0;
        if (idx < 0 || static_cast<size_t>(idx) >= arr->second.size())
            out_of_bounds(*d.target, idx, arr->second.size());
        arr->second[static_cast<size_t>(idx)] = acc;
    }
};

} // namespace

Bindings interpret_what(const WhatProgram& p, Bindings env) {
    Eval(p, env).run();
    return env;
}

} // namespace lilac::what
