#pragma once

// Small-step IR interpreter over typed, versioned buffers. This is the oracle
// every transformation is checked against, and the host that dispatches
// harness calls to native callables.

#include "lilac/ir.hpp"
#include "lilac/what.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace lilac::interp {

struct Pointer {
    int buffer = -1;
    std::int64_t offset = 0;

    bool operator==(const Pointer&) const = default;
};

// monostate stands for "no value" (void returns)
using Value = std::variant<std::monostate, std::int64_t, double, Pointer>;

enum class ElemKind { I64, F64 };

// Buffers are typed element arrays addressed by (buffer, offset) pointers.
// Every store bumps the owning buffer's write_version; the exact-version
// marshal strategy keys off that counter.
class Memory {
public:
    int alloc_ints(std::string label, std::vector<std::int64_t> data);
    int alloc_floats(std::string label, std::vector<double> data);

    int count() const { return static_cast<int>(buffers_.size()); }
    int find(const std::string& label) const;  // -1 when absent

    ElemKind kind(int b) const { return at(b).kind; }
    const std::string& label(int b) const { return at(b).label; }
    std::int64_t size(int b) const;
    std::uint64_t write_version(int b) const { return at(b).version; }
    const std::uint64_t* version_word(int b) const { return &at(b).version; }

    std::int64_t load_int(const Pointer& p) const;
    double load_float(const Pointer& p) const;
    void store_int(const Pointer& p, std::int64_t v);
    void store_float(const Pointer& p, double v);

    const std::vector<std::int64_t>& ints(int b) const;
    const std::vector<double>& floats(int b) const;

private:
    struct Buffer {
        std::string label;
        ElemKind kind;
        std::vector<std::int64_t> i;
        std::vector<double> f;
        std::uint64_t version = 0;
    };

    const Buffer& at(int b) const;
    Buffer& at(int b);

    std::vector<Buffer> buffers_;
};

// Native callable backing an external @name call site. Receives the evaluated
// arguments; returns monostate for void harnesses.
using HarnessFn = std::function<Value(Memory&, const std::vector<Value>&)>;

class HarnessRegistry {
public:
    void add(std::string name, HarnessFn fn);  // throws DuplicateRegistration
    const HarnessFn* find(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, HarnessFn> fns_;
};

// Registers one callable per computation under "lilac.<name>", behaving
// exactly like interpret_what: same accumulation order, bit-identical
// results. Scalar-result computations return the f64 directly; array
// arguments are buffer slices starting at the passed pointer.
void register_reference_harnesses(HarnessRegistry& reg, const std::vector<what::WhatProgram>& whats);

inline constexpr std::int64_t kDefaultStepLimit = 100'000'000;

// Executes @entry of a verified module. Mutates `mem` in place and returns
// the function result (monostate for void). Throws Error with OutOfBounds,
// StepLimitExceeded, UnregisteredHarness, TypeTrap or DataError codes.
Value run(const ir::Module& m, const std::string& entry, const std::vector<Value>& args, Memory& mem,
          const HarnessRegistry& reg = {}, std::int64_t step_limit = kDefaultStepLimit);

} // namespace lilac::interp
