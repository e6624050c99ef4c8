#pragma once

// Marshaling runtime: tracked regions with pluggable change detection, and
// the construct/update/destruct state machine that decides when data actually
// moves. Generated harnesses are written against this interface; the
// reference-harness path wraps interpreter buffers in the same objects.

#include "lilac/diag.hpp"
#include "lilac/interp.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

namespace lilac::marshal {

// PageProtect traps writes via memory protection; Checksum hashes the bytes
// on every poll; ExactVersion reads the interpreter buffer's write counter;
// Naive assumes every region changed between invocations (no tracking).
enum class Strategy { PageProtect, Checksum, ExactVersion, Naive };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);  // throws DataError
// LILAC_MARSHAL_STRATEGY if set (pageprotect|checksum|exact|naive), else Checksum.
Strategy default_strategy();

std::uint64_t fnv1a(const void* data, std::size_t size);
std::size_t page_size();

// Identity of a marshaled array: the host bytes backing it and, when the data
// lives in interpreter memory, the owning buffer for exact version tracking.
struct RegionRef {
    const void* base = nullptr;
    std::size_t bytes = 0;
    const interp::Memory* mem = nullptr;
    int buffer = -1;

    bool operator==(const RegionRef&) const = default;
};

struct TrackedRegion {
    RegionRef ref;
    Strategy strategy = Strategy::Checksum;
    bool dirty = true;  // set by writes (or polling), cleared only by mark_clean
    std::uint64_t last_checksum = 0;
    std::uint64_t last_version = 0;
    bool guarded = false;  // PageProtect: region is in the fault table
};

// Snapshot the region as clean. PageProtect write-protects the covering pages
// and throws ProtectionUnsupported when that is not possible (misaligned base,
// refused by the platform); callers fall back to Checksum.
void mark_clean(TrackedRegion& r);
// Conservative dirtiness test: never false-clean; PageProtect may report
// writes from same-page neighbours, Checksum misses only hash collisions.
bool poll_dirty(TrackedRegion& r);
// Undo page protection and leave the fault table; safe to call in any state.
void drop_guard(TrackedRegion& r);

struct MarshalCounters {
    std::int64_t n_construct = 0;
    std::int64_t n_update = 0;
    std::int64_t n_destruct = 0;
};

// Non-template half of MarshalObject: naming, counters, strategy fallback and
// the process-global registry release_all walks.
class MarshalObjectBase {
public:
    MarshalObjectBase(std::string name, Strategy s) : name_(std::move(name)), strategy_(s) {}
    virtual ~MarshalObjectBase();

    MarshalObjectBase(const MarshalObjectBase&) = delete;
    MarshalObjectBase& operator=(const MarshalObjectBase&) = delete;

    const std::string& name() const { return name_; }
    const MarshalCounters& counters() const { return counters_; }
    Strategy strategy() const { return strategy_; }
    bool constructed() const { return constructed_; }
    bool fell_back() const { return fell_back_; }

protected:
    void enroll();    // join the release_all registry
    void unenroll();  // leave it
    // mark_clean, demoting PageProtect to Checksum on ProtectionUnsupported.
    void clean_with_fallback();
    [[noreturn]] void hook_failed(const char* which, const std::exception& e) const;

    std::string name_;
    Strategy strategy_;
    TrackedRegion region_;
    MarshalCounters counters_;
    bool constructed_ = false;
    bool fell_back_ = false;

private:
    friend Diagnostics release_all();
    virtual void force_release(Diagnostics& out) = 0;
};

// Destruct every constructed object in registration order and empty the
// registry. Hook failures are collected as diagnostics, never thrown, so this
// is safe in atexit handlers; all objects are released regardless.
Diagnostics release_all();

template <typename Out>
class MarshalObject : public MarshalObjectBase {
public:
    using Hook = std::function<void(const void* in, std::size_t size, Out& out)>;

    explicit MarshalObject(std::string name, Strategy s = default_strategy())
        : MarshalObjectBase(std::move(name), s) {}

    ~MarshalObject() override {
        Diagnostics sink;
        force_release(sink);
        unenroll();
    }

    // Input direction. First acquire: construct, then update, then mark the
    // region clean. Identity change: destruct, construct, update. Dirty
    // region: update. Otherwise no hooks run and the cached out is returned.
    Out& acquire(RegionRef in, Hook construct, Hook update, Hook destruct) {
        remember(std::move(construct), std::move(update), std::move(destruct));
        refresh(in);
        if (!constructed_) {
            run_construct();
            run_update();
            clean_with_fallback();
        } else if (poll_dirty(region_)) {
            run_update();
            clean_with_fallback();
        }
        return out_;
    }

    Out& acquire(const void* in, std::size_t bytes, Hook construct, Hook update, Hook destruct) {
        return acquire(RegionRef{in, bytes}, std::move(construct), std::move(update),
                       std::move(destruct));
    }

    // Output direction: construct manages the destination, the update hook is
    // the write-back transfer and only runs via write_back(). No dirtiness
    // tracking — data flows out of the library, not into it.
    Out& acquire_out(RegionRef in, Hook construct, Hook update, Hook destruct) {
        remember(std::move(construct), std::move(update), std::move(destruct));
        refresh(in);
        if (!constructed_) run_construct();
        return out_;
    }

    Out& acquire_out(const void* in, std::size_t bytes, Hook construct, Hook update,
                     Hook destruct) {
        return acquire_out(RegionRef{in, bytes}, std::move(construct), std::move(update),
                           std::move(destruct));
    }

    void write_back() {
        if (!constructed_)
            throw Error(Errc::DataError, "write_back on empty marshal object '" + name_ + "'");
        run_update();
    }

    // Destruct now (throws HookFailure if the hook fails; the object is Empty
    // afterwards either way).
    void release() {
        if (!constructed_) return;
        drop_guard(region_);
        constructed_ = false;
        unenroll();
        try {
            if (destruct_) destruct_(region_.ref.base, region_.ref.bytes, out_);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            hook_failed("destruct", e);
        }
        counters_.n_destruct++;
    }

    Out& out() { return out_; }

private:
    void remember(Hook c, Hook u, Hook d) {
        construct_ = std::move(c);
        update_ = std::move(u);
        destruct_ = std::move(d);
    }

    void refresh(const RegionRef& in) {
        if (constructed_ && !(region_.ref == in)) release();
        if (!constructed_) {
            region_ = TrackedRegion{};
            region_.ref = in;
            region_.strategy = strategy_;
        }
    }

    void run_construct() {
        try {
            if (construct_) construct_(region_.ref.base, region_.ref.bytes, out_);
        } catch (const Error&) {
            throw;  // state stays Empty
        } catch (const std::exception& e) {
            hook_failed("construct", e);
        }
        counters_.n_construct++;
        constructed_ = true;
        enroll();
    }

    void run_update() {
        try {
            if (update_) update_(region_.ref.base, region_.ref.bytes, out_);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            hook_failed("update", e);
        }
        counters_.n_update++;
    }

    void force_release(Diagnostics& out) override {
        if (!constructed_) return;
        drop_guard(region_);
        constructed_ = false;
        try {
            if (destruct_) destruct_(region_.ref.base, region_.ref.bytes, out_);
            counters_.n_destruct++;
        } catch (const std::exception& e) {
            out.push_back({"HookFailure",
                           "destruct hook failed for region '" + name_ + "': " + e.what(), {}});
        }
    }

    Hook construct_, update_, destruct_;
    Out out_{};
};

// Page-aligned anonymous mapping for regions under PageProtect; plain heap
// memory is not safe to protect.
class PageBuffer {
public:
    explicit PageBuffer(std::size_t bytes);
    ~PageBuffer();

    PageBuffer(const PageBuffer&) = delete;
    PageBuffer& operator=(const PageBuffer&) = delete;

    void* data() { return p_; }
    const void* data() const { return p_; }
    std::size_t size() const { return bytes_; }

private:
    void* p_ = nullptr;
    std::size_t bytes_ = 0;
    std::size_t mapped_ = 0;
};

} // namespace lilac::marshal

namespace lilac {
using marshal::release_all;  // generated harnesses say lilac::release_all()
}
