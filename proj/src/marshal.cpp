#include "lilac/marshal.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <vector>

#include <signal.h>
#include <sys/mman.h>
#include <unistd.h>

namespace lilac::marshal {

namespace {

// ---- page-protection fault plumbing ----------------------------------------
//
// One process-global table of guarded regions. Mutations happen in normal
// context under the mutex; the SIGSEGV handler only reads. The v1 contract is
// single-threaded acquire, so the handler never observes a mid-mutation table.

struct Guard {
    std::uintptr_t lo = 0, hi = 0;  // protected page range
    TrackedRegion* region = nullptr;
};

std::vector<Guard> g_guards;
std::mutex g_mutex;
std::size_t g_page = 0;
struct sigaction g_prev_sa;

void fault_handler(int, siginfo_t* si, void*) {
    const std::uintptr_t addr = reinterpret_cast<std::uintptr_t>(si->si_addr);
    const std::uintptr_t page = addr & ~(g_page - 1);
    bool ours = false;
    // Dirty every region sharing the faulting page: unprotecting it must not
    // let a same-page neighbour's next write slip through unrecorded.
    for (const Guard& g : g_guards) {
        if (page < g.hi && page + g_page > g.lo) {
            g.region->dirty = true;
            ours = true;
        }
    }
    if (ours) {
        mprotect(reinterpret_cast<void*>(page), g_page, PROT_READ | PROT_WRITE);
        return;
    }
    // Not a tracked page: put the previous disposition back and let the
    // re-executed instruction fault again under it.
    sigaction(SIGSEGV, &g_prev_sa, nullptr);
}

// (Re)installs the fault handler whenever something else (a test framework,
// say) has taken SIGSEGV since our last protection cycle.
void install_handler() {
    struct sigaction cur;
    if (sigaction(SIGSEGV, nullptr, &cur) == 0 && (cur.sa_flags & SA_SIGINFO) &&
        cur.sa_sigaction == fault_handler)
        return;
    struct sigaction sa;
    std::memset(&sa, 0, sizeof sa);
    sa.sa_sigaction = fault_handler;
    sa.sa_flags = SA_SIGINFO;
    sigemptyset(&sa.sa_mask);
    if (sigaction(SIGSEGV, &sa, &g_prev_sa) != 0)
        throw Error(Errc::ProtectionUnsupported,
                    std::string("cannot install fault handler: ") + std::strerror(errno));
}

std::uintptr_t page_floor(std::uintptr_t a) { return a & ~(page_size() - 1); }
std::uintptr_t page_ceil(std::uintptr_t a) { return page_floor(a + page_size() - 1); }

std::uint64_t region_version(const TrackedRegion& r) {
    if (!r.ref.mem || r.ref.buffer < 0)
        throw Error(Errc::DataError,
                    "exact-version strategy needs an interpreter buffer behind the region");
    return r.ref.mem->write_version(r.ref.buffer);
}

} // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::PageProtect: return "pageprotect";
    case Strategy::Checksum: return "checksum";
    case Strategy::ExactVersion: return "exact";
    case Strategy::Naive: return "naive";
    }
    return "?";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "pageprotect") return Strategy::PageProtect;
    if (name == "checksum") return Strategy::Checksum;
    if (name == "exact") return Strategy::ExactVersion;
    if (name == "naive") return Strategy::Naive;
    throw Error(Errc::DataError, "unknown marshal strategy '" + name +
                                     "' (expected pageprotect, checksum, exact or naive)");
}

Strategy default_strategy() {
    const char* env = std::getenv("LILAC_MARSHAL_STRATEGY");
    return env ? parse_strategy(env) : Strategy::Checksum;
}

std::uint64_t fnv1a(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t page_size() {
    if (g_page == 0) g_page = static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
    return g_page;
}

void mark_clean(TrackedRegion& r) {
    switch (r.strategy) {
    case Strategy::Naive:
        // no tracking: the region is never considered clean
        r.dirty = true;
        return;
    case Strategy::Checksum:
        r.last_checksum = fnv1a(r.ref.base, r.ref.bytes);
        r.dirty = false;
        return;
    case Strategy::ExactVersion:
        r.last_version = region_version(r);
        r.dirty = false;
        return;
    case Strategy::PageProtect: {
        if (r.ref.bytes == 0) {
            r.dirty = false;
            return;
        }
        const auto base = reinterpret_cast<std::uintptr_t>(r.ref.base);
        if (base % page_size() != 0)
            throw Error(Errc::ProtectionUnsupported,
                        "page protection needs a page-aligned region base");
        const std::uintptr_t lo = base;
        const std::uintptr_t hi = page_ceil(base + r.ref.bytes);
        std::lock_guard<std::mutex> lock(g_mutex);
        install_handler();
        if (mprotect(reinterpret_cast<void*>(lo), hi - lo, PROT_READ) != 0)
            throw Error(Errc::ProtectionUnsupported,
                        std::string("mprotect failed: ") + std::strerror(errno));
        if (!r.guarded) {
            g_guards.push_back({lo, hi, &r});
            r.guarded = true;
        }
        r.dirty = false;
        return;
    }
    }
}

bool poll_dirty(TrackedRegion& r) {
    switch (r.strategy) {
    case Strategy::Naive:
        return true;
    case Strategy::Checksum:
        if (!r.dirty && r.ref.bytes > 0)
            r.dirty = fnv1a(r.ref.base, r.ref.bytes) != r.last_checksum;
        return r.dirty;
    case Strategy::ExactVersion:
        if (!r.dirty && r.ref.bytes > 0) r.dirty = region_version(r) != r.last_version;
        return r.dirty;
    case Strategy::PageProtect:
        return r.dirty;  // the fault handler records writes
    }
    return true;
}

void drop_guard(TrackedRegion& r) {
    if (!r.guarded) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::uintptr_t lo = 0, hi = 0;
    for (auto it = g_guards.begin(); it != g_guards.end();) {
        if (it->region == &r) {
            lo = it->lo;
            hi = it->hi;
            it = g_guards.erase(it);
        } else {
            ++it;
        }
    }
    if (hi > lo) mprotect(reinterpret_cast<void*>(lo), hi - lo, PROT_READ | PROT_WRITE);
    r.guarded = false;
}

// ---- object registry --------------------------------------------------------

namespace {
std::vector<MarshalObjectBase*> g_registry;
std::mutex g_registry_mutex;
} // namespace

MarshalObjectBase::~MarshalObjectBase() = default;

void MarshalObjectBase::enroll() {
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    if (std::find(g_registry.begin(), g_registry.end(), this) == g_registry.end())
        g_registry.push_back(this);
}

void MarshalObjectBase::unenroll() {
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    g_registry.erase(std::remove(g_registry.begin(), g_registry.end(), this), g_registry.end());
}

void MarshalObjectBase::clean_with_fallback() {
    try {
        mark_clean(region_);
    } catch (const Error& e) {
        if (e.code() != Errc::ProtectionUnsupported) throw;
        strategy_ = Strategy::Checksum;
        region_.strategy = Strategy::Checksum;
        fell_back_ = true;
        mark_clean(region_);
    }
}

void MarshalObjectBase::hook_failed(const char* which, const std::exception& e) const {
    throw Error(Errc::HookFailure, std::string(which) + " hook failed for region '" + name_ +
                                       "': " + e.what());
}

Diagnostics release_all() {
    std::vector<MarshalObjectBase*> live;
    {
        std::lock_guard<std::mutex> lock(g_registry_mutex);
        live.swap(g_registry);
    }
    Diagnostics diags;
    for (MarshalObjectBase* obj : live) obj->force_release(diags);
    return diags;
}

// ---- page-aligned buffers ---------------------------------------------------

PageBuffer::PageBuffer(std::size_t bytes) : bytes_(bytes) {
    mapped_ = std::max<std::size_t>(page_ceil(bytes), page_size());
    void* p = mmap(nullptr, mapped_, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
    if (p == MAP_FAILED)
        throw Error(Errc::DataError, std::string("mmap failed: ") + std::strerror(errno));
    p_ = p;
}

PageBuffer::~PageBuffer() {
    if (p_) munmap(p_, mapped_);
}

} // namespace lilac::marshal
