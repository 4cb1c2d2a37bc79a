#pragma once

#include "zacc/types.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zacc {

// ============================================================================
// FetchCounter
// ============================================================================

struct FetchStats {
    std::uint64_t chunk_reads = 0;
    std::uint64_t bytes_read = 0;
};

/// Monotonic chunk-fetch accounting. Only chunk payload reads count;
/// metadata documents do not.
class FetchCounter {
public:
    void record(std::uint64_t bytes)
    {
        chunk_reads_.fetch_add(1, std::memory_order_relaxed);
        bytes_read_.fetch_add(bytes, std::memory_order_relaxed);
    }
    void reset()
    {
        chunk_reads_.store(0, std::memory_order_relaxed);
        bytes_read_.store(0, std::memory_order_relaxed);
    }
    FetchStats snapshot() const
    {
        return {chunk_reads_.load(std::memory_order_relaxed),
                bytes_read_.load(std::memory_order_relaxed)};
    }

private:
    std::atomic<std::uint64_t> chunk_reads_{0};
    std::atomic<std::uint64_t> bytes_read_{0};
};

// ============================================================================
// Store interface
// ============================================================================

/// Flat key/value store in the chunked-directory layout: keys look like
/// "var/.zarray", "var/.zattrs", "var/0.1.2" or ".zgroup". Readers may run
/// concurrently; writers need external exclusivity per array.
class Store {
public:
    virtual ~Store() = default;

    virtual std::optional<std::string> get(const std::string& key) const = 0;
    virtual void put(const std::string& key, std::string_view value) = 0;
    virtual bool contains(const std::string& key) const = 0;

    /// All keys, sorted; optionally restricted to a prefix.
    virtual std::vector<std::string> list(const std::string& prefix = "") const = 0;

    /// Stored byte size of a key, 0 when absent.
    virtual std::uint64_t size(const std::string& key) const
    {
        auto v = get(key);
        return v ? v->size() : 0;
    }

    FetchCounter& counter() const { return counter_; }

private:
    mutable FetchCounter counter_;
};

// ============================================================================
// Backends
// ============================================================================

class MemoryStore final : public Store {
public:
    std::optional<std::string> get(const std::string& key) const override;
    void put(const std::string& key, std::string_view value) override;
    bool contains(const std::string& key) const override;
    std::vector<std::string> list(const std::string& prefix = "") const override;

    /// Full key -> bytes view for byte-identity comparisons.
    std::map<std::string, std::string> dump() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

/// Directory-backed store; each key maps to a file under the root.
class FileStore final : public Store {
public:
    explicit FileStore(std::filesystem::path root, bool create = true);

    std::optional<std::string> get(const std::string& key) const override;
    void put(const std::string& key, std::string_view value) override;
    bool contains(const std::string& key) const override;
    std::vector<std::string> list(const std::string& prefix = "") const override;
    std::uint64_t size(const std::string& key) const override;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path path_of(const std::string& key) const;
    std::filesystem::path root_;
};

} // namespace zacc
