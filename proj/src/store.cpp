#include "zacc/store.hpp"

#include <algorithm>
#include <fstream>

namespace zacc {

namespace fs = std::filesystem;

// ============================================================================
// MemoryStore
// ============================================================================

std::optional<std::string> MemoryStore::get(const std::string& key) const
{
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void MemoryStore::put(const std::string& key, std::string_view value)
{
    std::lock_guard lock(mutex_);
    entries_[key] = std::string(value);
}

bool MemoryStore::contains(const std::string& key) const
{
    std::lock_guard lock(mutex_);
    return entries_.count(key) > 0;
}

std::vector<std::string> MemoryStore::list(const std::string& prefix) const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

std::map<std::string, std::string> MemoryStore::dump() const
{
    std::lock_guard lock(mutex_);
    return entries_;
}

// ============================================================================
// FileStore
// ============================================================================

FileStore::FileStore(fs::path root, bool create) : root_(std::move(root))
{
    if (create)
        fs::create_directories(root_);
    else if (!fs::is_directory(root_))
        throw DataError("store directory not found: " + root_.string());
}

fs::path FileStore::path_of(const std::string& key) const
{
    // Keys use '/' as the node separator; chunk coordinates stay dot-joined
    // inside one path component.
    fs::path p = root_;
    std::size_t begin = 0;
    while (begin <= key.size()) {
        auto end = key.find('/', begin);
        if (end == std::string::npos) {
            p /= key.substr(begin);
            break;
        }
        p /= key.substr(begin, end - begin);
        begin = end + 1;
    }
    return p;
}

std::optional<std::string> FileStore::get(const std::string& key) const
{
    std::ifstream f(path_of(key), std::ios::binary);
    if (!f.is_open()) return std::nullopt;
    std::string out;
    f.seekg(0, std::ios::end);
    out.resize(static_cast<std::size_t>(f.tellg()));
    f.seekg(0);
    f.read(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("short read for store key: " + key);
    return out;
}

void FileStore::put(const std::string& key, std::string_view value)
{
    auto p = path_of(key);
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f.is_open()) throw DataError("cannot write store key: " + key);
    f.write(value.data(), static_cast<std::streamsize>(value.size()));
    if (!f) throw DataError("short write for store key: " + key);
}

bool FileStore::contains(const std::string& key) const
{
    return fs::exists(path_of(key));
}

std::uint64_t FileStore::size(const std::string& key) const
{
    std::error_code ec;
    auto n = fs::file_size(path_of(key), ec);
    return ec ? 0 : static_cast<std::uint64_t>(n);
}

std::vector<std::string> FileStore::list(const std::string& prefix) const
{
    std::vector<std::string> out;
    if (!fs::is_directory(root_)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(root_)) {
        if (!entry.is_regular_file()) continue;
        auto rel = fs::relative(entry.path(), root_).generic_string();
        if (rel.rfind(prefix, 0) == 0) out.push_back(rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace zacc
