#pragma once

#include <cstddef>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace rdslin {

/// Hash map guarded by a reader/writer lock. Concurrent inserts of the same
/// key are idempotent because values are pure functions of the key.
template <class Key, class Value, class Hash = std::hash<Key>>
class ConcurrentMemo {
public:
    explicit ConcurrentMemo(std::size_t cap = std::numeric_limits<std::size_t>::max()) : cap_(cap) {}

    ConcurrentMemo(const ConcurrentMemo& other) : cap_(other.cap_) {
        std::shared_lock lock(other.mutex_);
        table_ = other.table_;
    }
    ConcurrentMemo& operator=(const ConcurrentMemo&) = delete;

    template <class Compute>
    Value get_or_compute(const Key& key, Compute&& compute) const {
        {
            std::shared_lock lock(mutex_);
            auto it = table_.find(key);
            if (it != table_.end()) {
                return it->second;
            }
        }
        Value value = compute();
        std::unique_lock lock(mutex_);
        if (table_.size() < cap_) {
            table_.emplace(key, value);
        }
        return value;
    }

    [[nodiscard]] std::size_t size() const {
        std::shared_lock lock(mutex_);
        return table_.size();
    }

private:
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<Key, Value, Hash> table_;
    std::size_t cap_;
};

}  // namespace rdslin
