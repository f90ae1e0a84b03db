#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rbt/errors.hpp"

namespace rbt {

/// Shared key-value store for condition flags, stimulus values, and subtree
/// priorities. Safe for concurrent readers and writers; batched writes become
/// visible atomically.
class Blackboard {
public:
    struct Flag {
        bool value = false;
    };
    /// Continuous sensor value with a unit tag. A missing value means the
    /// stimulus has never been observed.
    struct Scalar {
        std::optional<double> value;
        std::string unit;
    };
    struct Priority {
        double value = 0.0;  // in [0, 1]
    };
    using Value = std::variant<Flag, Scalar, Priority>;

    /// Consistent point-in-time view of the store.
    struct Snapshot {
        std::map<std::string, Value> entries;
        std::uint64_t version = 0;

        bool flag(const std::string& key) const;
        std::optional<double> scalar(const std::string& key) const;
        double priority(const std::string& key) const;
        bool contains(const std::string& key) const { return entries.count(key) > 0; }
    };

    Blackboard() = default;
    Blackboard(const Blackboard&) = delete;
    Blackboard& operator=(const Blackboard&) = delete;

    /// Writes one entry; returns the new version. A key's value type is fixed
    /// by its first write.
    std::uint64_t write(const std::string& key, Value value);

    /// Writes several entries with all-or-nothing visibility.
    std::uint64_t write_batch(const std::vector<std::pair<std::string, Value>>& batch);

    std::uint64_t set_flag(const std::string& key, bool value);
    std::uint64_t set_scalar(const std::string& key, double value, std::string unit = {});
    std::uint64_t set_priority(const std::string& key, double value);

    /// Unknown condition names read as false.
    bool flag(const std::string& key) const;
    /// Unknown or unobserved stimuli read as nullopt.
    std::optional<double> scalar(const std::string& key) const;
    /// Unknown priorities read as 0.
    double priority(const std::string& key) const;

    bool contains(const std::string& key) const;
    std::uint64_t version() const;

    Snapshot snapshot() const;

    /// Full store as a JSON object, for the CLI trace.
    nlohmann::json dump() const;

private:
    void check_type(const std::string& key, const Value& value) const;  // mu_ held

    mutable std::mutex mu_;
    std::map<std::string, Value> entries_;
    std::uint64_t version_ = 0;
};

}  // namespace rbt
