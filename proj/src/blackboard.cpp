#include "rbt/blackboard.hpp"

#include <nlohmann/json.hpp>

namespace rbt {

namespace {

const char* kind_name(const Blackboard::Value& v) {
    switch (v.index()) {
        case 0: return "flag";
        case 1: return "scalar";
        default: return "priority";
    }
}

}  // namespace

bool Blackboard::Snapshot::flag(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    if (const auto* f = std::get_if<Flag>(&it->second)) return f->value;
    return false;
}

std::optional<double> Blackboard::Snapshot::scalar(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    if (const auto* s = std::get_if<Scalar>(&it->second)) return s->value;
    return std::nullopt;
}

double Blackboard::Snapshot::priority(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) return 0.0;
    if (const auto* p = std::get_if<Priority>(&it->second)) return p->value;
    return 0.0;
}

void Blackboard::check_type(const std::string& key, const Value& value) const {
    if (const auto* p = std::get_if<Priority>(&value)) {
        if (p->value < 0.0 || p->value > 1.0)
            throw TypeMismatch("priority value for '" + key + "' outside [0,1]");
    }
    auto it = entries_.find(key);
    if (it != entries_.end() && it->second.index() != value.index())
        throw TypeMismatch("key '" + key + "' holds a " + kind_name(it->second) +
                           ", cannot write a " + kind_name(value));
}

std::uint64_t Blackboard::write(const std::string& key, Value value) {
    std::lock_guard lock(mu_);
    check_type(key, value);
    entries_[key] = std::move(value);
    return ++version_;
}

std::uint64_t Blackboard::write_batch(const std::vector<std::pair<std::string, Value>>& batch) {
    std::lock_guard lock(mu_);
    for (const auto& [key, value] : batch) check_type(key, value);
    for (const auto& [key, value] : batch) entries_[key] = value;
    return ++version_;
}

std::uint64_t Blackboard::set_flag(const std::string& key, bool value) {
    return write(key, Flag{value});
}

std::uint64_t Blackboard::set_scalar(const std::string& key, double value, std::string unit) {
    return write(key, Scalar{value, std::move(unit)});
}

std::uint64_t Blackboard::set_priority(const std::string& key, double value) {
    return write(key, Priority{value});
}

bool Blackboard::flag(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    if (const auto* f = std::get_if<Flag>(&it->second)) return f->value;
    return false;
}

std::optional<double> Blackboard::scalar(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    if (const auto* s = std::get_if<Scalar>(&it->second)) return s->value;
    return std::nullopt;
}

double Blackboard::priority(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return 0.0;
    if (const auto* p = std::get_if<Priority>(&it->second)) return p->value;
    return 0.0;
}

bool Blackboard::contains(const std::string& key) const {
    std::lock_guard lock(mu_);
    return entries_.count(key) > 0;
}

std::uint64_t Blackboard::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

Blackboard::Snapshot Blackboard::snapshot() const {
    std::lock_guard lock(mu_);
    return Snapshot{entries_, version_};
}

nlohmann::json Blackboard::dump() const {
    Snapshot snap = snapshot();
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, value] : snap.entries) {
        if (const auto* f = std::get_if<Flag>(&value)) {
            out[key] = f->value;
        } else if (const auto* s = std::get_if<Scalar>(&value)) {
            if (s->value)
                out[key] = {{"value", *s->value}, {"unit", s->unit}};
            else
                out[key] = "unobserved";
        } else {
            out[key] = std::get<Priority>(value).value;
        }
    }
    return out;
}

}  // namespace rbt
