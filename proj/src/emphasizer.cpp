#include "rbt/emphasizer.hpp"

#include <algorithm>
#include <set>

namespace rbt {

namespace {

bool is_active(const SubtaskRecord& rec, const Blackboard::Snapshot& snapshot) {
    for (const auto& pre : rec.preconditions)
        if (!snapshot.flag(pre)) return false;
    bool all_post = true;
    for (const auto& post : rec.postconditions)
        if (!snapshot.flag(post)) {
            all_post = false;
            break;
        }
    return !all_post;
}

}  // namespace

double priority(double theta, const PriorityParams& params) {
    if (!(params.theta_min < params.theta_max))
        throw InvalidParams("priority thresholds require theta_min < theta_max");
    if (theta <= params.theta_min) return 1.0;
    if (theta >= params.theta_max) return 0.0;
    return (theta - params.theta_max) / (params.theta_min - params.theta_max);
}

std::vector<SubtaskRecord> active_set(const std::vector<SubtaskRecord>& subtasks,
                                      const Blackboard::Snapshot& snapshot) {
    std::vector<SubtaskRecord> out;
    for (const auto& rec : subtasks)
        if (is_active(rec, snapshot)) out.push_back(rec);
    return out;
}

std::optional<std::string> select_subtask(const std::vector<SubtaskRecord>& active) {
    const SubtaskRecord* best = nullptr;
    for (const auto& rec : active) {
        if (!best || rec.epsilon > best->epsilon ||
            (rec.epsilon == best->epsilon && rec.name < best->name))
            best = &rec;
    }
    if (!best) return std::nullopt;
    return best->name;
}

NodeStatus handle_priority(std::vector<SubtaskRecord>& subtasks, Blackboard& bb,
                           const std::optional<std::string>& current) {
    // Reads go key-by-key rather than through a snapshot: the driver is
    // single-threaded per tick, and this path runs on every tick.
    auto is_active_now = [&bb](const SubtaskRecord& rec) {
        for (const auto& pre : rec.preconditions)
            if (!bb.flag(pre)) return false;
        for (const auto& post : rec.postconditions)
            if (!bb.flag(post)) return true;
        return rec.postconditions.empty();
    };

    std::vector<std::pair<std::string, Blackboard::Value>> batch;
    batch.reserve(subtasks.size() + 1);

    const SubtaskRecord* best = nullptr;
    for (auto& rec : subtasks) {
        if (rec.priority_key.empty()) rec.priority_key = priority_key_for(rec.name);
        const bool act = is_active_now(rec);
        const std::optional<double> theta = bb.scalar(rec.stimulus_key);
        // Inactive subtasks and unobserved stimuli report priority 0.
        rec.epsilon = (act && theta) ? priority(*theta, rec.params) : 0.0;
        batch.emplace_back(rec.priority_key, Blackboard::Priority{rec.epsilon});
        if (act && (!best || rec.epsilon > best->epsilon ||
                    (rec.epsilon == best->epsilon && rec.name < best->name)))
            best = &rec;
    }

    const bool changed = best ? best->name != current : current.has_value();
    batch.emplace_back(kPriorityChangedFlag, Blackboard::Flag{changed});
    bb.write_batch(batch);
    return NodeStatus::Running;
}

bool goal_reached(const std::vector<SubtaskRecord>& subtasks,
                  const Blackboard::Snapshot& snapshot) {
    for (const auto& rec : subtasks)
        for (const auto& post : rec.postconditions)
            if (!snapshot.flag(post)) return false;
    return true;
}

void init_blackboard(Blackboard& bb, const std::vector<SubtaskRecord>& subtasks,
                     const std::vector<std::string>& goal_conditions) {
    if (bb.contains(kBlackboardInitializedFlag))
        throw DuplicateKey("blackboard is already initialized");
    std::set<std::string> names;
    for (const auto& rec : subtasks)
        if (!names.insert(rec.name).second)
            throw DuplicateKey("duplicate subtask name '" + rec.name + "'");

    std::vector<std::pair<std::string, Blackboard::Value>> batch;
    for (const auto& rec : subtasks) {
        for (const auto& pre : rec.preconditions)
            batch.emplace_back(pre, Blackboard::Flag{false});
        for (const auto& post : rec.postconditions)
            batch.emplace_back(post, Blackboard::Flag{false});
        batch.emplace_back(priority_key_for(rec.name), Blackboard::Priority{0.0});
        batch.emplace_back(rec.stimulus_key, Blackboard::Scalar{std::nullopt, "m"});
    }
    for (const auto& goal : goal_conditions) batch.emplace_back(goal, Blackboard::Flag{false});
    batch.emplace_back(kPriorityChangedFlag, Blackboard::Flag{false});
    batch.emplace_back(kBlackboardInitializedFlag, Blackboard::Flag{true});
    bb.write_batch(batch);
}

}  // namespace rbt
