#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbt/blackboard.hpp"
#include "rbt/tree.hpp"

namespace rbt {

/// Thresholds of the piecewise-linear stimulus-to-priority map.
struct PriorityParams {
    double theta_min = 0.05;
    double theta_max = 1.0;
};

/// A named subtree eligible for dynamic instantiation: its LTM task and
/// placeholder binding, the conditions that gate it, its stimulus source, and
/// its current priority.
struct SubtaskRecord {
    std::string name;                            // e.g. "sort b_box"
    std::string task;                            // LTM task name, e.g. "sort box"
    std::map<std::string, std::string> binding;  // placeholder -> concrete name
    std::vector<std::string> preconditions;
    std::vector<std::string> postconditions;
    std::string stimulus_key;   // "stimulus/<name>"
    std::string priority_key;   // "priority/<name>", filled on first use
    PriorityParams params;
    double epsilon = 0.0;  // in [0, 1]
};

inline std::string stimulus_key_for(const std::string& subtask_name) {
    return "stimulus/" + subtask_name;
}
inline std::string priority_key_for(const std::string& subtask_name) {
    return "priority/" + subtask_name;
}

inline constexpr const char* kPriorityChangedFlag = "priority changed";
inline constexpr const char* kBlackboardInitializedFlag = "blackboard initialized";

/// Maps a stimulus to a priority in [0, 1]: 1 at or below theta_min, 0 at or
/// above theta_max, linear in between.
double priority(double theta, const PriorityParams& params);

/// A subtask is active when all its preconditions hold and not all of its
/// postconditions do. Order is preserved.
std::vector<SubtaskRecord> active_set(const std::vector<SubtaskRecord>& subtasks,
                                      const Blackboard::Snapshot& snapshot);

/// The active subtask with maximal priority; ties break to the
/// lexicographically smallest name.
std::optional<std::string> select_subtask(const std::vector<SubtaskRecord>& active);

/// The long-lived Emphasizer action body: recomputes every subtask's priority
/// from the latest stimuli, publishes them, and raises `priority changed` iff
/// the winning subtask differs from the one currently instantiated. Always
/// returns Running.
NodeStatus handle_priority(std::vector<SubtaskRecord>& subtasks, Blackboard& bb,
                           const std::optional<std::string>& current);

/// True iff every postcondition of every subtask holds (empty conjunction is
/// true).
bool goal_reached(const std::vector<SubtaskRecord>& subtasks,
                  const Blackboard::Snapshot& snapshot);

/// Seeds the store for a task: all condition flags false, all priorities 0,
/// stimulus keys unobserved, then marks the blackboard initialized. Throws
/// DuplicateKey on re-initialization or duplicate subtask names.
void init_blackboard(Blackboard& bb, const std::vector<SubtaskRecord>& subtasks,
                     const std::vector<std::string>& goal_conditions);

}  // namespace rbt
