#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rbt/blackboard.hpp"
#include "rbt/emphasizer.hpp"
#include "rbt/instantiator.hpp"
#include "rbt/schema.hpp"
#include "rbt/tree.hpp"

namespace rbt {

/// Per-tick record: statuses, currently instantiated subtask, published
/// priorities, condition flags, and the wall time the tick took.
struct TickTrace {
    std::uint64_t tick = 0;
    NodeStatus root_status = NodeStatus::Fresh;
    std::optional<std::string> current;
    std::map<std::string, double> priorities;
    std::map<std::string, bool> flags;
    std::int64_t tick_ns = 0;

    nlohmann::json to_json() const;
};

struct RunResult {
    std::vector<TickTrace> traces;
    bool goal_reached = false;
    std::int64_t total_tick_ns = 0;
    /// Node counts observed over ticks where a dynamic subtree was attached.
    int node_count_min = 0;
    int node_count_max = 0;
};

struct TickBudgetExhausted : Error {
    explicit TickBudgetExhausted(RunResult partial_result)
        : Error("tick budget exhausted before the goal was reached"),
          partial(std::move(partial_result)) {}
    RunResult partial;
};

/// Advances the world between ticks (applies intents, perturbations, and
/// pushes stimuli). Receives the index of the tick about to run.
using WorldStepper = std::function<void(std::uint64_t)>;

struct EngineConfig {
    std::string root_task = "rbt_root";
    std::chrono::milliseconds tick_period{10};  // simulated time per tick
};

/// Assembles and runs the generic reconfigurable tree: goal gating, blackboard
/// initialization, the parallel Emphasizer branch, and per-tick dynamic
/// allocation of the highest-priority subtree.
class RbtEngine {
public:
    RbtEngine(std::shared_ptr<LtmStore> ltm, std::vector<SubtaskRecord> subtasks,
              std::shared_ptr<Blackboard> bb, std::shared_ptr<HandlerRegistry> domain_handlers,
              std::shared_ptr<ConditionRegistry> domain_conditions = nullptr,
              EngineConfig config = {});

    /// One root tick. Throws EngineHalted once the goal has been reached.
    TickTrace tick_once();

    /// Ticks until the goal is reached or the budget runs out (throws
    /// TickBudgetExhausted carrying the partial result).
    RunResult run_to_goal(const WorldStepper& stepper, std::uint64_t max_ticks);

    /// Halts and detaches the currently attached subtree without touching any
    /// condition flags. Throws NothingAttached when the placeholder is empty.
    void preempt();

    Tree& tree() { return tree_; }
    const Tree& tree() const { return tree_; }
    const std::shared_ptr<Blackboard>& blackboard() const { return bb_; }
    const std::optional<std::string>& current() const { return current_; }
    const std::vector<SubtaskRecord>& subtasks() const { return subtasks_; }
    bool finished() const { return finished_; }
    int node_count() const { return count_nodes(tree_); }

private:
    void register_engine_handlers();
    NodeStatus load_subtree_step();
    const SubtaskRecord& subtask(const std::string& name) const;

    std::shared_ptr<LtmStore> ltm_;
    std::vector<SubtaskRecord> subtasks_;
    std::shared_ptr<Blackboard> bb_;
    std::shared_ptr<HandlerRegistry> handlers_;
    std::shared_ptr<ConditionRegistry> conditions_;
    EngineConfig config_;

    Tree tree_;
    NodeId placeholder_ = kNoNode;  // empty placeholder slot (when unoccupied)
    NodeId dynamic_branch_ = kNoNode;
    NodeId attached_root_ = kNoNode;
    std::optional<std::string> current_;
    /// Prebuilt specialized subtree per subtask; attach copies from here.
    std::map<std::string, Tree> templates_;

    bool finished_ = false;
    bool priority_changed_this_tick_ = false;
    std::uint64_t tick_index_ = 0;
};

/// Ticks a static tree with the same bookkeeping as the engine loop; used for
/// the baseline comparison. Stops at root Success.
RunResult run_static_tree(Tree& tree, Blackboard& bb, const WorldStepper& stepper,
                          std::uint64_t max_ticks);

}  // namespace rbt
