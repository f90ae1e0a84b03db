#include "rbt/engine.hpp"

#include <limits>

#include <nlohmann/json.hpp>

namespace rbt {

namespace {

using Clock = std::chrono::steady_clock;

std::map<std::string, bool> flag_snapshot(const Blackboard& bb) {
    std::map<std::string, bool> out;
    for (const auto& [key, value] : bb.snapshot().entries)
        if (const auto* f = std::get_if<Blackboard::Flag>(&value)) out[key] = f->value;
    return out;
}

std::map<std::string, double> priority_snapshot(const Blackboard& bb) {
    std::map<std::string, double> out;
    for (const auto& [key, value] : bb.snapshot().entries)
        if (const auto* p = std::get_if<Blackboard::Priority>(&value)) out[key] = p->value;
    return out;
}

}  // namespace

nlohmann::json TickTrace::to_json() const {
    nlohmann::json out;
    out["tick"] = tick;
    out["root_status"] = to_string(root_status);
    out["current"] = current ? nlohmann::json(*current) : nlohmann::json(nullptr);
    out["priorities"] = priorities;
    out["flags"] = flags;
    out["tick_ns"] = tick_ns;
    return out;
}

RbtEngine::RbtEngine(std::shared_ptr<LtmStore> ltm, std::vector<SubtaskRecord> subtasks,
                     std::shared_ptr<Blackboard> bb,
                     std::shared_ptr<HandlerRegistry> domain_handlers,
                     std::shared_ptr<ConditionRegistry> domain_conditions, EngineConfig config)
    : ltm_(std::move(ltm)),
      subtasks_(std::move(subtasks)),
      bb_(std::move(bb)),
      handlers_(std::make_shared<HandlerRegistry>(
          domain_handlers ? *domain_handlers : HandlerRegistry{})),
      conditions_(std::make_shared<ConditionRegistry>(
          domain_conditions ? *domain_conditions : ConditionRegistry{})),
      config_(std::move(config)) {
    register_engine_handlers();

    InstantiationContext ctx{ltm_.get(), handlers_, conditions_};
    tree_ = instantiate_schemas(ctx, ltm_->get(config_.root_task));

    for (NodeId id : tree_.preorder(tree_.root())) {
        const TreeNode& n = tree_.node(id);
        if (n.type.kind == NodeKind::Action && n.type.name == kPlaceholderAction) {
            placeholder_ = id;
            dynamic_branch_ = n.parent;
            break;
        }
    }
    if (placeholder_ == kNoNode)
        throw SchemaError("root task '" + config_.root_task +
                          "' has no '" + std::string(kPlaceholderAction) + "' placeholder");

    // Specialize and build each subtask's subtree once; attach grafts a fresh
    // copy each time.
    for (const auto& rec : subtasks_) {
        TaskRecord specialized;
        specialized.task_name = rec.name;
        specialized.schemas = rec.binding.empty()
                                  ? ltm_->get(rec.task).schemas
                                  : specialize(ltm_->get(rec.task).schemas, rec.binding);
        InstantiationOptions options;
        options.root_preconditions = rec.preconditions;
        templates_.emplace(rec.name, instantiate_schemas(ctx, specialized, options));
    }
}

const SubtaskRecord& RbtEngine::subtask(const std::string& name) const {
    for (const auto& rec : subtasks_)
        if (rec.name == name) return rec;
    throw UnknownTask("no subtask named '" + name + "'");
}

void RbtEngine::register_engine_handlers() {
    handlers_->add({"initialize blackboard",
                    [this](Blackboard& bb) {
                        init_blackboard(bb, subtasks_, {});
                        return NodeStatus::Success;
                    },
                    nullptr});

    handlers_->add({"handle priority",
                    [this](Blackboard& bb) {
                        const NodeStatus s = handle_priority(subtasks_, bb, current_);
                        priority_changed_this_tick_ = bb.flag(kPriorityChangedFlag);
                        return s;
                    },
                    nullptr});

    handlers_->add({"load subtree", [this](Blackboard&) { return load_subtree_step(); }, nullptr});

    // Empty placeholder slot: nothing to execute yet.
    handlers_->add({kPlaceholderAction, [](Blackboard&) { return NodeStatus::Running; }, nullptr});

    conditions_->add("goal reached", [this](Blackboard& bb) {
        for (const auto& rec : subtasks_)
            for (const auto& post : rec.postconditions)
                if (!bb.flag(post)) return false;
        return true;
    });
}

NodeStatus RbtEngine::load_subtree_step() {
    // handle_priority has already refreshed every epsilon this tick.
    const Blackboard::Snapshot snap = bb_->snapshot();
    const std::optional<std::string> best = select_subtask(active_set(subtasks_, snap));

    if (attached_root_ != kNoNode) {
        detach_dynamic(tree_, attached_root_);  // halts running actions first
        attached_root_ = kNoNode;
        current_.reset();
    }
    if (best) {
        attached_root_ = attach_dynamic(tree_, placeholder_, templates_.at(*best));
        current_ = *best;
    }
    bb_->set_flag(kPriorityChangedFlag, false);
    return NodeStatus::Success;
}

TickTrace RbtEngine::tick_once() {
    if (finished_) throw EngineHalted("engine already reached its goal");
    priority_changed_this_tick_ = false;

    const auto t0 = Clock::now();
    const NodeStatus root_status = tick(tree_, tree_.root(), *bb_);
    const auto t1 = Clock::now();

    TickTrace trace;
    trace.tick = tick_index_++;
    trace.root_status = root_status;
    trace.current = current_;
    for (const auto& rec : subtasks_) trace.priorities[rec.name] = rec.epsilon;
    trace.flags = flag_snapshot(*bb_);
    // The loader consumes the changed flag within the same tick; the trace
    // reports whether the Emphasizer raised it during this tick.
    if (trace.flags.count(kPriorityChangedFlag))
        trace.flags[kPriorityChangedFlag] = priority_changed_this_tick_;
    trace.tick_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();

    // The dynamic branch is re-evaluated fresh next tick once it completes.
    const NodeStatus branch = tree_.node(dynamic_branch_).status;
    if (branch == NodeStatus::Success || branch == NodeStatus::Failure)
        reset_subtree(tree_, dynamic_branch_);

    if (root_status == NodeStatus::Success) finished_ = true;
    return trace;
}

RunResult RbtEngine::run_to_goal(const WorldStepper& stepper, std::uint64_t max_ticks) {
    RunResult result;
    result.node_count_min = std::numeric_limits<int>::max();
    result.node_count_max = 0;

    for (std::uint64_t i = 0; i < max_ticks; ++i) {
        if (stepper) stepper(i);
        TickTrace trace = tick_once();
        result.total_tick_ns += trace.tick_ns;
        result.traces.push_back(std::move(trace));
        if (current_) {
            const int n = node_count();
            result.node_count_min = std::min(result.node_count_min, n);
            result.node_count_max = std::max(result.node_count_max, n);
        }
        if (finished_) {
            result.goal_reached = true;
            if (result.node_count_max == 0) result.node_count_min = result.node_count_max = node_count();
            return result;
        }
    }
    if (result.node_count_max == 0) result.node_count_min = result.node_count_max = node_count();
    throw TickBudgetExhausted(std::move(result));
}

void RbtEngine::preempt() {
    if (attached_root_ == kNoNode) throw NothingAttached("placeholder is empty");
    detach_dynamic(tree_, attached_root_);
    attached_root_ = kNoNode;
    current_.reset();
}

RunResult run_static_tree(Tree& tree, Blackboard& bb, const WorldStepper& stepper,
                          std::uint64_t max_ticks) {
    RunResult result;
    result.node_count_min = result.node_count_max = count_nodes(tree);

    for (std::uint64_t i = 0; i < max_ticks; ++i) {
        if (stepper) stepper(i);
        const auto t0 = Clock::now();
        const NodeStatus root_status = tick(tree, tree.root(), bb);
        const auto t1 = Clock::now();

        TickTrace trace;
        trace.tick = i;
        trace.root_status = root_status;
        trace.priorities = priority_snapshot(bb);
        trace.flags = flag_snapshot(bb);
        trace.tick_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        result.total_tick_ns += trace.tick_ns;
        result.traces.push_back(std::move(trace));

        if (root_status == NodeStatus::Success) {
            result.goal_reached = true;
            return result;
        }
    }
    throw TickBudgetExhausted(std::move(result));
}

}  // namespace rbt
