#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rbt/blackboard.hpp"
#include "rbt/schema.hpp"
#include "rbt/tree.hpp"

namespace rbt {

/// Environment for schema-to-tree construction. A null handler registry skips
/// handler resolution (used when rendering trees for inspection).
struct InstantiationContext {
    const LtmStore* ltm = nullptr;
    std::shared_ptr<HandlerRegistry> handlers;
    std::shared_ptr<ConditionRegistry> conditions;
};

struct InstantiationOptions {
    /// Conditions wrapped around the tree root, checked before anything else.
    std::vector<std::string> root_preconditions;
    /// When false, pre/postcondition nodes are omitted (bare control skeleton).
    bool expand_conditions = true;
};

/// Builds an executable tree from a task's schema list: postconditions become
/// Condition nodes gating their child through a Fallback (a Sequence of
/// Conditions when there are several), and preconditions become Condition
/// siblings to the left of the gated child under a Sequence.
Tree instantiate_schemas(const InstantiationContext& ctx, const TaskRecord& task,
                         const InstantiationOptions& options = {});

Tree instantiate_subtree(const InstantiationContext& ctx, const std::string& task_name,
                         const InstantiationOptions& options = {});

/// Textual substitution of `{placeholder}` tokens in schema names, action
/// literals, and condition names. Every binding key must occur somewhere.
std::vector<SchemaNode> specialize(const std::vector<SchemaNode>& schemas,
                                   const std::map<std::string, std::string>& binding);

/// Name of the Action handler that designates a replaceable placeholder node.
inline constexpr const char* kPlaceholderAction = "execute subtree";

/// Replaces the placeholder Action node `at` with a copy of `subtree`,
/// returning the id of the newly attached root. The subtree arrives Fresh.
NodeId attach_dynamic(Tree& tree, NodeId at, const Tree& subtree);

/// Removes the subtree previously attached at `at` (the id returned by
/// attach_dynamic), halting its running actions, and restores the placeholder.
void detach_dynamic(Tree& tree, NodeId at);

}  // namespace rbt
