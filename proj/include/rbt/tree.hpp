#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rbt/blackboard.hpp"
#include "rbt/errors.hpp"

namespace rbt {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

/// Fresh marks a node never ticked since its last reset; a tick itself only
/// ever returns Running, Success, or Failure.
enum class NodeStatus { Fresh, Running, Success, Failure };

const char* to_string(NodeStatus status);

enum class NodeKind { Fallback, Sequence, Parallel, Decorator, Action, Condition };

const char* to_string(NodeKind kind);

enum class DecoratorPolicy { Identity, Invert, ForceSuccess };

struct NodeType {
    NodeKind kind = NodeKind::Fallback;
    int threshold = 0;  // Parallel success threshold M; 0 means "all children"
    DecoratorPolicy policy = DecoratorPolicy::Identity;
    std::string name;  // Action handler name or Condition name

    static NodeType fallback() { return {NodeKind::Fallback}; }
    static NodeType sequence() { return {NodeKind::Sequence}; }
    static NodeType parallel(int threshold = 0) { return {NodeKind::Parallel, threshold}; }
    static NodeType decorator(DecoratorPolicy policy) {
        return {NodeKind::Decorator, 0, policy};
    }
    static NodeType action(std::string name) {
        return {NodeKind::Action, 0, DecoratorPolicy::Identity, std::move(name)};
    }
    static NodeType condition(std::string name) {
        return {NodeKind::Condition, 0, DecoratorPolicy::Identity, std::move(name)};
    }
};

/// Hosts the body of an Action node. step is invoked at most once per node per
/// tick; halt is delivered on preemption, after which the next step begins a
/// fresh attempt.
struct ActionHandler {
    std::string name;
    std::function<NodeStatus(Blackboard&)> step;
    std::function<void()> halt;
};

class HandlerRegistry {
public:
    void add(ActionHandler handler);
    const ActionHandler* find(const std::string& name) const;
    bool contains(const std::string& name) const { return find(name) != nullptr; }

private:
    std::unordered_map<std::string, ActionHandler> handlers_;
};

using ConditionFn = std::function<bool(Blackboard&)>;

/// Condition names resolve to a registered predicate when present, otherwise
/// fall back to the blackboard flag of the same name.
class ConditionRegistry {
public:
    void add(std::string name, ConditionFn fn);
    const ConditionFn* find(const std::string& name) const;

private:
    std::unordered_map<std::string, ConditionFn> conditions_;
};

struct TreeNode {
    NodeId id = kNoNode;
    std::string label;
    NodeType type;
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    NodeStatus status = NodeStatus::Fresh;
    bool alive = true;
};

/// Arena-stored rooted tree. Ids are dense integers assigned at attach time;
/// detached nodes stay in the arena as tombstones and are never reused.
class Tree {
public:
    Tree();
    Tree(std::shared_ptr<HandlerRegistry> handlers, std::shared_ptr<ConditionRegistry> conditions);

    NodeId add_node(std::string label, NodeType type, NodeId parent = kNoNode);

    NodeId root() const { return root_; }
    void set_root(NodeId id);

    TreeNode& node(NodeId id);
    const TreeNode& node(NodeId id) const;
    bool has_node(NodeId id) const;
    std::size_t arena_size() const { return nodes_.size(); }

    /// Preorder ids of the live subtree under `from`.
    std::vector<NodeId> preorder(NodeId from) const;

    /// Checks rooted-tree shape (single root, acyclic, single parent), child
    /// arity per node kind, and handler resolvability. Throws MalformedTree or
    /// UnresolvedHandler.
    void validate() const;

    /// Copies another tree's live nodes into this arena; returns the new id of
    /// its root. The subtree arrives detached with Fresh statuses.
    NodeId graft(const Tree& sub);

    void replace_child(NodeId parent, NodeId old_child, NodeId new_child);

    /// Marks the subtree under `id` dead (after it has been unlinked).
    void kill_subtree(NodeId id);

    /// Bookkeeping for dynamically attached subtrees: maps the attached root
    /// to the placeholder node it replaced.
    void record_attachment(NodeId attached_root, NodeId placeholder);
    NodeId find_attachment(NodeId attached_root) const;  // kNoNode if absent
    void forget_attachment(NodeId attached_root);

    const std::shared_ptr<HandlerRegistry>& handlers() const { return handlers_; }
    const std::shared_ptr<ConditionRegistry>& conditions() const { return conditions_; }
    void set_registries(std::shared_ptr<HandlerRegistry> handlers,
                        std::shared_ptr<ConditionRegistry> conditions);

private:
    std::vector<TreeNode> nodes_;
    std::unordered_map<NodeId, NodeId> attachments_;
    NodeId root_ = kNoNode;
    std::shared_ptr<HandlerRegistry> handlers_;
    std::shared_ptr<ConditionRegistry> conditions_;
};

/// One depth-first left-to-right traversal from `root` applying the per-kind
/// combination rules. Visited nodes get their status updated; unvisited nodes
/// keep their prior status.
NodeStatus tick(Tree& tree, NodeId root, Blackboard& bb);

inline NodeStatus tick(Tree& tree, Blackboard& bb) { return tick(tree, tree.root(), bb); }

/// Sets every node under `root` to Fresh, delivering halt to Running actions
/// first. Idempotent.
void reset_subtree(Tree& tree, NodeId root);

/// Number of nodes currently attached under the root.
int count_nodes(const Tree& tree);
int count_nodes(const Tree& tree, NodeId from);

/// Pure status combinators over ordered child results, matching what a tick of
/// the corresponding control node computes. Fallback and Sequence interpret
/// the span as the statuses seen while ticking left to right and stop at the
/// first deciding child; Parallel consumes all of them.
NodeStatus tick_fallback(std::span<const NodeStatus> children);
NodeStatus tick_sequence(std::span<const NodeStatus> children);
NodeStatus tick_parallel(int threshold, std::span<const NodeStatus> children);

NodeStatus apply_decorator(DecoratorPolicy policy, NodeStatus child);

/// Renders the subtree as indented text, one node per line.
std::string render_tree(const Tree& tree, NodeId from);
inline std::string render_tree(const Tree& tree) { return render_tree(tree, tree.root()); }

}  // namespace rbt
