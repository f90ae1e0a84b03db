#include "rbt/tree.hpp"

#include <algorithm>
#include <sstream>

namespace rbt {

const char* to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::Fresh: return "fresh";
        case NodeStatus::Running: return "running";
        case NodeStatus::Success: return "success";
        case NodeStatus::Failure: return "failure";
    }
    return "?";
}

const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Fallback: return "fallback";
        case NodeKind::Sequence: return "sequence";
        case NodeKind::Parallel: return "parallel";
        case NodeKind::Decorator: return "decorator";
        case NodeKind::Action: return "action";
        case NodeKind::Condition: return "condition";
    }
    return "?";
}

void HandlerRegistry::add(ActionHandler handler) {
    handlers_[handler.name] = std::move(handler);
}

const ActionHandler* HandlerRegistry::find(const std::string& name) const {
    auto it = handlers_.find(name);
    return it == handlers_.end() ? nullptr : &it->second;
}

void ConditionRegistry::add(std::string name, ConditionFn fn) {
    conditions_[std::move(name)] = std::move(fn);
}

const ConditionFn* ConditionRegistry::find(const std::string& name) const {
    auto it = conditions_.find(name);
    return it == conditions_.end() ? nullptr : &it->second;
}

Tree::Tree()
    : Tree(std::make_shared<HandlerRegistry>(), std::make_shared<ConditionRegistry>()) {}

Tree::Tree(std::shared_ptr<HandlerRegistry> handlers, std::shared_ptr<ConditionRegistry> conditions)
    : handlers_(std::move(handlers)), conditions_(std::move(conditions)) {}

NodeId Tree::add_node(std::string label, NodeType type, NodeId parent) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    TreeNode n;
    n.id = id;
    n.label = std::move(label);
    n.type = std::move(type);
    n.parent = parent;
    nodes_.push_back(std::move(n));
    if (parent != kNoNode) {
        node(parent).children.push_back(id);
    } else if (root_ == kNoNode) {
        root_ = id;
    }
    return id;
}

void Tree::set_root(NodeId id) {
    if (!has_node(id)) throw UnknownNode("no node with id " + std::to_string(id));
    root_ = id;
    node(id).parent = kNoNode;
}

TreeNode& Tree::node(NodeId id) {
    if (!has_node(id)) throw UnknownNode("no node with id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
}

const TreeNode& Tree::node(NodeId id) const {
    if (!has_node(id)) throw UnknownNode("no node with id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
}

bool Tree::has_node(NodeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < nodes_.size() &&
           nodes_[static_cast<std::size_t>(id)].alive;
}

std::vector<NodeId> Tree::preorder(NodeId from) const {
    if (!has_node(from)) throw UnknownNode("no node with id " + std::to_string(from));
    std::vector<NodeId> out;
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        out.push_back(id);
        const TreeNode& n = node(id);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

void Tree::validate() const {
    if (root_ == kNoNode || !has_node(root_)) throw MalformedTree("tree has no root");
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{root_};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size() ||
            !nodes_[static_cast<std::size_t>(id)].alive)
            throw MalformedTree("dangling child reference " + std::to_string(id));
        if (seen[static_cast<std::size_t>(id)])
            throw MalformedTree("node " + std::to_string(id) +
                                " reachable twice (cycle or multiple parents)");
        seen[static_cast<std::size_t>(id)] = 1;
        const TreeNode& n = nodes_[static_cast<std::size_t>(id)];
        switch (n.type.kind) {
            case NodeKind::Action:
                if (!n.children.empty())
                    throw MalformedTree("action node '" + n.label + "' has children");
                if (handlers_ && !handlers_->contains(n.type.name))
                    throw UnresolvedHandler("no handler registered for '" + n.type.name + "'");
                break;
            case NodeKind::Condition:
                if (!n.children.empty())
                    throw MalformedTree("condition node '" + n.label + "' has children");
                break;
            case NodeKind::Decorator:
                if (n.children.size() != 1)
                    throw MalformedTree("decorator '" + n.label + "' must have exactly one child");
                break;
            default:
                if (n.children.empty())
                    throw MalformedTree("control node '" + n.label + "' has no children");
                break;
        }
        for (NodeId c : n.children) {
            if (c < 0 || static_cast<std::size_t>(c) >= nodes_.size())
                throw MalformedTree("dangling child reference " + std::to_string(c));
            if (nodes_[static_cast<std::size_t>(c)].parent != id)
                throw MalformedTree("node " + std::to_string(c) + " has inconsistent parent link");
            stack.push_back(c);
        }
    }
}

NodeId Tree::graft(const Tree& sub) {
    if (sub.root() == kNoNode) throw MalformedTree("cannot graft an empty tree");
    std::unordered_map<NodeId, NodeId> remap;
    std::vector<NodeId> order = sub.preorder(sub.root());
    for (NodeId old_id : order) {
        const TreeNode& src = sub.node(old_id);
        NodeId id = static_cast<NodeId>(nodes_.size());
        TreeNode n;
        n.id = id;
        n.label = src.label;
        n.type = src.type;
        n.parent = src.parent == kNoNode ? kNoNode : remap.at(src.parent);
        n.status = NodeStatus::Fresh;
        nodes_.push_back(std::move(n));
        remap[old_id] = id;
        if (src.parent != kNoNode) nodes_[static_cast<std::size_t>(remap.at(src.parent))].children.push_back(id);
    }
    return remap.at(sub.root());
}

void Tree::replace_child(NodeId parent, NodeId old_child, NodeId new_child) {
    TreeNode& p = node(parent);
    auto it = std::find(p.children.begin(), p.children.end(), old_child);
    if (it == p.children.end())
        throw UnknownNode("node " + std::to_string(old_child) + " is not a child of " +
                          std::to_string(parent));
    *it = new_child;
    node(new_child).parent = parent;
}

void Tree::kill_subtree(NodeId id) {
    for (NodeId n : preorder(id)) nodes_[static_cast<std::size_t>(n)].alive = false;
}

void Tree::record_attachment(NodeId attached_root, NodeId placeholder) {
    attachments_[attached_root] = placeholder;
}

NodeId Tree::find_attachment(NodeId attached_root) const {
    auto it = attachments_.find(attached_root);
    return it == attachments_.end() ? kNoNode : it->second;
}

void Tree::forget_attachment(NodeId attached_root) { attachments_.erase(attached_root); }

void Tree::set_registries(std::shared_ptr<HandlerRegistry> handlers,
                          std::shared_ptr<ConditionRegistry> conditions) {
    handlers_ = std::move(handlers);
    conditions_ = std::move(conditions);
}

namespace {

NodeStatus tick_node(Tree& tree, NodeId id, Blackboard& bb) {
    TreeNode& n = tree.node(id);
    NodeStatus result;
    switch (n.type.kind) {
        case NodeKind::Condition: {
            const ConditionFn* fn =
                tree.conditions() ? tree.conditions()->find(n.type.name) : nullptr;
            bool value = fn ? (*fn)(bb) : bb.flag(n.type.name);
            result = value ? NodeStatus::Success : NodeStatus::Failure;
            break;
        }
        case NodeKind::Action: {
            const ActionHandler* handler =
                tree.handlers() ? tree.handlers()->find(n.type.name) : nullptr;
            if (!handler || !handler->step)
                throw UnresolvedHandler("no handler registered for '" + n.type.name + "'");
            result = handler->step(bb);
            break;
        }
        case NodeKind::Fallback: {
            result = NodeStatus::Failure;
            for (NodeId c : n.children) {
                NodeStatus s = tick_node(tree, c, bb);
                if (s != NodeStatus::Failure) {
                    result = s;
                    break;
                }
            }
            break;
        }
        case NodeKind::Sequence: {
            result = NodeStatus::Success;
            for (NodeId c : n.children) {
                NodeStatus s = tick_node(tree, c, bb);
                if (s != NodeStatus::Success) {
                    result = s;
                    break;
                }
            }
            break;
        }
        case NodeKind::Parallel: {
            std::vector<NodeStatus> statuses;
            statuses.reserve(n.children.size());
            for (NodeId c : n.children) statuses.push_back(tick_node(tree, c, bb));
            result = tick_parallel(n.type.threshold, statuses);
            break;
        }
        case NodeKind::Decorator: {
            result = apply_decorator(n.type.policy, tick_node(tree, n.children.front(), bb));
            break;
        }
        default:
            throw MalformedTree("unknown node kind");
    }
    tree.node(id).status = result;
    return result;
}

}  // namespace

NodeStatus tick(Tree& tree, NodeId root, Blackboard& bb) {
    if (!tree.has_node(root)) throw UnknownNode("no node with id " + std::to_string(root));
    tree.validate();
    return tick_node(tree, root, bb);
}

void reset_subtree(Tree& tree, NodeId root) {
    for (NodeId id : tree.preorder(root)) {
        TreeNode& n = tree.node(id);
        if (n.type.kind == NodeKind::Action && n.status == NodeStatus::Running) {
            const ActionHandler* handler =
                tree.handlers() ? tree.handlers()->find(n.type.name) : nullptr;
            if (handler && handler->halt) handler->halt();
        }
        n.status = NodeStatus::Fresh;
    }
}

int count_nodes(const Tree& tree) { return count_nodes(tree, tree.root()); }

int count_nodes(const Tree& tree, NodeId from) {
    return static_cast<int>(tree.preorder(from).size());
}

NodeStatus tick_fallback(std::span<const NodeStatus> children) {
    if (children.empty()) throw MalformedTree("fallback with no children");
    for (NodeStatus s : children)
        if (s != NodeStatus::Failure) return s;
    return NodeStatus::Failure;
}

NodeStatus tick_sequence(std::span<const NodeStatus> children) {
    if (children.empty()) throw MalformedTree("sequence with no children");
    for (NodeStatus s : children)
        if (s != NodeStatus::Success) return s;
    return NodeStatus::Success;
}

NodeStatus tick_parallel(int threshold, std::span<const NodeStatus> children) {
    const int n = static_cast<int>(children.size());
    const int m = threshold == 0 ? n : threshold;
    if (m < 1 || m > n)
        throw InvalidThreshold("parallel threshold " + std::to_string(m) + " outside [1, " +
                               std::to_string(n) + "]");
    int successes = 0;
    int failures = 0;
    for (NodeStatus s : children) {
        if (s == NodeStatus::Success) ++successes;
        if (s == NodeStatus::Failure) ++failures;
    }
    if (successes >= m) return NodeStatus::Success;
    if (failures > n - m) return NodeStatus::Failure;
    return NodeStatus::Running;
}

NodeStatus apply_decorator(DecoratorPolicy policy, NodeStatus child) {
    switch (policy) {
        case DecoratorPolicy::Identity:
            return child;
        case DecoratorPolicy::Invert:
            if (child == NodeStatus::Success) return NodeStatus::Failure;
            if (child == NodeStatus::Failure) return NodeStatus::Success;
            return child;
        case DecoratorPolicy::ForceSuccess:
            return child == NodeStatus::Running ? NodeStatus::Running : NodeStatus::Success;
    }
    return child;
}

namespace {

void render_node(const Tree& tree, NodeId id, int depth, std::ostringstream& out) {
    const TreeNode& n = tree.node(id);
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << "[" << to_string(n.type.kind)
        << "] " << n.label;
    if (n.type.kind == NodeKind::Parallel && n.type.threshold > 0)
        out << " (M=" << n.type.threshold << ")";
    out << "\n";
    for (NodeId c : n.children) render_node(tree, c, depth + 1, out);
}

}  // namespace

std::string render_tree(const Tree& tree, NodeId from) {
    std::ostringstream out;
    render_node(tree, from, 0, out);
    return out.str();
}

}  // namespace rbt
