#include "rbt/instantiator.hpp"

#include <algorithm>

namespace rbt {

namespace {

NodeType control_type(const SchemaNode& schema) {
    if (schema.type == "fallback") return NodeType::fallback();
    if (schema.type == "sequence") return NodeType::sequence();
    if (schema.type == "parallel") return NodeType::parallel(schema.threshold);
    return NodeType::decorator(schema.policy);
}

void add_condition_nodes(Tree& t, NodeId parent, const std::vector<ConditionTag>& conds) {
    for (const auto& c : conds) t.add_node(c.condition, NodeType::condition(c.condition), parent);
}

void check_handler(const InstantiationContext& ctx, const std::string& name) {
    if (ctx.handlers && !ctx.handlers->contains(name))
        throw UnresolvedHandler("no handler registered for action '" + name + "'");
}

void build_schema(const InstantiationContext& ctx, const TaskRecord& task,
                  const SchemaNode& schema, Tree& t, NodeId parent, bool expand) {
    const NodeId id = t.add_node(schema.name, control_type(schema), parent);
    const NodeKind kind = t.node(id).type.kind;

    for (int i = 1; i <= static_cast<int>(schema.children.size()); ++i) {
        const SchemaChild& child = schema.children[static_cast<std::size_t>(i - 1)];
        const auto pre = expand ? schema.preconditions_of(i) : std::vector<ConditionTag>{};
        const auto post = expand ? schema.postconditions_of(i) : std::vector<ConditionTag>{};

        // Postcondition gate: Fallback(Conditions..., child). When the schema
        // node is itself a Fallback the gate folds into it.
        NodeId host = id;
        if (!post.empty()) {
            if (kind != NodeKind::Fallback)
                host = t.add_node("fallback", NodeType::fallback(), id);
            if (post.size() == 1) {
                add_condition_nodes(t, host, post);
            } else {
                NodeId seq = t.add_node("sequence", NodeType::sequence(), host);
                add_condition_nodes(t, seq, post);
            }
        }

        // Precondition gate: Sequence(Conditions..., child), folded into a
        // Sequence host the same way.
        NodeId attach_at = host;
        if (!pre.empty()) {
            if (t.node(host).type.kind != NodeKind::Sequence)
                attach_at = t.add_node("sequence", NodeType::sequence(), host);
            add_condition_nodes(t, attach_at, pre);
        }

        if (child.action) {
            check_handler(ctx, child.name);
            t.add_node(child.name, NodeType::action(child.name), attach_at);
        } else {
            build_schema(ctx, task, *task.find(child.name), t, attach_at, expand);
        }
    }
}

}  // namespace

Tree instantiate_schemas(const InstantiationContext& ctx, const TaskRecord& task,
                         const InstantiationOptions& options) {
    Tree t(ctx.handlers, ctx.conditions);
    build_schema(ctx, task, task.root(), t, kNoNode, options.expand_conditions);

    if (!options.root_preconditions.empty()) {
        NodeId old_root = t.root();
        NodeId seq = t.add_node("sequence", NodeType::sequence());
        for (const auto& name : options.root_preconditions)
            t.add_node(name, NodeType::condition(name), seq);
        t.node(seq).children.push_back(old_root);
        t.node(old_root).parent = seq;
        t.set_root(seq);
    }
    return t;
}

Tree instantiate_subtree(const InstantiationContext& ctx, const std::string& task_name,
                         const InstantiationOptions& options) {
    if (!ctx.ltm) throw UnknownTask("instantiation context has no LTM store");
    return instantiate_schemas(ctx, ctx.ltm->get(task_name), options);
}

std::vector<SchemaNode> specialize(const std::vector<SchemaNode>& schemas,
                                   const std::map<std::string, std::string>& binding) {
    std::map<std::string, bool> used;
    for (const auto& [key, value] : binding) used["{" + key + "}"] = false;

    auto substitute = [&](std::string text) {
        for (const auto& [key, value] : binding) {
            const std::string token = "{" + key + "}";
            std::size_t pos = 0;
            while ((pos = text.find(token, pos)) != std::string::npos) {
                text.replace(pos, token.size(), value);
                pos += value.size();
                used[token] = true;
            }
        }
        return text;
    };

    std::vector<SchemaNode> out = schemas;
    for (auto& s : out) {
        s.name = substitute(s.name);
        for (auto& c : s.children) c.name = substitute(c.name);
        for (auto& c : s.conditions) c.condition = substitute(c.condition);
    }
    for (const auto& [token, was_used] : used)
        if (!was_used)
            throw UnboundPlaceholder("placeholder " + token + " does not occur in the schemas");
    return out;
}

NodeId attach_dynamic(Tree& tree, NodeId at, const Tree& subtree) {
    const TreeNode& placeholder = tree.node(at);
    if (placeholder.type.kind != NodeKind::Action || placeholder.type.name != kPlaceholderAction)
        throw NotReplaceable("node " + std::to_string(at) + " is not a replaceable placeholder");
    if (placeholder.parent == kNoNode)
        throw NotReplaceable("placeholder node has no parent to attach under");
    const NodeId parent = placeholder.parent;
    const auto& siblings = tree.node(parent).children;
    if (std::find(siblings.begin(), siblings.end(), at) == siblings.end())
        throw NotReplaceable("placeholder slot " + std::to_string(at) +
                             " already hosts a subtree");
    const NodeId sub_root = tree.graft(subtree);
    tree.replace_child(parent, at, sub_root);
    tree.record_attachment(sub_root, at);
    return sub_root;
}

void detach_dynamic(Tree& tree, NodeId at) {
    const NodeId placeholder = tree.find_attachment(at);
    if (placeholder == kNoNode)
        throw NothingAttached("node " + std::to_string(at) + " hosts no attached subtree");
    reset_subtree(tree, at);  // delivers halt to running actions
    const NodeId parent = tree.node(at).parent;
    tree.replace_child(parent, at, placeholder);
    tree.node(placeholder).status = NodeStatus::Fresh;
    tree.kill_subtree(at);
    tree.forget_attachment(at);
}

}  // namespace rbt
