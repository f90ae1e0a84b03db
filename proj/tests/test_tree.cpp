#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <vector>

#include "rbt/tree.hpp"

using namespace rbt;

namespace {

// Independent brute-force reference for the control-node decision tables.
// Deliberately written as literal case analysis, not by reusing the library's
// combinators.
NodeStatus oracle_fallback(const std::vector<NodeStatus>& children) {
    // Ticks children left to right; returns the first non-Failure result.
    for (NodeStatus s : children) {
        if (s == NodeStatus::Success) return NodeStatus::Success;
        if (s == NodeStatus::Running) return NodeStatus::Running;
    }
    return NodeStatus::Failure;
}

NodeStatus oracle_sequence(const std::vector<NodeStatus>& children) {
    for (NodeStatus s : children) {
        if (s == NodeStatus::Failure) return NodeStatus::Failure;
        if (s == NodeStatus::Running) return NodeStatus::Running;
    }
    return NodeStatus::Success;
}

NodeStatus oracle_parallel(int m, const std::vector<NodeStatus>& children) {
    int success = 0, failure = 0;
    for (NodeStatus s : children) {
        if (s == NodeStatus::Success) ++success;
        if (s == NodeStatus::Failure) ++failure;
    }
    const int n = static_cast<int>(children.size());
    if (success >= m) return NodeStatus::Success;
    // Failure once success can no longer be reached: more than n-m failures.
    if (failure > n - m) return NodeStatus::Failure;
    return NodeStatus::Running;
}

std::vector<std::vector<NodeStatus>> all_tuples(int arity) {
    static const NodeStatus kStatuses[] = {NodeStatus::Running, NodeStatus::Success,
                                           NodeStatus::Failure};
    std::vector<std::vector<NodeStatus>> out{{}};
    for (int i = 0; i < arity; ++i) {
        std::vector<std::vector<NodeStatus>> next;
        for (const auto& t : out)
            for (NodeStatus s : kStatuses) {
                auto copy = t;
                copy.push_back(s);
                next.push_back(std::move(copy));
            }
        out = std::move(next);
    }
    return out;
}

// An action whose status script is consumed one tick at a time.
struct ScriptedAction {
    std::vector<NodeStatus> script;
    std::size_t cursor = 0;
    int steps = 0;
    int halts = 0;

    NodeStatus step() {
        ++steps;
        NodeStatus s = script[std::min(cursor, script.size() - 1)];
        ++cursor;
        return s;
    }
};

ActionHandler make_handler(const std::string& name, ScriptedAction& action) {
    return {name, [&action](Blackboard&) { return action.step(); }, [&action] { ++action.halts; }};
}

}  // namespace

TEST_CASE("control node results match the brute-force decision tables") {
    int checked = 0;
    for (int arity = 1; arity <= 3; ++arity) {
        for (const auto& tuple : all_tuples(arity)) {
            CHECK(tick_fallback(tuple) == oracle_fallback(tuple));
            CHECK(tick_sequence(tuple) == oracle_sequence(tuple));
            for (int m = 1; m <= arity; ++m)
                CHECK(tick_parallel(m, tuple) == oracle_parallel(m, tuple));
            ++checked;
        }
    }
    CHECK(checked == 3 + 9 + 27);
}

TEST_CASE("parallel threshold outside [1, N] is rejected") {
    std::vector<NodeStatus> two{NodeStatus::Success, NodeStatus::Success};
    CHECK_THROWS_AS(tick_parallel(3, two), InvalidThreshold);
    CHECK_THROWS_AS(tick_parallel(-1, two), InvalidThreshold);
    // 0 means "all children".
    CHECK(tick_parallel(0, two) == NodeStatus::Success);
}

TEST_CASE("fallback short-circuits: children after the deciding one are not ticked") {
    Blackboard bb;
    auto handlers = std::make_shared<HandlerRegistry>();
    Tree t(handlers, std::make_shared<ConditionRegistry>());

    ScriptedAction first{{NodeStatus::Success}};
    ScriptedAction second{{NodeStatus::Success}};
    handlers->add(make_handler("first", first));
    handlers->add(make_handler("second", second));

    NodeId root = t.add_node("root", NodeType::fallback());
    t.add_node("first", NodeType::action("first"), root);
    t.add_node("second", NodeType::action("second"), root);

    CHECK(tick(t, bb) == NodeStatus::Success);
    CHECK(first.steps == 1);
    CHECK(second.steps == 0);
    CHECK(t.node(2).status == NodeStatus::Fresh);  // untouched child keeps its status
}

TEST_CASE("sequence short-circuits on failure") {
    Blackboard bb;
    auto handlers = std::make_shared<HandlerRegistry>();
    Tree t(handlers, std::make_shared<ConditionRegistry>());

    ScriptedAction first{{NodeStatus::Failure}};
    ScriptedAction second{{NodeStatus::Success}};
    handlers->add(make_handler("first", first));
    handlers->add(make_handler("second", second));

    NodeId root = t.add_node("root", NodeType::sequence());
    t.add_node("first", NodeType::action("first"), root);
    t.add_node("second", NodeType::action("second"), root);

    CHECK(tick(t, bb) == NodeStatus::Failure);
    CHECK(second.steps == 0);
}

TEST_CASE("condition nodes read registered predicates, then blackboard flags") {
    Blackboard bb;
    auto conditions = std::make_shared<ConditionRegistry>();
    Tree t(std::make_shared<HandlerRegistry>(), conditions);
    NodeId root = t.add_node("root", NodeType::fallback());
    t.add_node("box picked", NodeType::condition("box picked"), root);
    t.add_node("always", NodeType::condition("always"), root);

    CHECK(tick(t, bb) == NodeStatus::Failure);  // unknown flags read false
    bb.set_flag("box picked", true);
    CHECK(tick(t, bb) == NodeStatus::Success);
    bb.set_flag("box picked", false);
    conditions->add("always", [](Blackboard&) { return true; });
    CHECK(tick(t, bb) == NodeStatus::Success);
}

TEST_CASE("decorator policies") {
    CHECK(apply_decorator(DecoratorPolicy::Identity, NodeStatus::Failure) == NodeStatus::Failure);
    CHECK(apply_decorator(DecoratorPolicy::Invert, NodeStatus::Failure) == NodeStatus::Success);
    CHECK(apply_decorator(DecoratorPolicy::Invert, NodeStatus::Success) == NodeStatus::Failure);
    CHECK(apply_decorator(DecoratorPolicy::Invert, NodeStatus::Running) == NodeStatus::Running);
    CHECK(apply_decorator(DecoratorPolicy::ForceSuccess, NodeStatus::Failure) ==
          NodeStatus::Success);
    CHECK(apply_decorator(DecoratorPolicy::ForceSuccess, NodeStatus::Running) ==
          NodeStatus::Running);
    // Identity decorator is transparent inside a tree.
    Blackboard bb;
    auto handlers = std::make_shared<HandlerRegistry>();
    Tree t(handlers, std::make_shared<ConditionRegistry>());
    ScriptedAction a{{NodeStatus::Running, NodeStatus::Success}};
    handlers->add(make_handler("a", a));
    NodeId root = t.add_node("root", NodeType::decorator(DecoratorPolicy::Identity));
    t.add_node("a", NodeType::action("a"), root);
    CHECK(tick(t, bb) == NodeStatus::Running);
    CHECK(tick(t, bb) == NodeStatus::Success);
}

TEST_CASE("validate rejects malformed shapes") {
    auto handlers = std::make_shared<HandlerRegistry>();
    auto conditions = std::make_shared<ConditionRegistry>();

    SUBCASE("control node without children") {
        Tree t(handlers, conditions);
        t.add_node("root", NodeType::sequence());
        CHECK_THROWS_AS(t.validate(), MalformedTree);
    }
    SUBCASE("decorator arity") {
        Tree t(handlers, conditions);
        NodeId root = t.add_node("root", NodeType::decorator(DecoratorPolicy::Identity));
        t.add_node("a", NodeType::condition("a"), root);
        t.add_node("b", NodeType::condition("b"), root);
        CHECK_THROWS_AS(t.validate(), MalformedTree);
    }
    SUBCASE("node reachable twice") {
        Tree t(handlers, conditions);
        NodeId root = t.add_node("root", NodeType::fallback());
        NodeId c = t.add_node("c", NodeType::condition("c"), root);
        t.node(root).children.push_back(c);  // second edge to the same child
        CHECK_THROWS_AS(t.validate(), MalformedTree);
    }
    SUBCASE("cycle") {
        Tree t(handlers, conditions);
        NodeId root = t.add_node("root", NodeType::fallback());
        NodeId mid = t.add_node("mid", NodeType::fallback(), root);
        t.node(mid).children.push_back(root);
        t.node(root).parent = mid;
        CHECK_THROWS_AS(t.validate(), MalformedTree);
    }
    SUBCASE("unregistered action handler") {
        Tree t(handlers, conditions);
        t.add_node("root", NodeType::action("does not exist"));
        CHECK_THROWS_AS(t.validate(), UnresolvedHandler);
    }
}

TEST_CASE("reset halts running actions and is idempotent") {
    Blackboard bb;
    auto handlers = std::make_shared<HandlerRegistry>();
    Tree t(handlers, std::make_shared<ConditionRegistry>());

    ScriptedAction runner{{NodeStatus::Running}};
    handlers->add(make_handler("runner", runner));
    NodeId root = t.add_node("root", NodeType::sequence());
    t.add_node("runner", NodeType::action("runner"), root);

    CHECK(tick(t, bb) == NodeStatus::Running);
    reset_subtree(t, root);
    CHECK(runner.halts == 1);
    CHECK(t.node(root).status == NodeStatus::Fresh);
    reset_subtree(t, root);
    CHECK(runner.halts == 1);  // not Running anymore, so no second halt
}

TEST_CASE("graft copies live nodes with fresh statuses") {
    auto handlers = std::make_shared<HandlerRegistry>();
    auto conditions = std::make_shared<ConditionRegistry>();
    Blackboard bb;

    Tree sub(handlers, conditions);
    NodeId sroot = sub.add_node("sub", NodeType::fallback());
    sub.add_node("c", NodeType::condition("c"), sroot);
    bb.set_flag("c", true);
    tick(sub, bb);
    CHECK(sub.node(sroot).status == NodeStatus::Success);

    Tree t(handlers, conditions);
    NodeId root = t.add_node("root", NodeType::sequence());
    NodeId copy = t.graft(sub);
    t.node(root).children.push_back(copy);
    t.node(copy).parent = root;

    CHECK(count_nodes(t) == 3);
    CHECK(t.node(copy).status == NodeStatus::Fresh);
    CHECK(t.node(copy).label == "sub");
    t.validate();
}

TEST_CASE("render_tree lists one node per line with kind and label") {
    Tree t(std::make_shared<HandlerRegistry>(), std::make_shared<ConditionRegistry>());
    NodeId root = t.add_node("root", NodeType::fallback());
    t.add_node("done", NodeType::condition("done"), root);
    std::string text = render_tree(t);
    CHECK(text == "[fallback] root\n  [condition] done\n");
}

TEST_CASE("tick results over random trees match a reference evaluator") {
    // Cross-checks the recursive tick against the pure combinators on a
    // three-level fixed topology with scripted leaves, over every leaf script.
    Blackboard bb;
    auto handlers = std::make_shared<HandlerRegistry>();
    Tree t(handlers, std::make_shared<ConditionRegistry>());

    ScriptedAction a, b, c;
    handlers->add(make_handler("a", a));
    handlers->add(make_handler("b", b));
    handlers->add(make_handler("c", c));

    NodeId root = t.add_node("root", NodeType::parallel(1));
    NodeId seq = t.add_node("seq", NodeType::sequence(), root);
    t.add_node("a", NodeType::action("a"), seq);
    t.add_node("b", NodeType::action("b"), seq);
    t.add_node("c", NodeType::action("c"), root);

    for (const auto& tuple : all_tuples(3)) {
        a = ScriptedAction{{tuple[0]}};
        b = ScriptedAction{{tuple[1]}};
        c = ScriptedAction{{tuple[2]}};
        reset_subtree(t, root);
        NodeStatus seq_status = oracle_sequence({tuple[0], tuple[1]});
        NodeStatus expected = oracle_parallel(1, {seq_status, tuple[2]});
        CHECK(tick(t, bb) == expected);
    }
}
