#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "rbt/engine.hpp"

using namespace rbt;

namespace {

const std::string kFixtureDir = RBT_SOURCE_DIR "/fixtures/ltm";

SubtaskRecord make_subtask(const std::string& box, std::vector<std::string> pre = {}) {
    SubtaskRecord rec;
    rec.name = "sort " + box;
    rec.task = "sort box";
    rec.binding = {{"box", box}};
    rec.preconditions = std::move(pre);
    rec.postconditions = {box + " placed"};
    rec.stimulus_key = stimulus_key_for(rec.name);
    return rec;
}

// Registers pick/place handlers that complete instantly, flipping the
// completion flags the way a real world adapter would.
void add_instant_handlers(HandlerRegistry& handlers, const std::string& box) {
    handlers.add({"pick " + box,
                  [box](Blackboard& bb) {
                      bb.set_flag(box + " picked", true);
                      return NodeStatus::Success;
                  },
                  nullptr});
    handlers.add({"place " + box,
                  [box](Blackboard& bb) {
                      bb.set_flag(box + " placed", true);
                      return NodeStatus::Success;
                  },
                  nullptr});
}

struct EngineFixture {
    std::shared_ptr<LtmStore> ltm = std::make_shared<LtmStore>(kFixtureDir);
    std::shared_ptr<Blackboard> bb = std::make_shared<Blackboard>();
    std::shared_ptr<HandlerRegistry> handlers = std::make_shared<HandlerRegistry>();
    std::shared_ptr<ConditionRegistry> conditions = std::make_shared<ConditionRegistry>();
};

}  // namespace

TEST_CASE("the engine starts from the 13-node skeleton") {
    EngineFixture f;
    for (const char* box : {"b_box", "g_box", "r_box"}) add_instant_handlers(*f.handlers, box);
    RbtEngine engine(f.ltm, {make_subtask("b_box"), make_subtask("g_box"), make_subtask("r_box")},
                     f.bb, f.handlers, f.conditions);
    CHECK(engine.node_count() == 13);
    CHECK_FALSE(engine.current().has_value());
    CHECK_FALSE(engine.finished());
}

TEST_CASE("a run reaches the goal and reports 19 nodes per instantiation") {
    EngineFixture f;
    for (const char* box : {"b_box", "g_box", "r_box"}) add_instant_handlers(*f.handlers, box);
    RbtEngine engine(f.ltm, {make_subtask("b_box"), make_subtask("g_box"), make_subtask("r_box")},
                     f.bb, f.handlers, f.conditions);

    auto stepper = [&](std::uint64_t) {
        if (!f.bb->flag("b_box placed")) f.bb->set_scalar("stimulus/sort b_box", 0.30, "m");
        if (!f.bb->flag("g_box placed")) f.bb->set_scalar("stimulus/sort g_box", 0.55, "m");
        if (!f.bb->flag("r_box placed")) f.bb->set_scalar("stimulus/sort r_box", 0.80, "m");
    };
    RunResult result = engine.run_to_goal(stepper, 100);
    CHECK(result.goal_reached);
    CHECK(result.node_count_min == 19);
    CHECK(result.node_count_max == 19);
    CHECK(engine.finished());
    CHECK(f.bb->flag("b_box placed"));
    CHECK(f.bb->flag("g_box placed"));
    CHECK(f.bb->flag("r_box placed"));
    CHECK_THROWS_AS(engine.tick_once(), EngineHalted);

    // Root only succeeded on the goal tick.
    for (std::size_t i = 0; i + 1 < result.traces.size(); ++i)
        CHECK(result.traces[i].root_status != NodeStatus::Success);
    CHECK(result.traces.back().root_status == NodeStatus::Success);
}

TEST_CASE("precondition-gated subtasks grow the tree to 21 and 22 nodes") {
    EngineFixture f;
    for (const char* box : {"b_box", "g_box", "r_box"}) add_instant_handlers(*f.handlers, box);
    RbtEngine engine(f.ltm,
                     {make_subtask("b_box"), make_subtask("g_box", {"b_box placed"}),
                      make_subtask("r_box", {"b_box placed", "g_box placed"})},
                     f.bb, f.handlers, f.conditions);

    auto stepper = [&](std::uint64_t) {
        f.bb->set_scalar("stimulus/sort b_box", 0.30, "m");
        f.bb->set_scalar("stimulus/sort g_box", 0.55, "m");
        f.bb->set_scalar("stimulus/sort r_box", 0.80, "m");
    };
    RunResult result = engine.run_to_goal(stepper, 100);
    CHECK(result.goal_reached);
    CHECK(result.node_count_min == 19);
    CHECK(result.node_count_max == 22);
}

TEST_CASE("a priority flip preempts the running subtree and halts its action") {
    EngineFixture f;
    int b_halts = 0;
    // b_box's pick never finishes; g_box's actions complete instantly.
    f.handlers->add({"pick b_box", [](Blackboard&) { return NodeStatus::Running; },
                     [&b_halts] { ++b_halts; }});
    f.handlers->add({"place b_box",
                     [](Blackboard& bb) {
                         bb.set_flag("b_box placed", true);
                         return NodeStatus::Success;
                     },
                     nullptr});
    add_instant_handlers(*f.handlers, "g_box");

    RbtEngine engine(f.ltm, {make_subtask("b_box"), make_subtask("g_box")}, f.bb, f.handlers,
                     f.conditions);

    f.bb->set_scalar("stimulus/sort b_box", 0.10, "m");
    f.bb->set_scalar("stimulus/sort g_box", 0.50, "m");
    engine.tick_once();  // initializes, resets stimuli to unobserved, attaches
    f.bb->set_scalar("stimulus/sort b_box", 0.10, "m");
    f.bb->set_scalar("stimulus/sort g_box", 0.50, "m");
    engine.tick_once();  // argmax is b_box
    engine.tick_once();  // b_box pick runs (and stays Running)
    CHECK(engine.current() == "sort b_box");
    CHECK_FALSE(f.bb->flag("b_box picked"));

    // g_box becomes strictly closest.
    f.bb->set_scalar("stimulus/sort g_box", 0.06, "m");
    TickTrace flip = engine.tick_once();  // Emphasizer raises the flag, loader swaps
    CHECK(flip.flags.at(kPriorityChangedFlag));
    CHECK(engine.current() == "sort g_box");
    CHECK(b_halts == 1);
    CHECK_FALSE(f.bb->flag("b_box picked"));  // the halted pick never committed
}

TEST_CASE("preempt detaches without touching condition flags") {
    EngineFixture f;
    for (const char* box : {"b_box"}) add_instant_handlers(*f.handlers, box);
    RbtEngine engine(f.ltm, {make_subtask("b_box")}, f.bb, f.handlers, f.conditions);

    CHECK_THROWS_AS(engine.preempt(), NothingAttached);
    f.bb->set_scalar("stimulus/sort b_box", 0.10, "m");
    engine.tick_once();
    CHECK(engine.current().has_value());
    const auto version = f.bb->version();
    engine.preempt();
    CHECK_FALSE(engine.current().has_value());
    CHECK(engine.node_count() == 13);
    CHECK(f.bb->version() == version);
}

TEST_CASE("an exhausted budget carries the partial result") {
    EngineFixture f;
    // pick never completes and nothing else can progress.
    f.handlers->add({"pick b_box", [](Blackboard&) { return NodeStatus::Running; }, nullptr});
    f.handlers->add({"place b_box", [](Blackboard&) { return NodeStatus::Running; }, nullptr});
    RbtEngine engine(f.ltm, {make_subtask("b_box")}, f.bb, f.handlers, f.conditions);

    auto stepper = [&](std::uint64_t) { f.bb->set_scalar("stimulus/sort b_box", 0.10, "m"); };
    try {
        engine.run_to_goal(stepper, 7);
        FAIL("expected the tick budget to run out");
    } catch (const TickBudgetExhausted& e) {
        CHECK(e.partial.traces.size() == 7);
        CHECK_FALSE(e.partial.goal_reached);
    }
}

TEST_CASE("a root task without a placeholder slot is rejected") {
    const std::string path = "no_placeholder_ltm.json";
    {
        std::ofstream out(path);
        out << R"json({"rbt_root": [{"name": "rbt_root", "type": "fallback",
                   "children": ["A(handle priority)"], "params": [""]}]})json";
    }
    auto ltm = std::make_shared<LtmStore>(path);
    auto bb = std::make_shared<Blackboard>();
    CHECK_THROWS_AS(RbtEngine(ltm, {}, bb, nullptr, nullptr), SchemaError);
    std::remove(path.c_str());
}

TEST_CASE("traces serialize with the documented fields") {
    EngineFixture f;
    add_instant_handlers(*f.handlers, "b_box");
    RbtEngine engine(f.ltm, {make_subtask("b_box")}, f.bb, f.handlers, f.conditions);
    f.bb->set_scalar("stimulus/sort b_box", 0.10, "m");
    TickTrace trace = engine.tick_once();
    const nlohmann::json doc = trace.to_json();
    for (const char* field : {"tick", "root_status", "current", "priorities", "flags", "tick_ns"})
        CHECK(doc.contains(field));
    CHECK(doc.at("tick").get<std::uint64_t>() == 0);
    CHECK(doc.at("priorities").contains("sort b_box"));
}
