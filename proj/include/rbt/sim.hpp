#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rbt/blackboard.hpp"
#include "rbt/emphasizer.hpp"
#include "rbt/engine.hpp"
#include "rbt/schema.hpp"
#include "rbt/tree.hpp"

namespace rbt::sim {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

double distance(const Vec3& a, const Vec3& b);

enum class Mode { Instant, Stepped };

struct BoxState {
    Vec3 position;
    bool held = false;
    bool placed = false;
};

/// Kinematic snapshot of the sorting world: gripper pose, box poses, storage
/// slots.
struct WorldState {
    Vec3 gripper;
    std::map<std::string, BoxState> boxes;
    std::map<std::string, Vec3> slots;
    double step_size = 0.05;  // meters per simulation step
};

struct Perturbation {
    std::uint64_t tick = 0;
    std::string box;
    Vec3 position;
};

/// Scenario file contents: initial world, case id, priority thresholds,
/// execution mode, and optional timed box moves.
struct Scenario {
    int case_id = 2;
    Mode mode = Mode::Instant;
    WorldState initial;
    double theta_min = 0.05;
    double theta_max = 1.0;
    std::vector<Perturbation> perturbations;

    static Scenario from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    static Scenario load(const std::string& path);
};

enum class IntentKind { Pick, Place };

struct ActionIntent {
    IntentKind kind = IntentKind::Pick;
    std::string box;
};

/// Applies one world transition. Instant intents complete immediately;
/// otherwise the gripper advances by step_size toward the intent target and
/// the action completes once within grasp_radius. Throws OutOfReach,
/// GripperOccupied, or NotHeld on contract violations.
WorldState step_world(WorldState world, const std::optional<ActionIntent>& intent, Mode mode,
                      double reach, double grasp_radius);

/// Owns the world state during a run: registers pick/place handlers, applies
/// perturbations and intents between ticks, and pushes distance stimuli and
/// completion flags to the blackboard.
class SortingWorld {
public:
    SortingWorld(Scenario scenario, std::shared_ptr<Blackboard> bb);

    /// Specialized `pick <box>` / `place <box>` handlers for every box.
    void register_handlers(HandlerRegistry& registry);

    /// World-stepper hook for the engine run loop.
    void step(std::uint64_t tick_index);

    /// Writes `stimulus/sort <box>` = gripper-to-box distance for each
    /// unplaced box.
    void emit_stimuli();

    const WorldState& state() const { return world_; }
    WorldState& state() { return world_; }
    const std::vector<std::string>& placed_order() const { return placed_order_; }
    const std::optional<ActionIntent>& intent() const { return intent_; }

private:
    NodeStatus pick_step(const std::string& box);
    NodeStatus place_step(const std::string& box);
    void halt_intent(const std::string& box);
    void complete_pick(const std::string& box);
    void complete_place(const std::string& box);

    Scenario scenario_;
    WorldState world_;
    std::shared_ptr<Blackboard> bb_;
    std::optional<ActionIntent> intent_;
    std::vector<std::string> placed_order_;
};

/// Subtask records for the two case studies: case 1 chains preconditions to
/// force the order (b, g, r); case 2 leaves them empty.
std::vector<SubtaskRecord> build_subtasks(int case_id, const Scenario& scenario);

/// The default fixture scenario for a case study.
Scenario default_scenario(int case_id);

/// Scenario plus subtask definitions for a case study.
std::pair<Scenario, std::vector<SubtaskRecord>> build_case(int case_id);

/// The static comparison tree for a case study: 27 nodes for case 1, 151 for
/// case 2 (one 24-node ordering stump per box permutation).
Tree build_baseline_bt(int case_id, const LtmStore& ltm,
                       std::shared_ptr<HandlerRegistry> handlers,
                       std::shared_ptr<ConditionRegistry> conditions,
                       std::shared_ptr<Blackboard> bb);

}  // namespace rbt::sim
