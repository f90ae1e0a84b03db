#include "rbt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "rbt/instantiator.hpp"

namespace rbt::sim {

using nlohmann::json;

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

Vec3 vec_from_json(const json& v) {
    return Vec3{v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 move_toward(const Vec3& from, const Vec3& to, double step) {
    const double d = distance(from, to);
    if (d <= step || d == 0.0) return to;
    const double k = step / d;
    return Vec3{from.x + (to.x - from.x) * k, from.y + (to.y - from.y) * k,
                from.z + (to.z - from.z) * k};
}

const std::vector<std::string> kBoxes{"b_box", "g_box", "r_box"};

std::string picked_flag(const std::string& box) { return box + " picked"; }
std::string placed_flag(const std::string& box) { return box + " placed"; }
std::string subtask_name(const std::string& box) { return "sort " + box; }

}  // namespace

Scenario Scenario::from_json(const json& doc) {
    Scenario s;
    s.case_id = doc.at("case").get<int>();
    const std::string mode = doc.value("mode", "instant");
    if (mode == "instant")
        s.mode = Mode::Instant;
    else if (mode == "stepped")
        s.mode = Mode::Stepped;
    else
        throw Error("scenario mode must be \"instant\" or \"stepped\", got \"" + mode + "\"");
    s.initial.gripper = vec_from_json(doc.at("gripper"));
    for (const auto& [name, pos] : doc.at("boxes").items())
        s.initial.boxes[name] = BoxState{vec_from_json(pos)};
    for (const auto& [name, pos] : doc.at("slots").items())
        s.initial.slots[name] = vec_from_json(pos);
    s.theta_min = doc.value("theta_min", 0.05);
    s.theta_max = doc.value("theta_max", 1.0);
    s.initial.step_size = doc.value("step_size", 0.05);
    for (const auto& p : doc.value("perturbations", json::array()))
        s.perturbations.push_back(Perturbation{p.at("tick").get<std::uint64_t>(),
                                               p.at("box").get<std::string>(),
                                               vec_from_json(p.at("position"))});
    return s;
}

json Scenario::to_json() const {
    json doc;
    doc["case"] = case_id;
    doc["mode"] = mode == Mode::Instant ? "instant" : "stepped";
    doc["gripper"] = vec_to_json(initial.gripper);
    json boxes = json::object();
    for (const auto& [name, box] : initial.boxes) boxes[name] = vec_to_json(box.position);
    doc["boxes"] = std::move(boxes);
    json slots = json::object();
    for (const auto& [name, pos] : initial.slots) slots[name] = vec_to_json(pos);
    doc["slots"] = std::move(slots);
    doc["theta_min"] = theta_min;
    doc["theta_max"] = theta_max;
    doc["step_size"] = initial.step_size;
    json perts = json::array();
    for (const auto& p : perturbations)
        perts.push_back(
            {{"tick", p.tick}, {"box", p.box}, {"position", vec_to_json(p.position)}});
    doc["perturbations"] = std::move(perts);
    return doc;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SyntaxError("scenario file " + path + ": " + e.what());
    }
    return from_json(doc);
}

WorldState step_world(WorldState world, const std::optional<ActionIntent>& intent, Mode mode,
                      double reach, double grasp_radius) {
    if (!intent) return world;
    auto it = world.boxes.find(intent->box);
    if (it == world.boxes.end()) throw Error("unknown box: " + intent->box);
    BoxState& box = it->second;

    if (intent->kind == IntentKind::Pick) {
        for (const auto& [name, b] : world.boxes)
            if (b.held && name != intent->box)
                throw GripperOccupied("gripper already holds " + name);
        if (mode == Mode::Instant) {
            if (distance(world.gripper, box.position) > reach)
                throw OutOfReach("box " + intent->box + " is beyond grasping distance");
            box.held = true;
        } else if (!box.held) {
            world.gripper = move_toward(world.gripper, box.position, world.step_size);
            if (distance(world.gripper, box.position) <= grasp_radius) box.held = true;
        }
    } else {
        if (!box.held) throw NotHeld("box " + intent->box + " is not held");
        const Vec3 slot = world.slots.at(intent->box);
        if (mode == Mode::Instant) {
            box.position = slot;
            box.held = false;
            box.placed = true;
        } else {
            world.gripper = move_toward(world.gripper, slot, world.step_size);
            box.position = world.gripper;
            if (distance(world.gripper, slot) <= grasp_radius) {
                box.position = slot;
                box.held = false;
                box.placed = true;
            }
        }
    }
    return world;
}

SortingWorld::SortingWorld(Scenario scenario, std::shared_ptr<Blackboard> bb)
    : scenario_(std::move(scenario)), world_(scenario_.initial), bb_(std::move(bb)) {}

void SortingWorld::register_handlers(HandlerRegistry& registry) {
    for (const auto& [box, state] : world_.boxes) {
        const std::string name = box;
        registry.add({"pick " + name, [this, name](Blackboard&) { return pick_step(name); },
                      [this, name] { halt_intent(name); }});
        registry.add({"place " + name, [this, name](Blackboard&) { return place_step(name); },
                      [this, name] { halt_intent(name); }});
    }
}

NodeStatus SortingWorld::pick_step(const std::string& box) {
    const BoxState& b = world_.boxes.at(box);
    if (b.placed || b.held) return NodeStatus::Success;

    if (scenario_.mode == Mode::Instant) {
        try {
            world_ = step_world(world_, ActionIntent{IntentKind::Pick, box}, Mode::Instant,
                                scenario_.theta_max, scenario_.theta_min);
        } catch (const Error&) {
            return NodeStatus::Failure;
        }
        complete_pick(box);
        return NodeStatus::Success;
    }

    // While another box is held a pick cannot start.
    for (const auto& [name, other] : world_.boxes)
        if (other.held && name != box) return NodeStatus::Failure;
    if (!intent_ || intent_->kind != IntentKind::Pick || intent_->box != box)
        intent_ = ActionIntent{IntentKind::Pick, box};
    return NodeStatus::Running;
}

NodeStatus SortingWorld::place_step(const std::string& box) {
    const BoxState& b = world_.boxes.at(box);
    if (b.placed) return NodeStatus::Success;

    if (scenario_.mode == Mode::Instant) {
        try {
            world_ = step_world(world_, ActionIntent{IntentKind::Place, box}, Mode::Instant,
                                scenario_.theta_max, scenario_.theta_min);
        } catch (const Error&) {
            return NodeStatus::Failure;
        }
        complete_place(box);
        return NodeStatus::Success;
    }

    if (!b.held) return NodeStatus::Failure;
    if (!intent_ || intent_->kind != IntentKind::Place || intent_->box != box)
        intent_ = ActionIntent{IntentKind::Place, box};
    return NodeStatus::Running;
}

void SortingWorld::halt_intent(const std::string& box) {
    if (intent_ && intent_->box == box) intent_.reset();
}

void SortingWorld::complete_pick(const std::string& box) {
    bb_->set_flag(picked_flag(box), true);
}

void SortingWorld::complete_place(const std::string& box) {
    bb_->set_flag(placed_flag(box), true);
    placed_order_.push_back(box);
}

void SortingWorld::step(std::uint64_t tick_index) {
    for (const auto& p : scenario_.perturbations)
        if (p.tick == tick_index) {
            BoxState& box = world_.boxes.at(p.box);
            if (!box.held && !box.placed) box.position = p.position;
        }

    if (scenario_.mode == Mode::Stepped && intent_) {
        const ActionIntent intent = *intent_;
        world_ = step_world(world_, intent_, Mode::Stepped, scenario_.theta_max,
                            scenario_.theta_min);
        const BoxState& box = world_.boxes.at(intent.box);
        if (intent.kind == IntentKind::Pick && box.held) {
            complete_pick(intent.box);
            intent_.reset();
        } else if (intent.kind == IntentKind::Place && box.placed) {
            complete_place(intent.box);
            intent_.reset();
        }
    }

    emit_stimuli();
}

void SortingWorld::emit_stimuli() {
    std::vector<std::pair<std::string, Blackboard::Value>> batch;
    for (const auto& [box, state] : world_.boxes) {
        if (state.placed) continue;
        batch.emplace_back(
            stimulus_key_for(subtask_name(box)),
            Blackboard::Scalar{distance(world_.gripper, state.position), "m"});
    }
    if (!batch.empty()) bb_->write_batch(batch);
}

std::vector<SubtaskRecord> build_subtasks(int case_id, const Scenario& scenario) {
    if (case_id != 1 && case_id != 2)
        throw UnknownCase("case id must be 1 or 2, got " + std::to_string(case_id));

    std::vector<std::string> boxes;
    for (const auto& [name, box] : scenario.initial.boxes) boxes.push_back(name);
    std::sort(boxes.begin(), boxes.end());

    std::vector<SubtaskRecord> out;
    std::vector<std::string> placed_so_far;
    for (const auto& box : boxes) {
        SubtaskRecord rec;
        rec.name = subtask_name(box);
        rec.task = "sort box";
        rec.binding = {{"box", box}};
        if (case_id == 1) rec.preconditions = placed_so_far;
        rec.postconditions = {placed_flag(box)};
        rec.stimulus_key = stimulus_key_for(rec.name);
        rec.params = PriorityParams{scenario.theta_min, scenario.theta_max};
        out.push_back(std::move(rec));
        placed_so_far.push_back(placed_flag(box));
    }
    return out;
}

Scenario default_scenario(int case_id) {
    if (case_id != 1 && case_id != 2)
        throw UnknownCase("case id must be 1 or 2, got " + std::to_string(case_id));
    Scenario s;
    s.case_id = case_id;
    s.mode = Mode::Instant;
    s.initial.gripper = Vec3{0, 0, 0};
    s.initial.boxes["b_box"] = BoxState{Vec3{0.30, 0, 0}};
    s.initial.boxes["g_box"] = BoxState{Vec3{0, 0.55, 0}};
    s.initial.boxes["r_box"] = BoxState{Vec3{0, 0, 0.80}};
    s.initial.slots["b_box"] = Vec3{0.60, 0.60, 0};
    s.initial.slots["g_box"] = Vec3{0.60, 0.70, 0};
    s.initial.slots["r_box"] = Vec3{0.60, 0.80, 0};
    return s;
}

std::pair<Scenario, std::vector<SubtaskRecord>> build_case(int case_id) {
    Scenario s = default_scenario(case_id);
    return {s, build_subtasks(case_id, s)};
}

namespace {

NodeId attach_copy(Tree& tree, NodeId parent, const Tree& sub) {
    NodeId id = tree.graft(sub);
    tree.node(parent).children.push_back(id);
    tree.node(id).parent = parent;
    return id;
}

Tree build_sort_subtree(const LtmStore& ltm, const std::string& box,
                        std::shared_ptr<HandlerRegistry> handlers,
                        std::shared_ptr<ConditionRegistry> conditions) {
    TaskRecord specialized;
    specialized.task_name = subtask_name(box);
    specialized.schemas = specialize(ltm.get("sort box").schemas, {{"box", box}});
    InstantiationContext ctx{nullptr, std::move(handlers), std::move(conditions)};
    return instantiate_schemas(ctx, specialized);
}

std::string distance_condition_name(const std::string& closer, const std::string& farther) {
    return "d_" + closer + " <= d_" + farther;
}

}  // namespace

Tree build_baseline_bt(int case_id, const LtmStore& ltm,
                       std::shared_ptr<HandlerRegistry> handlers,
                       std::shared_ptr<ConditionRegistry> conditions,
                       std::shared_ptr<Blackboard> bb) {
    if (case_id != 1 && case_id != 2)
        throw UnknownCase("case id must be 1 or 2, got " + std::to_string(case_id));

    handlers->add({"initialize blackboard",
                   [](Blackboard& b) {
                       std::vector<std::pair<std::string, Blackboard::Value>> batch;
                       for (const auto& box : kBoxes) {
                           batch.emplace_back(picked_flag(box), Blackboard::Flag{false});
                           batch.emplace_back(placed_flag(box), Blackboard::Flag{false});
                       }
                       batch.emplace_back(kBlackboardInitializedFlag, Blackboard::Flag{true});
                       b.write_batch(batch);
                       return NodeStatus::Success;
                   },
                   nullptr});
    conditions->add("goal reached", [](Blackboard& b) {
        for (const auto& box : kBoxes)
            if (!b.flag(placed_flag(box))) return false;
        return true;
    });

    Tree t(handlers, conditions);
    NodeId root = t.add_node("root", NodeType::fallback());
    t.add_node("goal reached", NodeType::condition("goal reached"), root);
    NodeId seq = t.add_node("sequence", NodeType::sequence(), root);
    NodeId init_fb = t.add_node("fallback", NodeType::fallback(), seq);
    t.add_node(kBlackboardInitializedFlag, NodeType::condition(kBlackboardInitializedFlag),
               init_fb);
    t.add_node("initialize blackboard", NodeType::action("initialize blackboard"), init_fb);

    if (case_id == 1) {
        for (const auto& box : kBoxes)
            attach_copy(t, seq, build_sort_subtree(ltm, box, handlers, conditions));
        return t;
    }

    // Case 2: one ordering stump per box permutation, non-strict comparisons
    // with fixed stump precedence so exactly one fires on ties.
    auto stimulus_of = [](Blackboard& b, const std::string& box) {
        auto v = b.scalar(stimulus_key_for(subtask_name(box)));
        return v ? *v : std::numeric_limits<double>::infinity();
    };
    NodeId stumps = t.add_node("fallback", NodeType::fallback(), seq);
    std::vector<std::string> perm = kBoxes;
    std::sort(perm.begin(), perm.end());
    do {
        NodeId stump = t.add_node("sequence", NodeType::sequence(), stumps);
        for (std::size_t i = 0; i + 1 < perm.size(); ++i) {
            const std::string name = distance_condition_name(perm[i], perm[i + 1]);
            const std::string closer = perm[i];
            const std::string farther = perm[i + 1];
            if (!conditions->find(name))
                conditions->add(name, [closer, farther, stimulus_of](Blackboard& b) {
                    return stimulus_of(b, closer) <= stimulus_of(b, farther);
                });
            t.add_node(name, NodeType::condition(name), stump);
        }
        for (const auto& box : perm)
            attach_copy(t, stump, build_sort_subtree(ltm, box, handlers, conditions));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return t;
}

}  // namespace rbt::sim
