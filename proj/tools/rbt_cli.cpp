#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rbt/engine.hpp"
#include "rbt/instantiator.hpp"
#include "rbt/schema.hpp"
#include "rbt/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDefaultLtm = RBT_SOURCE_DIR "/fixtures/ltm";

void write_trace(const std::string& path, const std::vector<rbt::TickTrace>& traces) {
    std::ofstream out(path);
    if (!out) throw rbt::Error("cannot open trace file for writing: " + path);
    for (const auto& t : traces) out << t.to_json().dump() << "\n";
}

json make_report(const std::string& mode, int case_id, const rbt::RunResult& result,
                 const std::vector<std::string>& sort_order) {
    json report;
    report["mode"] = mode;
    report["case_id"] = case_id;
    report["node_count"] = {{"min", result.node_count_min}, {"max", result.node_count_max}};
    report["goal_reached"] = result.goal_reached;
    report["total_tick_time"] = result.total_tick_ns;  // nanoseconds
    report["ticks"] = result.traces.size();
    report["sort_order"] = sort_order;
    return report;
}

void emit_report(const json& report, const std::string& report_path) {
    std::cout << "mode:            " << report.at("mode").get<std::string>() << "\n"
              << "case:            " << report.at("case_id").get<int>() << "\n"
              << "node count:      " << report.at("node_count").at("min").get<int>() << " - "
              << report.at("node_count").at("max").get<int>() << "\n"
              << "goal reached:    " << (report.at("goal_reached").get<bool>() ? "yes" : "no")
              << "\n"
              << "ticks:           " << report.at("ticks").get<std::size_t>() << "\n"
              << "total tick time: " << report.at("total_tick_time").get<std::int64_t>()
              << " ns\n"
              << "sort order:      " << report.at("sort_order").dump() << "\n";
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw rbt::Error("cannot open report file for writing: " + report_path);
        out << report.dump(2) << "\n";
    }
}

int cmd_run(const std::string& scenario_path, const std::string& mode, const std::string& ltm_dir,
            const std::string& trace_path, std::uint64_t max_ticks,
            const std::string& report_path) {
    const rbt::sim::Scenario scenario = rbt::sim::Scenario::load(scenario_path);
    auto bb = std::make_shared<rbt::Blackboard>();
    rbt::sim::SortingWorld world(scenario, bb);
    auto handlers = std::make_shared<rbt::HandlerRegistry>();
    auto conditions = std::make_shared<rbt::ConditionRegistry>();
    world.register_handlers(*handlers);
    auto ltm = std::make_shared<rbt::LtmStore>(ltm_dir);
    const auto stepper = [&world](std::uint64_t i) { world.step(i); };

    rbt::RunResult result;
    bool exhausted = false;
    try {
        if (mode == "rbt") {
            rbt::RbtEngine engine(ltm, rbt::sim::build_subtasks(scenario.case_id, scenario), bb,
                                  handlers, conditions);
            result = engine.run_to_goal(stepper, max_ticks);
        } else {
            rbt::Tree tree =
                rbt::sim::build_baseline_bt(scenario.case_id, *ltm, handlers, conditions, bb);
            result = rbt::run_static_tree(tree, *bb, stepper, max_ticks);
        }
    } catch (rbt::TickBudgetExhausted& e) {
        result = std::move(e.partial);
        exhausted = true;
    }

    if (!trace_path.empty()) write_trace(trace_path, result.traces);
    emit_report(make_report(mode, scenario.case_id, result, world.placed_order()), report_path);
    if (exhausted) {
        std::cerr << "tick budget (" << max_ticks << ") exhausted before the goal was reached\n";
        return 2;
    }
    return 0;
}

int cmd_validate(const std::string& ltm_dir) {
    if (!fs::is_directory(ltm_dir)) {
        std::cerr << "not a directory: " << ltm_dir << "\n";
        return 1;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(ltm_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cout << "warning: no tasks in " << ltm_dir << "\n";
        return 0;
    }
    int failures = 0;
    for (const auto& file : files) {
        std::ifstream in(file);
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            rbt::parse_task(buf.str(), file.stem().string(), file.string());
            std::cout << "ok   " << file.string() << "\n";
        } catch (const rbt::Error& e) {
            std::cout << "FAIL " << file.string() << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_inspect(const std::string& ltm_dir, const std::string& task, bool expand) {
    rbt::LtmStore ltm(ltm_dir);
    rbt::InstantiationContext ctx;  // no handler registry: render without resolving
    rbt::InstantiationOptions options;
    options.expand_conditions = expand;
    rbt::Tree tree = rbt::instantiate_schemas(ctx, ltm.get(task), options);
    std::cout << rbt::render_tree(tree);
    std::cout << "nodes: " << rbt::count_nodes(tree) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconfigurable behavior tree scenario runner"};
    app.require_subcommand(1);

    std::string scenario_path, ltm_dir = kDefaultLtm, trace_path, report_path, mode, task;
    std::uint64_t max_ticks = 10000;
    bool expand = false;

    auto* run = app.add_subcommand("run", "Run a scenario to its goal");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--mode", mode, "Engine: rbt (reconfigurable) or bt (static baseline)")
        ->required()
        ->check(CLI::IsMember({"rbt", "bt"}));
    run->add_option("--ltm", ltm_dir, "Task schema directory");
    run->add_option("--trace", trace_path, "Write per-tick JSONL trace here");
    run->add_option("--max-ticks", max_ticks, "Tick budget");
    run->add_option("--report", report_path, "Write JSON report here");

    auto* validate = app.add_subcommand("validate", "Check every task document in a directory");
    validate->add_option("--ltm", ltm_dir, "Task schema directory");

    auto* inspect = app.add_subcommand("inspect", "Render a task's tree as text");
    inspect->add_option("--ltm", ltm_dir, "Task schema directory");
    inspect->add_option("--task", task, "Task name")->required();
    inspect->add_flag("--expand", expand, "Include pre/postcondition nodes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return cmd_run(scenario_path, mode, ltm_dir, trace_path, max_ticks, report_path);
        if (validate->parsed()) return cmd_validate(ltm_dir);
        return cmd_inspect(ltm_dir, task, expand);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
