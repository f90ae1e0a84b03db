#include "rbt/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rbt {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ConditionTag> SchemaNode::preconditions_of(int child) const {
    std::vector<ConditionTag> out;
    for (const auto& c : conditions)
        if (!c.post && c.child == child) out.push_back(c);
    return out;
}

std::vector<ConditionTag> SchemaNode::postconditions_of(int child) const {
    std::vector<ConditionTag> out;
    for (const auto& c : conditions)
        if (c.post && c.child == child) out.push_back(c);
    return out;
}

const SchemaNode* TaskRecord::find(const std::string& name) const {
    for (const auto& s : schemas)
        if (s.name == name) return &s;
    return nullptr;
}

const SchemaNode& TaskRecord::root() const {
    for (const auto& s : schemas)
        if (s.name.find("root") != std::string::npos) return s;
    throw SchemaError("task '" + task_name + "' has no schema named with the 'root' keyword");
}

bool parse_action_literal(const std::string& text, std::string& handler_name) {
    if (text.size() < 3 || text.compare(0, 2, "A(") != 0 || text.back() != ')') return false;
    handler_name = text.substr(2, text.size() - 3);
    return true;
}

namespace {

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

/// Tag grammar: `C_ij` / `G_ij` with single-digit indices, or the
/// underscore-separated multi-digit extension `C_<i>_<j>`.
ConditionTag parse_tag(const std::string& tag, const std::string& schema_name) {
    ConditionTag out;
    if (tag.size() < 3 || (tag[0] != 'C' && tag[0] != 'G') || tag[1] != '_')
        throw SchemaError("schema '" + schema_name + "': bad condition tag '" + tag + "'");
    out.post = tag[0] == 'G';
    const std::string body = tag.substr(2);
    if (body.size() == 2 && all_digits(body)) {
        out.child = body[0] - '0';
        out.ordinal = body[1] - '0';
    } else {
        auto sep = body.find('_');
        if (sep == std::string::npos)
            throw SchemaError("schema '" + schema_name + "': bad condition tag '" + tag + "'");
        const std::string i = body.substr(0, sep);
        const std::string j = body.substr(sep + 1);
        if (!all_digits(i) || !all_digits(j) || i[0] == '0' || j[0] == '0')
            throw SchemaError("schema '" + schema_name + "': bad condition tag '" + tag + "'");
        out.child = std::stoi(i);
        out.ordinal = std::stoi(j);
    }
    if (out.child < 1 || out.ordinal < 1)
        throw SchemaError("schema '" + schema_name + "': bad condition tag '" + tag + "'");
    return out;
}

SchemaNode parse_schema_object(const json& obj) {
    if (!obj.is_object()) throw SchemaError("schema entry is not a JSON object");
    for (const char* field : {"name", "type", "children", "params"})
        if (!obj.contains(field))
            throw SchemaError("schema entry missing required field '" + std::string(field) + "'");

    SchemaNode node;
    node.name = obj.at("name").get<std::string>();
    node.type = obj.at("type").get<std::string>();
    static const std::vector<std::string> kTypes{"fallback", "sequence", "parallel", "decorator"};
    if (std::find(kTypes.begin(), kTypes.end(), node.type) == kTypes.end())
        throw SchemaError("schema '" + node.name + "': unknown type '" + node.type + "'");

    for (const auto& child : obj.at("children")) {
        std::string text = child.get<std::string>();
        SchemaChild c;
        c.action = parse_action_literal(text, c.name);
        if (!c.action) c.name = std::move(text);
        node.children.push_back(std::move(c));
    }
    if (node.children.empty())
        throw SchemaError("schema '" + node.name + "' has no children");

    const auto& params = obj.at("params");
    if (!params.is_array())
        throw SchemaError("schema '" + node.name + "': params must be an array");
    // A single empty string marks "no conditions".
    const bool empty_marker =
        params.size() == 1 && params[0].is_string() && params[0].get<std::string>().empty();
    if (!empty_marker && !params.empty()) {
        if (params.size() % 2 != 0)
            throw SchemaError("schema '" + node.name +
                              "': params must alternate tag and condition name");
        for (std::size_t i = 0; i < params.size(); i += 2) {
            ConditionTag tag = parse_tag(params[i].get<std::string>(), node.name);
            tag.condition = params[i + 1].get<std::string>();
            if (tag.child > static_cast<int>(node.children.size()))
                throw SchemaError("schema '" + node.name + "': condition tag child index " +
                                  std::to_string(tag.child) + " exceeds child count");
            node.conditions.push_back(std::move(tag));
        }
    }

    if (obj.contains("threshold")) node.threshold = obj.at("threshold").get<int>();
    if (obj.contains("policy")) {
        const std::string p = obj.at("policy").get<std::string>();
        if (p == "identity")
            node.policy = DecoratorPolicy::Identity;
        else if (p == "invert")
            node.policy = DecoratorPolicy::Invert;
        else if (p == "force_success")
            node.policy = DecoratorPolicy::ForceSuccess;
        else
            throw SchemaError("schema '" + node.name + "': unknown decorator policy '" + p + "'");
    }
    return node;
}

void validate_task(const TaskRecord& task) {
    std::map<std::string, int> name_count;
    for (const auto& s : task.schemas) ++name_count[s.name];
    for (const auto& [name, count] : name_count)
        if (count > 1)
            throw SchemaError("task '" + task.task_name + "': duplicate schema name '" + name + "'");

    int roots = 0;
    for (const auto& s : task.schemas)
        if (s.name.find("root") != std::string::npos) ++roots;
    if (roots == 0)
        throw SchemaError("task '" + task.task_name + "' has no schema named with 'root'");
    if (roots > 1)
        throw SchemaError("task '" + task.task_name + "' has multiple root-named schemas");

    std::map<std::string, int> referenced;
    for (const auto& s : task.schemas) {
        for (const auto& c : s.children) {
            if (c.action) continue;
            if (!task.find(c.name))
                throw SchemaError("task '" + task.task_name + "': schema '" + s.name +
                                  "' references unresolved child '" + c.name + "'");
            ++referenced[c.name];
        }
    }
    for (const auto& [name, count] : referenced)
        if (count > 1)
            throw SchemaError("task '" + task.task_name + "': schema '" + name +
                              "' has multiple parents");

    // Cycle check by DFS from the root schema.
    std::map<std::string, int> state;  // 0 unseen, 1 open, 2 done
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
        state[name] = 1;
        for (const auto& c : task.find(name)->children) {
            if (c.action) continue;
            if (state[c.name] == 1)
                throw SchemaError("task '" + task.task_name + "': cycle through schema '" +
                                  c.name + "'");
            if (state[c.name] == 0) visit(c.name);
        }
        state[name] = 2;
    };
    visit(task.root().name);
}

std::string tag_text(const ConditionTag& tag) {
    std::ostringstream out;
    out << (tag.post ? 'G' : 'C') << '_';
    if (tag.child <= 9 && tag.ordinal <= 9)
        out << tag.child << tag.ordinal;
    else
        out << tag.child << '_' << tag.ordinal;
    return out.str();
}

}  // namespace

TaskRecord parse_task(const std::string& document, std::string task_name, std::string source) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_array()) throw SchemaError("task document must be a JSON array of schema objects");

    TaskRecord task;
    task.source = std::move(source);
    for (const auto& obj : doc) task.schemas.push_back(parse_schema_object(obj));
    task.task_name = std::move(task_name);
    if (task.task_name.empty() && !task.schemas.empty()) task.task_name = task.root().name;
    validate_task(task);
    return task;
}

std::string serialize_task(const TaskRecord& task) {
    validate_task(task);
    json doc = json::array();
    for (const auto& s : task.schemas) {
        json obj;
        obj["name"] = s.name;
        obj["type"] = s.type;
        json children = json::array();
        for (const auto& c : s.children) children.push_back(c.action ? "A(" + c.name + ")" : c.name);
        obj["children"] = std::move(children);
        json params = json::array();
        for (const auto& c : s.conditions) {
            params.push_back(tag_text(c));
            params.push_back(c.condition);
        }
        if (params.empty()) params.push_back("");
        obj["params"] = std::move(params);
        if (s.threshold != 0) obj["threshold"] = s.threshold;
        if (s.policy == DecoratorPolicy::Invert) obj["policy"] = "invert";
        if (s.policy == DecoratorPolicy::ForceSuccess) obj["policy"] = "force_success";
        doc.push_back(std::move(obj));
    }
    return doc.dump(2);
}

LtmStore::LtmStore(const fs::path& path) {
    auto load_document = [this](const std::string& name, const std::string& text,
                                const std::string& src) {
        records_.emplace(name, parse_task(text, name, src));
    };

    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            std::ifstream in(file);
            std::stringstream buf;
            buf << in.rdbuf();
            load_document(file.stem().string(), buf.str(), file.string());
        }
    } else if (fs::is_regular_file(path)) {
        std::ifstream in(path);
        json bundle;
        try {
            bundle = json::parse(in);
        } catch (const json::parse_error& e) {
            throw SyntaxError(std::string("malformed JSON bundle: ") + e.what());
        }
        if (!bundle.is_object())
            throw SchemaError("bundle must be a JSON object mapping task name to schema array");
        for (const auto& [name, schemas] : bundle.items())
            load_document(name, schemas.dump(), path.string() + "#" + name);
    } else {
        throw UnknownTask("LTM store path does not exist: " + path.string());
    }
}

const TaskRecord& LtmStore::get(const std::string& task_name) const {
    auto it = records_.find(task_name);
    if (it == records_.end()) throw UnknownTask("no task '" + task_name + "' in LTM store");
    return it->second;
}

std::vector<SchemaNode> LtmStore::get_schemas(const std::string& task_name) const {
    return get(task_name).schemas;
}

std::vector<std::string> LtmStore::tasks() const {
    std::vector<std::string> out;
    for (const auto& [name, rec] : records_) out.push_back(name);
    return out;
}

}  // namespace rbt
