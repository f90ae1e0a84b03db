#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rbt/errors.hpp"
#include "rbt/tree.hpp"

namespace rbt {

/// One pre- or postcondition parsed from a `C_ij` / `G_ij` params tag.
/// `child` is the 1-based child position the condition gates; `ordinal` is j.
struct ConditionTag {
    bool post = false;
    int child = 0;
    int ordinal = 0;
    std::string condition;
};

/// A schema child reference: either another schema's name or an action
/// literal written `A(handler name)`.
struct SchemaChild {
    bool action = false;
    std::string name;
};

/// The stored form of a control-flow node: unique label, type tag, ordered
/// children, and the condition parameters attached to them.
struct SchemaNode {
    std::string name;
    std::string type;  // "fallback" | "sequence" | "parallel" | "decorator"
    std::vector<SchemaChild> children;
    std::vector<ConditionTag> conditions;  // declaration order
    int threshold = 0;                     // parallel only; 0 means all children
    DecoratorPolicy policy = DecoratorPolicy::Identity;

    std::vector<ConditionTag> preconditions_of(int child) const;
    std::vector<ConditionTag> postconditions_of(int child) const;
};

struct TaskRecord {
    std::string task_name;
    std::vector<SchemaNode> schemas;
    std::string source;

    const SchemaNode* find(const std::string& name) const;
    /// The unique schema whose name contains the `root` keyword.
    const SchemaNode& root() const;
};

/// Parses a JSON array of schema objects (fields `name`, `type`, `children`,
/// `params`) into a validated TaskRecord. `params` is a flat list of
/// alternating tag/condition-name pairs; `[""]` means no conditions.
TaskRecord parse_task(const std::string& document, std::string task_name = {},
                      std::string source = {});

std::string serialize_task(const TaskRecord& task);

bool parse_action_literal(const std::string& text, std::string& handler_name);

/// Long-term memory store: a directory of `<task-name>.json` documents, or a
/// single-file bundle mapping task name to schema array. Read-only after load.
class LtmStore {
public:
    explicit LtmStore(const std::filesystem::path& path);

    const TaskRecord& get(const std::string& task_name) const;
    std::vector<SchemaNode> get_schemas(const std::string& task_name) const;
    std::vector<std::string> tasks() const;

private:
    std::map<std::string, TaskRecord> records_;
};

}  // namespace rbt
