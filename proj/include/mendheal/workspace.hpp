// workspace.hpp - on-disk workspace layout and its file formats.
//
// A workspace directory contains:
//   main.mnd        the program under maintenance (required)
//   hidden.mnd      held-out tests, never loaded into the working program
//   heal.config     flat `key = value` lines feeding the config() builtin
//   heal.policy     policy overrides (parsed by policy.hpp)
//   heal.quarantine `test_name = reruns` lines for flaky-test quarantine
//   workload.jsonl  recorded entry calls: {"entry", "args", "jitter_seed"}
//   .heal/          runtime state: incidents.jsonl, snapshots/, reports/,
//                   campaigns/, baseline.json, lock
#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mendheal/interp.hpp"
#include "mendheal/parse.hpp"
#include "mendheal/util.hpp"

namespace mendheal {

class WorkspaceError : public std::runtime_error {
public:
    explicit WorkspaceError(const std::string& m) : std::runtime_error(m) {}
};

// --- Value <-> JSON ---------------------------------------------------------

inline nlohmann::json value_to_json(const Value& v) {
    switch (v.kind) {
        case Value::Kind::Int: return v.i;
        case Value::Kind::Bool: return v.b;
        case Value::Kind::Str: return v.s;
        case Value::Kind::Null: return nullptr;
        case Value::Kind::Array: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& e : v.arr) arr.push_back(value_to_json(e));
            return arr;
        }
    }
    return nullptr;
}

inline Value value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return Value::make_null();
    if (j.is_boolean()) return Value::make_bool(j.get<bool>());
    if (j.is_number_integer()) return Value::make_int(j.get<int64_t>());
    if (j.is_string()) return Value::make_str(j.get<std::string>());
    if (j.is_array()) {
        std::vector<Value> elems;
        for (const auto& e : j) elems.push_back(value_from_json(e));
        return Value::make_array(std::move(elems));
    }
    throw WorkspaceError("unsupported JSON value kind: " + j.dump());
}

// --- config file (`key = value`, value is an int, bool, or quoted string) ---

using ConfigEntries = std::vector<std::pair<std::string, Value>>;

inline Value parse_config_value(const std::string& raw, const std::string& context) {
    std::string v = trim(raw);
    if (v.empty()) throw WorkspaceError(context + ": empty value");
    if (v == "true") return Value::make_bool(true);
    if (v == "false") return Value::make_bool(false);
    if (v.front() == '"') {
        // Reuse the language lexer so escapes behave identically everywhere.
        try {
            std::vector<Stmt> stmts = parse_fragment("return " + v + ";");
            return Value::make_str(stmts.at(0).exprs.at(0).str_val);
        } catch (const ParseException& e) {
            throw WorkspaceError(context + ": bad string literal: " + e.what());
        }
    }
    bool neg = v.front() == '-';
    size_t start = neg ? 1 : 0;
    if (start >= v.size()) throw WorkspaceError(context + ": bad value '" + v + "'");
    for (size_t i = start; i < v.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(v[i])))
            throw WorkspaceError(context + ": bad value '" + v + "'");
    try {
        return Value::make_int(std::stoll(v));
    } catch (const std::exception&) {
        throw WorkspaceError(context + ": integer out of range '" + v + "'");
    }
}

inline std::string render_config_value(const Value& v) {
    switch (v.kind) {
        case Value::Kind::Int: return std::to_string(v.i);
        case Value::Kind::Bool: return v.b ? "true" : "false";
        case Value::Kind::Str: return escape_string(v.s);
        default: throw WorkspaceError("config values must be int, bool, or string");
    }
}

inline ConfigEntries parse_config_text(const std::string& text, const std::string& file) {
    ConfigEntries entries;
    int lineno = 0;
    for (const std::string& line : split_lines(text)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::string context = file + ":" + std::to_string(lineno);
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw WorkspaceError(context + ": expected `key = value`");
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw WorkspaceError(context + ": empty key");
        for (const auto& [k, _] : entries)
            if (k == key) throw WorkspaceError(context + ": duplicate key '" + key + "'");
        entries.emplace_back(key, parse_config_value(t.substr(eq + 1), context));
    }
    return entries;
}

inline std::string render_config_text(const ConfigEntries& entries) {
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + render_config_value(v) + "\n";
    return out;
}

inline std::map<std::string, Value> config_map(const ConfigEntries& entries) {
    std::map<std::string, Value> m;
    for (const auto& [k, v] : entries) m[k] = v;
    return m;
}

// --- quarantine file (`test_name = reruns`) ---------------------------------

using QuarantineMap = std::map<std::string, int>;

inline QuarantineMap parse_quarantine_text(const std::string& text, const std::string& file) {
    QuarantineMap q;
    int lineno = 0;
    for (const std::string& line : split_lines(text)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::string context = file + ":" + std::to_string(lineno);
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw WorkspaceError(context + ": expected `test_name = reruns`");
        std::string key = trim(t.substr(0, eq));
        Value v = parse_config_value(t.substr(eq + 1), context);
        if (v.kind != Value::Kind::Int || v.i < 1)
            throw WorkspaceError(context + ": rerun count must be a positive integer");
        q[key] = static_cast<int>(v.i);
    }
    return q;
}

inline std::string render_quarantine_text(const QuarantineMap& q) {
    std::string out;
    for (const auto& [k, v] : q) out += k + " = " + std::to_string(v) + "\n";
    return out;
}

// --- workload log ------------------------------------------------------------

struct WorkloadCall {
    std::string entry;
    std::vector<Value> args;
    uint64_t jitter_seed = 0;
};

inline std::vector<WorkloadCall> parse_workload_text(const std::string& text,
                                                     const std::string& file) {
    std::vector<WorkloadCall> calls;
    int lineno = 0;
    for (const std::string& line : split_lines(text)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const std::exception& e) {
            throw WorkspaceError(file + ":" + std::to_string(lineno) + ": " + e.what());
        }
        WorkloadCall c;
        if (!j.contains("entry") || !j["entry"].is_string())
            throw WorkspaceError(file + ":" + std::to_string(lineno) + ": missing entry");
        c.entry = j["entry"].get<std::string>();
        if (j.contains("args"))
            for (const auto& a : j["args"]) c.args.push_back(value_from_json(a));
        if (j.contains("jitter_seed")) c.jitter_seed = j["jitter_seed"].get<uint64_t>();
        calls.push_back(std::move(c));
    }
    return calls;
}

inline std::string render_workload_text(const std::vector<WorkloadCall>& calls) {
    std::string out;
    for (const auto& c : calls) {
        nlohmann::json j;
        j["entry"] = c.entry;
        j["args"] = nlohmann::json::array();
        for (const auto& a : c.args) j["args"].push_back(value_to_json(a));
        j["jitter_seed"] = c.jitter_seed;
        out += j.dump() + "\n";
    }
    return out;
}

// --- workspace ----------------------------------------------------------------

struct Workspace {
    std::filesystem::path root;
    Program program;
    ConfigEntries config;
    QuarantineMap quarantine;
    std::vector<WorkloadCall> workload;

    std::filesystem::path main_path() const { return root / "main.mnd"; }
    std::filesystem::path hidden_path() const { return root / "hidden.mnd"; }
    std::filesystem::path config_path() const { return root / "heal.config"; }
    std::filesystem::path policy_path() const { return root / "heal.policy"; }
    std::filesystem::path quarantine_path() const { return root / "heal.quarantine"; }
    std::filesystem::path workload_path() const { return root / "workload.jsonl"; }
    std::filesystem::path heal_dir() const { return root / ".heal"; }
    std::filesystem::path incidents_path() const { return heal_dir() / "incidents.jsonl"; }
    std::filesystem::path snapshots_dir() const { return heal_dir() / "snapshots"; }
    std::filesystem::path reports_dir() const { return heal_dir() / "reports"; }
    std::filesystem::path campaigns_dir() const { return heal_dir() / "campaigns"; }
    std::filesystem::path baseline_path() const { return heal_dir() / "baseline.json"; }
    std::filesystem::path lock_path() const { return heal_dir() / "lock"; }
};

inline Workspace load_workspace(const std::filesystem::path& root) {
    Workspace ws;
    ws.root = root;
    if (!std::filesystem::is_directory(root))
        throw WorkspaceError("workspace directory not found: " + root.string());
    auto text = read_file(ws.main_path());
    if (!text) throw WorkspaceError("missing main.mnd in " + root.string());
    try {
        ws.program = parse(*text);
    } catch (const ParseException& e) {
        throw WorkspaceError("main.mnd: " + std::string(e.what()));
    }
    if (auto cfg = read_file(ws.config_path()))
        ws.config = parse_config_text(*cfg, "heal.config");
    if (auto q = read_file(ws.quarantine_path()))
        ws.quarantine = parse_quarantine_text(*q, "heal.quarantine");
    if (auto w = read_file(ws.workload_path()))
        ws.workload = parse_workload_text(*w, "workload.jsonl");
    return ws;
}

inline RuntimeEnv workspace_env(const Workspace& ws, uint64_t jitter_seed,
                                uint64_t step_limit = 1000000) {
    RuntimeEnv env;
    env.step_limit = step_limit;
    env.jitter_seed = jitter_seed;
    env.config = config_map(ws.config);
    return env;
}

inline void save_program(const Workspace& ws) {
    if (!write_file(ws.main_path(), format(ws.program)))
        throw WorkspaceError("cannot write " + ws.main_path().string());
}

inline void save_config(const Workspace& ws) {
    if (!write_file(ws.config_path(), render_config_text(ws.config)))
        throw WorkspaceError("cannot write " + ws.config_path().string());
}

inline void save_quarantine(const Workspace& ws) {
    if (!write_file(ws.quarantine_path(), render_quarantine_text(ws.quarantine)))
        throw WorkspaceError("cannot write " + ws.quarantine_path().string());
}

// Held-out tests: main program plus the hidden file's functions. Returns
// nullopt when the workspace ships no hidden suite.
inline std::optional<Program> load_hidden_program(const Workspace& ws) {
    auto text = read_file(ws.hidden_path());
    if (!text) return std::nullopt;
    Program combined = ws.program;
    Program hidden;
    try {
        hidden = parse(*text);
    } catch (const ParseException& e) {
        throw WorkspaceError("hidden.mnd: " + std::string(e.what()));
    }
    for (auto& fn : hidden.functions) {
        if (combined.find(fn.name))
            throw WorkspaceError("hidden.mnd redefines function '" + fn.name + "'");
        combined.functions.push_back(std::move(fn));
    }
    return combined;
}

}  // namespace mendheal
