// policy.hpp - autonomy policy: retry budget, confidence gates, per-class
// action overrides, and the verification thresholds.
//
// File format (`heal.policy` in the workspace root): flat `key = value` lines,
// `#` comments, plus `class.<BugClass> = auto_apply|review|alert_only`
// overrides. A missing file means built-in defaults.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "mendheal/faults.hpp"
#include "mendheal/util.hpp"

namespace mendheal {

class PolicyError : public std::runtime_error {
public:
    explicit PolicyError(const std::string& m) : std::runtime_error(m) {}
};

enum class PolicyAction { AutoApply, Review, AlertOnly };

inline const char* policy_action_name(PolicyAction a) {
    switch (a) {
        case PolicyAction::AutoApply: return "auto_apply";
        case PolicyAction::Review: return "review";
        case PolicyAction::AlertOnly: return "alert_only";
    }
    return "?";
}

inline std::optional<PolicyAction> policy_action_from_name(std::string_view s) {
    if (s == "auto_apply") return PolicyAction::AutoApply;
    if (s == "review") return PolicyAction::Review;
    if (s == "alert_only") return PolicyAction::AlertOnly;
    return std::nullopt;
}

struct Policy {
    int max_retries = 3;
    double auto_apply_min_confidence = 0.7;
    // Classes absent from this map are confidence-gated: auto-apply at or
    // above auto_apply_min_confidence, review below it.
    std::map<BugClass, PolicyAction> per_class_action = {
        {BugClass::StaleSnapshot, PolicyAction::AutoApply},
        {BugClass::FlakySeedDependence, PolicyAction::AutoApply},
    };
    double mutation_kill_threshold = 0.6;
    double canary_epsilon = 0.01;
    int flaky_rerun_count = 3;
    double anomaly_factor = 3.0;

    std::optional<PolicyAction> action_for(BugClass c) const {
        auto it = per_class_action.find(c);
        if (it == per_class_action.end()) return std::nullopt;
        return it->second;
    }
};

inline void validate_policy(const Policy& p, const std::string& context = "policy") {
    auto unit = [&](double v, const char* key) {
        if (v < 0.0 || v > 1.0)
            throw PolicyError(context + ": " + key + " must be in [0,1]");
    };
    if (p.max_retries < 1) throw PolicyError(context + ": max_retries must be >= 1");
    if (p.flaky_rerun_count < 1)
        throw PolicyError(context + ": flaky_rerun_count must be >= 1");
    unit(p.auto_apply_min_confidence, "auto_apply_min_confidence");
    unit(p.mutation_kill_threshold, "mutation_kill_threshold");
    unit(p.canary_epsilon, "canary_epsilon");
    if (p.anomaly_factor < 1.0)
        throw PolicyError(context + ": anomaly_factor must be >= 1");
}

namespace detail {

inline int64_t parse_policy_int(const std::string& raw, const std::string& context) {
    size_t used = 0;
    int64_t v = 0;
    try {
        v = std::stoll(raw, &used);
    } catch (const std::exception&) {
        throw PolicyError(context + ": expected an integer, got '" + raw + "'");
    }
    if (used != raw.size())
        throw PolicyError(context + ": expected an integer, got '" + raw + "'");
    return v;
}

inline double parse_policy_real(const std::string& raw, const std::string& context) {
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(raw, &used);
    } catch (const std::exception&) {
        throw PolicyError(context + ": expected a number, got '" + raw + "'");
    }
    if (used != raw.size())
        throw PolicyError(context + ": expected a number, got '" + raw + "'");
    return v;
}

}  // namespace detail

inline Policy parse_policy_text(const std::string& text, const std::string& file) {
    Policy p;
    int lineno = 0;
    for (const std::string& line : split_lines(text)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::string context = file + ":" + std::to_string(lineno);
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw PolicyError(context + ": expected `key = value`");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw PolicyError(context + ": expected `key = value`");

        if (starts_with(key, "class.")) {
            std::string cls_name = key.substr(6);
            auto cls = bug_class_from_name(cls_name);
            if (!cls) throw PolicyError(context + ": unknown bug class '" + cls_name + "'");
            auto action = policy_action_from_name(value);
            if (!action)
                throw PolicyError(context + ": unknown action '" + value +
                                  "' (want auto_apply|review|alert_only)");
            p.per_class_action[*cls] = *action;
            continue;
        }
        if (key == "max_retries")
            p.max_retries = static_cast<int>(detail::parse_policy_int(value, context));
        else if (key == "auto_apply_min_confidence")
            p.auto_apply_min_confidence = detail::parse_policy_real(value, context);
        else if (key == "mutation_kill_threshold")
            p.mutation_kill_threshold = detail::parse_policy_real(value, context);
        else if (key == "canary_epsilon")
            p.canary_epsilon = detail::parse_policy_real(value, context);
        else if (key == "flaky_rerun_count")
            p.flaky_rerun_count = static_cast<int>(detail::parse_policy_int(value, context));
        else if (key == "anomaly_factor")
            p.anomaly_factor = detail::parse_policy_real(value, context);
        else
            throw PolicyError(context + ": unknown key '" + key + "'");
    }
    validate_policy(p, file);
    return p;
}

inline std::string render_policy_text(const Policy& p) {
    std::string out;
    out += "max_retries = " + std::to_string(p.max_retries) + "\n";
    char buf[64];
    auto real = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %g\n", key, v);
        out += buf;
    };
    real("auto_apply_min_confidence", p.auto_apply_min_confidence);
    real("mutation_kill_threshold", p.mutation_kill_threshold);
    real("canary_epsilon", p.canary_epsilon);
    out += "flaky_rerun_count = " + std::to_string(p.flaky_rerun_count) + "\n";
    real("anomaly_factor", p.anomaly_factor);
    for (const auto& [cls, action] : p.per_class_action)
        out += std::string("class.") + bug_class_name(cls) + " = " +
               policy_action_name(action) + "\n";
    return out;
}

// Missing file (or nullopt) is not an error: built-in defaults apply.
inline Policy load_policy_file(const std::filesystem::path& path) {
    auto text = read_file(path);
    if (!text) return Policy{};
    return parse_policy_text(*text, path.filename().string());
}

}  // namespace mendheal
