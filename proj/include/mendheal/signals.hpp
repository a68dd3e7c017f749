// signals.hpp - the sensory layer: structured signal capture from test
// executions, failure fingerprinting, and threshold-based anomaly detection
// over per-test step-count baselines.
#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mendheal/ast.hpp"
#include "mendheal/interp.hpp"
#include "mendheal/util.hpp"

namespace mendheal {

// One frame of a failure trace. Real frames come from the interpreter stack
// (innermost first); enriched frames are added by capture() to widen the
// candidate-site pool: enclosing compound statements, and -- for assertion
// failures -- comparison-bearing statements of helpers the assert calls.
struct SignalFrame {
    std::string function;
    NodePath stmt_path;
    bool enriched = false;

    bool operator==(const SignalFrame& o) const {
        return function == o.function && stmt_path == o.stmt_path && enriched == o.enriched;
    }
};

struct TraceEvent {
    std::vector<SignalFrame> frames;  // frames[0] is the innermost real frame

    bool contains(const NodePath& path) const {
        for (const auto& f : frames)
            if (f.stmt_path == path) return true;
        return false;
    }
};

struct MetricSample {
    std::string name;  // "steps"
    double value = 0;
    std::string unit;  // "interpreter-steps"
    std::string test_name;
};

using Signal = std::variant<LogRecord, TraceEvent, MetricSample>;

// --- fingerprints ------------------------------------------------------------

// Stable 64-bit identity of a failure mode: hash of `code|function|path`.
inline uint64_t fingerprint_of(const std::string& error_code, const std::string& function,
                               const NodePath& stmt_path) {
    return fnv1a64(error_code + "|" + function + "|" + path_dotted(stmt_path));
}

inline uint64_t anomaly_fingerprint(const std::string& test_name) {
    return fnv1a64("ANOMALY|" + test_name + "|steps");
}

// --- capture ------------------------------------------------------------------

namespace detail {

// Statement paths of every enclosing compound statement of `path`.
inline std::vector<NodePath> ancestor_stmt_paths(const Program& p, const NodePath& path) {
    std::vector<NodePath> out;
    NodePath cur = path;
    while (cur.size() > 2) {
        cur.pop_back();
        auto n = resolve_const(p, cur);
        if (n && n->is_stmt()) out.push_back(cur);
    }
    return out;
}

inline bool stmt_has_comparison(const Stmt& s) {
    bool found = false;
    for (const auto& e : s.exprs) {
        std::function<void(const Expr&)> walk = [&](const Expr& x) {
            if (x.kind == ExprKind::Binary && is_comparison(x.bin_op)) found = true;
            for (const auto& c : x.children) walk(c);
        };
        walk(e);
    }
    return found;
}

}  // namespace detail

// Converts one execution outcome into signals. Errors yield exactly one error
// LogRecord plus one TraceEvent; every outcome yields a step-count metric.
// The trace is enriched beyond the raw stack so that downstream diagnosis has
// the enclosing loops/guards -- and, for assertion failures, the helper
// statements the assert exercises -- in its candidate pool.
inline std::vector<Signal> capture(const Program& program, const ExecutionOutcome& outcome,
                                   const std::string& test_name) {
    std::vector<Signal> signals;
    for (const auto& log : outcome.logs) signals.push_back(log);

    if (!outcome.ok && !outcome.trace.empty()) {
        TraceEvent trace;
        std::set<std::pair<std::string, NodePath>> seen;
        auto add = [&](const std::string& fn, const NodePath& path, bool enriched) {
            if (!seen.insert({fn, path}).second) return;
            trace.frames.push_back({fn, path, enriched});
        };
        for (const auto& f : outcome.trace) add(f.function, f.stmt_path, false);
        for (const auto& f : outcome.trace)
            for (const auto& anc : detail::ancestor_stmt_paths(program, f.stmt_path))
                add(f.function, anc, true);

        if (outcome.code == ErrorCode::AssertFail) {
            // Expand into helpers called by the failing assert: the wrong
            // value was computed before the assert raised, so the culprit
            // statement is never on the raw stack. Comparison-bearing
            // statements only -- they are where operator-level bugs live.
            const size_t kMaxEnriched = 16;
            const Frame& innermost = outcome.trace.front();
            auto anchor = resolve_const(program, innermost.stmt_path);
            if (anchor && anchor->is_stmt()) {
                std::set<int> visited;
                std::vector<int> frontier;
                auto collect_calls = [&](const Expr& e, std::vector<int>& into) {
                    std::function<void(const Expr&)> walk = [&](const Expr& x) {
                        if (x.kind == ExprKind::Call) {
                            int idx = program.find_index(x.str_val);
                            if (idx >= 0 &&
                                !is_test_function(program.functions[static_cast<size_t>(idx)]) &&
                                visited.insert(idx).second)
                                into.push_back(idx);
                        }
                        for (const auto& c : x.children) walk(c);
                    };
                    walk(e);
                };
                for (const auto& e : anchor->st->exprs) collect_calls(e, frontier);
                for (int depth = 0; depth < 3 && !frontier.empty(); ++depth) {
                    std::vector<int> next;
                    for (int fi : frontier) {
                        const Function& fn = program.functions[static_cast<size_t>(fi)];
                        for_each_stmt(program, [&](const NodePath& spath, const Stmt& s) {
                            if (spath[0] != fi || is_assert_stmt(s)) return;
                            if (trace.frames.size() <
                                    outcome.trace.size() + kMaxEnriched &&
                                detail::stmt_has_comparison(s))
                                add(fn.name, spath, true);
                            for (const auto& e : s.exprs) collect_calls(e, next);
                        });
                    }
                    frontier = std::move(next);
                }
            }
        }
        signals.push_back(std::move(trace));
    }

    MetricSample steps;
    steps.name = "steps";
    steps.value = static_cast<double>(outcome.step_count);
    steps.unit = "interpreter-steps";
    steps.test_name = test_name;
    signals.push_back(std::move(steps));
    return signals;
}

// --- metric baseline ----------------------------------------------------------

// Per-test mean step counts over the last K green runs.
struct MetricWindow {
    int k = 5;
    std::map<std::string, std::deque<double>> steps;

    void record_green(const TestReport& report) {
        for (const auto& r : report.results) {
            if (r.status != TestStatus::Pass) continue;
            auto& dq = steps[r.test_name];
            dq.push_back(static_cast<double>(r.outcome.step_count));
            while (dq.size() > static_cast<size_t>(k)) dq.pop_front();
        }
    }

    std::optional<double> mean(const std::string& test_name) const {
        auto it = steps.find(test_name);
        if (it == steps.end() || it->second.empty()) return std::nullopt;
        double sum = 0;
        for (double v : it->second) sum += v;
        return sum / static_cast<double>(it->second.size());
    }
};

inline nlohmann::json metric_window_to_json(const MetricWindow& w) {
    nlohmann::json j;
    j["k"] = w.k;
    nlohmann::json per_test = nlohmann::json::object();
    for (const auto& [name, dq] : w.steps) per_test[name] = std::vector<double>(dq.begin(), dq.end());
    j["steps"] = std::move(per_test);
    return j;
}

inline MetricWindow metric_window_from_json(const nlohmann::json& j) {
    MetricWindow w;
    if (j.contains("k")) w.k = j["k"].get<int>();
    if (j.contains("steps"))
        for (const auto& [name, arr] : j["steps"].items()) {
            std::deque<double> dq;
            for (const auto& v : arr) dq.push_back(v.get<double>());
            w.steps[name] = std::move(dq);
        }
    return w;
}

// --- failure events -----------------------------------------------------------

struct FailureEvent {
    uint64_t fingerprint = 0;
    std::vector<std::string> failing_tests;
    Signal primary_signal;
    std::vector<Signal> all_signals;
    int64_t detected_at_ms = 0;

    // Derived from primary_signal at construction, kept for plumbing.
    ErrorCode code = ErrorCode::None;
    std::string function;          // innermost frame's function ("" for anomalies)
    NodePath site;                 // innermost frame's statement path
    TraceEvent trace;              // enriched trace of the primary failing test
    std::string primary_test;
    std::string error_message;
    bool anomaly = false;
};

// Scans a test report for failures; if none, checks step counts against the
// baseline (anomalous when steps exceed factor x the per-test green mean).
inline std::optional<FailureEvent> detect_failure(const Program& program,
                                                  const TestReport& report,
                                                  const MetricWindow& baseline,
                                                  double anomaly_factor = 3.0,
                                                  int64_t now_ms = 0) {
    FailureEvent ev;
    ev.detected_at_ms = now_ms;

    std::map<std::string, std::vector<Signal>> per_test;
    for (const auto& r : report.results) {
        auto sigs = capture(program, r.outcome, r.test_name);
        per_test[r.test_name] = sigs;
        for (auto& s : sigs) ev.all_signals.push_back(std::move(s));
        if (r.status != TestStatus::Pass) ev.failing_tests.push_back(r.test_name);
    }

    if (!ev.failing_tests.empty()) {
        ev.primary_test = ev.failing_tests.front();
        for (const auto& sig : per_test[ev.primary_test]) {
            if (const auto* log = std::get_if<LogRecord>(&sig)) {
                if (log->level == LogRecord::Level::Error && ev.code == ErrorCode::None) {
                    ev.primary_signal = *log;
                    ev.code = log->code;
                    ev.function = log->function;
                    ev.site = log->stmt_path;
                    ev.error_message = log->message;
                }
            } else if (const auto* tr = std::get_if<TraceEvent>(&sig)) {
                ev.trace = *tr;
            }
        }
        ev.fingerprint = fingerprint_of(error_code_name(ev.code), ev.function, ev.site);
        return ev;
    }

    for (const auto& r : report.results) {
        auto mean = baseline.mean(r.test_name);
        if (!mean) continue;
        double val = static_cast<double>(r.outcome.step_count);
        if (val > anomaly_factor * *mean) {
            MetricSample sample;
            sample.name = "steps";
            sample.value = val;
            sample.unit = "interpreter-steps";
            sample.test_name = r.test_name;
            ev.primary_signal = sample;
            ev.primary_test = r.test_name;
            ev.anomaly = true;
            ev.fingerprint = anomaly_fingerprint(r.test_name);
            return ev;
        }
    }
    return std::nullopt;
}

}  // namespace mendheal
