// diagnosis.hpp - ranked fault hypotheses from three fused evidence sources:
// trace localization, AST anti-pattern detectors (D1-D5), and the history
// prior over past healed incidents with the same fingerprint.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mendheal/ast.hpp"
#include "mendheal/faults.hpp"
#include "mendheal/format.hpp"
#include "mendheal/incident.hpp"
#include "mendheal/interp.hpp"
#include "mendheal/signals.hpp"

namespace mendheal {

struct PatternFinding {
    std::string detector_id;  // D1..D5
    NodePath site;
    BugClass suspected_class = BugClass::OffByOne;
    double strength = 0;
    std::string detail;
};

struct Evidence {
    std::string kind;  // trace | pattern | history
    double score = 0;
    std::string detail;
};

struct FaultHypothesis {
    NodePath site;
    BugClass suspected_class = BugClass::OffByOne;
    double confidence = 0;
    std::vector<Evidence> evidence;
};

class NoHypothesisError : public std::runtime_error {
public:
    explicit NoHypothesisError(const std::string& m) : std::runtime_error(m) {}
};

// Fixed default weights; trace evidence dominates, D4 is conclusive by
// construction (it re-evaluates the snapshot expression).
inline constexpr double kTraceWeight = 0.5;
inline constexpr double kPatternWeight = 0.3;
inline constexpr double kHistoryWeight = 0.2;

inline double detector_strength(const std::string& id) {
    if (id == "D1") return 0.9;
    if (id == "D2") return 0.8;
    if (id == "D3") return 0.9;
    if (id == "D4") return 1.0;
    if (id == "D5") return 0.8;
    return 0;
}

namespace detail {

// Functions whose execution can reach a jitter() call (call-graph fixpoint).
inline std::set<int> jitter_tainted_functions(const Program& p) {
    std::set<int> tainted;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t fi = 0; fi < p.functions.size(); ++fi) {
            if (tainted.count(static_cast<int>(fi))) continue;
            bool uses = false;
            for_each_stmt(p, [&](const NodePath& path, const Stmt& s) {
                if (path[0] != static_cast<int>(fi) || uses) return;
                for (const auto& e : s.exprs) {
                    std::function<void(const Expr&)> walk = [&](const Expr& x) {
                        if (x.kind == ExprKind::Call) {
                            if (x.str_val == "jitter") uses = true;
                            int idx = p.find_index(x.str_val);
                            if (idx >= 0 && tainted.count(idx)) uses = true;
                        }
                        for (const auto& c : x.children) walk(c);
                    };
                    walk(e);
                }
            });
            if (uses) {
                tainted.insert(static_cast<int>(fi));
                changed = true;
            }
        }
    }
    return tainted;
}

inline bool expr_jitter_tainted(const Program& p, const std::set<int>& tainted, const Expr& e) {
    bool uses = false;
    std::function<void(const Expr&)> walk = [&](const Expr& x) {
        if (x.kind == ExprKind::Call) {
            if (x.str_val == "jitter") uses = true;
            int idx = p.find_index(x.str_val);
            if (idx >= 0 && tainted.count(idx)) uses = true;
        }
        for (const auto& c : x.children) walk(c);
    };
    walk(e);
    return uses;
}

// Functions with a literal `return null;` anywhere in their body.
inline std::set<int> null_returning_functions(const Program& p) {
    std::set<int> out;
    for_each_stmt(p, [&](const NodePath& path, const Stmt& s) {
        if (s.kind == StmtKind::Return && !s.exprs.empty() &&
            s.exprs[0].kind == ExprKind::NullLit)
            out.insert(path[0]);
    });
    return out;
}

// D1 shape: while-condition contains `v <= len(a)` and the body indexes a[v].
inline bool d1_shape(const Program& p, const NodePath& while_path, const Stmt& s,
                     std::string& detail) {
    if (s.kind != StmtKind::While) return false;
    std::string idx_var, arr_var;
    std::function<void(const Expr&)> find_cmp = [&](const Expr& e) {
        if (!idx_var.empty()) return;
        if (e.kind == ExprKind::Binary && e.bin_op == BinOp::Le &&
            e.children[0].kind == ExprKind::Var && e.children[1].kind == ExprKind::Call &&
            e.children[1].str_val == "len") {
            const Expr& arg = e.children[1].children[0];
            if (arg.kind == ExprKind::Var) {
                idx_var = e.children[0].str_val;
                arr_var = arg.str_val;
            }
        }
        for (const auto& c : e.children) find_cmp(c);
    };
    find_cmp(s.exprs[0]);
    if (idx_var.empty()) return false;
    bool body_indexes = false;
    std::function<void(const std::vector<Stmt>&)> scan = [&](const std::vector<Stmt>& block) {
        for (const auto& inner : block) {
            for_each_expr_in_stmt({}, inner, [&](const NodePath&, const Expr& e) {
                if (e.kind == ExprKind::Index && e.children[0].kind == ExprKind::Var &&
                    e.children[0].str_val == arr_var && e.children[1].kind == ExprKind::Var &&
                    e.children[1].str_val == idx_var)
                    body_indexes = true;
            });
            // IndexAssign carries the array in `name`, not an Index expr.
            if (inner.kind == StmtKind::IndexAssign && inner.name == arr_var &&
                inner.exprs[0].kind == ExprKind::Var && inner.exprs[0].str_val == idx_var)
                body_indexes = true;
            scan(inner.body);
            scan(inner.else_body);
        }
    };
    scan(s.body);
    (void)p;
    (void)while_path;
    if (body_indexes)
        detail = "loop runs to " + idx_var + " <= len(" + arr_var + ") and indexes " + arr_var +
                 "[" + idx_var + "]";
    return body_indexes;
}

}  // namespace detail

// Deterministic anti-pattern scan. The workspace config is consulted by D5
// (a comparison can only be judged unsatisfiable against actual values) and
// by D4's constant folding.
inline std::vector<PatternFinding> run_detectors(const Program& program,
                                                 const std::map<std::string, Value>& config) {
    std::vector<PatternFinding> findings;
    std::set<int> jitter_tainted = detail::jitter_tainted_functions(program);
    std::set<int> null_returners = detail::null_returning_functions(program);

    // Per-function nullable variables for D2 (flow-insensitive).
    std::map<int, std::set<std::string>> nullable;
    for_each_stmt(program, [&](const NodePath& path, const Stmt& s) {
        if (s.kind != StmtKind::Let && s.kind != StmtKind::Assign) return;
        bool null_source = s.exprs[0].kind == ExprKind::NullLit;
        if (s.exprs[0].kind == ExprKind::Call) {
            int idx = program.find_index(s.exprs[0].str_val);
            if (idx >= 0 && null_returners.count(idx)) null_source = true;
        }
        if (null_source) nullable[path[0]].insert(s.name);
    });

    for_each_stmt(program, [&](const NodePath& path, const Stmt& s) {
        // D1: inclusive loop bound over an array the body indexes.
        std::string d1_detail;
        if (detail::d1_shape(program, path, s, d1_detail))
            findings.push_back({"D1", path, BugClass::OffByOne, detector_strength("D1"),
                                d1_detail});

        // D2: unguarded index on a variable that is null on some path.
        auto nit = nullable.find(path[0]);
        if (nit != nullable.end() && !is_assert_stmt(s)) {
            std::set<std::string> hit;
            for_each_expr_in_stmt(path, s, [&](const NodePath&, const Expr& e) {
                if (e.kind == ExprKind::Index && e.children[0].kind == ExprKind::Var &&
                    nit->second.count(e.children[0].str_val))
                    hit.insert(e.children[0].str_val);
            });
            for (const auto& var : hit) {
                // Guarded if an enclosing if-body tests `var != null`.
                bool guarded = false;
                NodePath cur = path;
                while (cur.size() > 2) {
                    cur.pop_back();
                    auto anc = resolve_const(program, cur);
                    if (!anc || !anc->is_stmt()) continue;
                    if (anc->st->kind != StmtKind::If) continue;
                    const Expr& cond = anc->st->exprs[0];
                    if (cond.kind == ExprKind::Binary && cond.bin_op == BinOp::Ne) {
                        const Expr& l = cond.children[0];
                        const Expr& r = cond.children[1];
                        bool tests_var =
                            (l.kind == ExprKind::Var && l.str_val == var &&
                             r.kind == ExprKind::NullLit) ||
                            (r.kind == ExprKind::Var && r.str_val == var &&
                             l.kind == ExprKind::NullLit);
                        if (tests_var) guarded = true;
                    }
                }
                if (!guarded)
                    findings.push_back({"D2", path, BugClass::MissingNullCheck,
                                        detector_strength("D2"),
                                        "unguarded index on nullable '" + var + "'"});
            }
        }

        // D3: assertion whose expression depends on jitter().
        if (is_assert_stmt(s)) {
            bool tainted = false;
            for (const auto& e : s.exprs)
                if (detail::expr_jitter_tainted(program, jitter_tainted, e)) tainted = true;
            if (tainted)
                findings.push_back({"D3", path, BugClass::FlakySeedDependence,
                                    detector_strength("D3"),
                                    "assertion depends on jitter()"});
        }

        // D4: snapshot whose expression folds to a different value.
        if (s.kind == StmtKind::AssertSnapshot &&
            !detail::expr_jitter_tainted(program, jitter_tainted, s.exprs[0])) {
            Program probe = program;
            Function fold;
            fold.name = "mh_snapshot_probe";
            Stmt ret;
            ret.kind = StmtKind::Return;
            ret.exprs.push_back(s.exprs[0]);
            fold.body.push_back(std::move(ret));
            if (!probe.find(fold.name)) {
                probe.functions.push_back(std::move(fold));
                RuntimeEnv env;
                env.config = config;
                auto out = execute(probe, "mh_snapshot_probe", {}, env);
                if (out.ok && out.ret.kind == Value::Kind::Str && out.ret.s != s.snapshot)
                    findings.push_back({"D4", path, BugClass::StaleSnapshot,
                                        detector_strength("D4"),
                                        "actual=\"" + out.ret.s + "\""});
            }
        }

        // D5: config comparison unsatisfiable under the live config.
        for_each_expr_in_stmt(path, s, [&](const NodePath&, const Expr& e) {
            if (!detail::is_config_literal_comparison(e)) return;
            Stmt wrapper;  // reuse the comparison extractor on just this node
            wrapper.kind = StmtKind::ExprStmt;
            wrapper.exprs.push_back(e);
            auto cmp = detail::find_config_comparison(wrapper);
            if (!cmp) return;
            auto it = config.find(cmp->key);
            if (it == config.end() || it->second.kind != Value::Kind::Int) return;
            int64_t v = it->second.i;
            int64_t lhs = cmp->config_on_left ? v : cmp->literal;
            int64_t rhs = cmp->config_on_left ? cmp->literal : v;
            bool holds = true;
            switch (cmp->op) {
                case BinOp::Lt: holds = lhs < rhs; break;
                case BinOp::Le: holds = lhs <= rhs; break;
                case BinOp::Gt: holds = lhs > rhs; break;
                case BinOp::Ge: holds = lhs >= rhs; break;
                case BinOp::Eq: holds = lhs == rhs; break;
                case BinOp::Ne: holds = lhs != rhs; break;
                default: break;
            }
            if (!holds) {
                bool dup = false;
                for (const auto& f : findings)
                    if (f.detector_id == "D5" && f.site == path) dup = true;
                if (!dup)
                    findings.push_back({"D5", path, BugClass::Misconfiguration,
                                        detector_strength("D5"),
                                        "config '" + cmp->key + "' = " + std::to_string(v) +
                                            " cannot satisfy the comparison"});
            }
        });
    });
    return findings;
}

// --- history prior ------------------------------------------------------------

struct HistoryPrior {
    BugClass bug_class = BugClass::OffByOne;
    double score = 0;
    int healed_count = 0;  // m, over the modal class
};

// Modal bug class among healed incidents with this fingerprint, scored
// m/(m+1); none when the store holds no healed match.
inline std::optional<HistoryPrior> history_prior(uint64_t fingerprint,
                                                 const IncidentStore& store) {
    std::map<std::string, int> counts;
    for (const auto& rec : store.read_all()) {
        if (rec.fingerprint != fingerprint) continue;
        if (rec.outcome != "healed_auto" && rec.outcome != "healed_after_review") continue;
        if (rec.healed_class.empty()) continue;
        counts[rec.healed_class]++;
    }
    std::optional<HistoryPrior> best;
    for (BugClass c : kAllBugClasses) {  // enum order breaks count ties
        auto it = counts.find(bug_class_name(c));
        if (it == counts.end()) continue;
        if (!best || it->second > best->healed_count) {
            HistoryPrior prior;
            prior.bug_class = c;
            prior.healed_count = it->second;
            prior.score = static_cast<double>(it->second) /
                          static_cast<double>(it->second + 1);
            best = prior;
        }
    }
    return best;
}

// --- diagnose ------------------------------------------------------------------

inline BugClass infer_class_from_code(ErrorCode code, const std::string& message, bool anomaly) {
    if (anomaly) return BugClass::OffByOne;  // runaway-loop heuristic
    switch (code) {
        case ErrorCode::IndexOob: return BugClass::OffByOne;
        case ErrorCode::NullDeref: return BugClass::MissingNullCheck;
        case ErrorCode::SnapshotMismatch: return BugClass::StaleSnapshot;
        case ErrorCode::AssertFail: return BugClass::WrongOperator;
        case ErrorCode::Undefined:
            if (starts_with(message, "config key ")) return BugClass::Misconfiguration;
            return BugClass::WrongOperator;
        case ErrorCode::StepLimit: return BugClass::OffByOne;
        default: return BugClass::WrongOperator;
    }
}

// Fuses trace, detector, and history evidence into a ranked hypothesis list.
// confidence = 0.5*s_trace + 0.3*s_pattern + 0.2*s_history, recomputable from
// the attached evidence items.
inline std::vector<FaultHypothesis> diagnose(const FailureEvent& event, const Program& program,
                                             const IncidentStore& store,
                                             const std::map<std::string, Value>& config) {
    std::vector<PatternFinding> findings = run_detectors(program, config);
    std::optional<HistoryPrior> prior = history_prior(event.fingerprint, store);

    std::vector<NodePath> sites;
    auto add_site = [&](const NodePath& p) {
        if (std::find(sites.begin(), sites.end(), p) == sites.end()) sites.push_back(p);
    };
    for (const auto& f : event.trace.frames) add_site(f.stmt_path);
    for (const auto& f : findings) add_site(f.site);

    if (sites.empty())
        throw NoHypothesisError("no trace frames and no detector findings");

    std::vector<FaultHypothesis> hyps;
    for (const auto& site : sites) {
        FaultHypothesis h;
        h.site = site;

        double s_trace = 0;
        if (!event.trace.frames.empty()) {
            if (event.trace.frames[0].stmt_path == site) s_trace = 1.0;
            else if (event.trace.contains(site))
                s_trace = 0.6;
        }
        if (s_trace > 0)
            h.evidence.push_back({"trace", s_trace,
                                  s_trace == 1.0 ? "innermost frame" : "on the failure trace"});

        const PatternFinding* best = nullptr;
        for (const auto& f : findings) {
            if (!(f.site == site || path_contains(f.site, site))) continue;
            if (!best || f.strength > best->strength) best = &f;
        }
        double s_pattern = best ? best->strength : 0;
        if (best)
            h.evidence.push_back({"pattern", s_pattern, best->detector_id + ": " + best->detail});

        h.suspected_class = best ? best->suspected_class
                                 : infer_class_from_code(event.code, event.error_message,
                                                         event.anomaly);

        double s_history = 0;
        if (prior && prior->bug_class == h.suspected_class) {
            s_history = prior->score;
            h.evidence.push_back({"history", s_history,
                                  std::to_string(prior->healed_count) +
                                      " healed incident(s) with this fingerprint"});
        }

        h.confidence =
            kTraceWeight * s_trace + kPatternWeight * s_pattern + kHistoryWeight * s_history;
        hyps.push_back(std::move(h));
    }

    std::stable_sort(hyps.begin(), hyps.end(), [](const FaultHypothesis& a,
                                                  const FaultHypothesis& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.site < b.site;  // source order
    });
    return hyps;
}

// Recomputes a hypothesis's confidence from its own evidence items; ranking
// invariant checks use this.
inline double recompute_confidence(const FaultHypothesis& h) {
    double s_trace = 0, s_pattern = 0, s_history = 0;
    for (const auto& e : h.evidence) {
        if (e.kind == "trace") s_trace = e.score;
        if (e.kind == "pattern") s_pattern = e.score;
        if (e.kind == "history") s_history = e.score;
    }
    return kTraceWeight * s_trace + kPatternWeight * s_pattern + kHistoryWeight * s_history;
}

}  // namespace mendheal
