// healing.hpp - repair models that turn a fault hypothesis into ranked patch
// candidates: per-class templates, a seeded evolutionary search, snapshot
// regeneration, and an optional external HTTP adapter.
//
// Candidate validity is by construction: every edit carries a canonical text
// fragment produced by the formatter (or re-parsed from an adapter reply), so
// applying a candidate always yields a parseable program. No built-in model
// edits an assert statement except the two sanctioned templates: snapshot
// regeneration and brittle-assertion widening.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>

#include "mendheal/ast.hpp"
#include "mendheal/diagnosis.hpp"
#include "mendheal/diff.hpp"
#include "mendheal/faults.hpp"
#include "mendheal/format.hpp"
#include "mendheal/interp.hpp"
#include "mendheal/parse.hpp"
#include "mendheal/policy.hpp"
#include "mendheal/signals.hpp"
#include "mendheal/util.hpp"
#include "mendheal/workspace.hpp"

namespace mendheal {

// --- candidate model ---------------------------------------------------------

enum class RepairOrigin { Template, Search, Regeneration, External };

inline const char* repair_origin_name(RepairOrigin o) {
    switch (o) {
        case RepairOrigin::Template: return "template";
        case RepairOrigin::Search: return "search";
        case RepairOrigin::Regeneration: return "regeneration";
        case RepairOrigin::External: return "external";
    }
    return "?";
}

// One code edit: replace the statement at `site` with the fragment, or --
// when `site` has length 1 -- replace that whole function with a function of
// the same name parsed from the fragment.
struct Edit {
    NodePath site;
    std::string replacement;
};

struct ConfigChange {
    std::string key;
    Value new_value;
};

struct TestPolicyChange {
    std::string test_name;
    int quarantine_reruns = 0;
};

struct PatchCandidate {
    int id = 0;
    std::vector<Edit> edits;
    std::optional<ConfigChange> config_change;
    std::optional<TestPolicyChange> test_policy_change;
    RepairOrigin origin = RepairOrigin::Template;
    std::string rationale;
    BugClass predicted_class = BugClass::OffByOne;
};

class HealError : public std::runtime_error {
public:
    enum class Kind {
        NoTemplate,
        BudgetExhausted,
        NondeterministicActual,
        NoSnapshotInTest,
        RedundantRegeneration,
        UnevaluableActual,
        AdapterDisabled,
        UnparseableReply,
        EndpointFailure,
        InvalidEdit,
    };

    HealError(Kind k, const std::string& m,
              std::optional<PatchCandidate> partial = std::nullopt)
        : std::runtime_error(m), kind(k), best_partial(std::move(partial)) {}

    Kind kind;
    // BudgetExhausted only: the best sub-1.0-fitness candidate found, if any.
    std::optional<PatchCandidate> best_partial;
};

// Workspace-derived inputs the repair models need besides the program itself.
struct RepairContext {
    ConfigEntries config;
    QuarantineMap quarantine;
    std::vector<WorkloadCall> workload;
    Policy policy;
    uint64_t run_seed = 0;
    uint64_t step_limit = 1000000;
};

inline RuntimeEnv context_env(const RepairContext& ctx) {
    RuntimeEnv env;
    env.step_limit = ctx.step_limit;
    env.jitter_seed = ctx.run_seed;
    env.config = config_map(ctx.config);
    return env;
}

// --- applying candidates -----------------------------------------------------

struct AppliedPatch {
    Program program;
    ConfigEntries config;
    QuarantineMap quarantine;
};

inline std::string function_text(const Program& p, int fn_index) {
    Program one;
    one.functions.push_back(p.functions[static_cast<size_t>(fn_index)]);
    return format(one);
}

inline AppliedPatch apply_candidate(const Program& program, const ConfigEntries& config,
                                    const QuarantineMap& quarantine,
                                    const PatchCandidate& candidate) {
    AppliedPatch out{program, config, quarantine};
    // Apply bottom-up so earlier sibling indices stay valid when a fragment
    // splices to a different statement count.
    std::vector<Edit> edits = candidate.edits;
    std::stable_sort(edits.begin(), edits.end(),
                     [](const Edit& a, const Edit& b) { return b.site < a.site; });
    for (const Edit& e : edits) {
        try {
            if (e.site.size() == 1) {
                size_t idx = static_cast<size_t>(e.site[0]);
                if (idx >= out.program.functions.size())
                    throw HealError(HealError::Kind::InvalidEdit,
                                    "edit function index out of range");
                Program frag = parse(e.replacement);
                if (frag.functions.size() != 1)
                    throw HealError(HealError::Kind::InvalidEdit,
                                    "function edit must contain exactly one function");
                if (frag.functions[0].name != out.program.functions[idx].name)
                    throw HealError(HealError::Kind::InvalidEdit,
                                    "function edit renames '" +
                                        out.program.functions[idx].name + "'");
                out.program.functions[idx] = std::move(frag.functions[0]);
            } else {
                out.program = apply_fragment(out.program, e.site, e.replacement);
            }
        } catch (const ParseException& ex) {
            throw HealError(HealError::Kind::InvalidEdit,
                            std::string("edit fragment does not parse: ") + ex.what());
        } catch (const FaultError& ex) {
            throw HealError(HealError::Kind::InvalidEdit, ex.what());
        }
    }
    if (candidate.config_change) {
        bool found = false;
        for (auto& [k, v] : out.config)
            if (k == candidate.config_change->key) {
                v = candidate.config_change->new_value;
                found = true;
            }
        if (!found)
            out.config.emplace_back(candidate.config_change->key,
                                    candidate.config_change->new_value);
    }
    if (candidate.test_policy_change)
        out.quarantine[candidate.test_policy_change->test_name] =
            candidate.test_policy_change->quarantine_reruns;
    return out;
}

// Effect digest: two candidates are the same attempt if they produce the same
// program text, config, and quarantine state.
inline uint64_t candidate_digest(const Program& program, const ConfigEntries& config,
                                 const QuarantineMap& quarantine,
                                 const PatchCandidate& candidate) {
    AppliedPatch ap = apply_candidate(program, config, quarantine, candidate);
    std::string blob = format(ap.program);
    blob += '\0';
    blob += render_config_text(ap.config);
    blob += '\0';
    blob += render_quarantine_text(ap.quarantine);
    return fnv1a64(blob);
}

// --- shared helpers ----------------------------------------------------------

namespace detail {

// Pre-order position of binary operators matching `pred` across a statement's
// own expressions (body statements are separate statements, not descended).
inline int count_binary_ops(const Stmt& s, const std::function<bool(BinOp)>& pred) {
    int n = 0;
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
        if (e.kind == ExprKind::Binary && pred(e.bin_op)) ++n;
        for (const auto& c : e.children) walk(c);
    };
    for (const auto& e : s.exprs) walk(e);
    return n;
}

inline std::optional<BinOp> nth_binary_op(const Stmt& s, int occurrence,
                                          const std::function<bool(BinOp)>& pred) {
    std::optional<BinOp> found;
    int seen = 0;
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
        if (found) return;
        if (e.kind == ExprKind::Binary && pred(e.bin_op)) {
            if (seen == occurrence) {
                found = e.bin_op;
                return;
            }
            ++seen;
        }
        for (const auto& c : e.children) walk(c);
    };
    for (const auto& e : s.exprs) {
        walk(e);
        if (found) break;
    }
    return found;
}

inline bool set_nth_binary_op(Stmt& s, int occurrence, BinOp new_op,
                              const std::function<bool(BinOp)>& pred) {
    bool done = false;
    int seen = 0;
    std::function<void(Expr&)> walk = [&](Expr& e) {
        if (done) return;
        if (e.kind == ExprKind::Binary && pred(e.bin_op)) {
            if (seen == occurrence) {
                e.bin_op = new_op;
                done = true;
                return;
            }
            ++seen;
        }
        for (auto& c : e.children) walk(c);
    };
    for (auto& e : s.exprs) {
        walk(e);
        if (done) break;
    }
    return done;
}

// Distinct variables used as an index base in this statement, source order.
inline std::vector<std::string> indexed_base_vars(const Stmt& s) {
    std::vector<std::string> out;
    auto add = [&](const std::string& name) {
        for (const auto& n : out)
            if (n == name) return;
        out.push_back(name);
    };
    if (s.kind == StmtKind::IndexAssign) add(s.name);
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
        if (e.kind == ExprKind::Index && e.children[0].kind == ExprKind::Var)
            add(e.children[0].str_val);
        for (const auto& c : e.children) walk(c);
    };
    for (const auto& e : s.exprs) walk(e);
    return out;
}

inline bool stmt_subtree_has_assert(const Stmt& s) {
    if (is_assert_stmt(s)) return true;
    for (const auto& inner : s.body)
        if (stmt_subtree_has_assert(inner)) return true;
    for (const auto& inner : s.else_body)
        if (stmt_subtree_has_assert(inner)) return true;
    return false;
}

inline int count_asserts(const Program& p) {
    int n = 0;
    for_each_stmt(p, [&](const NodePath&, const Stmt& s) {
        if (is_assert_stmt(s)) ++n;
    });
    return n;
}

// Builds a parameterless probe function that runs the statement's enclosing
// function body with the statement at `site` replaced by `return expr;`.
// Returns the program with the probe appended plus the probe's name, or
// nullopt when the enclosing function takes parameters.
inline std::optional<std::pair<Program, std::string>> probe_program(const Program& p,
                                                                    const NodePath& site,
                                                                    Expr returned) {
    if (site.size() < 2) return std::nullopt;
    const Function& fn = p.functions[static_cast<size_t>(site[0])];
    if (!fn.params.empty()) return std::nullopt;
    Program q = p;
    Function probe = fn;
    probe.name = "mh_probe_" + fn.name;
    probe.params.clear();
    q.functions.push_back(std::move(probe));
    NodePath probe_site = site;
    probe_site[0] = static_cast<int>(q.functions.size()) - 1;
    auto slot = block_slot(q, probe_site);
    if (!slot) return std::nullopt;
    Stmt ret;
    ret.kind = StmtKind::Return;
    ret.exprs.push_back(std::move(returned));
    (*slot->block)[slot->index] = std::move(ret);
    return std::make_pair(std::move(q), q.functions.back().name);
}

// First user-defined, non-test function called anywhere in this statement's
// expressions; used to aim search at the code a failing test exercises.
inline std::optional<int> first_user_callee(const Program& p, const Stmt& s) {
    std::optional<int> found;
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
        if (found) return;
        if (e.kind == ExprKind::Call) {
            int idx = p.find_index(e.str_val);
            if (idx >= 0 && !is_test_function(p.functions[static_cast<size_t>(idx)])) {
                found = idx;
                return;
            }
        }
        for (const auto& c : e.children) walk(c);
    };
    for (const auto& e : s.exprs) {
        walk(e);
        if (found) break;
    }
    return found;
}

}  // namespace detail

// --- template repair -----------------------------------------------------------

// Per-class patch templates. Covered classes may still return an empty list
// when the hypothesis site lacks the template's shape; StaleSnapshot has no
// template at all (snapshot regeneration is its model) and raises NoTemplate.
inline std::vector<PatchCandidate> template_repair(const FaultHypothesis& hyp,
                                                   const Program& program,
                                                   const RepairContext& ctx) {
    std::vector<PatchCandidate> out;
    auto site_stmt = [&]() -> const Stmt* {
        auto ref = resolve_const(program, hyp.site);
        if (!ref || !ref->is_stmt()) return nullptr;
        return ref->st;
    };
    auto push_stmt_edit = [&](Stmt fixed, const std::string& rationale) {
        PatchCandidate c;
        c.edits.push_back({hyp.site, format_stmt(fixed)});
        c.origin = RepairOrigin::Template;
        c.rationale = rationale;
        c.predicted_class = hyp.suspected_class;
        out.push_back(std::move(c));
    };
    auto is_cmp = [](BinOp op) { return is_comparison(op); };

    switch (hyp.suspected_class) {
        case BugClass::StaleSnapshot:
            throw HealError(HealError::Kind::NoTemplate,
                            "StaleSnapshot has no template; use snapshot regeneration");

        case BugClass::OffByOne: {
            const Stmt* s = site_stmt();
            if (!s) return out;
            // Condition fix first: the first `<=` in a loop/branch condition
            // becomes `<`.
            if (s->kind == StmtKind::While || s->kind == StmtKind::If) {
                int n = detail::count_binary_ops(*s, [](BinOp op) { return op == BinOp::Le; });
                if (n > 0) {
                    Stmt fixed = *s;
                    detail::set_nth_binary_op(fixed, 0, BinOp::Lt,
                                              [](BinOp op) { return op == BinOp::Le; });
                    push_stmt_edit(std::move(fixed), "tighten loop bound: <= becomes <");
                }
            }
            // Range fix second: shrink the range end by one.
            if (s->kind == StmtKind::ForRange) {
                Stmt fixed = *s;
                Expr& end = fixed.exprs[1];
                if (end.kind == ExprKind::Binary && end.bin_op == BinOp::Add &&
                    end.children[1].kind == ExprKind::IntLit && end.children[1].int_val == 1) {
                    Expr lhs = end.children[0];
                    end = std::move(lhs);
                } else if (end.kind == ExprKind::IntLit && end.int_val > INT64_MIN) {
                    end.int_val -= 1;
                } else {
                    Expr wrapped =
                        Expr::make_binary(BinOp::Sub, std::move(end), Expr::make_int(1));
                    end = std::move(wrapped);
                }
                push_stmt_edit(std::move(fixed), "shrink range end by one");
            }
            return out;
        }

        case BugClass::MissingNullCheck: {
            const Stmt* s = site_stmt();
            if (!s || is_assert_stmt(*s)) return out;
            std::vector<std::string> vars = detail::indexed_base_vars(*s);
            size_t limit = std::min<size_t>(vars.size(), 3);
            for (size_t i = 0; i < limit; ++i) {
                Stmt guard;
                guard.kind = StmtKind::If;
                guard.exprs.push_back(Expr::make_binary(BinOp::Ne, Expr::make_var(vars[i]),
                                                        Expr::make_null()));
                guard.body.push_back(*s);
                push_stmt_edit(std::move(guard),
                               "guard '" + vars[i] + "' against null before use");
            }
            return out;
        }

        case BugClass::WrongOperator: {
            const Stmt* s = site_stmt();
            if (!s || is_assert_stmt(*s)) return out;  // asserts are off-limits
            auto cmp = detail::nth_binary_op(*s, 0, is_cmp);
            if (cmp) {
                for (int k = 1; k <= 5; ++k) {
                    Stmt fixed = *s;
                    BinOp alt = comparison_cycle_next(*cmp, k);
                    detail::set_nth_binary_op(fixed, 0, alt, is_cmp);
                    push_stmt_edit(std::move(fixed),
                                   std::string("replace comparison: ") + binop_text(*cmp) +
                                       " becomes " + binop_text(alt));
                }
                return out;
            }
            auto is_arith = [](BinOp op) { return is_arithmetic(op); };
            auto ar = detail::nth_binary_op(*s, 0, is_arith);
            if (ar) {
                for (int k = 1; k <= 4; ++k) {
                    Stmt fixed = *s;
                    BinOp alt = arithmetic_cycle_next(*ar, k);
                    detail::set_nth_binary_op(fixed, 0, alt, is_arith);
                    push_stmt_edit(std::move(fixed),
                                   std::string("replace operator: ") + binop_text(*ar) +
                                       " becomes " + binop_text(alt));
                }
            }
            return out;
        }

        case BugClass::BrittleAssertion: {
            const Stmt* s = site_stmt();
            if (!s) return out;
            const Expr* lhs = nullptr;
            if (s->kind == StmtKind::AssertEq) {
                lhs = &s->exprs[0];
            } else if (s->kind == StmtKind::Assert &&
                       s->exprs[0].kind == ExprKind::Binary &&
                       s->exprs[0].bin_op == BinOp::Eq) {
                lhs = &s->exprs[0].children[0];
            }
            if (!lhs) return out;
            std::set<int> tainted = detail::jitter_tainted_functions(program);
            if (detail::expr_jitter_tainted(program, tainted, *lhs)) return out;
            auto probe = detail::probe_program(program, hyp.site, *lhs);
            if (!probe) return out;
            ExecutionOutcome o = execute(probe->first, probe->second, {}, context_env(ctx));
            if (!o.ok || o.ret.kind != Value::Kind::Int) return out;
            int64_t actual = o.ret.i;
            if (actual == INT64_MIN || actual == INT64_MAX) return out;
            // Sanctioned assertion widening: exact equality becomes a +-1 band
            // around the observed value.
            Stmt widened;
            widened.kind = StmtKind::Assert;
            widened.exprs.push_back(Expr::make_binary(
                BinOp::And,
                Expr::make_binary(BinOp::Ge, *lhs, Expr::make_int(actual - 1)),
                Expr::make_binary(BinOp::Le, *lhs, Expr::make_int(actual + 1))));
            push_stmt_edit(std::move(widened),
                           "widen exact assertion to a +-1 band around observed value " +
                               std::to_string(actual));
            return out;
        }

        case BugClass::Misconfiguration: {
            const Stmt* s = site_stmt();
            if (!s) return out;
            auto cmp = find_config_comparison(*s);
            if (!cmp) return out;
            bool key_is_int = false;
            for (const auto& [k, v] : ctx.config)
                if (k == cmp->key && v.kind == Value::Kind::Int) key_is_int = true;
            if (!key_is_int) return out;
            // Doubling search over powers of two: the smallest value whose
            // config makes the visible suite green and replays the recorded
            // workload without errors.
            for (int bit = 0; bit <= 20; ++bit) {
                int64_t v = int64_t{1} << bit;
                ConfigEntries trial = ctx.config;
                for (auto& [k, val] : trial)
                    if (k == cmp->key) val = Value::make_int(v);
                RuntimeEnv env = context_env(ctx);
                env.config = config_map(trial);
                if (!run_tests(program, env).all_pass()) continue;
                bool workload_ok = true;
                for (const auto& call : ctx.workload) {
                    RuntimeEnv call_env = env;
                    call_env.jitter_seed = call.jitter_seed;
                    try {
                        if (!execute(program, call.entry, call.args, call_env).ok) {
                            workload_ok = false;
                            break;
                        }
                    } catch (const UnknownEntryError&) {
                        workload_ok = false;
                        break;
                    }
                }
                if (!workload_ok) continue;
                PatchCandidate c;
                c.config_change = ConfigChange{cmp->key, Value::make_int(v)};
                c.origin = RepairOrigin::Template;
                c.rationale = "set '" + cmp->key + "' to " + std::to_string(v) +
                              ", the smallest power of two passing the suite and the "
                              "recorded workload";
                c.predicted_class = hyp.suspected_class;
                out.push_back(std::move(c));
                return out;
            }
            return out;
        }

        case BugClass::FlakySeedDependence: {
            if (hyp.site.empty()) return out;
            const Function& fn = program.functions[static_cast<size_t>(hyp.site[0])];
            if (!is_test_function(fn)) return out;
            PatchCandidate c;
            c.test_policy_change =
                TestPolicyChange{fn.name, ctx.policy.flaky_rerun_count};
            c.origin = RepairOrigin::Template;
            c.rationale = "quarantine flaky test '" + fn.name + "' with " +
                          std::to_string(ctx.policy.flaky_rerun_count) + " reruns";
            c.predicted_class = hyp.suspected_class;
            out.push_back(std::move(c));
            return out;
        }
    }
    return out;
}

// --- snapshot regeneration -------------------------------------------------------

// Replaces a test's snapshot literal with the actual evaluated string. Refuses
// jitter-dependent tests (NondeterministicActual) and already-matching
// snapshots (RedundantRegeneration).
inline PatchCandidate regenerate_snapshot(const Program& program,
                                          const std::string& test_name,
                                          const RuntimeEnv& env) {
    int fn_index = program.find_index(test_name);
    if (fn_index < 0 || !is_test_function(program.functions[static_cast<size_t>(fn_index)]))
        throw HealError(HealError::Kind::NoSnapshotInTest,
                        "no test named '" + test_name + "'");
    std::optional<NodePath> snap_path;
    for_each_stmt(program, [&](const NodePath& path, const Stmt& s) {
        if (snap_path || path[0] != fn_index) return;
        if (s.kind == StmtKind::AssertSnapshot) snap_path = path;
    });
    if (!snap_path)
        throw HealError(HealError::Kind::NoSnapshotInTest,
                        "test '" + test_name + "' has no snapshot assertion");
    std::set<int> tainted = detail::jitter_tainted_functions(program);
    if (tainted.count(fn_index))
        throw HealError(HealError::Kind::NondeterministicActual,
                        "test '" + test_name + "' depends on jitter");

    auto ref = resolve_const(program, *snap_path);
    const Stmt& snap_stmt = *ref->st;
    auto probe = detail::probe_program(program, *snap_path, snap_stmt.exprs[0]);
    if (!probe)
        throw HealError(HealError::Kind::UnevaluableActual,
                        "cannot build evaluation probe for '" + test_name + "'");
    ExecutionOutcome o = execute(probe->first, probe->second, {}, env);
    if (!o.ok)
        throw HealError(HealError::Kind::UnevaluableActual,
                        "snapshot expression errors before the assertion: " +
                            o.error_message);
    if (o.ret.kind != Value::Kind::Str)
        throw HealError(HealError::Kind::UnevaluableActual,
                        "snapshot expression is not a string");
    if (o.ret.s == snap_stmt.snapshot)
        throw HealError(HealError::Kind::RedundantRegeneration,
                        "snapshot already matches; regeneration would be a no-op");

    Stmt fixed = snap_stmt;
    fixed.snapshot = o.ret.s;
    PatchCandidate c;
    c.edits.push_back({*snap_path, format_stmt(fixed)});
    c.origin = RepairOrigin::Regeneration;
    c.rationale = "regenerate snapshot in '" + test_name + "': " +
                  escape_string(snap_stmt.snapshot) + " becomes " + escape_string(o.ret.s);
    c.predicted_class = BugClass::StaleSnapshot;
    return c;
}

// --- search repair ---------------------------------------------------------------

struct SearchBudget {
    int population = 20;
    int generations = 10;
};

inline constexpr int kTournamentSize = 3;

// Seeded evolutionary search confined to the enclosing function of `region`.
// One mutation-operator application per offspring; fitness is the fraction of
// tests passing. Returns up to 3 distinct full-fitness candidates ranked by
// edit size; otherwise raises BudgetExhausted carrying the best partial.
inline std::vector<PatchCandidate> search_repair(const Program& program,
                                                 const std::vector<std::string>& failing_tests,
                                                 const NodePath& region,
                                                 const SearchBudget& budget, uint64_t seed,
                                                 const RuntimeEnv& env) {
    (void)failing_tests;  // fitness already spans the full suite
    if (region.empty() || budget.population <= 0 || budget.generations <= 0)
        throw HealError(HealError::Kind::BudgetExhausted,
                        "search needs a region and a positive budget");
    int fn_index = region[0];
    if (fn_index < 0 || static_cast<size_t>(fn_index) >= program.functions.size())
        throw HealError(HealError::Kind::BudgetExhausted, "search region does not resolve");
    const Function& fn = program.functions[static_cast<size_t>(fn_index)];
    if (is_test_function(fn))
        throw HealError(HealError::Kind::BudgetExhausted,
                        "search never mutates test functions: '" + fn.name + "'");

    // Structural operators must not swallow nested asserts.
    auto points_of = [&](const Program& p) {
        std::vector<MutationPoint> points = applicable_mutations(p, fn_index);
        std::vector<MutationPoint> safe;
        for (const auto& pt : points) {
            if (pt.op == MutationOperator::DeleteStmt ||
                pt.op == MutationOperator::DuplicateStmt) {
                auto ref = resolve_const(p, pt.site);
                if (ref && ref->is_stmt() && detail::stmt_subtree_has_assert(*ref->st))
                    continue;
            }
            safe.push_back(pt);
        }
        return safe;
    };
    if (points_of(program).empty())
        throw HealError(HealError::Kind::BudgetExhausted,
                        "no applicable mutation operators in '" + fn.name + "'");

    struct Genome {
        Program prog;
        int applications = 0;
        double fitness = -1.0;
    };
    auto evaluate = [&](Genome& g) {
        TestReport report = run_tests(g.prog, env);
        if (report.results.empty()) {
            g.fitness = 0.0;
            return;
        }
        int pass = 0;
        for (const auto& r : report.results)
            if (r.status == TestStatus::Pass) ++pass;
        g.fitness = static_cast<double>(pass) / static_cast<double>(report.results.size());
    };

    Rng rng(seed);
    auto spawn_child = [&](const Genome& parent) {
        Genome child{parent.prog, parent.applications, -1.0};
        std::vector<MutationPoint> points = points_of(parent.prog);
        if (points.empty()) return child;  // saturated genome: carried unchanged
        const MutationPoint& pt = points[rng.next_below(points.size())];
        uint64_t app_seed = rng.next_u64();
        try {
            child.prog = mutate(parent.prog, pt.op, pt.site, app_seed);
            child.applications += 1;
        } catch (const FaultError&) {
            // Inapplicable draw: keep the parent program, spend the slot.
        }
        return child;
    };

    std::string original_text = format(program);
    std::vector<Genome> population;
    Genome seed_genome{program, 0, -1.0};
    for (int i = 0; i < budget.population; ++i) population.push_back(spawn_child(seed_genome));

    std::vector<std::pair<int, PatchCandidate>> perfect;  // (edit size, candidate)
    std::set<std::string> perfect_texts;
    auto harvest = [&](const Genome& g) {
        if (g.fitness < 1.0) return;
        std::string text = format(g.prog);
        if (text == original_text) return;
        if (!perfect_texts.insert(text).second) return;
        PatchCandidate c;
        c.edits.push_back({NodePath{fn_index}, function_text(g.prog, fn_index)});
        c.origin = RepairOrigin::Search;
        c.rationale = "evolved patch of '" + fn.name + "' passing the full suite (" +
                      std::to_string(g.applications) + " operator applications)";
        c.predicted_class = BugClass::WrongOperator;
        perfect.emplace_back(diff_changed_lines(original_text, text), std::move(c));
    };

    Genome best_partial;
    auto consider_partial = [&](const Genome& g) {
        if (g.fitness >= 1.0) return;
        if (best_partial.fitness < 0 || g.fitness > best_partial.fitness ||
            (g.fitness == best_partial.fitness && g.applications < best_partial.applications))
            best_partial = g;
    };

    for (int gen = 0; gen < budget.generations; ++gen) {
        for (auto& g : population) {
            if (g.fitness < 0) evaluate(g);
            harvest(g);
            consider_partial(g);
        }
        if (perfect.size() >= 3) break;
        if (gen + 1 == budget.generations) break;
        std::vector<Genome> next;
        for (int i = 0; i < budget.population; ++i) {
            // Tournament selection of size 3 on fitness (ties: fewer edits).
            size_t winner = rng.next_below(population.size());
            for (int t = 1; t < kTournamentSize; ++t) {
                size_t rival = rng.next_below(population.size());
                if (population[rival].fitness > population[winner].fitness ||
                    (population[rival].fitness == population[winner].fitness &&
                     population[rival].applications < population[winner].applications))
                    winner = rival;
            }
            next.push_back(spawn_child(population[winner]));
        }
        population = std::move(next);
    }

    if (perfect.empty()) {
        std::optional<PatchCandidate> partial;
        if (best_partial.fitness >= 0 && format(best_partial.prog) != original_text) {
            PatchCandidate c;
            c.edits.push_back({NodePath{fn_index}, function_text(best_partial.prog, fn_index)});
            c.origin = RepairOrigin::Search;
            char frac[32];
            std::snprintf(frac, sizeof(frac), "%.3f", best_partial.fitness);
            c.rationale = "partial: best evolved patch of '" + fn.name + "' reaches fitness " +
                          frac;
            c.predicted_class = BugClass::WrongOperator;
            partial = std::move(c);
        }
        throw HealError(HealError::Kind::BudgetExhausted,
                        "search budget exhausted below full fitness", std::move(partial));
    }
    std::stable_sort(perfect.begin(), perfect.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PatchCandidate> out;
    for (size_t i = 0; i < perfect.size() && i < 3; ++i) out.push_back(perfect[i].second);
    return out;
}

// --- external adapter --------------------------------------------------------------

struct AdapterConfig {
    bool enabled = false;
    std::string endpoint;
    int timeout_ms = 5000;
};

inline AdapterConfig adapter_from_env() {
    AdapterConfig c;
    const char* ep = std::getenv("HEAL_ADAPTER_ENDPOINT");
    if (ep && *ep) {
        c.enabled = true;
        c.endpoint = ep;
    }
    return c;
}

inline std::string render_trace_block(const FailureEvent& event) {
    if (event.anomaly)
        return "anomaly in " + event.primary_test + ": interpreter steps exceeded baseline\n";
    std::string out = std::string(error_code_name(event.code)) + " in " + event.function +
                      " at " + path_dotted(event.site) + ": " + event.error_message + "\n";
    for (const auto& f : event.trace.frames)
        out += "  at " + f.function + " " + path_dotted(f.stmt_path) + "\n";
    return out;
}

inline std::string external_adapter_render(const FailureEvent& event,
                                           const std::string& snippet) {
    return "Given error log\n" + render_trace_block(event) + "and code\n" + snippet +
           "suggest a fix.\n";
}

namespace detail {

inline std::optional<std::string> fenced_block(const std::string& reply) {
    std::vector<std::string> lines = split_lines(reply);
    std::optional<size_t> open;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (!starts_with(trim(lines[i]), "```")) continue;
        if (!open) {
            open = i;
            continue;
        }
        std::string body;
        for (size_t k = *open + 1; k < i; ++k) body += lines[k] + "\n";
        return body;
    }
    return std::nullopt;
}

}  // namespace detail

// Constrained validity: the reply must contain exactly one fenced code block
// holding exactly one function whose name exists in the program; anything else
// is rejected rather than patched around.
inline PatchCandidate external_adapter_parse(const std::string& reply,
                                             const Program& program) {
    auto block = detail::fenced_block(reply);
    if (!block)
        throw HealError(HealError::Kind::UnparseableReply, "reply has no fenced code block");
    Program frag;
    try {
        frag = parse(*block);
    } catch (const ParseException& e) {
        throw HealError(HealError::Kind::UnparseableReply,
                        std::string("reply block does not parse: ") + e.what());
    }
    if (frag.functions.size() != 1)
        throw HealError(HealError::Kind::UnparseableReply,
                        "reply block must define exactly one function");
    int idx = program.find_index(frag.functions[0].name);
    if (idx < 0)
        throw HealError(HealError::Kind::UnparseableReply,
                        "reply addresses unknown function '" + frag.functions[0].name + "'");
    PatchCandidate c;
    c.edits.push_back({NodePath{idx}, format(frag)});
    c.origin = RepairOrigin::External;
    c.rationale = "external adapter replacement for '" + frag.functions[0].name + "'";
    return c;
}

inline PatchCandidate external_repair(const FailureEvent& event, const FaultHypothesis& hyp,
                                      const Program& program, const AdapterConfig& adapter) {
    if (!adapter.enabled || adapter.endpoint.empty())
        throw HealError(HealError::Kind::AdapterDisabled, "external adapter is not enabled");
    if (hyp.site.empty() || static_cast<size_t>(hyp.site[0]) >= program.functions.size())
        throw HealError(HealError::Kind::UnparseableReply,
                        "hypothesis site names no function");
    std::string snippet = function_text(program, hyp.site[0]);
    std::string prompt = external_adapter_render(event, snippet);

    std::string rest = adapter.endpoint;
    if (starts_with(rest, "http://")) rest = rest.substr(7);
    else if (rest.find("://") != std::string::npos)
        throw HealError(HealError::Kind::EndpointFailure,
                        "unsupported endpoint scheme: " + adapter.endpoint);
    std::string path = "/";
    size_t slash = rest.find('/');
    if (slash != std::string::npos) {
        path = rest.substr(slash);
        rest = rest.substr(0, slash);
    }
    std::string host = rest;
    int port = 80;
    size_t colon = rest.rfind(':');
    if (colon != std::string::npos) {
        host = rest.substr(0, colon);
        try {
            port = std::stoi(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw HealError(HealError::Kind::EndpointFailure,
                            "bad endpoint port: " + adapter.endpoint);
        }
    }
    httplib::Client client(host, port);
    client.set_connection_timeout(adapter.timeout_ms / 1000,
                                  (adapter.timeout_ms % 1000) * 1000);
    client.set_read_timeout(adapter.timeout_ms / 1000, (adapter.timeout_ms % 1000) * 1000);
    auto res = client.Post(path, prompt, "text/plain");
    if (!res || res->status != 200)
        throw HealError(HealError::Kind::EndpointFailure,
                        "adapter endpoint failed: " + adapter.endpoint +
                            (res ? " (status " + std::to_string(res->status) + ")"
                                 : " (no response)"));
    PatchCandidate c = external_adapter_parse(res->body, program);
    c.predicted_class = hyp.suspected_class;
    return c;
}

// --- dispatch ------------------------------------------------------------------------

// Lazily walks the model ladder -- template, snapshot regeneration, search,
// external -- across the ranked hypotheses, deduplicating by effect digest and
// assigning candidate ids in emission order. Later models only run when every
// earlier model's queue is drained, so a first-attempt template heal never
// pays for a search.
class CandidateSource {
public:
    CandidateSource(FailureEvent event, std::vector<FaultHypothesis> hypotheses,
                    Program program, RepairContext ctx, AdapterConfig adapter = {})
        : event_(std::move(event)),
          hypotheses_(std::move(hypotheses)),
          program_(std::move(program)),
          ctx_(std::move(ctx)),
          adapter_(std::move(adapter)) {}

    std::optional<PatchCandidate> next() {
        while (buffer_.empty() && stage_ <= 3) refill();
        if (buffer_.empty()) return std::nullopt;
        PatchCandidate c = std::move(buffer_.front());
        buffer_.pop_front();
        c.id = next_id_++;
        return c;
    }

private:
    void offer(PatchCandidate c) {
        uint64_t digest;
        try {
            digest = candidate_digest(program_, ctx_.config, ctx_.quarantine, c);
        } catch (const HealError&) {
            return;  // unapplicable candidate: drop rather than emit
        }
        if (!seen_.insert(digest).second) return;
        buffer_.push_back(std::move(c));
    }

    void refill() {
        switch (stage_) {
            case 0: {  // template, hypothesis-ranked
                while (cursor_ < hypotheses_.size()) {
                    const FaultHypothesis& hyp = hypotheses_[cursor_++];
                    try {
                        for (auto& c : template_repair(hyp, program_, ctx_))
                            offer(std::move(c));
                    } catch (const HealError&) {
                        // NoTemplate: the class belongs to a later model.
                    }
                    if (!buffer_.empty()) return;
                }
                stage_ = 1;
                cursor_ = 0;
                return;
            }
            case 1: {  // snapshot regeneration, gated on a StaleSnapshot hypothesis
                stage_ = 2;
                cursor_ = 0;
                bool stale = false;
                for (const auto& h : hypotheses_)
                    if (h.suspected_class == BugClass::StaleSnapshot) stale = true;
                if (!stale) return;
                std::vector<PatchCandidate> singles;
                for (const auto& test : event_.failing_tests) {
                    try {
                        singles.push_back(
                            regenerate_snapshot(program_, test, context_env(ctx_)));
                    } catch (const HealError&) {
                        // Not a snapshot test, already matching, or jittery.
                    }
                }
                if (singles.size() > 1) {
                    // All stale snapshots in one candidate first: a partial
                    // regeneration would still fail the sandbox suite.
                    PatchCandidate merged;
                    merged.origin = RepairOrigin::Regeneration;
                    merged.predicted_class = BugClass::StaleSnapshot;
                    std::vector<std::string> reasons;
                    for (const auto& s : singles) {
                        merged.edits.insert(merged.edits.end(), s.edits.begin(),
                                            s.edits.end());
                        reasons.push_back(s.rationale);
                    }
                    merged.rationale = join(reasons, "; ");
                    offer(std::move(merged));
                }
                for (auto& s : singles) offer(std::move(s));
                return;
            }
            case 2: {  // search, hypothesis-ranked, one run per function
                while (cursor_ < hypotheses_.size()) {
                    size_t i = cursor_++;
                    const FaultHypothesis& hyp = hypotheses_[i];
                    if (hyp.site.empty()) continue;
                    int fn_index = hyp.site[0];
                    if (fn_index < 0 ||
                        static_cast<size_t>(fn_index) >= program_.functions.size())
                        continue;
                    if (is_test_function(program_.functions[static_cast<size_t>(fn_index)])) {
                        // Redirect to the code the failing test exercises; the
                        // search model never mutates tests.
                        auto ref = resolve_const(program_, hyp.site);
                        if (!ref || !ref->is_stmt()) continue;
                        auto callee = detail::first_user_callee(program_, *ref->st);
                        if (!callee) continue;
                        fn_index = *callee;
                    }
                    if (!searched_fns_.insert(fn_index).second) continue;
                    try {
                        auto found = search_repair(program_, event_.failing_tests,
                                                   NodePath{fn_index}, SearchBudget{},
                                                   derive_seed(ctx_.run_seed, 100 + i),
                                                   context_env(ctx_));
                        for (auto& c : found) offer(std::move(c));
                    } catch (const HealError&) {
                        // Partial-only searches feed no attempts.
                    }
                    if (!buffer_.empty()) return;
                }
                stage_ = 3;
                cursor_ = 0;
                return;
            }
            case 3: {  // external adapter, if enabled
                while (adapter_.enabled && cursor_ < hypotheses_.size()) {
                    const FaultHypothesis& hyp = hypotheses_[cursor_++];
                    try {
                        offer(external_repair(event_, hyp, program_, adapter_));
                    } catch (const HealError&) {
                        // Disabled, unreachable, or unparseable: skip.
                    }
                    if (!buffer_.empty()) return;
                }
                stage_ = 4;
                return;
            }
            default: return;
        }
    }

    FailureEvent event_;
    std::vector<FaultHypothesis> hypotheses_;
    Program program_;
    RepairContext ctx_;
    AdapterConfig adapter_;
    int stage_ = 0;
    size_t cursor_ = 0;
    std::deque<PatchCandidate> buffer_;
    std::set<uint64_t> seen_;
    std::set<int> searched_fns_;
    int next_id_ = 1;
};

}  // namespace mendheal
