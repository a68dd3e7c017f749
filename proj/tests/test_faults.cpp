// Fault taxonomy, mutation operators, and seeded injection.
#include <gtest/gtest.h>

#include <set>

#include "mendheal/faults.hpp"
#include "testsupport.hpp"

using namespace mendheal;
using testsupport::parse_ok;

namespace {

// A small library-plus-tests program exercising every injectable shape.
const char* kLibSrc = R"(fn clamp(x, lo, hi) {
  if x < lo {
    return lo;
  }
  if x > hi {
    return hi;
  }
  return x;
}

fn sum_to(n) {
  let total = 0;
  let i = 0;
  while i < n {
    total = total + i;
    i = i + 1;
  }
  return total;
}

fn first_or_default(a, d) {
  if a != null {
    return a[0];
  }
  return d;
}

fn scaled(n) {
  let base = 7;
  return base * n;
}

fn capacity_ok(n) {
  let limit = config("max_items");
  return n <= limit;
}

fn tier(n) {
  if config("max_items") >= 16 {
    return n;
  }
  return 0;
}

fn test_clamp() {
  assert_eq(clamp(5, 0, 3), 3);
  assert_eq(clamp(-1, 0, 3), 0);
}

fn test_sum() {
  assert_eq(sum_to(4), 6);
}

fn test_first() {
  assert_eq(first_or_default([9, 8], 0), 9);
  assert_eq(first_or_default(null, 5), 5);
}

fn test_scaled() {
  assert_snapshot(str(scaled(3)), "21");
}

fn test_capacity() {
  assert(capacity_ok(10));
  assert_eq(tier(3), 3);
}

fn test_range() {
  let s = sum_to(10);
  assert(s > 40);
  assert(s < 50);
}

fn main() {
}
)";

Program lib() { return parse_ok(kLibSrc); }

ConfigEntries lib_config() {
    ConfigEntries cfg;
    cfg.emplace_back("max_items", Value::make_int(64));
    return cfg;
}

RuntimeEnv lib_env() {
    RuntimeEnv env;
    env.jitter_seed = 7;
    env.config = config_map(lib_config());
    return env;
}

NodePath stmt_path_of_first(const Program& p, StmtKind kind, const std::string& fn_name) {
    NodePath found;
    for_each_stmt(p, [&](const NodePath& path, const Stmt& s) {
        if (!found.empty()) return;
        if (p.functions[static_cast<size_t>(path[0])].name != fn_name) return;
        if (s.kind == kind) found = path;
    });
    return found;
}

// --- operator cycles -----------------------------------------------------

TEST(Cycles, ComparisonOrderIsFixed) {
    EXPECT_EQ(comparison_cycle_next(BinOp::Lt), BinOp::Le);
    EXPECT_EQ(comparison_cycle_next(BinOp::Le), BinOp::Gt);
    EXPECT_EQ(comparison_cycle_next(BinOp::Gt), BinOp::Ge);
    EXPECT_EQ(comparison_cycle_next(BinOp::Ge), BinOp::Eq);
    EXPECT_EQ(comparison_cycle_next(BinOp::Eq), BinOp::Ne);
    EXPECT_EQ(comparison_cycle_next(BinOp::Ne), BinOp::Lt);
    EXPECT_EQ(comparison_cycle_next(BinOp::Lt, 6), BinOp::Lt);
}

TEST(Cycles, ArithmeticOrderIsFixed) {
    EXPECT_EQ(arithmetic_cycle_next(BinOp::Add), BinOp::Sub);
    EXPECT_EQ(arithmetic_cycle_next(BinOp::Sub), BinOp::Mul);
    EXPECT_EQ(arithmetic_cycle_next(BinOp::Mul), BinOp::Div);
    EXPECT_EQ(arithmetic_cycle_next(BinOp::Div), BinOp::Mod);
    EXPECT_EQ(arithmetic_cycle_next(BinOp::Mod), BinOp::Add);
    EXPECT_EQ(arithmetic_cycle_next(BinOp::Add, 5), BinOp::Add);
}

// --- mutate --------------------------------------------------------------

TEST(Mutate, SwapComparisonAtStatement) {
    Program p = lib();
    NodePath site = stmt_path_of_first(p, StmtKind::While, "sum_to");
    Program m = mutate(p, MutationOperator::SwapComparisonOp, site, 0);
    auto ref = resolve(m, site);
    ASSERT_TRUE(ref && ref->is_stmt());
    EXPECT_EQ(ref->st->exprs[0].bin_op, BinOp::Le);  // i < n  ->  i <= n
    // Original untouched (value semantics).
    auto orig = resolve(p, site);
    EXPECT_EQ(orig->st->exprs[0].bin_op, BinOp::Lt);
}

TEST(Mutate, SwapArithmeticAtExactExprPath) {
    Program p = parse_ok("fn f(a, b) {\n  return a + b * 2;\n}\n");
    // return stmt at 0.0; expr a + b * 2 at 0.0.0; b * 2 at 0.0.0.1
    Program m = mutate(p, MutationOperator::SwapArithmeticOp, {0, 0, 0, 1}, 0);
    EXPECT_EQ(format(m), "fn f(a, b) {\n  return a + b / 2;\n}\n");
}

TEST(Mutate, IntLiteralDeltaParityFollowsSeed) {
    Program p = parse_ok("fn f() {\n  return 10;\n}\n");
    Program up = mutate(p, MutationOperator::IntLiteralDelta, {0, 0, 0}, 2);
    Program down = mutate(p, MutationOperator::IntLiteralDelta, {0, 0, 0}, 3);
    EXPECT_EQ(format(up), "fn f() {\n  return 11;\n}\n");
    EXPECT_EQ(format(down), "fn f() {\n  return 9;\n}\n");
}

TEST(Mutate, DeleteOnlyStatementLeavesEmptyBlock) {
    Program p = parse_ok("fn f(n) {\n  if n > 0 {\n    print(n);\n  }\n}\n");
    // print stmt path: fn 0, if stmt 0, child = exprs(1) + body index 0 = 1
    Program m = mutate(p, MutationOperator::DeleteStmt, {0, 0, 1}, 0);
    EXPECT_EQ(format(m), "fn f(n) {\n  if n > 0 {\n  }\n}\n");
    auto reparsed = parse(format(m));
    EXPECT_TRUE(equals(reparsed, m));
}

TEST(Mutate, DuplicateStatementInsertsAdjacentCopy) {
    Program p = parse_ok("fn f() {\n  let x = 1;\n  x = x + 1;\n  return x;\n}\n");
    Program m = mutate(p, MutationOperator::DuplicateStmt, {0, 1}, 0);
    EXPECT_EQ(format(m), "fn f() {\n  let x = 1;\n  x = x + 1;\n  x = x + 1;\n  return x;\n}\n");
    RuntimeEnv env;
    auto out = execute(m, "f", {}, env);
    ASSERT_TRUE(out.ok);
    EXPECT_EQ(out.ret.i, 3);
}

TEST(Mutate, RemoveNullGuardSplicesBody) {
    Program p = lib();
    NodePath guard = stmt_path_of_first(p, StmtKind::If, "first_or_default");
    Program m = mutate(p, MutationOperator::RemoveNullGuard, guard, 0);
    const Function* fn = m.find("first_or_default");
    ASSERT_NE(fn, nullptr);
    ASSERT_EQ(fn->body.size(), 2u);
    EXPECT_EQ(format_stmt(fn->body[0]), "return a[0];\n");
    // The unguarded deref now dies on null input.
    RuntimeEnv env = lib_env();
    auto out = execute(m, "first_or_default", {Value::make_null(), Value::make_int(5)}, env);
    EXPECT_FALSE(out.ok);
    EXPECT_EQ(out.code, ErrorCode::NullDeref);
}

TEST(Mutate, AssertTargetsAreRefusedWithoutOptIn) {
    Program p = lib();
    NodePath assert_site = stmt_path_of_first(p, StmtKind::AssertEq, "test_sum");
    try {
        mutate(p, MutationOperator::DeleteStmt, assert_site, 0);
        FAIL() << "expected FaultError";
    } catch (const FaultError& e) {
        EXPECT_EQ(e.kind(), FaultError::Kind::ForbiddenAssertTarget);
    }
    // Injector opt-in works.
    Program m = mutate(p, MutationOperator::DeleteStmt, assert_site, 0, /*allow_asserts=*/true);
    EXPECT_EQ(m.find("test_sum")->body.size(), 0u);
}

TEST(Mutate, SubexpressionOfAssertIsAlsoRefused) {
    Program p = lib();
    NodePath assert_site = stmt_path_of_first(p, StmtKind::AssertEq, "test_sum");
    NodePath inner = assert_site;
    inner.push_back(0);  // first expr of the assert_eq
    EXPECT_THROW(mutate(p, MutationOperator::IntLiteralDelta, inner, 0), FaultError);
}

TEST(Mutate, InapplicableOperatorThrows) {
    Program p = parse_ok("fn f() {\n  return true;\n}\n");
    try {
        mutate(p, MutationOperator::SwapArithmeticOp, {0, 0}, 0);
        FAIL() << "expected FaultError";
    } catch (const FaultError& e) {
        EXPECT_EQ(e.kind(), FaultError::Kind::InapplicableOperator);
    }
}

TEST(Mutate, ConfigValueMutationShiftsInteger) {
    ConfigEntries cfg = lib_config();
    ConfigEntries out = mutate_config(cfg, "max_items", 4);
    EXPECT_NE(config_map(out)["max_items"].i, 64);
    EXPECT_THROW(mutate_config(cfg, "absent", 0), FaultError);
}

// --- applicable_mutations ---------------------------------------------------

TEST(Applicable, ExcludesAssertsAndNeutralShapes) {
    Program p = lib();
    int sum_idx = p.find_index("sum_to");
    ASSERT_GE(sum_idx, 0);
    auto points = applicable_mutations(p, sum_idx);
    EXPECT_FALSE(points.empty());
    for (const auto& pt : points) {
        auto sp = enclosing_stmt_path(p, pt.site);
        ASSERT_TRUE(sp.has_value());
        auto ref = resolve_const(p, *sp);
        EXPECT_FALSE(is_assert_stmt(*ref->st));
        if (pt.op == MutationOperator::DuplicateStmt) {
            EXPECT_TRUE(ref->st->kind != StmtKind::Let && ref->st->kind != StmtKind::Return);
        }
    }
    // Test functions are all asserts; nothing but the call args are mutable there.
    int test_idx = p.find_index("test_sum");
    auto test_points = applicable_mutations(p, test_idx);
    EXPECT_TRUE(test_points.empty());
}

TEST(Applicable, EveryPointAppliesCleanly) {
    Program p = lib();
    for (int fi = 0; fi < static_cast<int>(p.functions.size()); ++fi) {
        for (const auto& pt : applicable_mutations(p, fi)) {
            Program m = mutate(p, pt.op, pt.site, 11);
            std::string text = format(m);
            Program reparsed = parse(text);
            EXPECT_TRUE(equals(reparsed, m)) << mutation_operator_name(pt.op) << " at "
                                             << path_dotted(pt.site);
        }
    }
}

TEST(Applicable, OrderIsDeterministic) {
    Program p = lib();
    auto a = applicable_mutations(p, p.find_index("clamp"));
    auto b = applicable_mutations(p, p.find_index("clamp"));
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].op, b[i].op);
        EXPECT_EQ(a[i].site, b[i].site);
    }
}

// --- enumerate_sites -------------------------------------------------------

TEST(Sites, PerClassAnchorsOnLibProgram) {
    Program p = lib();
    auto off = enumerate_sites(p, BugClass::OffByOne);
    ASSERT_EQ(off.size(), 1u);  // the while in sum_to
    auto ref = resolve(p, off[0]);
    EXPECT_EQ(ref->st->kind, StmtKind::While);

    auto null_sites = enumerate_sites(p, BugClass::MissingNullCheck);
    ASSERT_EQ(null_sites.size(), 1u);
    EXPECT_EQ(p.functions[static_cast<size_t>(null_sites[0][0])].name, "first_or_default");

    auto wrong_op = enumerate_sites(p, BugClass::WrongOperator);
    EXPECT_FALSE(wrong_op.empty());
    for (const auto& site : wrong_op) {
        auto r = resolve(p, site);
        EXPECT_FALSE(is_assert_stmt(*r->st));
        EXPECT_NE(r->st->kind, StmtKind::While);
    }

    auto snaps = enumerate_sites(p, BugClass::StaleSnapshot);
    ASSERT_EQ(snaps.size(), 1u);
    EXPECT_EQ(resolve(p, snaps[0])->st->kind, StmtKind::AssertSnapshot);

    auto brittle = enumerate_sites(p, BugClass::BrittleAssertion);
    ASSERT_EQ(brittle.size(), 2u);  // assert(s > 40), assert(s < 50)
    for (const auto& site : brittle)
        EXPECT_EQ(p.functions[static_cast<size_t>(site[0])].name, "test_range");

    auto flaky = enumerate_sites(p, BugClass::FlakySeedDependence);
    EXPECT_GE(flaky.size(), 5u);  // every assert_eq in test functions
    for (const auto& site : flaky)
        EXPECT_TRUE(is_test_function(p.functions[static_cast<size_t>(site[0])]));

    auto miscfg = enumerate_sites(p, BugClass::Misconfiguration);
    ASSERT_EQ(miscfg.size(), 1u);  // capacity_ok compares a let-bound copy; only tier qualifies
    EXPECT_EQ(p.functions[static_cast<size_t>(miscfg[0][0])].name, "tier");
}

TEST(Sites, ConfigComparisonAgainstLiteralIsASite) {
    Program p = parse_ok(
        "fn gate(n) {\n  return config(\"limit\") >= n;\n}\n"
        "fn check(n) {\n  if config(\"limit\") >= 10 {\n    return true;\n  }\n  return false;\n}\n");
    auto sites = enumerate_sites(p, BugClass::Misconfiguration);
    ASSERT_EQ(sites.size(), 1u);
    EXPECT_EQ(sites[0][0], 1);  // only the literal comparison in `check`
}

TEST(Sites, SourceOrderAndStability) {
    Program p = lib();
    for (BugClass c : kAllBugClasses) {
        auto a = enumerate_sites(p, c);
        auto b = enumerate_sites(p, c);
        EXPECT_EQ(a, b);
        for (size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1], a[i]);
    }
}

// --- injection -------------------------------------------------------------

struct InjectCase {
    BugClass cls;
    uint64_t seed;
};

TEST(Inject, EveryClassProducesAFalsifiableMutant) {
    Program p = lib();
    ConfigEntries cfg = lib_config();
    RuntimeEnv env = lib_env();
    TestReport clean = run_tests(p, env);
    for (const auto& r : clean.results) ASSERT_EQ(r.status, TestStatus::Pass) << r.test_name;

    for (BugClass cls : kAllBugClasses) {
        SCOPED_TRACE(bug_class_name(cls));
        InjectResult res = inject_bug(p, cfg, cls, 1234, env);
        EXPECT_FALSE(res.newly_failing.empty());
        EXPECT_EQ(res.truth.bug_class, cls);
        EXPECT_NE(res.truth.original_fragment, res.truth.mutated_fragment);

        RuntimeEnv menv = env;
        menv.config = config_map(res.config);
        TestReport after = run_tests(res.program, menv);
        bool some_new_failure = false;
        for (const auto& r : after.results) {
            if (r.status == TestStatus::Pass) continue;
            const TestResult* before = clean.find(r.test_name);
            if (before && before->status == TestStatus::Pass) some_new_failure = true;
        }
        EXPECT_TRUE(some_new_failure);
    }
}

TEST(Inject, SameSeedSameMutantDifferentSeedsUsuallyDiffer) {
    Program p = lib();
    ConfigEntries cfg = lib_config();
    RuntimeEnv env = lib_env();
    InjectResult a = inject_bug(p, cfg, BugClass::WrongOperator, 99, env);
    InjectResult b = inject_bug(p, cfg, BugClass::WrongOperator, 99, env);
    EXPECT_TRUE(equals(a.program, b.program));
    EXPECT_EQ(a.truth.site, b.truth.site);
    EXPECT_EQ(a.truth.mutated_fragment, b.truth.mutated_fragment);

    std::set<std::string> distinct;
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u})
        distinct.insert(inject_bug(p, cfg, BugClass::WrongOperator, seed, env).truth.mutated_fragment);
    EXPECT_GE(distinct.size(), 2u);
}

TEST(Inject, GroundTruthFragmentReproducesTheMutant) {
    Program p = lib();
    ConfigEntries cfg = lib_config();
    RuntimeEnv env = lib_env();
    for (BugClass cls :
         {BugClass::OffByOne, BugClass::WrongOperator, BugClass::StaleSnapshot,
          BugClass::BrittleAssertion, BugClass::FlakySeedDependence}) {
        SCOPED_TRACE(bug_class_name(cls));
        InjectResult res = inject_bug(p, cfg, cls, 42, env);
        Program rebuilt = apply_fragment(p, res.truth.edit_site, res.truth.mutated_fragment);
        EXPECT_EQ(format(rebuilt), format(res.program));
    }
    // MissingNullCheck splices several statements; the fragment covers them.
    InjectResult res = inject_bug(p, cfg, BugClass::MissingNullCheck, 42, env);
    Program rebuilt = apply_fragment(p, res.truth.edit_site, res.truth.mutated_fragment);
    EXPECT_EQ(format(rebuilt), format(res.program));
}

TEST(Inject, StaleSnapshotEditsCodeNotTheSnapshotLine) {
    Program p = lib();
    InjectResult res = inject_bug(p, lib_config(), BugClass::StaleSnapshot, 7, lib_env());
    // The anchor is the assert_snapshot, the edit lives in the helper.
    auto anchor = resolve(res.program, res.truth.site);
    EXPECT_EQ(anchor->st->kind, StmtKind::AssertSnapshot);
    EXPECT_EQ(anchor->st->snapshot, "21");  // literal untouched
    EXPECT_NE(res.truth.edit_site, res.truth.site);
    EXPECT_EQ(res.program.functions[static_cast<size_t>(res.truth.edit_site[0])].name, "scaled");
    // Failure manifests solely as a snapshot mismatch.
    RuntimeEnv env = lib_env();
    TestReport after = run_tests(res.program, env);
    const TestResult* snap = after.find("test_scaled");
    ASSERT_NE(snap, nullptr);
    EXPECT_EQ(snap->outcome.code, ErrorCode::SnapshotMismatch);
}

TEST(Inject, FlakyMutantIsSeedDependent) {
    Program p = lib();
    ConfigEntries cfg = lib_config();
    RuntimeEnv env = lib_env();
    InjectResult res = inject_bug(p, cfg, BugClass::FlakySeedDependence, 5, env);
    ASSERT_EQ(res.newly_failing.size(), 1u);
    const std::string& victim = res.newly_failing[0];

    RuntimeEnv menv = env;
    menv.config = config_map(res.config);
    TestReport base = run_tests(res.program, menv);
    EXPECT_NE(base.find(victim)->status, TestStatus::Pass);

    bool passed_somewhere = false;
    for (uint64_t k = 1; k <= 3; ++k) {
        RuntimeEnv env2 = menv;
        env2.jitter_seed = derive_seed(env.jitter_seed, k);
        if (run_tests(res.program, env2).find(victim)->status == TestStatus::Pass)
            passed_somewhere = true;
    }
    EXPECT_TRUE(passed_somewhere);
}

TEST(Inject, MisconfigurationEditsConfigNotCode) {
    Program p = parse_ok(
        "fn capacity_ok(n) {\n  return n <= config(\"max_items\");\n}\n"
        "fn admit(n) {\n  if config(\"max_items\") >= 16 {\n    return true;\n  }\n  return capacity_ok(n);\n}\n"
        "fn test_admit() {\n  assert(admit(10));\n}\n"
        "fn main() {\n}\n");
    ConfigEntries cfg;
    cfg.emplace_back("max_items", Value::make_int(64));
    RuntimeEnv env;
    env.jitter_seed = 7;
    env.config = config_map(cfg);

    InjectResult res = inject_bug(p, cfg, BugClass::Misconfiguration, 3, env);
    EXPECT_TRUE(res.truth.config_level);
    EXPECT_EQ(res.truth.config_key, "max_items");
    EXPECT_TRUE(equals(res.program, p));  // code untouched
    int64_t new_val = config_map(res.config)["max_items"].i;
    EXPECT_NE(new_val, 64);
    EXPECT_LT(new_val, 16);  // pushed below the admit threshold
    EXPECT_EQ(res.truth.original_fragment, "max_items = 64");
    EXPECT_EQ(res.truth.mutated_fragment, "max_items = " + std::to_string(new_val));
}

TEST(Inject, NoSiteAndUnfalsifiableAreDistinctErrors) {
    Program no_loops = parse_ok("fn f() {\n  return 1;\n}\nfn main() {\n}\n");
    RuntimeEnv env;
    try {
        inject_bug(no_loops, {}, BugClass::OffByOne, 1, env);
        FAIL() << "expected FaultError";
    } catch (const FaultError& e) {
        EXPECT_EQ(e.kind(), FaultError::Kind::NoInjectableSite);
    }

    // A while loop no test ever exercises: sites exist, but no draw can
    // produce a newly-failing test.
    Program uncovered = parse_ok(
        "fn spin(n) {\n  let i = 0;\n  while i < n {\n    i = i + 1;\n  }\n  return i;\n}\n"
        "fn test_nothing() {\n  assert_eq(1, 1);\n}\n"
        "fn main() {\n}\n");
    try {
        inject_bug(uncovered, {}, BugClass::OffByOne, 1, env);
        FAIL() << "expected FaultError";
    } catch (const FaultError& e) {
        EXPECT_EQ(e.kind(), FaultError::Kind::CannotFalsify);
    }
}

TEST(Inject, InjectionNeverTouchesOtherFunctions) {
    Program p = lib();
    InjectResult res = inject_bug(p, lib_config(), BugClass::OffByOne, 21, lib_env());
    ASSERT_EQ(res.truth.site[0], res.truth.edit_site[0]);
    for (size_t fi = 0; fi < p.functions.size(); ++fi) {
        if (static_cast<int>(fi) == res.truth.edit_site[0]) continue;
        EXPECT_TRUE(equals(p.functions[fi], res.program.functions[fi]));
    }
}

}  // namespace
