// testsupport.hpp - shared helpers for the test suites: parse-or-die,
// environment builders, and a seeded random-program generator used by
// round-trip and property tests.
#pragma once

#include <string>
#include <vector>

#include "mendheal/ast.hpp"
#include "mendheal/format.hpp"
#include "mendheal/interp.hpp"
#include "mendheal/parse.hpp"
#include "mendheal/util.hpp"

namespace testsupport {

using namespace mendheal;

inline Program parse_ok(const std::string& src) {
    return parse(src);  // ParseException propagates and fails the test loudly
}

inline RuntimeEnv mk_env(uint64_t step_limit = 1000000, uint64_t jitter_seed = 0) {
    RuntimeEnv env;
    env.step_limit = step_limit;
    env.jitter_seed = jitter_seed;
    return env;
}

inline ExecutionOutcome run_fn(const std::string& src, const std::string& entry,
                               RuntimeEnv env = mk_env()) {
    Program p = parse_ok(src);
    return execute(p, entry, {}, env);
}

// --- seeded random program generator ---------------------------------------
// Generates structurally valid programs for round-trip properties. Only
// canonical shapes are produced (e.g. negative integers are literals, never
// unary minus over a literal), matching what the parser itself can emit.

class ProgramGen {
public:
    explicit ProgramGen(uint64_t seed) : rng_(seed) {}

    Program gen() {
        Program p;
        int nfn = 1 + static_cast<int>(rng_.next_below(3));
        for (int i = 0; i < nfn; ++i) {
            Function f;
            f.name = "f" + std::to_string(i);
            int nparams = static_cast<int>(rng_.next_below(3));
            for (int j = 0; j < nparams; ++j) f.params.push_back("p" + std::to_string(j));
            int nstmts = 1 + static_cast<int>(rng_.next_below(5));
            for (int j = 0; j < nstmts; ++j) f.body.push_back(gen_stmt(2));
            p.functions.push_back(std::move(f));
        }
        return p;
    }

private:
    Rng rng_;

    std::string var_name() {
        static const char* names[] = {"a", "b", "c", "x", "y", "total", "i", "n"};
        return names[rng_.next_below(8)];
    }

    std::string str_content() {
        static const char* samples[] = {"", "ok", "a\nb", "q\"uote", "tab\there", "x\\y", "12"};
        return samples[rng_.next_below(7)];
    }

    Expr gen_expr(int depth) {
        int pick = static_cast<int>(rng_.next_below(depth <= 0 ? 5 : 10));
        switch (pick) {
            case 0: return Expr::make_int(static_cast<int64_t>(rng_.next_below(201)) - 100);
            case 1: return Expr::make_bool(rng_.next_below(2) == 0);
            case 2: return Expr::make_str(str_content());
            case 3: return Expr::make_null();
            case 4: return Expr::make_var(var_name());
            case 5: {
                Expr e;
                e.kind = ExprKind::ArrayLit;
                int n = static_cast<int>(rng_.next_below(4));
                for (int i = 0; i < n; ++i) e.children.push_back(gen_expr(depth - 1));
                return e;
            }
            case 6:
                return Expr::make_index(gen_expr(depth - 1), gen_expr(depth - 1));
            case 7: {
                std::vector<Expr> args;
                int n = static_cast<int>(rng_.next_below(3));
                for (int i = 0; i < n; ++i) args.push_back(gen_expr(depth - 1));
                return Expr::make_call("g" + std::to_string(rng_.next_below(3)), std::move(args));
            }
            case 8: {
                static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div,
                                            BinOp::Mod, BinOp::Eq,  BinOp::Ne,  BinOp::Lt,
                                            BinOp::Le,  BinOp::Gt,  BinOp::Ge,  BinOp::And,
                                            BinOp::Or};
                BinOp op = ops[rng_.next_below(13)];
                return Expr::make_binary(op, gen_expr(depth - 1), gen_expr(depth - 1));
            }
            default: {
                UnOp op = rng_.next_below(2) == 0 ? UnOp::Neg : UnOp::Not;
                Expr operand = gen_expr(depth - 1);
                if (op == UnOp::Neg && operand.kind == ExprKind::IntLit)
                    return operand;  // canonical form: fold, never Neg(IntLit)
                return Expr::make_unary(op, operand);
            }
        }
    }

    Stmt gen_stmt(int depth) {
        Stmt s;
        int pick = static_cast<int>(rng_.next_below(depth <= 0 ? 8 : 11));
        switch (pick) {
            case 0:
                s.kind = StmtKind::Let;
                s.name = var_name();
                s.exprs.push_back(gen_expr(2));
                return s;
            case 1:
                s.kind = StmtKind::Assign;
                s.name = var_name();
                s.exprs.push_back(gen_expr(2));
                return s;
            case 2:
                s.kind = StmtKind::IndexAssign;
                s.name = var_name();
                s.exprs.push_back(gen_expr(1));
                s.exprs.push_back(gen_expr(2));
                return s;
            case 3:
                s.kind = StmtKind::Return;
                if (rng_.next_below(4) != 0) s.exprs.push_back(gen_expr(2));
                return s;
            case 4:
                s.kind = StmtKind::ExprStmt;
                s.exprs.push_back(gen_expr(2));
                return s;
            case 5:
                s.kind = StmtKind::Assert;
                s.exprs.push_back(gen_expr(2));
                return s;
            case 6:
                s.kind = StmtKind::AssertEq;
                s.exprs.push_back(gen_expr(2));
                s.exprs.push_back(gen_expr(2));
                return s;
            case 7:
                s.kind = StmtKind::AssertSnapshot;
                s.exprs.push_back(gen_expr(2));
                s.snapshot = str_content();
                return s;
            case 8: {
                s.kind = StmtKind::If;
                s.exprs.push_back(gen_expr(2));
                int n = static_cast<int>(rng_.next_below(3));
                for (int i = 0; i < n; ++i) s.body.push_back(gen_stmt(depth - 1));
                if (rng_.next_below(2) == 0) {
                    int m = static_cast<int>(rng_.next_below(3));
                    for (int i = 0; i < m; ++i) s.else_body.push_back(gen_stmt(depth - 1));
                }
                return s;
            }
            case 9: {
                s.kind = StmtKind::While;
                s.exprs.push_back(gen_expr(2));
                int n = static_cast<int>(rng_.next_below(3));
                for (int i = 0; i < n; ++i) s.body.push_back(gen_stmt(depth - 1));
                return s;
            }
            default: {
                s.kind = StmtKind::ForRange;
                s.name = var_name();
                s.exprs.push_back(gen_expr(1));
                s.exprs.push_back(gen_expr(1));
                int n = static_cast<int>(rng_.next_below(3));
                for (int i = 0; i < n; ++i) s.body.push_back(gen_stmt(depth - 1));
                return s;
            }
        }
    }
};

}  // namespace testsupport
