// interp.hpp - deterministic tree-walking interpreter and test runner.
//
// Execution is a pure function of (program, entry, args, env): the jitter
// stream is seeded from env, steps are counted identically on every run, and
// logs/traces are structured records. Errors are represented as outcome
// codes, never host exceptions (except UnknownEntryError for a missing
// entry point, which is a caller bug rather than a program fault).
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mendheal/ast.hpp"
#include "mendheal/format.hpp"
#include "mendheal/util.hpp"

namespace mendheal {

enum class ErrorCode {
    None,
    NullDeref,
    IndexOob,
    DivZero,
    AssertFail,
    SnapshotMismatch,
    Type,
    Undefined,
    StepLimit,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::None: return "E_NONE";
        case ErrorCode::NullDeref: return "E_NULL_DEREF";
        case ErrorCode::IndexOob: return "E_INDEX_OOB";
        case ErrorCode::DivZero: return "E_DIV_ZERO";
        case ErrorCode::AssertFail: return "E_ASSERT_FAIL";
        case ErrorCode::SnapshotMismatch: return "E_SNAPSHOT_MISMATCH";
        case ErrorCode::Type: return "E_TYPE";
        case ErrorCode::Undefined: return "E_UNDEFINED";
        case ErrorCode::StepLimit: return "E_STEP_LIMIT";
    }
    return "E_NONE";
}

struct Value {
    enum class Kind { Int, Bool, Str, Null, Array };
    Kind kind = Kind::Null;
    int64_t i = 0;
    bool b = false;
    std::string s;
    std::vector<Value> arr;

    static Value make_int(int64_t v) {
        Value x;
        x.kind = Kind::Int;
        x.i = v;
        return x;
    }
    static Value make_bool(bool v) {
        Value x;
        x.kind = Kind::Bool;
        x.b = v;
        return x;
    }
    static Value make_str(std::string v) {
        Value x;
        x.kind = Kind::Str;
        x.s = std::move(v);
        return x;
    }
    static Value make_null() { return Value{}; }
    static Value make_array(std::vector<Value> elems) {
        Value x;
        x.kind = Kind::Array;
        x.arr = std::move(elems);
        return x;
    }

    bool is_null() const { return kind == Kind::Null; }

    const char* kind_name() const {
        switch (kind) {
            case Kind::Int: return "int";
            case Kind::Bool: return "bool";
            case Kind::Str: return "string";
            case Kind::Null: return "null";
            case Kind::Array: return "array";
        }
        return "?";
    }
};

inline bool value_equals(const Value& a, const Value& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Value::Kind::Int: return a.i == b.i;
        case Value::Kind::Bool: return a.b == b.b;
        case Value::Kind::Str: return a.s == b.s;
        case Value::Kind::Null: return true;
        case Value::Kind::Array: {
            if (a.arr.size() != b.arr.size()) return false;
            for (size_t i = 0; i < a.arr.size(); ++i)
                if (!value_equals(a.arr[i], b.arr[i])) return false;
            return true;
        }
    }
    return false;
}

namespace detail {
inline void render_literal(const Value& v, std::string& out);
}

// str() semantics: top-level strings render raw; array elements render as
// literals so `str([1, "a"])` is `[1, "a"]`.
inline std::string render_value(const Value& v) {
    switch (v.kind) {
        case Value::Kind::Int: return std::to_string(v.i);
        case Value::Kind::Bool: return v.b ? "true" : "false";
        case Value::Kind::Str: return v.s;
        case Value::Kind::Null: return "null";
        case Value::Kind::Array: {
            std::string out;
            detail::render_literal(v, out);
            return out;
        }
    }
    return "null";
}

namespace detail {
inline void render_literal(const Value& v, std::string& out) {
    switch (v.kind) {
        case Value::Kind::Int: out += std::to_string(v.i); return;
        case Value::Kind::Bool: out += v.b ? "true" : "false"; return;
        case Value::Kind::Str: out += escape_string(v.s); return;
        case Value::Kind::Null: out += "null"; return;
        case Value::Kind::Array: {
            out += '[';
            for (size_t i = 0; i < v.arr.size(); ++i) {
                if (i) out += ", ";
                render_literal(v.arr[i], out);
            }
            out += ']';
            return;
        }
    }
}
}  // namespace detail

struct LogRecord {
    enum class Level { Info, Error };
    Level level = Level::Info;
    ErrorCode code = ErrorCode::None;
    std::string function;
    NodePath stmt_path;
    std::string message;
};

struct Frame {
    std::string function;
    NodePath stmt_path;
};

struct RuntimeEnv {
    uint64_t step_limit = 1000000;
    uint64_t jitter_seed = 0;
    std::map<std::string, Value> config;
};

struct ExecutionOutcome {
    bool ok = true;
    Value ret;
    ErrorCode code = ErrorCode::None;
    std::string error_message;
    std::vector<Frame> trace;  // innermost frame first
    std::vector<LogRecord> logs;
    uint64_t step_count = 0;
};

class UnknownEntryError : public std::runtime_error {
public:
    explicit UnknownEntryError(const std::string& m) : std::runtime_error(m) {}
};

namespace detail {

struct Raise {
    ErrorCode code;
    std::string message;
};

class Interp {
public:
    Interp(const Program& prog, const RuntimeEnv& env)
        : prog_(prog), env_(env), jitter_(env.jitter_seed) {}

    ExecutionOutcome run(const std::string& entry, const std::vector<Value>& args) {
        const Function* fn = prog_.find(entry);
        if (!fn) throw UnknownEntryError("unknown entry point '" + entry + "'");
        if (fn->params.size() != args.size())
            throw UnknownEntryError("entry '" + entry + "' expects " +
                                    std::to_string(fn->params.size()) + " argument(s), got " +
                                    std::to_string(args.size()));
        ExecutionOutcome out;
        try {
            out.ret = call_function(*fn, prog_.find_index(entry), args);
            out.ok = true;
        } catch (const Raise& r) {
            out.ok = false;
            out.code = r.code;
            out.error_message = r.message;
            for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
                out.trace.push_back({it->fn_name, it->cur_stmt});
            if (!out.trace.empty()) {
                logs_.push_back({LogRecord::Level::Error, r.code, out.trace[0].function,
                                 out.trace[0].stmt_path, r.message});
            } else {
                logs_.push_back({LogRecord::Level::Error, r.code, entry, {}, r.message});
            }
        }
        out.logs = std::move(logs_);
        out.step_count = steps_;
        return out;
    }

private:
    // Deep recursion in interpreted code would exhaust the host stack long
    // before the step limit; cap call depth and surface it as the same
    // resource-limit error code.
    static constexpr size_t kMaxCallDepth = 200;

    struct ActiveFrame {
        std::string fn_name;
        int fn_index = 0;
        NodePath cur_stmt;
        std::map<std::string, Value> locals;
    };

    const Program& prog_;
    const RuntimeEnv& env_;
    Rng jitter_;
    uint64_t steps_ = 0;
    std::vector<LogRecord> logs_;
    std::vector<ActiveFrame> stack_;
    Value ret_val_;

    [[noreturn]] void raise(ErrorCode c, std::string msg) { throw Raise{c, std::move(msg)}; }

    void charge() {
        if (steps_ >= env_.step_limit) raise(ErrorCode::StepLimit, "step limit reached");
        ++steps_;
    }

    ActiveFrame& frame() { return stack_.back(); }

    Value call_function(const Function& fn, int fn_index, const std::vector<Value>& args) {
        if (stack_.size() >= kMaxCallDepth) raise(ErrorCode::StepLimit, "call depth limit reached");
        ActiveFrame f;
        f.fn_name = fn.name;
        f.fn_index = fn_index;
        f.cur_stmt = {fn_index};
        for (size_t i = 0; i < fn.params.size(); ++i) f.locals[fn.params[i]] = args[i];
        stack_.push_back(std::move(f));
        ret_val_ = Value::make_null();
        bool returned = exec_block(fn.body, {fn_index}, 0);
        (void)returned;
        Value result = ret_val_;
        stack_.pop_back();
        return result;
    }

    // Executes statements of a block; returns true if a `return` fired.
    bool exec_block(const std::vector<Stmt>& block, const NodePath& base, size_t offset) {
        for (size_t i = 0; i < block.size(); ++i) {
            NodePath path = base;
            path.push_back(static_cast<int>(offset + i));
            if (exec_stmt(block[i], path)) return true;
        }
        return false;
    }

    bool exec_stmt(const Stmt& s, const NodePath& path) {
        frame().cur_stmt = path;
        charge();
        switch (s.kind) {
            case StmtKind::Let: {
                Value v = eval(s.exprs[0]);
                frame().locals[s.name] = std::move(v);
                return false;
            }
            case StmtKind::Assign: {
                Value v = eval(s.exprs[0]);
                auto it = frame().locals.find(s.name);
                if (it == frame().locals.end())
                    raise(ErrorCode::Undefined, "undefined variable '" + s.name + "'");
                it->second = std::move(v);
                return false;
            }
            case StmtKind::IndexAssign: {
                Value idx = eval(s.exprs[0]);
                Value v = eval(s.exprs[1]);
                auto it = frame().locals.find(s.name);
                if (it == frame().locals.end())
                    raise(ErrorCode::Undefined, "undefined variable '" + s.name + "'");
                Value& target = it->second;
                if (target.is_null()) raise(ErrorCode::NullDeref, "index assignment on null");
                if (target.kind != Value::Kind::Array)
                    raise(ErrorCode::Type,
                          std::string("cannot index ") + target.kind_name());
                int64_t i = require_int_index(idx);
                if (i < 0 || static_cast<size_t>(i) >= target.arr.size())
                    raise(ErrorCode::IndexOob,
                          "index " + std::to_string(i) + " out of bounds for length " +
                              std::to_string(target.arr.size()));
                target.arr[static_cast<size_t>(i)] = std::move(v);
                return false;
            }
            case StmtKind::If: {
                bool c = require_bool(eval(s.exprs[0]), "if condition");
                // Restore the frame's current statement after nested bodies run.
                bool ret =
                    c ? exec_block(s.body, path, s.exprs.size())
                      : exec_block(s.else_body, path, s.exprs.size() + s.body.size());
                if (!ret) frame().cur_stmt = path;
                return ret;
            }
            case StmtKind::While: {
                for (;;) {
                    frame().cur_stmt = path;
                    bool c = require_bool(eval(s.exprs[0]), "while condition");
                    if (!c) break;
                    if (exec_block(s.body, path, s.exprs.size())) return true;
                }
                frame().cur_stmt = path;
                return false;
            }
            case StmtKind::ForRange: {
                int64_t from = require_int(eval(s.exprs[0]), "range start");
                int64_t to = require_int(eval(s.exprs[1]), "range end");
                for (int64_t i = from; i < to; ++i) {
                    frame().cur_stmt = path;
                    charge();  // per-iteration charge so empty bodies still account
                    frame().locals[s.name] = Value::make_int(i);
                    if (exec_block(s.body, path, s.exprs.size())) return true;
                }
                frame().cur_stmt = path;
                return false;
            }
            case StmtKind::Return: {
                ret_val_ = s.exprs.empty() ? Value::make_null() : eval(s.exprs[0]);
                return true;
            }
            case StmtKind::ExprStmt: {
                eval(s.exprs[0]);
                return false;
            }
            case StmtKind::Assert: {
                Value v = eval(s.exprs[0]);
                if (v.is_null()) raise(ErrorCode::NullDeref, "assert on null");
                if (v.kind != Value::Kind::Bool)
                    raise(ErrorCode::Type,
                          std::string("assert expects bool, got ") + v.kind_name());
                if (!v.b) raise(ErrorCode::AssertFail, "assertion failed");
                return false;
            }
            case StmtKind::AssertEq: {
                Value a = eval(s.exprs[0]);
                Value b = eval(s.exprs[1]);
                if (!value_equals(a, b))
                    raise(ErrorCode::AssertFail, "assert_eq failed: " + render_value(a) +
                                                     " != " + render_value(b));
                return false;
            }
            case StmtKind::AssertSnapshot: {
                Value v = eval(s.exprs[0]);
                if (v.is_null()) raise(ErrorCode::NullDeref, "snapshot of null");
                if (v.kind != Value::Kind::Str)
                    raise(ErrorCode::Type,
                          std::string("assert_snapshot expects string, got ") + v.kind_name());
                if (v.s != s.snapshot)
                    raise(ErrorCode::SnapshotMismatch, "snapshot mismatch: actual \"" + v.s +
                                                           "\" expected \"" + s.snapshot + "\"");
                return false;
            }
        }
        return false;
    }

    int64_t require_int(const Value& v, const char* what) {
        if (v.is_null()) raise(ErrorCode::NullDeref, std::string(what) + " is null");
        if (v.kind != Value::Kind::Int)
            raise(ErrorCode::Type, std::string(what) + " must be int, got " + v.kind_name());
        return v.i;
    }
    int64_t require_int_index(const Value& v) { return require_int(v, "index"); }
    bool require_bool(const Value& v, const char* what) {
        if (v.is_null()) raise(ErrorCode::NullDeref, std::string(what) + " is null");
        if (v.kind != Value::Kind::Bool)
            raise(ErrorCode::Type, std::string(what) + " must be bool, got " + v.kind_name());
        return v.b;
    }

    static int64_t wrap_add(int64_t a, int64_t b) {
        return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
    }
    static int64_t wrap_sub(int64_t a, int64_t b) {
        return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
    }
    static int64_t wrap_mul(int64_t a, int64_t b) {
        return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
    }

    Value eval(const Expr& e) {
        charge();
        switch (e.kind) {
            case ExprKind::IntLit: return Value::make_int(e.int_val);
            case ExprKind::BoolLit: return Value::make_bool(e.bool_val);
            case ExprKind::StrLit: return Value::make_str(e.str_val);
            case ExprKind::NullLit: return Value::make_null();
            case ExprKind::ArrayLit: {
                std::vector<Value> elems;
                elems.reserve(e.children.size());
                for (const auto& c : e.children) elems.push_back(eval(c));
                return Value::make_array(std::move(elems));
            }
            case ExprKind::Var: {
                auto it = frame().locals.find(e.str_val);
                if (it == frame().locals.end())
                    raise(ErrorCode::Undefined, "undefined variable '" + e.str_val + "'");
                return it->second;
            }
            case ExprKind::Index: {
                Value base = eval(e.children[0]);
                Value idx = eval(e.children[1]);
                if (base.is_null()) raise(ErrorCode::NullDeref, "index on null");
                if (base.kind != Value::Kind::Array)
                    raise(ErrorCode::Type, std::string("cannot index ") + base.kind_name());
                int64_t i = require_int_index(idx);
                if (i < 0 || static_cast<size_t>(i) >= base.arr.size())
                    raise(ErrorCode::IndexOob,
                          "index " + std::to_string(i) + " out of bounds for length " +
                              std::to_string(base.arr.size()));
                return base.arr[static_cast<size_t>(i)];
            }
            case ExprKind::Call: return eval_call(e);
            case ExprKind::Unary: {
                Value v = eval(e.children[0]);
                if (e.un_op == UnOp::Neg) {
                    if (v.is_null()) raise(ErrorCode::NullDeref, "negation of null");
                    if (v.kind != Value::Kind::Int)
                        raise(ErrorCode::Type,
                              std::string("cannot negate ") + v.kind_name());
                    return Value::make_int(wrap_sub(0, v.i));
                }
                if (v.is_null()) raise(ErrorCode::NullDeref, "logical not of null");
                if (v.kind != Value::Kind::Bool)
                    raise(ErrorCode::Type, std::string("cannot apply '!' to ") + v.kind_name());
                return Value::make_bool(!v.b);
            }
            case ExprKind::Binary: return eval_binary(e);
        }
        return Value::make_null();
    }

    Value eval_binary(const Expr& e) {
        BinOp op = e.bin_op;
        if (op == BinOp::And || op == BinOp::Or) {
            bool lhs = require_bool(eval(e.children[0]), "logical operand");
            if (op == BinOp::And && !lhs) return Value::make_bool(false);
            if (op == BinOp::Or && lhs) return Value::make_bool(true);
            return Value::make_bool(require_bool(eval(e.children[1]), "logical operand"));
        }
        Value a = eval(e.children[0]);
        Value b = eval(e.children[1]);
        if (op == BinOp::Eq) return Value::make_bool(value_equals(a, b));
        if (op == BinOp::Ne) return Value::make_bool(!value_equals(a, b));
        // Remaining operators need typed operands; null surfaces as a
        // dereference so missing-null-check bugs produce E_NULL_DEREF.
        if (a.is_null() || b.is_null())
            raise(ErrorCode::NullDeref,
                  std::string("operator '") + binop_text(op) + "' on null");
        if (op == BinOp::Add && a.kind == Value::Kind::Str && b.kind == Value::Kind::Str)
            return Value::make_str(a.s + b.s);
        if (is_comparison(op) && a.kind == Value::Kind::Str && b.kind == Value::Kind::Str) {
            int c = a.s.compare(b.s);
            switch (op) {
                case BinOp::Lt: return Value::make_bool(c < 0);
                case BinOp::Le: return Value::make_bool(c <= 0);
                case BinOp::Gt: return Value::make_bool(c > 0);
                case BinOp::Ge: return Value::make_bool(c >= 0);
                default: break;
            }
        }
        if (a.kind != Value::Kind::Int || b.kind != Value::Kind::Int)
            raise(ErrorCode::Type, std::string("operator '") + binop_text(op) +
                                       "' not supported for " + a.kind_name() + " and " +
                                       b.kind_name());
        switch (op) {
            case BinOp::Add: return Value::make_int(wrap_add(a.i, b.i));
            case BinOp::Sub: return Value::make_int(wrap_sub(a.i, b.i));
            case BinOp::Mul: return Value::make_int(wrap_mul(a.i, b.i));
            case BinOp::Div:
                if (b.i == 0) raise(ErrorCode::DivZero, "division by zero");
                if (a.i == INT64_MIN && b.i == -1) return Value::make_int(INT64_MIN);  // wrap
                return Value::make_int(a.i / b.i);
            case BinOp::Mod:
                if (b.i == 0) raise(ErrorCode::DivZero, "modulo by zero");
                if (a.i == INT64_MIN && b.i == -1) return Value::make_int(0);
                return Value::make_int(a.i % b.i);
            case BinOp::Lt: return Value::make_bool(a.i < b.i);
            case BinOp::Le: return Value::make_bool(a.i <= b.i);
            case BinOp::Gt: return Value::make_bool(a.i > b.i);
            case BinOp::Ge: return Value::make_bool(a.i >= b.i);
            default: break;
        }
        raise(ErrorCode::Type, "unsupported operator");
    }

    Value eval_call(const Expr& e) {
        const std::string& name = e.str_val;
        int idx = prog_.find_index(name);
        if (idx >= 0) {
            const Function& fn = prog_.functions[static_cast<size_t>(idx)];
            if (fn.params.size() != e.children.size())
                raise(ErrorCode::Type, "function '" + name + "' expects " +
                                           std::to_string(fn.params.size()) +
                                           " argument(s), got " +
                                           std::to_string(e.children.size()));
            std::vector<Value> args;
            args.reserve(e.children.size());
            for (const auto& c : e.children) args.push_back(eval(c));
            return call_function(fn, idx, args);
        }
        auto need_arity = [&](size_t n) {
            if (e.children.size() != n)
                raise(ErrorCode::Type, "builtin '" + name + "' expects " + std::to_string(n) +
                                           " argument(s), got " +
                                           std::to_string(e.children.size()));
        };
        if (name == "len") {
            need_arity(1);
            Value v = eval(e.children[0]);
            if (v.is_null()) raise(ErrorCode::NullDeref, "len of null");
            if (v.kind == Value::Kind::Array)
                return Value::make_int(static_cast<int64_t>(v.arr.size()));
            if (v.kind == Value::Kind::Str)
                return Value::make_int(static_cast<int64_t>(v.s.size()));
            raise(ErrorCode::Type, std::string("len of ") + v.kind_name());
        }
        if (name == "str") {
            need_arity(1);
            return Value::make_str(render_value(eval(e.children[0])));
        }
        if (name == "print") {
            need_arity(1);
            Value v = eval(e.children[0]);
            logs_.push_back({LogRecord::Level::Info, ErrorCode::None, frame().fn_name,
                             frame().cur_stmt, render_value(v)});
            return Value::make_null();
        }
        if (name == "jitter") {
            need_arity(0);
            return Value::make_int(static_cast<int64_t>(jitter_.next_u64() % 1000000ULL));
        }
        if (name == "config") {
            need_arity(1);
            Value k = eval(e.children[0]);
            if (k.kind != Value::Kind::Str)
                raise(ErrorCode::Type, std::string("config key must be string, got ") +
                                           k.kind_name());
            auto it = env_.config.find(k.s);
            if (it == env_.config.end())
                raise(ErrorCode::Undefined, "config key '" + k.s + "' undefined");
            return it->second;
        }
        raise(ErrorCode::Undefined, "undefined function '" + name + "'");
    }
};

}  // namespace detail

inline ExecutionOutcome execute(const Program& program, const std::string& entry,
                                const std::vector<Value>& args, const RuntimeEnv& env) {
    detail::Interp in(program, env);
    return in.run(entry, args);
}

// Message prefix contract used by diagnosis to recognize config-rooted
// E_UNDEFINED failures.
inline bool is_config_undefined(const ExecutionOutcome& out) {
    return !out.ok && out.code == ErrorCode::Undefined &&
           starts_with(out.error_message, "config key ");
}

enum class TestStatus { Pass, Fail, Error };

inline const char* test_status_name(TestStatus s) {
    switch (s) {
        case TestStatus::Pass: return "pass";
        case TestStatus::Fail: return "fail";
        case TestStatus::Error: return "error";
    }
    return "?";
}

struct TestResult {
    std::string test_name;
    TestStatus status = TestStatus::Pass;
    ExecutionOutcome outcome;
};

struct TestReport {
    std::vector<TestResult> results;

    bool all_pass() const {
        for (const auto& r : results)
            if (r.status != TestStatus::Pass) return false;
        return true;
    }
    const TestResult* find(const std::string& name) const {
        for (const auto& r : results)
            if (r.test_name == name) return &r;
        return nullptr;
    }
};

// Runs every `test_` function in declaration order, fresh interpreter state
// (including the jitter stream) per test.
inline TestReport run_tests(const Program& program, const RuntimeEnv& env) {
    TestReport report;
    for (const auto& fn : program.functions) {
        if (!is_test_function(fn)) continue;
        TestResult r;
        r.test_name = fn.name;
        r.outcome = execute(program, fn.name, {}, env);
        if (r.outcome.ok)
            r.status = TestStatus::Pass;
        else
            r.status = r.outcome.code == ErrorCode::AssertFail ? TestStatus::Fail
                                                               : TestStatus::Error;
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace mendheal
