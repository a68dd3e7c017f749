// ast.hpp - MendLang syntax tree, node addressing (NodePath), structural equality.
//
// Node addressing scheme: a NodePath is a list of child indices from the
// program root. Children are ordered uniformly:
//   Program  -> functions
//   Function -> body statements
//   Stmt     -> expressions in syntactic order, then then-body statements,
//               then else-body statements
//   Expr     -> subexpressions in syntactic order
// Path lexicographic order therefore tracks source order.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mendheal/util.hpp"

namespace mendheal {

using NodePath = std::vector<int>;

struct Span {
    int line = 0;
    int col = 0;
};

enum class BinOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnOp { Neg, Not };

inline const char* binop_text(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Mod: return "%";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

inline bool is_comparison(BinOp op) {
    switch (op) {
        case BinOp::Eq:
        case BinOp::Ne:
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge: return true;
        default: return false;
    }
}

inline bool is_arithmetic(BinOp op) {
    switch (op) {
        case BinOp::Add:
        case BinOp::Sub:
        case BinOp::Mul:
        case BinOp::Div:
        case BinOp::Mod: return true;
        default: return false;
    }
}

enum class ExprKind {
    IntLit,
    BoolLit,
    StrLit,
    NullLit,
    ArrayLit,
    Var,
    Index,   // children: [base, index]
    Call,    // name + children: args
    Binary,  // children: [lhs, rhs]
    Unary,   // children: [operand]
};

struct Expr {
    ExprKind kind = ExprKind::NullLit;
    int64_t int_val = 0;
    bool bool_val = false;
    std::string str_val;  // StrLit text, or Var/Call name
    BinOp bin_op = BinOp::Add;
    UnOp un_op = UnOp::Neg;
    std::vector<Expr> children;
    Span span;

    static Expr make_int(int64_t v) {
        Expr e;
        e.kind = ExprKind::IntLit;
        e.int_val = v;
        return e;
    }
    static Expr make_bool(bool v) {
        Expr e;
        e.kind = ExprKind::BoolLit;
        e.bool_val = v;
        return e;
    }
    static Expr make_str(std::string v) {
        Expr e;
        e.kind = ExprKind::StrLit;
        e.str_val = std::move(v);
        return e;
    }
    static Expr make_null() {
        Expr e;
        e.kind = ExprKind::NullLit;
        return e;
    }
    static Expr make_var(std::string name) {
        Expr e;
        e.kind = ExprKind::Var;
        e.str_val = std::move(name);
        return e;
    }
    static Expr make_call(std::string name, std::vector<Expr> args) {
        Expr e;
        e.kind = ExprKind::Call;
        e.str_val = std::move(name);
        e.children = std::move(args);
        return e;
    }
    static Expr make_binary(BinOp op, Expr lhs, Expr rhs) {
        Expr e;
        e.kind = ExprKind::Binary;
        e.bin_op = op;
        e.children.push_back(std::move(lhs));
        e.children.push_back(std::move(rhs));
        return e;
    }
    static Expr make_unary(UnOp op, Expr operand) {
        Expr e;
        e.kind = ExprKind::Unary;
        e.un_op = op;
        e.children.push_back(std::move(operand));
        return e;
    }
    static Expr make_index(Expr base, Expr idx) {
        Expr e;
        e.kind = ExprKind::Index;
        e.children.push_back(std::move(base));
        e.children.push_back(std::move(idx));
        return e;
    }
};

enum class StmtKind {
    Let,             // name, exprs[0]=value
    Assign,          // name, exprs[0]=value
    IndexAssign,     // name, exprs[0]=index, exprs[1]=value
    If,              // exprs[0]=cond, body, else_body
    While,           // exprs[0]=cond, body
    ForRange,        // name, exprs[0]=start, exprs[1]=end, body
    Return,          // exprs empty or [value]
    ExprStmt,        // exprs[0]
    Assert,          // exprs[0]
    AssertEq,        // exprs[0], exprs[1]
    AssertSnapshot,  // exprs[0], snapshot literal
};

struct Stmt {
    StmtKind kind = StmtKind::ExprStmt;
    std::string name;      // Let/Assign/IndexAssign target; ForRange loop var
    std::vector<Expr> exprs;
    std::string snapshot;  // AssertSnapshot expected literal
    std::vector<Stmt> body;
    std::vector<Stmt> else_body;
    Span span;
};

struct Function {
    std::string name;
    std::vector<std::string> params;
    std::vector<Stmt> body;
    Span span;
};

struct Program {
    std::vector<Function> functions;

    const Function* find(const std::string& name) const {
        for (const auto& f : functions)
            if (f.name == name) return &f;
        return nullptr;
    }
    int find_index(const std::string& name) const {
        for (size_t i = 0; i < functions.size(); ++i)
            if (functions[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

inline bool is_test_function(const Function& f) {
    return starts_with(f.name, "test_") && f.params.empty();
}

inline bool is_assert_stmt(const Stmt& s) {
    return s.kind == StmtKind::Assert || s.kind == StmtKind::AssertEq ||
           s.kind == StmtKind::AssertSnapshot;
}

// --- structural equality (spans ignored) -----------------------------------

inline bool equals(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprKind::IntLit:
            if (a.int_val != b.int_val) return false;
            break;
        case ExprKind::BoolLit:
            if (a.bool_val != b.bool_val) return false;
            break;
        case ExprKind::StrLit:
        case ExprKind::Var:
            if (a.str_val != b.str_val) return false;
            break;
        case ExprKind::Call:
            if (a.str_val != b.str_val) return false;
            break;
        case ExprKind::Binary:
            if (a.bin_op != b.bin_op) return false;
            break;
        case ExprKind::Unary:
            if (a.un_op != b.un_op) return false;
            break;
        default: break;
    }
    if (a.children.size() != b.children.size()) return false;
    for (size_t i = 0; i < a.children.size(); ++i)
        if (!equals(a.children[i], b.children[i])) return false;
    return true;
}

inline bool equals(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind || a.name != b.name || a.snapshot != b.snapshot) return false;
    if (a.exprs.size() != b.exprs.size() || a.body.size() != b.body.size() ||
        a.else_body.size() != b.else_body.size())
        return false;
    for (size_t i = 0; i < a.exprs.size(); ++i)
        if (!equals(a.exprs[i], b.exprs[i])) return false;
    for (size_t i = 0; i < a.body.size(); ++i)
        if (!equals(a.body[i], b.body[i])) return false;
    for (size_t i = 0; i < a.else_body.size(); ++i)
        if (!equals(a.else_body[i], b.else_body[i])) return false;
    return true;
}

inline bool equals(const Function& a, const Function& b) {
    if (a.name != b.name || a.params != b.params || a.body.size() != b.body.size()) return false;
    for (size_t i = 0; i < a.body.size(); ++i)
        if (!equals(a.body[i], b.body[i])) return false;
    return true;
}

inline bool equals(const Program& a, const Program& b) {
    if (a.functions.size() != b.functions.size()) return false;
    for (size_t i = 0; i < a.functions.size(); ++i)
        if (!equals(a.functions[i], b.functions[i])) return false;
    return true;
}

// --- node resolution --------------------------------------------------------

struct NodeRef {
    enum class Kind { Func, Stm, Exp } kind = Kind::Func;
    Function* fn = nullptr;
    Stmt* st = nullptr;
    Expr* ex = nullptr;

    bool is_stmt() const { return kind == Kind::Stm; }
    bool is_expr() const { return kind == Kind::Exp; }
};

inline int child_count(const NodeRef& n) {
    switch (n.kind) {
        case NodeRef::Kind::Func: return static_cast<int>(n.fn->body.size());
        case NodeRef::Kind::Stm:
            return static_cast<int>(n.st->exprs.size() + n.st->body.size() +
                                    n.st->else_body.size());
        case NodeRef::Kind::Exp: return static_cast<int>(n.ex->children.size());
    }
    return 0;
}

inline std::optional<NodeRef> child_of(const NodeRef& n, int i) {
    if (i < 0 || i >= child_count(n)) return std::nullopt;
    NodeRef c;
    switch (n.kind) {
        case NodeRef::Kind::Func:
            c.kind = NodeRef::Kind::Stm;
            c.st = &n.fn->body[static_cast<size_t>(i)];
            return c;
        case NodeRef::Kind::Stm: {
            size_t ne = n.st->exprs.size(), nb = n.st->body.size();
            size_t u = static_cast<size_t>(i);
            if (u < ne) {
                c.kind = NodeRef::Kind::Exp;
                c.ex = &n.st->exprs[u];
            } else if (u < ne + nb) {
                c.kind = NodeRef::Kind::Stm;
                c.st = &n.st->body[u - ne];
            } else {
                c.kind = NodeRef::Kind::Stm;
                c.st = &n.st->else_body[u - ne - nb];
            }
            return c;
        }
        case NodeRef::Kind::Exp:
            c.kind = NodeRef::Kind::Exp;
            c.ex = &n.ex->children[static_cast<size_t>(i)];
            return c;
    }
    return std::nullopt;
}

inline std::optional<NodeRef> resolve(Program& p, const NodePath& path) {
    if (path.empty()) return std::nullopt;
    if (path[0] < 0 || static_cast<size_t>(path[0]) >= p.functions.size()) return std::nullopt;
    NodeRef cur;
    cur.kind = NodeRef::Kind::Func;
    cur.fn = &p.functions[static_cast<size_t>(path[0])];
    for (size_t i = 1; i < path.size(); ++i) {
        auto next = child_of(cur, path[i]);
        if (!next) return std::nullopt;
        cur = *next;
    }
    return cur;
}

// Read-only resolution; the returned pointers must not be written through.
inline std::optional<NodeRef> resolve_const(const Program& p, const NodePath& path) {
    return resolve(const_cast<Program&>(p), path);
}

// --- path helpers ------------------------------------------------------------

inline std::string path_dotted(const NodePath& p) {
    std::string s;
    for (size_t i = 0; i < p.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(p[i]);
    }
    return s;
}

inline std::optional<NodePath> path_from_dotted(const std::string& s) {
    NodePath p;
    size_t start = 0;
    if (s.empty()) return std::nullopt;
    while (start <= s.size()) {
        size_t dot = s.find('.', start);
        std::string part = s.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) return std::nullopt;
        for (char c : part)
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        p.push_back(std::stoi(part));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return p;
}

// True if `outer` is `inner` or an ancestor of it.
inline bool path_contains(const NodePath& outer, const NodePath& inner) {
    if (outer.size() > inner.size()) return false;
    for (size_t i = 0; i < outer.size(); ++i)
        if (outer[i] != inner[i]) return false;
    return true;
}

// Pre-order walk over every statement (including nested bodies) of a program.
inline void for_each_stmt(const Program& p,
                          const std::function<void(const NodePath&, const Stmt&)>& fn) {
    std::function<void(const std::vector<Stmt>&, NodePath, size_t)> walk_block =
        [&](const std::vector<Stmt>& block, NodePath base, size_t offset) {
            for (size_t i = 0; i < block.size(); ++i) {
                NodePath path = base;
                path.push_back(static_cast<int>(offset + i));
                fn(path, block[i]);
                const Stmt& s = block[i];
                walk_block(s.body, path, s.exprs.size());
                walk_block(s.else_body, path, s.exprs.size() + s.body.size());
            }
        };
    for (size_t fi = 0; fi < p.functions.size(); ++fi)
        walk_block(p.functions[fi].body, {static_cast<int>(fi)}, 0);
}

// Pre-order walk over every expression node within one statement; paths are
// rooted at the statement's own path.
inline void for_each_expr_in_stmt(
    const NodePath& stmt_path, const Stmt& s,
    const std::function<void(const NodePath&, const Expr&)>& fn) {
    std::function<void(const Expr&, NodePath)> walk = [&](const Expr& e, NodePath path) {
        fn(path, e);
        for (size_t i = 0; i < e.children.size(); ++i) {
            NodePath cp = path;
            cp.push_back(static_cast<int>(i));
            walk(e.children[i], cp);
        }
    };
    for (size_t i = 0; i < s.exprs.size(); ++i) {
        NodePath p = stmt_path;
        p.push_back(static_cast<int>(i));
        walk(s.exprs[i], p);
    }
}

// Nearest enclosing statement path of `path` (identity if `path` already
// names a statement). Returns nullopt for function/program paths.
inline std::optional<NodePath> enclosing_stmt_path(const Program& p, const NodePath& path) {
    NodePath cur = path;
    while (cur.size() > 1) {
        auto n = resolve_const(p, cur);
        if (n && n->is_stmt()) return cur;
        cur.pop_back();
    }
    return std::nullopt;
}

inline bool expr_contains_call(const Expr& e, const std::string& callee) {
    if (e.kind == ExprKind::Call && e.str_val == callee) return true;
    for (const auto& c : e.children)
        if (expr_contains_call(c, callee)) return true;
    return false;
}

inline bool stmt_contains_call(const Stmt& s, const std::string& callee) {
    for (const auto& e : s.exprs)
        if (expr_contains_call(e, callee)) return true;
    return false;
}

}  // namespace mendheal
