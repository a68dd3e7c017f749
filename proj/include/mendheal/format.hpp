// format.hpp - canonical MendLang pretty-printer.
//
// Canonical form: 2-space indents, one statement per line, `} else {`
// cuddling, one blank line between functions, minimal parentheses
// (reinserted only where precedence demands), no spaces around `..`.
// parse(format(p)) is structurally equal to p for any parser-produced tree.
#pragma once

#include <string>

#include "mendheal/ast.hpp"

namespace mendheal {

inline std::string escape_string(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

namespace detail {

inline int expr_prec(const Expr& e) {
    if (e.kind == ExprKind::Binary) {
        switch (e.bin_op) {
            case BinOp::Or: return 1;
            case BinOp::And: return 2;
            case BinOp::Eq:
            case BinOp::Ne: return 3;
            case BinOp::Lt:
            case BinOp::Le:
            case BinOp::Gt:
            case BinOp::Ge: return 4;
            case BinOp::Add:
            case BinOp::Sub: return 5;
            case BinOp::Mul:
            case BinOp::Div:
            case BinOp::Mod: return 6;
        }
    }
    if (e.kind == ExprKind::Unary) return 7;
    // A negative literal prints with a leading '-', so it binds like a unary
    // expression (e.g. as an index base it needs parentheses).
    if (e.kind == ExprKind::IntLit && e.int_val < 0) return 7;
    return 8;
}

inline void format_expr_into(const Expr& e, std::string& out) {
    switch (e.kind) {
        case ExprKind::IntLit: out += std::to_string(e.int_val); return;
        case ExprKind::BoolLit: out += e.bool_val ? "true" : "false"; return;
        case ExprKind::StrLit: out += escape_string(e.str_val); return;
        case ExprKind::NullLit: out += "null"; return;
        case ExprKind::ArrayLit: {
            out += '[';
            for (size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += ", ";
                format_expr_into(e.children[i], out);
            }
            out += ']';
            return;
        }
        case ExprKind::Var: out += e.str_val; return;
        case ExprKind::Call: {
            out += e.str_val;
            out += '(';
            for (size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += ", ";
                format_expr_into(e.children[i], out);
            }
            out += ')';
            return;
        }
        case ExprKind::Index: {
            const Expr& base = e.children[0];
            // Index binds tightest; parenthesize any non-postfix base.
            bool parens = expr_prec(base) < 8;
            if (parens) out += '(';
            format_expr_into(base, out);
            if (parens) out += ')';
            out += '[';
            format_expr_into(e.children[1], out);
            out += ']';
            return;
        }
        case ExprKind::Unary: {
            const Expr& operand = e.children[0];
            if (e.un_op == UnOp::Neg && operand.kind == ExprKind::IntLit) {
                // Normalize: a negated literal prints as a negative literal
                // (the parser folds it back the same way).
                out += std::to_string(
                    static_cast<int64_t>(0 - static_cast<uint64_t>(operand.int_val)));
                return;
            }
            out += e.un_op == UnOp::Neg ? '-' : '!';
            bool parens = expr_prec(operand) < 7;
            if (parens) out += '(';
            format_expr_into(operand, out);
            if (parens) out += ')';
            return;
        }
        case ExprKind::Binary: {
            int prec = expr_prec(e);
            const Expr& lhs = e.children[0];
            const Expr& rhs = e.children[1];
            bool lp = expr_prec(lhs) < prec;
            bool rp = expr_prec(rhs) <= prec;  // left-associative
            if (lp) out += '(';
            format_expr_into(lhs, out);
            if (lp) out += ')';
            out += ' ';
            out += binop_text(e.bin_op);
            out += ' ';
            if (rp) out += '(';
            format_expr_into(rhs, out);
            if (rp) out += ')';
            return;
        }
    }
}

inline void format_stmt_into(const Stmt& s, int indent, std::string& out) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    auto expr_text = [](const Expr& e) {
        std::string t;
        format_expr_into(e, t);
        return t;
    };
    auto block = [&](const std::vector<Stmt>& stmts) {
        for (const auto& inner : stmts) format_stmt_into(inner, indent + 1, out);
    };
    switch (s.kind) {
        case StmtKind::Let:
            out += pad + "let " + s.name + " = " + expr_text(s.exprs[0]) + ";\n";
            return;
        case StmtKind::Assign:
            out += pad + s.name + " = " + expr_text(s.exprs[0]) + ";\n";
            return;
        case StmtKind::IndexAssign:
            out += pad + s.name + "[" + expr_text(s.exprs[0]) + "] = " + expr_text(s.exprs[1]) +
                   ";\n";
            return;
        case StmtKind::If:
            out += pad + "if " + expr_text(s.exprs[0]) + " {\n";
            block(s.body);
            if (!s.else_body.empty()) {
                out += pad + "} else {\n";
                block(s.else_body);
            }
            out += pad + "}\n";
            return;
        case StmtKind::While:
            out += pad + "while " + expr_text(s.exprs[0]) + " {\n";
            block(s.body);
            out += pad + "}\n";
            return;
        case StmtKind::ForRange:
            out += pad + "for " + s.name + " in " + expr_text(s.exprs[0]) + ".." +
                   expr_text(s.exprs[1]) + " {\n";
            block(s.body);
            out += pad + "}\n";
            return;
        case StmtKind::Return:
            out += pad + (s.exprs.empty() ? "return;\n" : "return " + expr_text(s.exprs[0]) + ";\n");
            return;
        case StmtKind::ExprStmt:
            out += pad + expr_text(s.exprs[0]) + ";\n";
            return;
        case StmtKind::Assert:
            out += pad + "assert " + expr_text(s.exprs[0]) + ";\n";
            return;
        case StmtKind::AssertEq:
            out += pad + "assert_eq(" + expr_text(s.exprs[0]) + ", " + expr_text(s.exprs[1]) +
                   ");\n";
            return;
        case StmtKind::AssertSnapshot:
            out += pad + "assert_snapshot(" + expr_text(s.exprs[0]) + ", " +
                   escape_string(s.snapshot) + ");\n";
            return;
    }
}

}  // namespace detail

inline std::string format_expr(const Expr& e) {
    std::string out;
    detail::format_expr_into(e, out);
    return out;
}

// One canonical statement rendering, trailing newline included.
inline std::string format_stmt(const Stmt& s, int indent = 0) {
    std::string out;
    detail::format_stmt_into(s, indent, out);
    return out;
}

inline std::string format(const Program& p) {
    std::string out;
    for (size_t i = 0; i < p.functions.size(); ++i) {
        if (i) out += '\n';
        const Function& f = p.functions[i];
        out += "fn " + f.name + "(";
        for (size_t j = 0; j < f.params.size(); ++j) {
            if (j) out += ", ";
            out += f.params[j];
        }
        out += ") {\n";
        for (const auto& s : f.body) detail::format_stmt_into(s, 1, out);
        out += "}\n";
    }
    return out;
}

}  // namespace mendheal
