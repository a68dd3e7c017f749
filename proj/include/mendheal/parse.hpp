// parse.hpp - MendLang lexer and recursive-descent parser.
//
// Grammar:
//   Program := Function* ; Function := "fn" Ident "(" (Ident ("," Ident)*)? ")" Block
//   Block := "{" Stmt* "}"
//   Stmt := "let" Ident "=" Expr ";" | Ident "=" Expr ";" | Ident "[" Expr "]" "=" Expr ";"
//         | "if" Expr Block ("else" Block)? | "while" Expr Block
//         | "for" Ident "in" Expr ".." Expr Block | "return" Expr? ";" | Expr ";"
//         | "assert" Expr ";" | "assert_eq" "(" Expr "," Expr ")" ";"
//         | "assert_snapshot" "(" Expr "," StringLit ")" ";"
//   Expr := IntLit | "true" | "false" | StringLit | "null" | "[" (Expr ("," Expr)*)? "]"
//         | Ident | Expr "[" Expr "]" | Ident "(" (Expr ("," Expr)*)? ")"
//         | Expr BinOp Expr | "-" Expr | "!" Expr | "(" Expr ")"
//   BinOp := + - * / % == != < <= > >= && ||
// `for i in a..b` is half-open. Unary minus on an integer literal folds into
// a negative literal so canonical round-trips are exact.
#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include "mendheal/ast.hpp"

namespace mendheal {

struct ParseError {
    enum class Kind { Syntax, DuplicateFunction };
    Kind kind = Kind::Syntax;
    int line = 0;
    int col = 0;
    std::string message;
};

class ParseException : public std::exception {
public:
    explicit ParseException(ParseError e) : err_(std::move(e)) {
        what_ = "parse error at " + std::to_string(err_.line) + ":" + std::to_string(err_.col) +
                ": " + err_.message;
    }
    const ParseError& error() const { return err_; }
    const char* what() const noexcept override { return what_.c_str(); }

private:
    ParseError err_;
    std::string what_;
};

namespace detail {

enum class Tok {
    Ident,
    Int,
    Str,
    KwFn,
    KwLet,
    KwIf,
    KwElse,
    KwWhile,
    KwFor,
    KwIn,
    KwReturn,
    KwAssert,
    KwAssertEq,
    KwAssertSnapshot,
    KwTrue,
    KwFalse,
    KwNull,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    DotDot,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
};

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    uint64_t int_val = 0;
    int line = 1;
    int col = 1;
};

inline std::string tok_name(Tok k) {
    switch (k) {
        case Tok::Ident: return "identifier";
        case Tok::Int: return "integer literal";
        case Tok::Str: return "string literal";
        case Tok::KwFn: return "'fn'";
        case Tok::KwLet: return "'let'";
        case Tok::KwIf: return "'if'";
        case Tok::KwElse: return "'else'";
        case Tok::KwWhile: return "'while'";
        case Tok::KwFor: return "'for'";
        case Tok::KwIn: return "'in'";
        case Tok::KwReturn: return "'return'";
        case Tok::KwAssert: return "'assert'";
        case Tok::KwAssertEq: return "'assert_eq'";
        case Tok::KwAssertSnapshot: return "'assert_snapshot'";
        case Tok::KwTrue: return "'true'";
        case Tok::KwFalse: return "'false'";
        case Tok::KwNull: return "'null'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Comma: return "','";
        case Tok::Semi: return "';'";
        case Tok::Assign: return "'='";
        case Tok::DotDot: return "'..'";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::Slash: return "'/'";
        case Tok::Percent: return "'%'";
        case Tok::EqEq: return "'=='";
        case Tok::NotEq: return "'!='";
        case Tok::Lt: return "'<'";
        case Tok::Le: return "'<='";
        case Tok::Gt: return "'>'";
        case Tok::Ge: return "'>='";
        case Tok::AndAnd: return "'&&'";
        case Tok::OrOr: return "'||'";
        case Tok::Bang: return "'!'";
        case Tok::Eof: return "end of input";
    }
    return "?";
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> lex() {
        std::vector<Token> out;
        for (;;) {
            skip_ws();
            Token t = next();
            bool eof = t.kind == Tok::Eof;
            out.push_back(std::move(t));
            if (eof) break;
        }
        return out;
    }

private:
    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    [[noreturn]] void fail(const std::string& msg, int line, int col) {
        throw ParseException({ParseError::Kind::Syntax, line, col, msg});
    }
    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
    char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }
    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    Token make(Tok k) {
        Token t;
        t.kind = k;
        t.line = line_;
        t.col = col_;
        return t;
    }

    Token next() {
        if (pos_ >= src_.size()) return make(Tok::Eof);
        Token t = make(Tok::Eof);
        char c = peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
                word += advance();
            t.kind = keyword_of(word);
            t.text = std::move(word);
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            uint64_t v = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(peek()))) {
                uint64_t d = static_cast<uint64_t>(advance() - '0');
                if (v > (UINT64_MAX - d) / 10) fail("integer literal out of range", t.line, t.col);
                v = v * 10 + d;
            }
            if (v > static_cast<uint64_t>(INT64_MAX))
                fail("integer literal out of range", t.line, t.col);
            t.kind = Tok::Int;
            t.int_val = v;
            return t;
        }
        if (c == '"') {
            advance();
            std::string s;
            for (;;) {
                if (pos_ >= src_.size() || peek() == '\n')
                    fail("unterminated string literal", t.line, t.col);
                char ch = advance();
                if (ch == '"') break;
                if (ch == '\\') {
                    if (pos_ >= src_.size()) fail("unterminated string literal", t.line, t.col);
                    char esc = advance();
                    switch (esc) {
                        case '\\': s += '\\'; break;
                        case '"': s += '"'; break;
                        case 'n': s += '\n'; break;
                        case 't': s += '\t'; break;
                        default:
                            fail(std::string("unknown escape '\\") + esc + "'", line_, col_ - 2);
                    }
                } else {
                    s += ch;
                }
            }
            t.kind = Tok::Str;
            t.text = std::move(s);
            return t;
        }
        advance();
        switch (c) {
            case '(': t.kind = Tok::LParen; return t;
            case ')': t.kind = Tok::RParen; return t;
            case '{': t.kind = Tok::LBrace; return t;
            case '}': t.kind = Tok::RBrace; return t;
            case '[': t.kind = Tok::LBracket; return t;
            case ']': t.kind = Tok::RBracket; return t;
            case ',': t.kind = Tok::Comma; return t;
            case ';': t.kind = Tok::Semi; return t;
            case '+': t.kind = Tok::Plus; return t;
            case '-': t.kind = Tok::Minus; return t;
            case '*': t.kind = Tok::Star; return t;
            case '/': t.kind = Tok::Slash; return t;
            case '%': t.kind = Tok::Percent; return t;
            case '.':
                if (peek() == '.') {
                    advance();
                    t.kind = Tok::DotDot;
                    return t;
                }
                fail("unexpected character '.'", t.line, t.col);
            case '=':
                if (peek() == '=') {
                    advance();
                    t.kind = Tok::EqEq;
                } else {
                    t.kind = Tok::Assign;
                }
                return t;
            case '!':
                if (peek() == '=') {
                    advance();
                    t.kind = Tok::NotEq;
                } else {
                    t.kind = Tok::Bang;
                }
                return t;
            case '<':
                if (peek() == '=') {
                    advance();
                    t.kind = Tok::Le;
                } else {
                    t.kind = Tok::Lt;
                }
                return t;
            case '>':
                if (peek() == '=') {
                    advance();
                    t.kind = Tok::Ge;
                } else {
                    t.kind = Tok::Gt;
                }
                return t;
            case '&':
                if (peek() == '&') {
                    advance();
                    t.kind = Tok::AndAnd;
                    return t;
                }
                fail("unexpected character '&'", t.line, t.col);
            case '|':
                if (peek() == '|') {
                    advance();
                    t.kind = Tok::OrOr;
                    return t;
                }
                fail("unexpected character '|'", t.line, t.col);
            default: break;
        }
        fail(std::string("unexpected character '") + c + "'", t.line, t.col);
    }

    static Tok keyword_of(const std::string& w) {
        if (w == "fn") return Tok::KwFn;
        if (w == "let") return Tok::KwLet;
        if (w == "if") return Tok::KwIf;
        if (w == "else") return Tok::KwElse;
        if (w == "while") return Tok::KwWhile;
        if (w == "for") return Tok::KwFor;
        if (w == "in") return Tok::KwIn;
        if (w == "return") return Tok::KwReturn;
        if (w == "assert") return Tok::KwAssert;
        if (w == "assert_eq") return Tok::KwAssertEq;
        if (w == "assert_snapshot") return Tok::KwAssertSnapshot;
        if (w == "true") return Tok::KwTrue;
        if (w == "false") return Tok::KwFalse;
        if (w == "null") return Tok::KwNull;
        return Tok::Ident;
    }
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Program parse_program() {
        Program p;
        while (!at(Tok::Eof)) {
            Function f = parse_function();
            for (const auto& existing : p.functions)
                if (existing.name == f.name)
                    throw ParseException({ParseError::Kind::DuplicateFunction, f.span.line,
                                          f.span.col, "duplicate function '" + f.name + "'"});
            p.functions.push_back(std::move(f));
        }
        return p;
    }

    std::vector<Stmt> parse_stmt_list_to_eof() {
        std::vector<Stmt> stmts;
        while (!at(Tok::Eof)) stmts.push_back(parse_stmt());
        return stmts;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }
    bool at(Tok k) const { return cur().kind == k; }
    Token take() { return toks_[pos_++]; }

    [[noreturn]] void fail_expected(const std::string& what) {
        throw ParseException({ParseError::Kind::Syntax, cur().line, cur().col,
                              "expected " + what + ", found " + tok_name(cur().kind)});
    }
    Token expect(Tok k) {
        if (!at(k)) fail_expected(tok_name(k));
        return take();
    }

    Function parse_function() {
        Function f;
        Token kw = expect(Tok::KwFn);
        f.span = {kw.line, kw.col};
        f.name = expect(Tok::Ident).text;
        expect(Tok::LParen);
        if (!at(Tok::RParen)) {
            f.params.push_back(expect(Tok::Ident).text);
            while (at(Tok::Comma)) {
                take();
                f.params.push_back(expect(Tok::Ident).text);
            }
        }
        expect(Tok::RParen);
        f.body = parse_block();
        return f;
    }

    std::vector<Stmt> parse_block() {
        expect(Tok::LBrace);
        std::vector<Stmt> stmts;
        while (!at(Tok::RBrace)) {
            if (at(Tok::Eof)) fail_expected("'}'");
            stmts.push_back(parse_stmt());
        }
        expect(Tok::RBrace);
        return stmts;
    }

    Stmt parse_stmt() {
        Stmt s;
        s.span = {cur().line, cur().col};
        switch (cur().kind) {
            case Tok::KwLet: {
                take();
                s.kind = StmtKind::Let;
                s.name = expect(Tok::Ident).text;
                expect(Tok::Assign);
                s.exprs.push_back(parse_expr());
                expect(Tok::Semi);
                return s;
            }
            case Tok::KwIf: {
                take();
                s.kind = StmtKind::If;
                s.exprs.push_back(parse_expr());
                s.body = parse_block();
                if (at(Tok::KwElse)) {
                    take();
                    s.else_body = parse_block();
                }
                return s;
            }
            case Tok::KwWhile: {
                take();
                s.kind = StmtKind::While;
                s.exprs.push_back(parse_expr());
                s.body = parse_block();
                return s;
            }
            case Tok::KwFor: {
                take();
                s.kind = StmtKind::ForRange;
                s.name = expect(Tok::Ident).text;
                expect(Tok::KwIn);
                s.exprs.push_back(parse_expr());
                expect(Tok::DotDot);
                s.exprs.push_back(parse_expr());
                s.body = parse_block();
                return s;
            }
            case Tok::KwReturn: {
                take();
                s.kind = StmtKind::Return;
                if (!at(Tok::Semi)) s.exprs.push_back(parse_expr());
                expect(Tok::Semi);
                return s;
            }
            case Tok::KwAssert: {
                take();
                s.kind = StmtKind::Assert;
                s.exprs.push_back(parse_expr());
                expect(Tok::Semi);
                return s;
            }
            case Tok::KwAssertEq: {
                take();
                s.kind = StmtKind::AssertEq;
                expect(Tok::LParen);
                s.exprs.push_back(parse_expr());
                expect(Tok::Comma);
                s.exprs.push_back(parse_expr());
                expect(Tok::RParen);
                expect(Tok::Semi);
                return s;
            }
            case Tok::KwAssertSnapshot: {
                take();
                s.kind = StmtKind::AssertSnapshot;
                expect(Tok::LParen);
                s.exprs.push_back(parse_expr());
                expect(Tok::Comma);
                s.snapshot = expect(Tok::Str).text;
                expect(Tok::RParen);
                expect(Tok::Semi);
                return s;
            }
            default: break;
        }
        // Assignment or expression statement: parse a full expression, then
        // decide by the following token.
        Expr e = parse_expr();
        if (at(Tok::Assign)) {
            take();
            if (e.kind == ExprKind::Var) {
                s.kind = StmtKind::Assign;
                s.name = e.str_val;
                s.exprs.push_back(parse_expr());
            } else if (e.kind == ExprKind::Index && e.children[0].kind == ExprKind::Var) {
                s.kind = StmtKind::IndexAssign;
                s.name = e.children[0].str_val;
                s.exprs.push_back(std::move(e.children[1]));
                s.exprs.push_back(parse_expr());
            } else {
                throw ParseException({ParseError::Kind::Syntax, s.span.line, s.span.col,
                                      "invalid assignment target"});
            }
            expect(Tok::Semi);
            return s;
        }
        s.kind = StmtKind::ExprStmt;
        s.exprs.push_back(std::move(e));
        expect(Tok::Semi);
        return s;
    }

    static int prec_of(Tok k) {
        switch (k) {
            case Tok::OrOr: return 1;
            case Tok::AndAnd: return 2;
            case Tok::EqEq:
            case Tok::NotEq: return 3;
            case Tok::Lt:
            case Tok::Le:
            case Tok::Gt:
            case Tok::Ge: return 4;
            case Tok::Plus:
            case Tok::Minus: return 5;
            case Tok::Star:
            case Tok::Slash:
            case Tok::Percent: return 6;
            default: return 0;
        }
    }

    static BinOp binop_of(Tok k) {
        switch (k) {
            case Tok::OrOr: return BinOp::Or;
            case Tok::AndAnd: return BinOp::And;
            case Tok::EqEq: return BinOp::Eq;
            case Tok::NotEq: return BinOp::Ne;
            case Tok::Lt: return BinOp::Lt;
            case Tok::Le: return BinOp::Le;
            case Tok::Gt: return BinOp::Gt;
            case Tok::Ge: return BinOp::Ge;
            case Tok::Plus: return BinOp::Add;
            case Tok::Minus: return BinOp::Sub;
            case Tok::Star: return BinOp::Mul;
            case Tok::Slash: return BinOp::Div;
            case Tok::Percent: return BinOp::Mod;
            default: return BinOp::Add;
        }
    }

    Expr parse_expr() { return parse_binary(1); }

    Expr parse_binary(int min_prec) {
        Expr lhs = parse_unary();
        for (;;) {
            int prec = prec_of(cur().kind);
            if (prec < min_prec || prec == 0) return lhs;
            Token op = take();
            Expr rhs = parse_binary(prec + 1);  // left-associative
            Span sp = lhs.span;
            lhs = Expr::make_binary(binop_of(op.kind), std::move(lhs), std::move(rhs));
            lhs.span = sp;
        }
    }

    Expr parse_unary() {
        if (at(Tok::Minus)) {
            Token op = take();
            Expr operand = parse_unary();
            if (operand.kind == ExprKind::IntLit) {
                // Fold into a negative literal (range-safe: lexer caps at INT64_MAX).
                operand.int_val = -operand.int_val;
                operand.span = {op.line, op.col};
                return operand;
            }
            Expr e = Expr::make_unary(UnOp::Neg, std::move(operand));
            e.span = {op.line, op.col};
            return e;
        }
        if (at(Tok::Bang)) {
            Token op = take();
            Expr e = Expr::make_unary(UnOp::Not, parse_unary());
            e.span = {op.line, op.col};
            return e;
        }
        return parse_postfix();
    }

    Expr parse_postfix() {
        Expr e = parse_primary();
        while (at(Tok::LBracket)) {
            take();
            Expr idx = parse_expr();
            expect(Tok::RBracket);
            Span sp = e.span;
            e = Expr::make_index(std::move(e), std::move(idx));
            e.span = sp;
        }
        return e;
    }

    Expr parse_primary() {
        Token t = cur();
        switch (t.kind) {
            case Tok::Int: {
                take();
                Expr e = Expr::make_int(static_cast<int64_t>(t.int_val));
                e.span = {t.line, t.col};
                return e;
            }
            case Tok::KwTrue:
            case Tok::KwFalse: {
                take();
                Expr e = Expr::make_bool(t.kind == Tok::KwTrue);
                e.span = {t.line, t.col};
                return e;
            }
            case Tok::Str: {
                take();
                Expr e = Expr::make_str(t.text);
                e.span = {t.line, t.col};
                return e;
            }
            case Tok::KwNull: {
                take();
                Expr e = Expr::make_null();
                e.span = {t.line, t.col};
                return e;
            }
            case Tok::LBracket: {
                take();
                Expr e;
                e.kind = ExprKind::ArrayLit;
                e.span = {t.line, t.col};
                if (!at(Tok::RBracket)) {
                    e.children.push_back(parse_expr());
                    while (at(Tok::Comma)) {
                        take();
                        e.children.push_back(parse_expr());
                    }
                }
                expect(Tok::RBracket);
                return e;
            }
            case Tok::Ident: {
                take();
                if (at(Tok::LParen)) {
                    take();
                    std::vector<Expr> args;
                    if (!at(Tok::RParen)) {
                        args.push_back(parse_expr());
                        while (at(Tok::Comma)) {
                            take();
                            args.push_back(parse_expr());
                        }
                    }
                    expect(Tok::RParen);
                    Expr e = Expr::make_call(t.text, std::move(args));
                    e.span = {t.line, t.col};
                    return e;
                }
                Expr e = Expr::make_var(t.text);
                e.span = {t.line, t.col};
                return e;
            }
            case Tok::LParen: {
                take();
                Expr e = parse_expr();
                expect(Tok::RParen);
                return e;
            }
            default: fail_expected("expression");
        }
    }
};

}  // namespace detail

// Parses MendLang source. Throws ParseException on malformed input or
// duplicate function names.
inline Program parse(std::string_view source) {
    detail::Lexer lex(source);
    detail::Parser p(lex.lex());
    return p.parse_program();
}

// Parses a statement-list fragment (used when applying textual edits).
inline std::vector<Stmt> parse_fragment(std::string_view text) {
    detail::Lexer lex(text);
    detail::Parser p(lex.lex());
    return p.parse_stmt_list_to_eof();
}

}  // namespace mendheal
