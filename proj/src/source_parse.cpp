#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dicov/error.hpp"
#include "dicov/model.hpp"
#include "dicov/source.hpp"

namespace dicov {
namespace {

enum class Tok { Ident, Keyword, Number, String, CharLit, Punct, Eof };

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    std::uint32_t line = 0;
    std::uint32_t col = 0;
};

const char* kKeywords[] = {
    "int", "char", "short", "long", "unsigned", "signed", "float", "double", "void",
    "const", "volatile", "static", "extern", "register", "inline", "restrict",
    "if", "else", "for", "while", "return", "break", "continue",
    "goto", "switch", "case", "default", "do", "struct", "union", "enum", "typedef",
    "sizeof",
};

bool is_keyword(const std::string& s) {
    for (const char* k : kKeywords)
        if (s == k)
            return true;
    return false;
}

bool is_type_keyword(const std::string& s) {
    static const char* type_kw[] = {"int", "char", "short", "long", "unsigned", "signed",
                                    "float", "double", "void", "const", "volatile",
                                    "static", "extern", "register", "inline", "restrict"};
    for (const char* k : type_kw)
        if (s == k)
            return true;
    return false;
}

class Lexer {
public:
    Lexer(const std::string& text, std::string origin)
        : text_(text), origin_(std::move(origin)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        bool line_start = true;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') { advance(); line_start = true; continue; }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f') {
                advance();
                continue;
            }
            if (c == '/' && peek(1) == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
                continue;
            }
            if (c == '/' && peek(1) == '*') {
                advance(); advance();
                while (pos_ < text_.size() && !(text_[pos_] == '*' && peek(1) == '/'))
                    advance();
                if (pos_ >= text_.size())
                    throw parse_at(origin_, line_, col_, "unterminated block comment");
                advance(); advance();
                continue;
            }
            if (c == '#') {
                if (!line_start)
                    throw parse_at(origin_, line_, col_, "stray '#'");
                directive();
                line_start = true;
                continue;
            }
            line_start = false;
            out.push_back(next_token());
        }
        out.push_back({Tok::Eof, "", line_, col_});
        return out;
    }

private:
    char peek(size_t ahead) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }
    void advance() {
        if (text_[pos_] == '\n') { ++line_; col_ = 1; }
        else ++col_;
        ++pos_;
    }

    // Only simple #include and #define lines are tolerated (skipped without
    // expansion); conditionals and every other directive are out of the
    // supported subset.
    void directive() {
        std::uint32_t dline = line_, dcol = col_;
        advance(); // '#'
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t'))
            advance();
        std::string name;
        while (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) != 0))
            { name += text_[pos_]; advance(); }
        if (name != "include" && name != "define")
            throw parse_at(origin_, dline, dcol,
                           "unsupported preprocessor directive '#" + name + "'");
        // Skip to end of line, honouring backslash continuations.
        while (pos_ < text_.size()) {
            if (text_[pos_] == '\\' && peek(1) == '\n') { advance(); advance(); continue; }
            if (text_[pos_] == '\n') { advance(); break; }
            advance();
        }
    }

    Token next_token() {
        std::uint32_t tl = line_, tc = col_;
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string s;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                { s += text_[pos_]; advance(); }
            return {is_keyword(s) ? Tok::Keyword : Tok::Ident, s, tl, tc};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            std::string s;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                    ((text_[pos_] == '+' || text_[pos_] == '-') && !s.empty() &&
                     (s.back() == 'e' || s.back() == 'E' || s.back() == 'p' || s.back() == 'P'))))
                { s += text_[pos_]; advance(); }
            return {Tok::Number, s, tl, tc};
        }
        if (c == '"' || c == '\'') {
            char quote = c;
            std::string s(1, c);
            advance();
            while (pos_ < text_.size() && text_[pos_] != quote) {
                if (text_[pos_] == '\\') { s += text_[pos_]; advance(); if (pos_ >= text_.size()) break; }
                if (text_[pos_] == '\n')
                    throw parse_at(origin_, tl, tc, "unterminated literal");
                s += text_[pos_];
                advance();
            }
            if (pos_ >= text_.size())
                throw parse_at(origin_, tl, tc, "unterminated literal");
            s += quote;
            advance();
            return {quote == '"' ? Tok::String : Tok::CharLit, s, tl, tc};
        }
        static const char* multi[] = {"<<=", ">>=", "...", "->", "++", "--", "<<", ">>",
                                      "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
                                      "*=", "/=", "%=", "&=", "|=", "^="};
        for (const char* op : multi) {
            size_t n = std::strlen(op);
            if (text_.compare(pos_, n, op) == 0) {
                for (size_t i = 0; i < n; ++i)
                    advance();
                return {Tok::Punct, op, tl, tc};
            }
        }
        static const std::string singles = "+-*/%&|^~!<>=?:;,.()[]{}";
        if (singles.find(c) != std::string::npos) {
            advance();
            return {Tok::Punct, std::string(1, c), tl, tc};
        }
        throw parse_at(origin_, tl, tc, std::string("unexpected character '") + c + "'");
    }

    const std::string& text_;
    std::string origin_;
    size_t pos_ = 0;
    std::uint32_t line_ = 1, col_ = 1;
};

using NodePtr = std::unique_ptr<AstNode>;

NodePtr make_node(AstKind kind, std::uint32_t line) {
    auto n = std::make_unique<AstNode>();
    n->kind = kind;
    n->start_line = n->end_line = line;
    return n;
}

void grow_span(AstNode& n, const AstNode& child) {
    n.start_line = std::min(n.start_line, child.start_line);
    n.end_line = std::max(n.end_line, child.end_line);
}

class Parser {
public:
    Parser(std::vector<Token> toks, std::string origin)
        : toks_(std::move(toks)), origin_(std::move(origin)) {}

    SourceAst run() {
        SourceAst ast;
        ast.path = origin_;
        while (!at(Tok::Eof)) {
            auto fn = external_decl();
            if (fn)
                ast.functions.push_back(std::move(fn));
        }
        return ast;
    }

private:
    const Token& cur() const { return toks_[i_]; }
    const Token& peek(size_t ahead = 1) const {
        return toks_[std::min(i_ + ahead, toks_.size() - 1)];
    }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_punct(const char* t) const { return cur().kind == Tok::Punct && cur().text == t; }
    bool at_kw(const char* t) const { return cur().kind == Tok::Keyword && cur().text == t; }
    bool at_type() const { return cur().kind == Tok::Keyword && is_type_keyword(cur().text); }
    Token eat() { return toks_[i_ == toks_.size() - 1 ? i_ : i_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw parse_at(origin_, cur().line, cur().col, msg);
    }
    [[noreturn]] void unsupported(const std::string& what) const {
        throw parse_at(origin_, cur().line, cur().col, "unsupported construct '" + what + "'");
    }

    Token expect_punct(const char* t) {
        if (!at_punct(t))
            fail(std::string("expected '") + t + "', got '" + cur().text + "'");
        return eat();
    }

    void reject_unsupported_keyword() const {
        static const char* banned[] = {"goto", "switch", "case", "default", "do",
                                       "struct", "union", "enum", "typedef"};
        for (const char* b : banned)
            if (at_kw(b))
                unsupported(b);
    }

    // Returns the line of the first specifier token.
    std::uint32_t decl_specifiers() {
        reject_unsupported_keyword();
        if (!at_type())
            fail("expected declaration specifiers, got '" + cur().text + "'");
        std::uint32_t line = cur().line;
        while (at_type())
            eat();
        return line;
    }

    NodePtr external_decl() {
        reject_unsupported_keyword();
        std::uint32_t spec_line = decl_specifiers();
        while (at_punct("*"))
            eat();
        if (!at(Tok::Ident))
            fail("expected declarator name, got '" + cur().text + "'");
        Token name = eat();
        if (at_punct("(")) {
            auto fn = make_node(AstKind::FunctionDef, spec_line);
            fn->name = name.text;
            std::vector<NodePtr> params = param_list(*fn);
            if (at_punct(";")) {
                eat(); // prototype: no definition, nothing to analyze
                return nullptr;
            }
            if (!at_punct("{"))
                fail("expected function body or ';'");
            for (auto& p : params)
                fn->children.push_back(std::move(p));
            auto body = block();
            grow_span(*fn, *body);
            fn->children.push_back(std::move(body));
            return fn;
        }
        // Global object definition: parse and discard; globals are not local
        // variables and their lines do not enter any scope set.
        if (at_punct("="))
            { eat(); (void)assignment_expr(); }
        while (at_punct(",")) {
            eat();
            while (at_punct("*"))
                eat();
            if (!at(Tok::Ident))
                fail("expected declarator name");
            eat();
            if (at_punct("="))
                { eat(); (void)assignment_expr(); }
        }
        expect_punct(";");
        return nullptr;
    }

    std::vector<NodePtr> param_list(AstNode& fn) {
        expect_punct("(");
        std::vector<NodePtr> params;
        if (at_kw("void") && peek().kind == Tok::Punct && peek().text == ")") {
            eat();
        } else if (!at_punct(")")) {
            while (true) {
                if (at_punct("...")) { eat(); break; }
                reject_unsupported_keyword();
                if (!at_type())
                    fail("expected parameter type, got '" + cur().text + "'");
                while (at_type())
                    eat();
                while (at_punct("*"))
                    eat();
                if (at(Tok::Ident)) {
                    Token pname = eat();
                    auto p = make_node(AstKind::ParamDecl, pname.line);
                    p->name = pname.text;
                    params.push_back(std::move(p));
                    while (at_punct("[")) { // array parameter decays to pointer
                        eat();
                        if (!at_punct("]"))
                            (void)assignment_expr();
                        expect_punct("]");
                    }
                }
                if (!at_punct(","))
                    break;
                eat();
            }
        }
        Token rparen = expect_punct(")");
        fn.header_end_line = rparen.line;
        fn.end_line = std::max(fn.end_line, rparen.line);
        return params;
    }

    NodePtr block() {
        Token lbrace = expect_punct("{");
        auto b = make_node(AstKind::Block, lbrace.line);
        while (!at_punct("}")) {
            if (at(Tok::Eof))
                fail("unexpected end of file inside block");
            auto s = statement();
            grow_span(*b, *s);
            b->children.push_back(std::move(s));
        }
        Token rbrace = eat();
        b->end_line = std::max(b->end_line, rbrace.line);
        return b;
    }

    NodePtr statement() {
        reject_unsupported_keyword();
        if (at_punct("{"))
            return block();
        if (at_punct(";")) {
            Token t = eat();
            return make_node(AstKind::Empty, t.line);
        }
        if (at_type())
            return declaration();
        if (at_kw("if"))
            return if_stmt();
        if (at_kw("for"))
            return for_stmt();
        if (at_kw("while"))
            return while_stmt();
        if (at_kw("return")) {
            Token t = eat();
            auto r = make_node(AstKind::Return, t.line);
            if (!at_punct(";")) {
                auto e = expression();
                grow_span(*r, *e);
                r->children.push_back(std::move(e));
            }
            Token semi = expect_punct(";");
            r->end_line = std::max(r->end_line, semi.line);
            return r;
        }
        if (at_kw("break") || at_kw("continue")) {
            Token t = eat();
            expect_punct(";");
            return make_node(t.text == "break" ? AstKind::Break : AstKind::Continue, t.line);
        }
        auto s = make_node(AstKind::ExprStmt, cur().line);
        auto e = expression();
        grow_span(*s, *e);
        s->children.push_back(std::move(e));
        Token semi = expect_punct(";");
        s->end_line = std::max(s->end_line, semi.line);
        return s;
    }

    // One VarDecl node per declarator. Mixing initialized and uninitialized
    // declarators on one line is outside the subset.
    NodePtr declaration() {
        std::uint32_t spec_line = decl_specifiers();
        auto list = make_node(AstKind::Block, spec_line); // transparent holder
        list->name = "decl-list";
        bool any_init = false, any_plain = false;
        while (true) {
            while (at_punct("*"))
                eat();
            if (!at(Tok::Ident))
                fail("expected declarator name, got '" + cur().text + "'");
            Token name = eat();
            auto d = make_node(AstKind::VarDecl, name.line);
            d->name = name.text;
            while (at_punct("[")) {
                eat();
                if (!at_punct("]"))
                    (void)assignment_expr();
                expect_punct("]");
            }
            if (at_punct("=")) {
                eat();
                d->has_init = true;
                any_init = true;
                auto init = assignment_expr();
                grow_span(*d, *init);
                d->children.push_back(std::move(init));
            } else {
                any_plain = true;
            }
            grow_span(*list, *d);
            list->children.push_back(std::move(d));
            if (!at_punct(","))
                break;
            eat();
        }
        if (any_init && any_plain)
            throw parse_at(origin_, list->start_line, 1,
                           "unsupported construct 'multi-declarator with mixed initializers'");
        Token semi = expect_punct(";");
        list->end_line = std::max(list->end_line, semi.line);
        if (list->children.size() == 1)
            return std::move(list->children.front());
        return list;
    }

    NodePtr if_stmt() {
        Token kw = eat();
        auto n = make_node(AstKind::If, kw.line);
        expect_punct("(");
        auto cond = expression();
        Token rparen = expect_punct(")");
        n->header_end_line = rparen.line;
        n->children.push_back(std::move(cond));
        auto then = statement();
        grow_span(*n, *then);
        n->children.push_back(std::move(then));
        if (at_kw("else")) {
            eat();
            auto els = statement();
            grow_span(*n, *els);
            n->children.push_back(std::move(els));
        }
        n->end_line = std::max(n->end_line, rparen.line);
        return n;
    }

    NodePtr for_stmt() {
        Token kw = eat();
        auto n = make_node(AstKind::For, kw.line);
        expect_punct("(");
        NodePtr init;
        if (at_type()) {
            init = declaration(); // declaration() consumes the ';'
        } else if (at_punct(";")) {
            init = make_node(AstKind::Empty, cur().line);
            eat();
        } else {
            init = make_node(AstKind::ExprStmt, cur().line);
            auto e = expression();
            grow_span(*init, *e);
            init->children.push_back(std::move(e));
            expect_punct(";");
        }
        NodePtr cond;
        if (at_punct(";"))
            cond = make_node(AstKind::Empty, cur().line);
        else
            cond = expression();
        expect_punct(";");
        NodePtr incr;
        if (at_punct(")"))
            incr = make_node(AstKind::Empty, cur().line);
        else
            incr = expression();
        Token rparen = expect_punct(")");
        n->header_end_line = rparen.line;
        auto body = statement();
        grow_span(*n, *body);
        n->children.push_back(std::move(init));
        n->children.push_back(std::move(cond));
        n->children.push_back(std::move(incr));
        n->children.push_back(std::move(body));
        return n;
    }

    NodePtr while_stmt() {
        Token kw = eat();
        auto n = make_node(AstKind::While, kw.line);
        expect_punct("(");
        auto cond = expression();
        Token rparen = expect_punct(")");
        n->header_end_line = rparen.line;
        n->children.push_back(std::move(cond));
        auto body = statement();
        grow_span(*n, *body);
        n->children.push_back(std::move(body));
        return n;
    }

    NodePtr expression() {
        auto e = assignment_expr();
        while (at_punct(",")) {
            Token op = eat();
            auto rhs = assignment_expr();
            auto n = make_node(AstKind::BinaryOp, op.line);
            n->name = ",";
            grow_span(*n, *e);
            grow_span(*n, *rhs);
            n->children.push_back(std::move(e));
            n->children.push_back(std::move(rhs));
            e = std::move(n);
        }
        return e;
    }

    bool at_assign_op() const {
        if (cur().kind != Tok::Punct)
            return false;
        static const char* ops[] = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
                                    "<<=", ">>="};
        for (const char* o : ops)
            if (cur().text == o)
                return true;
        return false;
    }

    NodePtr assignment_expr() {
        auto lhs = ternary_expr();
        if (at_assign_op()) {
            Token op = eat();
            auto rhs = assignment_expr();
            auto n = make_node(AstKind::Assignment, op.line);
            n->name = op.text;
            grow_span(*n, *lhs);
            grow_span(*n, *rhs);
            n->children.push_back(std::move(lhs));
            n->children.push_back(std::move(rhs));
            return n;
        }
        return lhs;
    }

    NodePtr ternary_expr() {
        auto c = binary_expr(0);
        if (at_punct("?")) {
            Token op = eat();
            auto a = expression();
            expect_punct(":");
            auto b = assignment_expr();
            auto n = make_node(AstKind::Ternary, op.line);
            grow_span(*n, *c);
            grow_span(*n, *a);
            grow_span(*n, *b);
            n->children.push_back(std::move(c));
            n->children.push_back(std::move(a));
            n->children.push_back(std::move(b));
            return n;
        }
        return c;
    }

    static int binary_prec(const std::string& op) {
        if (op == "||") return 1;
        if (op == "&&") return 2;
        if (op == "|") return 3;
        if (op == "^") return 4;
        if (op == "&") return 5;
        if (op == "==" || op == "!=") return 6;
        if (op == "<" || op == ">" || op == "<=" || op == ">=") return 7;
        if (op == "<<" || op == ">>") return 8;
        if (op == "+" || op == "-") return 9;
        if (op == "*" || op == "/" || op == "%") return 10;
        return 0;
    }

    NodePtr binary_expr(int min_prec) {
        auto lhs = unary_expr();
        while (cur().kind == Tok::Punct) {
            int prec = binary_prec(cur().text);
            if (prec == 0 || prec < min_prec)
                break;
            Token op = eat();
            auto rhs = binary_expr(prec + 1);
            auto n = make_node(AstKind::BinaryOp, op.line);
            n->name = op.text;
            grow_span(*n, *lhs);
            grow_span(*n, *rhs);
            n->children.push_back(std::move(lhs));
            n->children.push_back(std::move(rhs));
            lhs = std::move(n);
        }
        return lhs;
    }

    bool at_cast() const {
        return at_punct("(") && peek().kind == Tok::Keyword && is_type_keyword(peek().text);
    }

    NodePtr unary_expr() {
        if (cur().kind == Tok::Punct) {
            static const char* unops[] = {"++", "--", "+", "-", "!", "~", "*", "&"};
            for (const char* o : unops) {
                if (cur().text == o) {
                    Token op = eat();
                    auto operand = unary_expr();
                    auto n = make_node(AstKind::UnaryOp, op.line);
                    n->name = op.text;
                    grow_span(*n, *operand);
                    n->children.push_back(std::move(operand));
                    return n;
                }
            }
        }
        if (at_kw("sizeof")) {
            Token op = eat();
            auto n = make_node(AstKind::UnaryOp, op.line);
            n->name = "sizeof";
            if (at_cast()) {
                eat();
                while (at_type() || at_punct("*"))
                    eat();
                Token rp = expect_punct(")");
                n->end_line = std::max(n->end_line, rp.line);
            } else {
                auto operand = unary_expr();
                grow_span(*n, *operand);
                n->children.push_back(std::move(operand));
            }
            return n;
        }
        if (at_cast()) {
            Token lp = eat();
            while (at_type() || at_punct("*"))
                eat();
            expect_punct(")");
            auto operand = unary_expr();
            auto n = make_node(AstKind::UnaryOp, lp.line);
            n->name = "cast";
            grow_span(*n, *operand);
            n->children.push_back(std::move(operand));
            return n;
        }
        return postfix_expr();
    }

    NodePtr postfix_expr() {
        auto e = primary_expr();
        while (true) {
            if (at_punct("(")) {
                Token lp = eat();
                auto call = make_node(AstKind::Call, lp.line);
                call->name = e->kind == AstKind::Identifier ? e->name : std::string();
                grow_span(*call, *e);
                call->children.push_back(std::move(e));
                if (!at_punct(")")) {
                    while (true) {
                        auto arg = assignment_expr();
                        grow_span(*call, *arg);
                        call->children.push_back(std::move(arg));
                        if (!at_punct(","))
                            break;
                        eat();
                    }
                }
                Token rp = expect_punct(")");
                call->end_line = std::max(call->end_line, rp.line);
                e = std::move(call);
            } else if (at_punct("[")) {
                Token lb = eat();
                auto idx = expression();
                Token rb = expect_punct("]");
                auto n = make_node(AstKind::Index, lb.line);
                grow_span(*n, *e);
                grow_span(*n, *idx);
                n->end_line = std::max(n->end_line, rb.line);
                n->children.push_back(std::move(e));
                n->children.push_back(std::move(idx));
                e = std::move(n);
            } else if (at_punct(".") || at_punct("->")) {
                Token op = eat();
                if (!at(Tok::Ident))
                    fail("expected member name after '" + op.text + "'");
                Token member = eat();
                auto n = make_node(AstKind::Member, op.line);
                n->name = member.text;
                grow_span(*n, *e);
                n->end_line = std::max(n->end_line, member.line);
                n->children.push_back(std::move(e));
                e = std::move(n);
            } else if (at_punct("++") || at_punct("--")) {
                Token op = eat();
                auto n = make_node(AstKind::UnaryOp, op.line);
                n->name = op.text;
                grow_span(*n, *e);
                n->children.push_back(std::move(e));
                e = std::move(n);
            } else {
                break;
            }
        }
        return e;
    }

    NodePtr primary_expr() {
        reject_unsupported_keyword();
        if (at(Tok::Ident)) {
            Token t = eat();
            auto n = make_node(AstKind::Identifier, t.line);
            n->name = t.text;
            return n;
        }
        if (at(Tok::Number) || at(Tok::String) || at(Tok::CharLit)) {
            Token t = eat();
            auto n = make_node(AstKind::Literal, t.line);
            n->name = t.text;
            return n;
        }
        if (at_punct("(")) {
            eat();
            auto e = expression();
            expect_punct(")");
            return e;
        }
        fail("expected expression, got '" + cur().text + "'");
    }

    std::vector<Token> toks_;
    std::string origin_;
    size_t i_ = 0;
};

} // namespace

SourceAst parse_source_text(const std::string& text, const std::string& origin) {
    Lexer lexer(text, origin);
    Parser parser(lexer.run(), origin);
    return parser.run();
}

SourceAst parse_source(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error::io("cannot open source file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_source_text(buf.str(), normalize_path(path.string()));
}

} // namespace dicov
