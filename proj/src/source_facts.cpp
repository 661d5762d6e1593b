#include <algorithm>
#include <map>

#include "dicov/error.hpp"
#include "dicov/source.hpp"

namespace dicov {
namespace {

void mark_span(std::set<std::uint32_t>& lines, std::uint32_t from, std::uint32_t to) {
    for (std::uint32_t l = from; l <= to; ++l)
        lines.insert(l);
}

// A multi-line statement marks every line of its span; line tables attribute
// addresses to continuation lines.
void collect_computational(const AstNode& n, std::set<std::uint32_t>& lines) {
    switch (n.kind) {
    case AstKind::FunctionDef:
        mark_span(lines, n.start_line, n.header_end_line);
        break;
    case AstKind::VarDecl:
        if (n.has_init)
            mark_span(lines, n.start_line, n.end_line);
        break;
    case AstKind::Assignment:
    case AstKind::Call:
    case AstKind::BinaryOp:
    case AstKind::UnaryOp:
    case AstKind::Ternary:
    case AstKind::Index:
    case AstKind::Return:
        mark_span(lines, n.start_line, n.end_line);
        break;
    case AstKind::If:
    case AstKind::For:
    case AstKind::While:
        mark_span(lines, n.start_line, n.header_end_line);
        break;
    default:
        break;
    }
    for (const auto& c : n.children)
        collect_computational(*c, lines);
}

struct PendingVar {
    std::string function;
    std::string name;
    std::uint32_t decl_line;
    std::uint32_t scope_start;
    std::uint32_t scope_end;
    bool is_param;
    std::optional<std::uint32_t> first_def;
};

class FactsWalker {
public:
    explicit FactsWalker(const SourceAst& ast) : ast_(ast) {}

    std::vector<VariableSourceFacts> run() {
        std::set<std::uint32_t> comp = computational_lines(ast_);
        for (const auto& fn : ast_.functions)
            function(*fn);
        std::vector<VariableSourceFacts> out;
        for (const auto& v : vars_) {
            VariableSourceFacts f;
            f.function = v.function;
            f.name = v.name;
            f.decl_line = v.decl_line;
            f.is_param = v.is_param;
            f.first_def_line = v.first_def;
            for (std::uint32_t l = v.scope_start; l <= v.scope_end; ++l)
                if (comp.count(l))
                    f.scope_lines.insert(l);
            if (v.first_def)
                for (std::uint32_t l : f.scope_lines)
                    if (l >= *v.first_def)
                        f.defined_lines.insert(l);
            out.push_back(std::move(f));
        }
        std::sort(out.begin(), out.end(),
                  [](const VariableSourceFacts& a, const VariableSourceFacts& b) {
                      return std::tie(a.function, a.decl_line, a.name) <
                             std::tie(b.function, b.decl_line, b.name);
                  });
        return out;
    }

private:
    struct Scope {
        std::map<std::string, size_t> decls; // name -> index into vars_
    };

    void function(const AstNode& fn) {
        current_function_ = fn.name;
        scopes_.clear();
        scopes_.emplace_back();
        for (const auto& c : fn.children) {
            if (c->kind == AstKind::ParamDecl) {
                size_t idx = vars_.size();
                vars_.push_back({current_function_, c->name, c->start_line, fn.start_line,
                                 fn.end_line, true, fn.start_line});
                scopes_.back().decls[c->name] = idx;
            }
        }
        for (const auto& c : fn.children)
            if (c->kind == AstKind::Block)
                block(*c, /*new_scope=*/false);
        scopes_.pop_back();
    }

    void block(const AstNode& b, bool new_scope) {
        if (new_scope)
            scopes_.emplace_back();
        for (const auto& s : b.children)
            statement(*s, b.end_line);
        if (new_scope)
            scopes_.pop_back();
    }

    void declare(const AstNode& d, std::uint32_t scope_start, std::uint32_t scope_end) {
        size_t idx = vars_.size();
        std::optional<std::uint32_t> first_def;
        if (d.has_init)
            first_def = d.start_line;
        vars_.push_back({current_function_, d.name, d.start_line, scope_start, scope_end, false,
                         first_def});
        scopes_.back().decls[d.name] = idx;
        for (const auto& c : d.children)
            expr(*c); // initializer may assign to other variables
    }

    void declaration_stmt(const AstNode& n, std::uint32_t block_end) {
        if (n.kind == AstKind::VarDecl) {
            declare(n, n.start_line, block_end);
            return;
        }
        for (const auto& c : n.children) // decl-list holder
            declare(*c, c->start_line, block_end);
    }

    void statement(const AstNode& n, std::uint32_t block_end) {
        switch (n.kind) {
        case AstKind::Block:
            if (n.name == "decl-list")
                declaration_stmt(n, block_end);
            else
                block(n, /*new_scope=*/true);
            break;
        case AstKind::VarDecl:
            declaration_stmt(n, block_end);
            break;
        case AstKind::ExprStmt:
        case AstKind::Return:
            for (const auto& c : n.children)
                expr(*c);
            break;
        case AstKind::If: {
            expr(*n.children[0]);
            statement(*n.children[1], block_end);
            if (n.children.size() > 2)
                statement(*n.children[2], block_end);
            break;
        }
        case AstKind::While: {
            expr(*n.children[0]);
            statement(*n.children[1], block_end);
            break;
        }
        case AstKind::For: {
            // A for-init declaration is scoped from the loop header through
            // the loop body end.
            scopes_.emplace_back();
            const AstNode& init = *n.children[0];
            std::uint32_t body_end = n.children[3]->end_line;
            if (init.kind == AstKind::VarDecl) {
                declare(init, n.start_line, body_end);
            } else if (init.kind == AstKind::Block && init.name == "decl-list") {
                for (const auto& c : init.children)
                    declare(*c, n.start_line, body_end);
            } else {
                for (const auto& c : init.children) // Empty or ExprStmt
                    expr(*c);
            }
            expr(*n.children[1]);
            expr(*n.children[2]);
            statement(*n.children[3], block_end);
            scopes_.pop_back();
            break;
        }
        default:
            break;
        }
    }

    // Walks an expression, recording textual definitions: plain assignment
    // targets, compound assignment targets, and ++/-- operands.
    void expr(const AstNode& n) {
        if (n.kind == AstKind::Assignment) {
            const AstNode& lhs = *n.children[0];
            if (lhs.kind == AstKind::Identifier)
                record_def(lhs.name, n.start_line);
            expr(*n.children[1]);
            if (lhs.kind != AstKind::Identifier)
                expr(lhs);
            return;
        }
        if (n.kind == AstKind::UnaryOp && (n.name == "++" || n.name == "--")) {
            if (!n.children.empty() && n.children[0]->kind == AstKind::Identifier)
                record_def(n.children[0]->name, n.start_line);
        }
        for (const auto& c : n.children)
            expr(*c);
    }

    void record_def(const std::string& name, std::uint32_t line) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->decls.find(name);
            if (found != it->decls.end()) {
                auto& v = vars_[found->second];
                if (!v.first_def || line < *v.first_def)
                    v.first_def = line;
                return;
            }
        }
        // Unknown name: a global or an undeclared identifier; not a local fact.
    }

    const SourceAst& ast_;
    std::string current_function_;
    std::vector<Scope> scopes_;
    std::vector<PendingVar> vars_;
};

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

std::string lines_json(const std::set<std::uint32_t>& lines) {
    std::string out = "[";
    bool first = true;
    for (auto l : lines) {
        if (!first)
            out += ",";
        out += std::to_string(l);
        first = false;
    }
    return out + "]";
}

} // namespace

std::set<std::uint32_t> computational_lines(const SourceAst& ast) {
    std::set<std::uint32_t> lines;
    for (const auto& fn : ast.functions)
        collect_computational(*fn, lines);
    return lines;
}

std::vector<VariableSourceFacts> variable_source_facts(const SourceAst& ast) {
    return FactsWalker(ast).run();
}

std::vector<FunctionSpan> function_spans(const SourceAst& ast) {
    std::vector<FunctionSpan> out;
    for (const auto& fn : ast.functions)
        out.push_back({fn->name, fn->start_line, fn->end_line});
    return out;
}

std::string facts_to_json(const SourceAst& ast, const std::vector<VariableSourceFacts>& facts) {
    std::string out = "{\n  \"file\": \"" + json_escape(ast.path) + "\",\n  \"variables\": [";
    bool first = true;
    for (const auto& f : facts) {
        if (!first)
            out += ",";
        out += "\n    {\"function\": \"" + json_escape(f.function) + "\", \"name\": \"" +
               json_escape(f.name) + "\", \"decl_line\": " + std::to_string(f.decl_line) +
               ", \"first_def_line\": " +
               (f.first_def_line ? std::to_string(*f.first_def_line) : std::string("null")) +
               ", \"scope_lines\": " + lines_json(f.scope_lines) +
               ", \"defined_lines\": " + lines_json(f.defined_lines) + "}";
        first = false;
    }
    out += "\n  ]\n}\n";
    return out;
}

} // namespace dicov
