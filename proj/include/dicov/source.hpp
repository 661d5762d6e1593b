#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dicov {

// AST of the supported C subset: function definitions with scalar/pointer
// parameters, declarations with optional initializers, expression
// statements, assignments (including compound), calls, if/else, for, while,
// return, nested blocks. goto, switch, do-while and preprocessor
// conditionals are outside the subset and rejected with the construct named.
enum class AstKind {
    FunctionDef,
    ParamDecl,
    VarDecl,
    Assignment,
    Call,
    BinaryOp,
    UnaryOp,
    Ternary,
    Index,
    Member,
    Identifier,
    Literal,
    Return,
    If,
    For,
    While,
    Block,
    ExprStmt,
    Break,
    Continue,
    Empty,
};

struct AstNode {
    AstKind kind;
    std::uint32_t start_line = 0;
    std::uint32_t end_line = 0;
    std::vector<std::unique_ptr<AstNode>> children;

    // Declared identifier (ParamDecl/VarDecl), called name (Call), or
    // identifier text (Identifier). FunctionDef holds the function name.
    std::string name;
    bool has_init = false;            // VarDecl
    std::uint32_t header_end_line = 0; // FunctionDef/If/For/While: end of header span
};

struct SourceAst {
    std::string path; // normalized
    std::vector<std::unique_ptr<AstNode>> functions;
};

SourceAst parse_source(const std::filesystem::path& path);
SourceAst parse_source_text(const std::string& text, const std::string& origin);

// Lines judged to perform computation: any part of an assignment, call,
// operator use, return, initializer, loop header or condition, plus function
// definition headers (parameter binding happens there). Brace-only lines and
// bare declarations stay out.
std::set<std::uint32_t> computational_lines(const SourceAst& ast);

// Per-variable line sets derived from source alone. scope_lines is the
// in-scope set S restricted to computational lines; defined_lines is the
// subset at or after the first textual definition (D).
struct VariableSourceFacts {
    std::string function;
    std::string name;
    std::uint32_t decl_line = 0;
    bool is_param = false;
    std::optional<std::uint32_t> first_def_line;
    std::set<std::uint32_t> scope_lines;
    std::set<std::uint32_t> defined_lines;
};

std::vector<VariableSourceFacts> variable_source_facts(const SourceAst& ast);

// Physical extent of each function definition, for attributing line-table
// rows back to the source function that owns them.
struct FunctionSpan {
    std::string name;
    std::uint32_t start_line = 0;
    std::uint32_t end_line = 0;
};

std::vector<FunctionSpan> function_spans(const SourceAst& ast);

// JSON rendering of the facts, usable as a standalone baseline artifact.
std::string facts_to_json(const SourceAst& ast, const std::vector<VariableSourceFacts>& facts);

} // namespace dicov
