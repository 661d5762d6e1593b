#include <doctest.h>

#include <algorithm>

#include "dicov/error.hpp"
#include "dicov/source.hpp"
#include "test_util.hpp"

using namespace dicov;

namespace {

const VariableSourceFacts* find_var(const std::vector<VariableSourceFacts>& facts,
                                    const std::string& fn, const std::string& name) {
    for (const auto& f : facts)
        if (f.function == fn && f.name == name)
            return &f;
    return nullptr;
}

using LineSet = std::set<std::uint32_t>;

} // namespace

TEST_CASE("golden loopsum source: ast shape") {
    SourceAst ast = parse_source(testutil::data_file("loopsum.c"));
    REQUIRE(ast.functions.size() == 1);
    const AstNode& f = *ast.functions[0];
    CHECK(f.kind == AstKind::FunctionDef);
    CHECK(f.name == "f");
    CHECK(f.start_line == 1);
    CHECK(f.end_line == 11);
    CHECK(f.header_end_line == 1);

    int params = 0, blocks = 0;
    for (const auto& c : f.children) {
        params += c->kind == AstKind::ParamDecl;
        blocks += c->kind == AstKind::Block;
    }
    CHECK(params == 1);
    CHECK(blocks == 1);

    const AstNode& body = *f.children.back();
    REQUIRE(body.children.size() == 5); // int x; int y=..; x=0; for; return
    CHECK(body.children[0]->kind == AstKind::VarDecl);
    CHECK(body.children[0]->name == "x");
    CHECK_FALSE(body.children[0]->has_init);
    CHECK(body.children[1]->kind == AstKind::VarDecl);
    CHECK(body.children[1]->name == "y");
    CHECK(body.children[1]->has_init);
    CHECK(body.children[2]->kind == AstKind::ExprStmt);
    CHECK(body.children[3]->kind == AstKind::For);
    CHECK(body.children[4]->kind == AstKind::Return);
}

TEST_CASE("golden loopsum source: computational lines are 1,4,5,6,8,10") {
    SourceAst ast = parse_source(testutil::data_file("loopsum.c"));
    CHECK(computational_lines(ast) == LineSet{1, 4, 5, 6, 8, 10});
}

TEST_CASE("golden loopsum source: per-variable S and D") {
    SourceAst ast = parse_source(testutil::data_file("loopsum.c"));
    auto facts = variable_source_facts(ast);
    REQUIRE(facts.size() == 4);

    const auto* p = find_var(facts, "f", "p");
    REQUIRE(p);
    CHECK(p->is_param);
    CHECK(p->decl_line == 1);
    CHECK(p->first_def_line == 1);
    CHECK(p->scope_lines == LineSet{1, 4, 5, 6, 8, 10});
    CHECK(p->defined_lines == p->scope_lines);

    const auto* x = find_var(facts, "f", "x");
    REQUIRE(x);
    CHECK(x->decl_line == 3);
    CHECK(x->first_def_line == 5);
    CHECK(x->scope_lines == LineSet{4, 5, 6, 8, 10});
    CHECK(x->defined_lines == LineSet{5, 6, 8, 10});

    const auto* y = find_var(facts, "f", "y");
    REQUIRE(y);
    CHECK(y->first_def_line == 4);
    CHECK(y->scope_lines == LineSet{4, 5, 6, 8, 10});
    CHECK(y->defined_lines == y->scope_lines);

    const auto* i = find_var(facts, "f", "i");
    REQUIRE(i);
    CHECK(i->decl_line == 6);
    CHECK(i->first_def_line == 6);
    CHECK(i->scope_lines == LineSet{6, 8});
    CHECK(i->defined_lines == LineSet{6, 8});
}

TEST_CASE("empty file parses to zero functions") {
    SourceAst ast = parse_source_text("", "empty.c");
    CHECK(ast.functions.empty());
    CHECK(computational_lines(ast).empty());
    CHECK(variable_source_facts(ast).empty());
}

TEST_CASE("unsupported constructs are rejected by name") {
    auto expect_error = [](const std::string& src, const std::string& needle) {
        try {
            parse_source_text(src, "t.c");
            FAIL_CHECK("expected parse error mentioning ", needle, " for: ", src);
        } catch (const Error& e) {
            CHECK(e.kind() == Error::Kind::Parse);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error("int f(void)\n{\n  goto end;\nend:\n  return 0;\n}\n", "goto");
    expect_error("int f(int n)\n{\n  switch (n) { }\n  return 0;\n}\n", "switch");
    expect_error("int f(int n)\n{\n  do { n = n - 1; } while (n);\n  return n;\n}\n", "do");
    expect_error("#if FOO\nint x;\n#endif\n", "#if");
    expect_error("typedef int myint;\n", "typedef");
    expect_error("int f(void)\n{\n  int a, b = 1;\n  return b;\n}\n", "mixed");
}

TEST_CASE("simple #include and #define lines are skipped") {
    std::string src = "#include <stdio.h>\n#define LIMIT 10\n"
                      "int f(int n)\n{\n  return n + LIMIT;\n}\n";
    SourceAst ast = parse_source_text(src, "t.c");
    REQUIRE(ast.functions.size() == 1);
    CHECK(computational_lines(ast) == LineSet{3, 5});
}

TEST_CASE("brace-only and declaration-only lines are not computational") {
    std::string src = "int f(int n)\n"   // 1: computational (header)
                      "{\n"              // 2
                      "  int a;\n"       // 3: bare declaration
                      "  {\n"            // 4
                      "    a = n;\n"     // 5: assignment
                      "  }\n"            // 6
                      "  return a;\n"    // 7
                      "}\n";             // 8
    SourceAst ast = parse_source_text(src, "t.c");
    CHECK(computational_lines(ast) == LineSet{1, 5, 7});
}

TEST_CASE("declaration and assignment sharing a line make it computational") {
    std::string src = "int f(void)\n{\n  int x; x = 1;\n  return x;\n}\n";
    SourceAst ast = parse_source_text(src, "t.c");
    auto comp = computational_lines(ast);
    CHECK(comp.count(3) == 1);
    auto facts = variable_source_facts(ast);
    const auto* x = find_var(facts, "f", "x");
    REQUIRE(x);
    CHECK(x->first_def_line == 3);
    CHECK(x->defined_lines.count(3) == 1);
}

TEST_CASE("multi-line statements mark every line of their span") {
    std::string src = "int f(int n)\n"      // 1
                      "{\n"                 // 2
                      "  int y = g(n,\n"    // 3
                      "            n);\n"   // 4
                      "  return y;\n"       // 5
                      "}\n";                // 6
    SourceAst ast = parse_source_text(src, "t.c");
    CHECK(computational_lines(ast) == LineSet{1, 3, 4, 5});
}

TEST_CASE("multi-line for header joins the induction variable's scope") {
    std::string src = "int f(int n)\n"       // 1
                      "{\n"                  // 2
                      "  for (int i = 0;\n"  // 3
                      "       i < n;\n"      // 4
                      "       ++i)\n"        // 5
                      "  {\n"                // 6
                      "    n += i;\n"        // 7
                      "  }\n"                // 8
                      "  return n;\n"        // 9
                      "}\n";                 // 10
    SourceAst ast = parse_source_text(src, "t.c");
    CHECK(computational_lines(ast) == LineSet{1, 3, 4, 5, 7, 9});
    auto facts = variable_source_facts(ast);
    const auto* i = find_var(facts, "f", "i");
    REQUIRE(i);
    CHECK(i->scope_lines == LineSet{3, 4, 5, 7});
    CHECK(i->defined_lines == i->scope_lines);
}

TEST_CASE("shadowed variables stay distinct per scope") {
    std::string src = "int f(void)\n"    // 1
                      "{\n"              // 2
                      "  int x = 1;\n"   // 3
                      "  if (x > 0)\n"   // 4
                      "  {\n"            // 5
                      "    int x = 2;\n" // 6
                      "    x = 3;\n"     // 7
                      "  }\n"            // 8
                      "  return x;\n"    // 9
                      "}\n";             // 10
    SourceAst ast = parse_source_text(src, "t.c");
    auto facts = variable_source_facts(ast);
    std::vector<const VariableSourceFacts*> xs;
    for (const auto& f : facts)
        if (f.name == "x")
            xs.push_back(&f);
    REQUIRE(xs.size() == 2);
    const auto* outer = xs[0]->decl_line == 3 ? xs[0] : xs[1];
    const auto* inner = xs[0]->decl_line == 6 ? xs[0] : xs[1];
    CHECK(outer->decl_line == 3);
    CHECK(inner->decl_line == 6);
    CHECK(inner->scope_lines == LineSet{6, 7});
    CHECK(inner->first_def_line == 6);
    // The inner assignment on line 7 resolves to the inner x, so the outer
    // x keeps its first definition at the initializer.
    CHECK(outer->first_def_line == 3);
    CHECK(outer->scope_lines == LineSet{3, 4, 6, 7, 9});
}

TEST_CASE("never-assigned variables have an empty defined set") {
    std::string src = "int f(int n)\n{\n  int dead;\n  return n;\n}\n";
    SourceAst ast = parse_source_text(src, "t.c");
    auto facts = variable_source_facts(ast);
    const auto* dead = find_var(facts, "f", "dead");
    REQUIRE(dead);
    CHECK_FALSE(dead->first_def_line.has_value());
    CHECK(dead->defined_lines.empty());
    CHECK(dead->scope_lines == LineSet{4});
}

TEST_CASE("facts invariants hold on every example source") {
    for (const char* name : {"loopsum.c"}) {
        SourceAst ast = parse_source(testutil::data_file(name));
        auto comp = computational_lines(ast);
        for (const auto& f : variable_source_facts(ast)) {
            CHECK(std::includes(f.scope_lines.begin(), f.scope_lines.end(),
                                f.defined_lines.begin(), f.defined_lines.end()));
            CHECK(std::includes(comp.begin(), comp.end(), f.scope_lines.begin(),
                                f.scope_lines.end()));
            if (f.is_param)
                CHECK(f.scope_lines == f.defined_lines);
            if (!f.first_def_line)
                CHECK(f.defined_lines.empty());
        }
    }
}

TEST_CASE("property: inserting blank and comment lines preserves cardinalities") {
    std::string base = testutil::read_file(testutil::data_file("loopsum.c"));
    SourceAst base_ast = parse_source_text(base, "base.c");
    auto base_facts = variable_source_facts(base_ast);

    for (int iter = 0; iter < 50; ++iter) {
        std::vector<std::string> lines;
        std::string cur;
        for (char c : base) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        int inserts = static_cast<int>(testutil::rand_int(1, 5));
        for (int k = 0; k < inserts; ++k) {
            size_t pos = testutil::rand_int(0, static_cast<std::uint32_t>(lines.size()));
            lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(pos),
                         testutil::rand_int(0, 1) ? "" : "  /* noise */");
        }
        std::string mutated;
        for (const auto& l : lines)
            mutated += l + "\n";
        SourceAst ast = parse_source_text(mutated, "mutated.c");
        auto facts = variable_source_facts(ast);
        REQUIRE(facts.size() == base_facts.size());
        for (const auto& bf : base_facts) {
            const auto* mf = find_var(facts, bf.function, bf.name);
            REQUIRE(mf);
            CHECK(mf->scope_lines.size() == bf.scope_lines.size());
            CHECK(mf->defined_lines.size() == bf.defined_lines.size());
        }
    }
}

TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(parse_source("/nonexistent/nope.c"), Error);
}

TEST_CASE("while and if conditions are computational") {
    std::string src = "int f(int n)\n"  // 1
                      "{\n"             // 2
                      "  int s;\n"      // 3
                      "  s = 0;\n"      // 4
                      "  while (n > 0)\n" // 5
                      "  {\n"           // 6
                      "    s = s + n;\n" // 7
                      "    n = n - 1;\n" // 8
                      "  }\n"           // 9
                      "  if (s > 100)\n" // 10
                      "    s = 100;\n"  // 11
                      "  else\n"        // 12
                      "    s = s + 1;\n" // 13
                      "  return s;\n"   // 14
                      "}\n";            // 15
    SourceAst ast = parse_source_text(src, "t.c");
    CHECK(computational_lines(ast) == LineSet{1, 4, 5, 7, 8, 10, 11, 13, 14});
}
