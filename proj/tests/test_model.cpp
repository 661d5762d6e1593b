#include <doctest.h>

#include <algorithm>

#include "dicov/error.hpp"
#include "dicov/model.hpp"
#include "test_util.hpp"

using namespace dicov;

namespace {

std::set<std::uint32_t> lines_of(const std::set<SourceLineKey>& keys) {
    std::set<std::uint32_t> out;
    for (const auto& k : keys)
        out.insert(k.line);
    return out;
}

// Independent enumeration: a line key belongs to the projection iff some row
// with that key has its address inside one of the ranges.
std::set<SourceLineKey> projection_oracle(const NeutralDebugModel& m,
                                          const std::vector<AddressRange>& ranges) {
    std::set<SourceLineKey> out;
    for (const auto& row : m.line_rows)
        for (const auto& r : ranges)
            if (row.address >= r.low && row.address < r.high)
                out.insert(row.line_key);
    return out;
}

NeutralDebugModel synthetic_five_rows() {
    NeutralDebugModel m;
    m.files[1] = "t.c";
    for (std::uint32_t i = 0; i < 5; ++i)
        m.line_rows.push_back({0x4ull * i, {1, i + 1}, true});
    FunctionInfo fn;
    fn.name = "f";
    fn.instances.push_back({0, {{0x0, 0x14}}});
    m.functions.push_back(fn);
    return m;
}

} // namespace

TEST_CASE("fixture: golden loopsum model loads with expected projections") {
    NeutralDebugModel m = load_fixture(testutil::data_file("loopsum.dbgfx"));
    REQUIRE(m.functions.size() == 1);
    const FunctionInfo& f = m.functions[0];
    CHECK(f.name == "f");
    REQUIRE(f.instances.size() == 1);
    REQUIRE(f.variables.size() == 4);

    // Whole-function projection hits every position the debug info identifies.
    auto whole = project_to_lines(m, f.all_ranges());
    CHECK(lines_of(whole) == std::set<std::uint32_t>{1, 4, 5, 6, 8, 10, 11});

    const VariableEntry* y = nullptr;
    for (const auto& v : f.variables)
        if (v.name == "y")
            y = &v;
    REQUIRE(y);
    CHECK(lines_of(project_to_lines(m, y->description_ranges.empty()
                                           ? std::vector<AddressRange>{}
                                           : std::vector<AddressRange>{
                                                 y->description_ranges[0].range})) ==
          std::set<std::uint32_t>{4, 5, 6, 8});
    CHECK(lines_of(project_to_lines(m, y->scope_ranges)) ==
          std::set<std::uint32_t>{1, 4, 5, 6, 8, 10, 11});
    CHECK(y->decl.has_value());
    CHECK(y->decl->line == 4);
}

TEST_CASE("projection: empty input and single-row ranges") {
    NeutralDebugModel m = synthetic_five_rows();
    CHECK(project_to_lines(m, {}).empty());

    std::vector<AddressRange> one = {{0x4, 0x5}};
    auto got = project_to_lines(m, one);
    CHECK(got == projection_oracle(m, one));
    CHECK(lines_of(got) == std::set<std::uint32_t>{2});

    // Zero-length ranges contain no addresses.
    std::vector<AddressRange> zero = {{0x4, 0x4}};
    CHECK(project_to_lines(m, zero).empty());

    // Addresses outside the table contribute nothing.
    std::vector<AddressRange> outside = {{0x100, 0x200}};
    CHECK(project_to_lines(m, outside).empty());
}

TEST_CASE("projection: monotonicity and soundness over random inputs") {
    for (int iter = 0; iter < 200; ++iter) {
        NeutralDebugModel m;
        m.files[1] = "r.c";
        int rows = static_cast<int>(testutil::rand_int(0, 20));
        for (int i = 0; i < rows; ++i)
            m.line_rows.push_back({testutil::rand_int(0, 0x80),
                                   {1, testutil::rand_int(1, 12)},
                                   true});
        std::sort(m.line_rows.begin(), m.line_rows.end());

        std::vector<AddressRange> small, big;
        int nr = static_cast<int>(testutil::rand_int(0, 4));
        for (int i = 0; i < nr; ++i) {
            std::uint64_t lo = testutil::rand_int(0, 0x80);
            std::uint64_t hi = lo + testutil::rand_int(0, 0x20);
            small.push_back({lo, hi});
            big.push_back({lo, hi});
        }
        big.push_back({testutil::rand_int(0, 0x40), testutil::rand_int(0x40, 0x90)});

        auto s1 = project_to_lines(m, small);
        auto s2 = project_to_lines(m, big);
        CHECK(std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()));
        CHECK(s1 == projection_oracle(m, small));
        for (const auto& key : s2) {
            bool in_rows = false;
            for (const auto& row : m.line_rows)
                in_rows = in_rows || row.line_key == key;
            CHECK(in_rows);
        }
    }
}

TEST_CASE("fixture: canonical file round-trips bit-identically") {
    std::string text = testutil::read_file(testutil::data_file("loopsum.dbgfx"));
    NeutralDebugModel m = parse_fixture_text(text, "loopsum.dbgfx");
    CHECK(serialize_fixture(m) == text);
}

TEST_CASE("fixture: serialize/load round-trip equals the model") {
    for (int iter = 0; iter < 100; ++iter) {
        NeutralDebugModel m;
        m.files[1] = "a.c";
        m.files[2] = "b.c";
        int nf = static_cast<int>(testutil::rand_int(1, 3));
        for (int fi = 0; fi < nf; ++fi) {
            FunctionInfo fn;
            fn.name = "fn" + std::to_string(fi);
            int ni = static_cast<int>(testutil::rand_int(1, 3));
            std::uint64_t base = 0x1000 * (fi + 1);
            for (int ii = 0; ii < ni; ++ii) {
                std::uint64_t lo = base + 0x100 * static_cast<std::uint64_t>(ii);
                fn.instances.push_back(
                    {static_cast<std::uint32_t>(ii), {{lo, lo + testutil::rand_int(1, 0x40)}}});
            }
            int nv = static_cast<int>(testutil::rand_int(0, 3));
            for (int vi = 0; vi < nv; ++vi) {
                VariableEntry v;
                v.name = std::string(1, static_cast<char>('a' + vi));
                v.kind = testutil::rand_int(0, 1) ? VarKind::Local : VarKind::FormalParameter;
                v.instance_id = testutil::rand_int(0, static_cast<std::uint32_t>(ni - 1));
                const auto& inst = fn.instances[v.instance_id];
                v.scope_ranges = inst.ranges;
                if (testutil::rand_int(0, 1))
                    v.decl = SourceLineKey{testutil::rand_int(1, 2), testutil::rand_int(1, 30)};
                int nd = static_cast<int>(testutil::rand_int(0, 2));
                for (int di = 0; di < nd; ++di) {
                    std::uint64_t lo = inst.ranges[0].low + testutil::rand_int(0, 8);
                    std::uint64_t hi = std::min(inst.ranges[0].high,
                                                lo + testutil::rand_int(0, 0x20));
                    if (lo > hi)
                        continue;
                    v.description_ranges.push_back(
                        {{lo, hi}, static_cast<DescKind>(testutil::rand_int(0, 3))});
                }
                fn.variables.push_back(std::move(v));
            }
            m.functions.push_back(std::move(fn));
        }
        int rows = static_cast<int>(testutil::rand_int(0, 10));
        for (int i = 0; i < rows; ++i)
            m.line_rows.push_back({0x1000 + testutil::rand_int(0, 0x200),
                                   {testutil::rand_int(1, 2), testutil::rand_int(1, 40)},
                                   testutil::rand_int(0, 1) == 1});

        std::string s1 = serialize_fixture(m);
        NeutralDebugModel m2 = parse_fixture_text(s1, "round");
        std::string s2 = serialize_fixture(m2);
        CHECK(s1 == s2);
        NeutralDebugModel m3 = parse_fixture_text(s2, "round2");
        CHECK(m2 == m3);
    }
}

TEST_CASE("fixture: records may appear in any order") {
    std::string canonical = testutil::read_file(testutil::data_file("loopsum.dbgfx"));
    std::vector<std::string> lines;
    std::string cur;
    for (char c : canonical) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    // Descriptions first, files last; interleave the rest.
    std::reverse(lines.begin(), lines.end());
    std::string shuffled;
    for (const auto& l : lines)
        shuffled += l + "\n";
    NeutralDebugModel a = parse_fixture_text(canonical, "canonical");
    NeutralDebugModel b = parse_fixture_text(shuffled, "shuffled");
    CHECK(a == b);
    CHECK(serialize_fixture(b) == canonical);
}

TEST_CASE("fixture: zero functions is an empty model, not an error") {
    NeutralDebugModel m = parse_fixture_text("file 1 main.c\n", "empty");
    CHECK(m.functions.empty());
    CHECK(m.line_rows.empty());
    CHECK(m.files.size() == 1);

    NeutralDebugModel blank = parse_fixture_text("", "blank");
    CHECK(blank.functions.empty());
}

TEST_CASE("fixture: dangling references are validation errors") {
    // Row referencing an undeclared file id.
    CHECK_THROWS_WITH_AS(parse_fixture_text("row 0x0 7 1 1\n", "t"),
                         doctest::Contains("undeclared file id"), Error);
    // Variable decl referencing an undeclared file id.
    std::string text = "file 1 a.c\nfunc f 0x0 0x10\nvar f 0 local x decl 9:3\n";
    CHECK_THROWS_WITH_AS(parse_fixture_text(text, "t"), doctest::Contains("undeclared file id"),
                         Error);
    // Variable referencing an unknown function.
    CHECK_THROWS_WITH_AS(parse_fixture_text("file 1 a.c\nvar g 0 local x\n", "t"),
                         doctest::Contains("unknown function"), Error);
    // Variable referencing an instance with no func record.
    CHECK_THROWS_WITH_AS(
        parse_fixture_text("file 1 a.c\nfunc f 0x0 0x10\nvar f 3 local x\n", "t"),
        doctest::Contains("unknown instance"), Error);
    // Description for a variable that was never declared.
    CHECK_THROWS_WITH_AS(
        parse_fixture_text(
            "file 1 a.c\nfunc f 0x0 0x10\ndesc f 0 x 0x0 0x8 register-location\n", "t"),
        doctest::Contains("unknown variable"), Error);
    // Description outside the function's ranges.
    std::string outside = "file 1 a.c\nfunc f 0x0 0x10\nvar f 0 local x\n"
                          "desc f 0 x 0x20 0x30 register-location\n";
    CHECK_THROWS_WITH_AS(parse_fixture_text(outside, "t"), doctest::Contains("outside"), Error);
}

TEST_CASE("fixture: syntax errors carry line and column") {
    try {
        parse_fixture_text("file 1 a.c\nbogus record here\n", "input.dbgfx");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == Error::Kind::Parse);
        CHECK(std::string(e.what()).find("input.dbgfx:2:1") != std::string::npos);
    }
    try {
        parse_fixture_text("row zz 1 1 1\n", "input.dbgfx");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("input.dbgfx:1:5") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_fixture_text("var f 0 nonsense x\n", "t"), Error);
    CHECK_THROWS_AS(parse_fixture_text("desc f 0 x 0x0 0x8 bogus-kind\n", "t"), Error);
}

TEST_CASE("fixture: missing file is an io error") {
    CHECK_THROWS_AS(load_fixture("/nonexistent/missing.dbgfx"), Error);
    try {
        load_fixture("/nonexistent/missing.dbgfx");
    } catch (const Error& e) {
        CHECK(e.kind() == Error::Kind::Io);
    }
}

TEST_CASE("model: validation rejects duplicate variable identities") {
    NeutralDebugModel m = synthetic_five_rows();
    VariableEntry v;
    v.name = "x";
    v.instance_id = 0;
    m.functions[0].variables.push_back(v);
    m.functions[0].variables.push_back(v);
    CHECK_THROWS_WITH_AS(validate_model(m), doctest::Contains("duplicate"), Error);
}

TEST_CASE("path normalization canonicalizes separators and dots") {
    CHECK(normalize_path("./src/../src/main.c") == "src/main.c");
    CHECK(normalize_path("a/b/./c.c") == "a/b/c.c");
    CHECK(normalize_path("/usr/include/../src/x.c") == "/usr/src/x.c");
    CHECK(normalize_path("plain.c") == "plain.c");
}
